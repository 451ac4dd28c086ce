#include <CLI11.hpp>
#include <fmt/core.h>

#include <string>
#include <vector>

#include "dynmix/cli/commands.hpp"
#include "dynmix/cli/csv.hpp"
#include "dynmix/cli/manifest.hpp"

namespace {

using namespace dynmix;
using namespace dynmix::cli;

constexpr const char* kParamHelp =
    "Six comma-separated values mu_c,tau,mu,sigma,beta,xi in data units "
    "(mu and sigma on the log scale), optionally prefixed with 'label='";

constexpr const char* kConfigHelp = R"(Experiment config: one 'key = value' per line, '#' starts a comment.
  mu_c, tau              weight location and scale (data units, tau > 0)
  mu, sigma              lognormal body, log scale (sigma > 0)
  beta, xi               GPD scale (data units, > 0) and shape (unitless)
  n                      observations per replication (>= 8)
  B                      replications
  k                      ABC proposals per replication
  l                      retained proposals (5 <= l <= k)
  eps_i                  quadrature stopping tolerance (unitless, > 0)
  eps_i_grid             comma list of tolerances; runs the MLE sensitivity table instead
  methods                comma list of mle, amle-m, amle-uk, amle-mk, amle-puk
  base_seed              64-bit seed of the replication streams
  retry_cap              redraws allowed for a failed replication
  prior_bootstrap        parametric bootstrap replicates behind the prior box (>= 20)
  outlier_rule           classical | adjusted
  threads                worker threads (0 = all cores)
Defaults reproduce the first design point (xi = 0.25), n = 500, B = 100, k = 500000, l = 100.)";

ModelSpec parse_model(const std::string& s, std::size_t index) {
  ModelSpec m;
  std::string values = s;
  if (const auto eq = s.find('='); eq != std::string::npos) {
    m.label = s.substr(0, eq);
    values = s.substr(eq + 1);
  } else {
    m.label = index == 0 ? "model" : "model" + std::to_string(index + 1);
  }
  const auto v = parse_real_list(values, "--params");
  if (v.size() != kNumParams) throw InputError("--params needs six values, got " + std::to_string(v.size()));
  std::copy(v.begin(), v.end(), m.params.begin());
  return m;
}

std::vector<ModelSpec> parse_models(const std::vector<std::string>& specs) {
  std::vector<ModelSpec> out;
  for (std::size_t i = 0; i < specs.size(); ++i) out.push_back(parse_model(specs[i], i));
  return out;
}

const std::map<std::string, OutlierRule> kRules{{"classical", OutlierRule::Classical},
                                                {"adjusted", OutlierRule::Adjusted}};
const std::map<std::string, BootstrapMode> kModes{{"parametric", BootstrapMode::Parametric},
                                                  {"nonparametric", BootstrapMode::Nonparametric}};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic lognormal-GPD mixture: simulation, estimation and tail risk"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  // simulate
  SimulateOptions sim;
  std::string sim_params;
  auto* simulate = app.add_subcommand("simulate", "Draw a sample from the mixture; writes draws.csv (column x)");
  simulate->add_option("--params", sim_params, kParamHelp);
  simulate->add_option("-n,--n", sim.n, "Number of draws")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "RNG seed")->capture_default_str();
  simulate->add_option("--out-dir", sim.out_dir, "Output directory")->capture_default_str();

  // fit
  FitOptions fit;
  std::string fit_method = "mle";
  std::string prior_mode = "nonparametric", outlier_rule = "classical";
  auto* fitc = app.add_subcommand(
      "fit", "Estimate the mixture; writes fit.csv, fit_diagnostics.csv and, for AMLE, abc_sample.csv and "
             "prior_bootstrap.csv");
  fitc->add_option("--data", fit.data, "CSV file of positive observations (header required)")->required();
  fitc->add_option("--column", fit.column, "Column name (default: first column)");
  fitc->add_option("--method", fit_method, "mle, amle-m, amle-uk, amle-mk or amle-puk")->capture_default_str();
  fitc->add_option("--seed", fit.seed, "RNG seed")->capture_default_str();
  fitc->add_option("--eps-i", fit.eps_i, "Quadrature stopping tolerance")->capture_default_str();
  fitc->add_option("--k", fit.k, "ABC proposals")->capture_default_str();
  fitc->add_option("--l", fit.l, "Retained ABC proposals")->capture_default_str();
  fitc->add_option("--bootstrap", fit.bootstrap, "Bootstrap replicates for standard errors (0 = none)")
      ->capture_default_str();
  fitc->add_option("--prior-bootstrap", fit.prior_bootstrap, "Bootstrap replicates behind the AMLE prior box")
      ->capture_default_str();
  fitc->add_option("--prior-mode", prior_mode, "Prior-box bootstrap: parametric or nonparametric")
      ->check(CLI::IsMember(kModes, CLI::ignore_case))
      ->capture_default_str();
  fitc->add_option("--outlier-rule", outlier_rule, "Prior-box outlier fences: classical or adjusted")
      ->check(CLI::IsMember(kRules, CLI::ignore_case))
      ->capture_default_str();
  fitc->add_option("--threads", fit.threads, "Worker threads (0 = all cores)")->capture_default_str();
  fitc->add_flag("--dump-proposals", fit.dump_proposals, "Also write every ABC proposal to proposals.csv");
  fitc->add_option("--out-dir", fit.out_dir, "Output directory")->capture_default_str();

  // risk
  RiskOptions risk;
  std::vector<std::string> risk_params;
  std::string risk_levels, risk_thresholds, risk_weights;
  std::string risk_data;
  auto* riskc = app.add_subcommand(
      "risk", "VaR, ES and tail tables; writes var.csv, es.csv, tail.csv, mare.csv and weight_threshold.csv");
  riskc->add_option("--fit", risk.fits, "fit.csv written by 'fit' (repeatable)");
  riskc->add_option("--params", risk_params, kParamHelp)->take_all();
  riskc->add_option("--data", risk_data, "Observed sample: adds GPD and empirical rows and the MARE table");
  riskc->add_option("--column", risk.column, "Column name of --data");
  riskc->add_option("--levels", risk_levels, "Comma list of levels (default 0.5,0.9,0.95,0.99,0.995)");
  riskc->add_option("--thresholds", risk_thresholds, "Comma list of thresholds t for P(X >= t), data units");
  riskc->add_option("--weight-levels", risk_weights, "Comma list of alpha for weight thresholds");
  riskc->add_option("--u-level", risk.u_level, "Quantile level of the GPD benchmark threshold")->capture_default_str();
  riskc->add_option("--eps-i", risk.eps_i, "Quadrature stopping tolerance")->capture_default_str();
  riskc->add_option("--out-dir", risk.out_dir, "Output directory")->capture_default_str();

  // experiment
  ExperimentOptions exp;
  auto* expc = app.add_subcommand("experiment", "Monte Carlo study; writes report.csv, report.json, estimates.csv "
                                                "and timings.csv, or eps_table.csv with eps_i_grid");
  expc->footer(kConfigHelp);
  expc->add_option("--config", exp.config, "Config file")->required();
  expc->add_option("--threads", exp.threads, "Override the config's thread count");
  expc->add_option("--seed", exp.seed, "Override the config's base_seed");
  expc->add_option("--out-dir", exp.out_dir, "Output directory")->capture_default_str();

  // plotdata
  PlotDataOptions plot;
  std::vector<std::string> plot_params;
  std::string plot_data, plot_abc;
  auto* plotc = app.add_subcommand(
      "plotdata", "Series for plots: density.csv, weight.csv, data_hist.csv and abc_hist.csv");
  plotc->add_option("--fit", plot.fits, "fit.csv written by 'fit' (repeatable)");
  plotc->add_option("--params", plot_params, kParamHelp)->take_all();
  plotc->add_option("--data", plot_data, "Observed sample for a histogram");
  plotc->add_option("--column", plot.column, "Column name of --data");
  plotc->add_option("--abc", plot_abc, "abc_sample.csv written by an AMLE fit");
  plotc->add_option("--grid", plot.grid, "Grid points of the density and weight series")->capture_default_str();
  plotc->add_option("--bins", plot.bins, "Histogram bins")->capture_default_str();
  plotc->add_option("--eps-i", plot.eps_i, "Quadrature stopping tolerance")->capture_default_str();
  plotc->add_option("--out-dir", plot.out_dir, "Output directory")->capture_default_str();

  // replay
  std::string manifest;
  std::string replay_out;
  auto* replayc = app.add_subcommand("replay", "Re-run the command recorded in a manifest.json");
  replayc->add_option("manifest", manifest, "manifest.json")->required();
  replayc->add_option("--out-dir", replay_out, "Write into this directory instead of the recorded one");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*simulate) {
      if (!sim_params.empty()) sim.params = parse_model(sim_params, 0).params;
      return run_simulate(sim);
    }
    if (*fitc) {
      fit.method = parse_fit_method(fit_method);
      fit.prior_mode = kModes.at(CLI::detail::to_lower(prior_mode));
      fit.outlier_rule = parse_outlier_rule(outlier_rule);
      return run_fit(fit);
    }
    if (*riskc) {
      risk.models = parse_models(risk_params);
      if (!risk_data.empty()) risk.data = risk_data;
      if (!risk_levels.empty()) risk.levels = parse_real_list(risk_levels, "--levels");
      if (!risk_thresholds.empty()) risk.thresholds = parse_real_list(risk_thresholds, "--thresholds");
      if (!risk_weights.empty()) risk.weight_levels = parse_real_list(risk_weights, "--weight-levels");
      for (double a : risk.levels)
        if (!(a > 0.0 && a < 1.0)) throw InputError("--levels must lie in (0, 1)");
      return run_risk(risk);
    }
    if (*expc) return run_experiment_command(exp);
    if (*plotc) {
      plot.models = parse_models(plot_params);
      if (!plot_data.empty()) plot.data = plot_data;
      if (!plot_abc.empty()) plot.abc = plot_abc;
      return run_plotdata(plot);
    }
    if (*replayc) {
      std::optional<std::filesystem::path> out;
      if (!replay_out.empty()) out = replay_out;
      return run_replay(manifest, out);
    }
  } catch (const std::exception& e) {
    // Argument validation that happens before a command starts.
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitInput;
  }
  return kExitInput;
}
