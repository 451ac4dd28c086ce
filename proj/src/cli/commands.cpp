#include "dynmix/cli/commands.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>

#include "dynmix/cli/csv.hpp"
#include "dynmix/cli/manifest.hpp"
#include "dynmix/experiments.hpp"
#include "dynmix/quadrature.hpp"
#include "dynmix/rng.hpp"

namespace dynmix::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write '" + path.string() + "'");
  return out;
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw FileError("cannot create output directory '" + dir.string() + "'");
}

// Runs `body`, maps exceptions to exit codes, and writes the manifest on
// success.
template <class Body>
int guarded(const char* command, const ordered_json& config, std::uint64_t seed, const fs::path& out_dir,
            const std::vector<fs::path>& inputs, Body&& body) {
  RunManifest m;
  m.command = command;
  m.config = config;
  m.seed = seed;
  m.started = utc_timestamp();
  try {
    for (const auto& in : inputs) m.inputs.push_back({in.string(), sha256_file(in)});
    prepare_dir(out_dir);
    body(m);
    m.finished = utc_timestamp();
    write_manifest(out_dir, m);
    return kExitOk;
  } catch (const FileError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitMissingFile;
  } catch (const InputError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitInput;
  } catch (const std::domain_error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    fmt::print(stderr, "numerical failure: {}\n", e.what());
    return kExitNumerical;
  }
}

std::string num(double v) { return format_number(v); }

QuadratureConfig quad(double eps_i) {
  QuadratureConfig q;
  q.eps_I = eps_i;
  q.validate();
  return q;
}

// Seed of a bootstrap refit that only sees its resampled data.
std::uint64_t sample_seed(const Sample& s, std::uint64_t seed) {
  std::uint64_t h = splitmix64(seed);
  for (double v : s) h = splitmix64(h ^ std::bit_cast<std::uint64_t>(v));
  return h;
}

void write_param_header(std::ostream& out) {
  for (const char* p : kParamNames) out << ',' << p;
}

void write_params(std::ostream& out, const ParamVector& v) {
  for (double x : v) out << ',' << num(x);
}

std::vector<fs::path> paths_of(const std::vector<fs::path>& a, const std::optional<fs::path>& b = {},
                               const std::optional<fs::path>& c = {}) {
  std::vector<fs::path> out = a;
  if (b) out.push_back(*b);
  if (c) out.push_back(*c);
  return out;
}

std::vector<ModelSpec> collect_models(const std::vector<fs::path>& fits, const std::vector<ModelSpec>& models) {
  std::vector<ModelSpec> out;
  for (const auto& f : fits) out.push_back(read_fit_file(f));
  out.insert(out.end(), models.begin(), models.end());
  for (const auto& m : out) (void)MixtureParams::from_vector(m.params);
  return out;
}

ordered_json models_json(const std::vector<ModelSpec>& models) {
  ordered_json arr = ordered_json::array();
  for (const auto& m : models) arr.push_back({{"label", m.label}, {"params", m.params}});
  return arr;
}

std::vector<ModelSpec> models_from_json(const nlohmann::json& j) {
  std::vector<ModelSpec> out;
  for (const auto& m : j) out.push_back({m.at("label").get<std::string>(), m.at("params").get<ParamVector>()});
  return out;
}

std::vector<fs::path> paths_from_json(const nlohmann::json& j) {
  std::vector<fs::path> out;
  for (const auto& p : j) out.emplace_back(p.get<std::string>());
  return out;
}

ordered_json paths_json(const std::vector<fs::path>& ps) {
  ordered_json arr = ordered_json::array();
  for (const auto& p : ps) arr.push_back(p.string());
  return arr;
}

std::string mode_name(BootstrapMode m) { return m == BootstrapMode::Parametric ? "parametric" : "nonparametric"; }

BootstrapMode parse_mode(const std::string& s) {
  if (s == "parametric") return BootstrapMode::Parametric;
  if (s == "nonparametric") return BootstrapMode::Nonparametric;
  throw InputError("unknown bootstrap mode '" + s + "'");
}

void write_fit_outputs(const FitOptions& o, const FitResult& fit, const std::optional<PriorBox>& box) {
  auto out = open_output(o.out_dir / "fit.csv");
  out << "method,parameter,estimate,std_error,prior_lower,prior_upper\n";
  const ParamVector est = fit.estimate.to_vector();
  for (std::size_t j = 0; j < kNumParams; ++j) {
    out << to_string(fit.method) << ',' << kParamNames[j] << ',' << num(est[j]) << ','
        << (fit.std_errors ? num((*fit.std_errors)[j]) : "-") << ',' << (box ? num(box->lower[j]) : "-") << ','
        << (box ? num(box->upper[j]) : "-") << '\n';
  }
  auto diag = open_output(o.out_dir / "fit_diagnostics.csv");
  diag << "key,value\n";
  if (fit.loglik) diag << "loglik," << num(*fit.loglik) << '\n';
  for (const auto& [k, v] : fit.diagnostics) diag << k << ',' << num(v) << '\n';
}

}  // namespace

// ---------------------------------------------------------------------------
// Option (de)serialization for manifests.

ordered_json to_json(const SimulateOptions& o) {
  return {{"params", o.params}, {"n", o.n}, {"seed", o.seed}, {"out_dir", o.out_dir.string()}};
}

ordered_json to_json(const FitOptions& o) {
  return {{"data", o.data.string()},
          {"column", o.column},
          {"method", std::string(to_string(o.method))},
          {"seed", o.seed},
          {"eps_i", o.eps_i},
          {"k", o.k},
          {"l", o.l},
          {"bootstrap", o.bootstrap},
          {"prior_bootstrap", o.prior_bootstrap},
          {"prior_mode", mode_name(o.prior_mode)},
          {"outlier_rule", std::string(to_string(o.outlier_rule))},
          {"threads", o.threads},
          {"dump_proposals", o.dump_proposals},
          {"out_dir", o.out_dir.string()}};
}

ordered_json to_json(const RiskOptions& o) {
  return {{"fits", paths_json(o.fits)},
          {"models", models_json(o.models)},
          {"data", o.data ? ordered_json(o.data->string()) : ordered_json(nullptr)},
          {"column", o.column},
          {"levels", o.levels},
          {"thresholds", o.thresholds},
          {"weight_levels", o.weight_levels},
          {"u_level", o.u_level},
          {"eps_i", o.eps_i},
          {"out_dir", o.out_dir.string()}};
}

ordered_json to_json(const ExperimentOptions& o) {
  return {{"config", o.config.string()},
          {"threads", o.threads ? ordered_json(*o.threads) : ordered_json(nullptr)},
          {"seed", o.seed ? ordered_json(*o.seed) : ordered_json(nullptr)},
          {"out_dir", o.out_dir.string()}};
}

ordered_json to_json(const PlotDataOptions& o) {
  return {{"fits", paths_json(o.fits)},
          {"models", models_json(o.models)},
          {"data", o.data ? ordered_json(o.data->string()) : ordered_json(nullptr)},
          {"column", o.column},
          {"abc", o.abc ? ordered_json(o.abc->string()) : ordered_json(nullptr)},
          {"grid", o.grid},
          {"bins", o.bins},
          {"eps_i", o.eps_i},
          {"out_dir", o.out_dir.string()}};
}

namespace {

std::optional<fs::path> opt_path(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return fs::path(j.at(key).get<std::string>());
}

SimulateOptions simulate_from_json(const nlohmann::json& j) {
  SimulateOptions o;
  o.params = j.at("params").get<ParamVector>();
  o.n = j.at("n").get<std::size_t>();
  o.seed = j.at("seed").get<std::uint64_t>();
  o.out_dir = j.at("out_dir").get<std::string>();
  return o;
}

FitOptions fit_from_json(const nlohmann::json& j) {
  FitOptions o;
  o.data = j.at("data").get<std::string>();
  o.column = j.value("column", std::string{});
  o.method = parse_fit_method(j.at("method").get<std::string>());
  o.seed = j.at("seed").get<std::uint64_t>();
  o.eps_i = j.at("eps_i").get<double>();
  o.k = j.at("k").get<std::size_t>();
  o.l = j.at("l").get<std::size_t>();
  o.bootstrap = j.at("bootstrap").get<std::size_t>();
  o.prior_bootstrap = j.at("prior_bootstrap").get<std::size_t>();
  o.prior_mode = parse_mode(j.at("prior_mode").get<std::string>());
  o.outlier_rule = parse_outlier_rule(j.at("outlier_rule").get<std::string>());
  o.threads = j.at("threads").get<unsigned>();
  o.dump_proposals = j.at("dump_proposals").get<bool>();
  o.out_dir = j.at("out_dir").get<std::string>();
  return o;
}

RiskOptions risk_from_json(const nlohmann::json& j) {
  RiskOptions o;
  o.fits = paths_from_json(j.at("fits"));
  o.models = models_from_json(j.at("models"));
  o.data = opt_path(j, "data");
  o.column = j.value("column", std::string{});
  o.levels = j.at("levels").get<std::vector<double>>();
  o.thresholds = j.at("thresholds").get<std::vector<double>>();
  o.weight_levels = j.at("weight_levels").get<std::vector<double>>();
  o.u_level = j.at("u_level").get<double>();
  o.eps_i = j.at("eps_i").get<double>();
  o.out_dir = j.at("out_dir").get<std::string>();
  return o;
}

ExperimentOptions experiment_from_json(const nlohmann::json& j) {
  ExperimentOptions o;
  o.config = j.at("config").get<std::string>();
  if (!j.at("threads").is_null()) o.threads = j.at("threads").get<unsigned>();
  if (!j.at("seed").is_null()) o.seed = j.at("seed").get<std::uint64_t>();
  o.out_dir = j.at("out_dir").get<std::string>();
  return o;
}

PlotDataOptions plotdata_from_json(const nlohmann::json& j) {
  PlotDataOptions o;
  o.fits = paths_from_json(j.at("fits"));
  o.models = models_from_json(j.at("models"));
  o.data = opt_path(j, "data");
  o.column = j.value("column", std::string{});
  o.abc = opt_path(j, "abc");
  o.grid = j.at("grid").get<std::size_t>();
  o.bins = j.at("bins").get<std::size_t>();
  o.eps_i = j.at("eps_i").get<double>();
  o.out_dir = j.at("out_dir").get<std::string>();
  return o;
}

}  // namespace

// ---------------------------------------------------------------------------

ModelSpec read_fit_file(const fs::path& path) {
  const CsvTable t = read_csv_table(path);
  auto index = [&](const std::string& name) {
    const auto it = std::find(t.header.begin(), t.header.end(), name);
    if (it == t.header.end()) throw InputError("'" + path.string() + "' has no '" + name + "' column");
    return static_cast<std::size_t>(it - t.header.begin());
  };
  const std::size_t im = index("method"), ip = index("parameter"), ie = index("estimate");
  ModelSpec spec;
  std::array<bool, kNumParams> seen{};
  for (const auto& row : t.rows) {
    if (row.size() <= std::max({im, ip, ie})) throw InputError("'" + path.string() + "': short row");
    const auto it = std::find(kParamNames.begin(), kParamNames.end(), row[ip]);
    if (it == kParamNames.end()) throw InputError("'" + path.string() + "': unknown parameter '" + row[ip] + "'");
    const auto j = static_cast<std::size_t>(it - kParamNames.begin());
    spec.params[j] = parse_real_list(row[ie], "estimate of " + row[ip]).front();
    seen[j] = true;
    spec.label = row[im];
  }
  if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }))
    throw InputError("'" + path.string() + "' does not list all six parameters");
  return spec;
}

int run_simulate(const SimulateOptions& o) {
  return guarded("simulate", to_json(o), o.seed, o.out_dir, {}, [&](RunManifest&) {
    const MixtureParams theta = MixtureParams::from_vector(o.params);
    if (o.n < 1) throw InputError("n must be >= 1");
    const Sample s = simulate(theta, o.n, o.seed);
    auto out = open_output(o.out_dir / "draws.csv");
    out << "x\n";
    for (double x : s) out << num(x) << '\n';
  });
}

int run_fit(const FitOptions& o) {
  return guarded("fit", to_json(o), o.seed, o.out_dir, {o.data}, [&](RunManifest&) {
    const Sample data = read_sample_csv(o.data, o.column);
    if (data.size() < 8) throw InputError("fit needs at least 8 observations");
    MleOptions mle_opts;
    mle_opts.quadrature = quad(o.eps_i);
    const Fitter mle_fitter = [&](const Sample& s) { return fit_mle(s, mle_opts); };

    if (o.method == FitMethod::MLE) {
      FitResult fit = fit_mle(data, mle_opts);
      if (o.bootstrap > 0) {
        BootstrapOptions bo;
        bo.threads = o.threads;
        const BootstrapResult boot = bootstrap_se(data, o.bootstrap, mle_fitter, derive_seed(o.seed, 1), bo);
        fit.std_errors = boot.std_errors;
        fit.diagnostics["bootstrap_failures"] = static_cast<double>(boot.failures);
        fit.diagnostics["bootstrap_non_converged"] = static_cast<double>(boot.non_converged);
      }
      write_fit_outputs(o, fit, std::nullopt);
      return;
    }

    PriorBoxOptions po;
    po.mode = o.prior_mode;
    po.mle = mle_opts;
    po.threads = o.threads;
    const PriorBoxResult prior = build_prior_box(data, o.prior_bootstrap, o.outlier_rule, derive_seed(o.seed, 2), po);

    AbcOptions ao;
    ao.threads = o.threads;
    ao.keep_all = o.dump_proposals;
    const AbcSample abc = abc_reject(data, prior.box, o.k, o.l, derive_seed(o.seed, 3), ao);
    FitResult fit = amle_result(abc, o.method);
    try {
      fit.loglik = log_likelihood(fit.estimate, data, mle_opts.quadrature);
    } catch (const QuadratureError&) {
    }

    if (o.bootstrap > 0) {
      const PriorBox box = prior.box;
      const std::size_t k = o.k, l = o.l;
      const FitMethod method = o.method;
      const std::uint64_t seed = o.seed;
      const Fitter amle_fitter = [box, k, l, method, seed](const Sample& s) {
        AbcOptions inner;
        inner.threads = 1;
        return fit_amle(s, box, k, l, method, sample_seed(s, seed), inner);
      };
      BootstrapOptions bo;
      bo.threads = o.threads;
      const BootstrapResult boot = bootstrap_se(data, o.bootstrap, amle_fitter, derive_seed(o.seed, 4), bo);
      fit.std_errors = boot.std_errors;
      fit.diagnostics["bootstrap_failures"] = static_cast<double>(boot.failures);
    }
    const ParamVector mle = prior.mle.estimate.to_vector();
    for (std::size_t j = 0; j < kNumParams; ++j) {
      fit.diagnostics[std::string("prior_mle_") + kParamNames[j]] = mle[j];
      fit.diagnostics[std::string("prior_fallback_") + kParamNames[j]] = prior.fallback[j] ? 1.0 : 0.0;
    }
    fit.diagnostics["prior_bootstrap_failures"] = static_cast<double>(prior.bootstrap.failures);
    write_fit_outputs(o, fit, prior.box);

    auto s = open_output(o.out_dir / "abc_sample.csv");
    s << "rank,distance";
    write_param_header(s);
    s << '\n';
    for (std::size_t r = 0; r < abc.params.size(); ++r) {
      s << r + 1 << ',' << num(abc.distances[r]);
      write_params(s, abc.params[r]);
      s << '\n';
    }
    auto b = open_output(o.out_dir / "prior_bootstrap.csv");
    b << "replicate";
    write_param_header(b);
    b << '\n';
    for (std::size_t r = 0; r < prior.bootstrap.replicates.size(); ++r) {
      b << r + 1;
      write_params(b, prior.bootstrap.replicates[r]);
      b << '\n';
    }
    if (o.dump_proposals) {
      auto p = open_output(o.out_dir / "proposals.csv");
      p << "index,distance";
      write_param_header(p);
      p << '\n';
      for (std::size_t i = 0; i < abc.all_params.size(); ++i) {
        p << i << ',' << num(abc.all_distances[i]);
        write_params(p, abc.all_params[i]);
        p << '\n';
      }
    }
  });
}

int run_risk(const RiskOptions& o) {
  return guarded("risk", to_json(o), 0, o.out_dir, paths_of(o.fits, o.data), [&](RunManifest&) {
    const std::vector<ModelSpec> models = collect_models(o.fits, o.models);
    if (models.empty() && !o.data) throw InputError("risk needs --fit, --params or --data");
    if (o.levels.empty()) throw InputError("no risk levels");
    const QuadratureConfig q = quad(o.eps_i);

    std::vector<RiskReport> rows;
    for (const auto& m : models)
      rows.push_back(model_risk_report(MixtureParams::from_vector(m.params), m.label, o.levels, o.thresholds, q));

    std::optional<Sample> data;
    if (o.data) {
      data = read_sample_csv(*o.data, o.column);
      try {
        rows.push_back(pot_risk_report(pot_fit(*data, o.u_level), o.levels, o.thresholds));
      } catch (const std::domain_error& e) {
        fmt::print(stderr, "warning: GPD benchmark row skipped: {}\n", e.what());
      }
      const RiskReport emp = empirical_measures(*data, o.levels, o.thresholds);
      for (auto& r : rows) attach_mare(r, emp);
      rows.push_back(emp);
    }

    auto var = open_output(o.out_dir / "var.csv");
    write_risk_table(var, rows, RiskTable::VaR);
    auto es = open_output(o.out_dir / "es.csv");
    write_risk_table(es, rows, RiskTable::ES);
    if (!o.thresholds.empty()) {
      auto tail = open_output(o.out_dir / "tail.csv");
      write_risk_table(tail, rows, RiskTable::Tail);
    }
    if (data) {
      std::vector<RiskReport> scored(rows.begin(), rows.end() - 1);
      auto m = open_output(o.out_dir / "mare.csv");
      write_risk_table(m, scored, RiskTable::Mare);
    }

    if (!models.empty() && !o.weight_levels.empty()) {
      auto w = open_output(o.out_dir / "weight_threshold.csv");
      w << "method";
      for (double a : o.weight_levels) w << ',' << format_level(a);
      w << '\n';
      std::optional<std::ofstream> counts;
      if (data) {
        counts = open_output(o.out_dir / "weight_threshold_counts.csv");
        *counts << "method";
        for (double a : o.weight_levels) *counts << ',' << format_level(a);
        *counts << '\n';
      }
      for (const auto& m : models) {
        const MixtureParams th = MixtureParams::from_vector(m.params);
        w << m.label;
        if (counts) *counts << m.label;
        for (double a : o.weight_levels) {
          const double x = weight_threshold(th, a);
          w << ',' << num(x);
          if (counts) *counts << ',' << std::count_if(data->begin(), data->end(), [x](double v) { return v > x; });
        }
        w << '\n';
        if (counts) *counts << '\n';
      }
    }
  });
}

int run_experiment_command(const ExperimentOptions& o) {
  return guarded("experiment", to_json(o), o.seed.value_or(0), o.out_dir, {o.config}, [&](RunManifest& manifest) {
    std::ifstream in(o.config);
    if (!in) throw FileError("cannot open '" + o.config.string() + "'");
    ExperimentConfig cfg;
    try {
      cfg = parse_experiment_config(in);
      if (o.threads) cfg.threads = *o.threads;
      if (o.seed) cfg.base_seed = *o.seed;
      cfg.validate();
    } catch (const std::exception& e) {
      throw InputError(o.config.string() + ": " + e.what());
    }
    manifest.seed = cfg.base_seed;
    manifest.config["resolved"] = describe(cfg);

    if (!cfg.eps_I_grid.empty()) {
      const auto rows = eps_sensitivity(cfg);
      auto t = open_output(o.out_dir / "eps_table.csv");
      write_eps_table_csv(t, rows);
      auto tt = open_output(o.out_dir / "eps_timings.csv");
      write_eps_timings_csv(tt, rows);
      return;
    }
    const ExperimentReport report = run_experiment(cfg);
    auto csv = open_output(o.out_dir / "report.csv");
    write_report_csv(csv, report);
    auto json = open_output(o.out_dir / "report.json");
    write_report_json(json, report);
    auto est = open_output(o.out_dir / "estimates.csv");
    write_estimates_csv(est, report);
    auto tim = open_output(o.out_dir / "timings.csv");
    write_timings_csv(tim, report);
    if (report.failed_replications > 0)
      fmt::print(stderr, "warning: {} replication(s) failed after {} retries and were excluded\n",
                 report.failed_replications, cfg.retry_cap);
  });
}

int run_plotdata(const PlotDataOptions& o) {
  return guarded("plotdata", to_json(o), 0, o.out_dir, paths_of(o.fits, o.data, o.abc), [&](RunManifest&) {
    const std::vector<ModelSpec> models = collect_models(o.fits, o.models);
    if (models.empty() && !o.data && !o.abc) throw InputError("plotdata needs --fit, --params, --data or --abc");
    if (o.grid < 10) throw InputError("--grid must be >= 10");
    if (o.bins < 1) throw InputError("--bins must be >= 1");
    const QuadratureConfig q = quad(o.eps_i);

    std::optional<Sample> data;
    if (o.data) data = read_sample_csv(*o.data, o.column);

    if (!models.empty()) {
      std::vector<MixtureDistribution> dists;
      for (const auto& m : models) dists.emplace_back(MixtureParams::from_vector(m.params), q);
      double lo = INFINITY, hi = 0.0;
      for (const auto& d : dists) {
        lo = std::min(lo, d.quantile(1e-6));
        hi = std::max(hi, d.quantile(0.9999));
      }
      if (data) hi = std::max(hi, *std::max_element(data->begin(), data->end()));

      // Half the points evenly spaced, half log-spaced, so both the body and
      // a long tail are resolved.
      std::vector<double> xs;
      const std::size_t half = o.grid / 2;
      for (std::size_t i = 0; i < half; ++i) xs.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(half - 1));
      const std::size_t rest = o.grid - half;
      for (std::size_t i = 0; i < rest; ++i)
        xs.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(rest - 1)));
      std::sort(xs.begin(), xs.end());
      xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

      auto d = open_output(o.out_dir / "density.csv");
      auto w = open_output(o.out_dir / "weight.csv");
      d << "x";
      w << "x";
      for (const auto& m : models) {
        d << ',' << m.label;
        w << ',' << m.label;
      }
      d << '\n';
      w << '\n';
      for (double x : xs) {
        d << num(x);
        w << num(x);
        for (std::size_t i = 0; i < models.size(); ++i) {
          d << ',' << num(dists[i].pdf(x));
          w << ',' << num(weight(x, models[i].params[0], models[i].params[1]));
        }
        d << '\n';
        w << '\n';
      }
    }

    auto histogram = [&](std::ostream& out, const std::string& prefix, std::vector<double> v, bool density) {
      std::sort(v.begin(), v.end());
      const double a = v.front(), b = v.back();
      const double width = b > a ? (b - a) / static_cast<double>(o.bins) : 1.0;
      std::vector<std::size_t> count(o.bins, 0);
      for (double x : v) ++count[std::min(static_cast<std::size_t>((x - a) / width), o.bins - 1)];
      for (std::size_t i = 0; i < o.bins; ++i) {
        const double h = density ? static_cast<double>(count[i]) / (static_cast<double>(v.size()) * width)
                                 : static_cast<double>(count[i]);
        out << prefix << num(a + width * static_cast<double>(i)) << ',' << num(a + width * static_cast<double>(i + 1))
            << ',' << num(h) << '\n';
      }
    };

    if (data) {
      auto h = open_output(o.out_dir / "data_hist.csv");
      h << "bin_lower,bin_upper,density\n";
      histogram(h, "", std::vector<double>(data->begin(), data->end()), true);
    }
    if (o.abc) {
      const CsvTable t = read_csv_table(*o.abc);
      auto h = open_output(o.out_dir / "abc_hist.csv");
      h << "parameter,bin_lower,bin_upper,count\n";
      for (const char* p : kParamNames) {
        const auto it = std::find(t.header.begin(), t.header.end(), p);
        if (it == t.header.end()) throw InputError("'" + o.abc->string() + "' has no '" + p + "' column");
        const auto c = static_cast<std::size_t>(it - t.header.begin());
        std::vector<double> v;
        for (const auto& row : t.rows) {
          if (c >= row.size()) throw InputError("'" + o.abc->string() + "': short row");
          v.push_back(parse_real_list(row[c], p).front());
        }
        if (v.empty()) throw InputError("'" + o.abc->string() + "' has no rows");
        histogram(h, std::string(p) + ",", v, false);
      }
    }
  });
}

int run_replay(const fs::path& manifest, const std::optional<fs::path>& out_dir) {
  RunManifest m;
  try {
    m = read_manifest(manifest);
  } catch (const FileError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitMissingFile;
  } catch (const InputError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitInput;
  }
  for (const auto& in : m.inputs) {
    std::error_code ec;
    if (fs::is_regular_file(in.path, ec) && sha256_file(in.path) != in.sha256)
      fmt::print(stderr, "warning: '{}' changed since the recorded run\n", in.path);
  }
  try {
    const nlohmann::json cfg = m.config;
    if (m.command == "simulate") {
      auto o = simulate_from_json(cfg);
      if (out_dir) o.out_dir = *out_dir;
      return run_simulate(o);
    }
    if (m.command == "fit") {
      auto o = fit_from_json(cfg);
      if (out_dir) o.out_dir = *out_dir;
      return run_fit(o);
    }
    if (m.command == "risk") {
      auto o = risk_from_json(cfg);
      if (out_dir) o.out_dir = *out_dir;
      return run_risk(o);
    }
    if (m.command == "experiment") {
      auto o = experiment_from_json(cfg);
      if (out_dir) o.out_dir = *out_dir;
      return run_experiment_command(o);
    }
    if (m.command == "plotdata") {
      auto o = plotdata_from_json(cfg);
      if (out_dir) o.out_dir = *out_dir;
      return run_plotdata(o);
    }
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: malformed manifest config: {}\n", e.what());
    return kExitInput;
  }
  fmt::print(stderr, "error: unknown command '{}' in manifest\n", m.command);
  return kExitInput;
}

}  // namespace dynmix::cli
