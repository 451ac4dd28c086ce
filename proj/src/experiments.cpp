#include "dynmix/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "dynmix/parallel.hpp"
#include "dynmix/risk.hpp"
#include "dynmix/rng.hpp"
#include "dynmix/stats.hpp"
#include "json.hpp"

namespace dynmix {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: '" + key + "' expects a number, got '" + v + "'");
  }
  if (used != v.size()) throw std::invalid_argument("config: '" + key + "' expects a number, got '" + v + "'");
  return x;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long x;
  try {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    x = std::stoull(v, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: '" + key + "' expects a nonnegative integer, got '" + v + "'");
  }
  if (used != v.size())
    throw std::invalid_argument("config: '" + key + "' expects a nonnegative integer, got '" + v + "'");
  return x;
}

bool is_amle(FitMethod m) { return m != FitMethod::MLE; }

bool all_finite(const ParamVector& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

struct AttemptOutcome {
  bool ok = false;
  bool mle_failed = false;
  ReplicationRecord record;
};

AttemptOutcome run_attempt(const ExperimentConfig& cfg, std::uint64_t rep_seed, std::size_t attempt) {
  AttemptOutcome out;
  const bool want_mle = std::count(cfg.methods.begin(), cfg.methods.end(), FitMethod::MLE) > 0;
  const bool want_amle = std::any_of(cfg.methods.begin(), cfg.methods.end(), is_amle);

  std::optional<Sample> simulated;
  try {
    simulated = simulate(cfg.true_params, cfg.n, derive_seed(rep_seed, 3 * attempt));
  } catch (const SimulationError&) {
    out.mle_failed = true;
    return out;
  }
  const Sample& data = *simulated;

  MleOptions mle_opts;
  mle_opts.quadrature = cfg.quadrature;
  auto t0 = Clock::now();
  std::optional<FitResult> fitted;
  try {
    fitted = fit_mle(data, mle_opts);
  } catch (const std::exception&) {
    out.mle_failed = true;
    return out;
  }
  const FitResult& mle = *fitted;
  const double mle_seconds = seconds_since(t0);
  if (want_mle) {
    out.record.estimates[FitMethod::MLE] = mle.estimate.to_vector();
    out.record.converged[FitMethod::MLE] = mle.converged();
    out.record.seconds[FitMethod::MLE] = mle_seconds;
  }

  if (want_amle) {
    t0 = Clock::now();
    try {
      BootstrapOptions bo;
      bo.mode = BootstrapMode::Parametric;
      bo.fitted = mle.estimate;
      bo.threads = 1;
      const BootstrapResult boot = bootstrap_se(
          data, cfg.prior_bootstrap, [&](const Sample& s) { return fit_mle(s, mle_opts); },
          derive_seed(rep_seed, 3 * attempt + 1), bo);
      const PriorBox box = prior_box_from_bootstrap(boot.replicates, cfg.outlier_rule);
      AbcOptions ao;
      ao.threads = 1;
      const AbcSample abc = abc_reject(data, box, cfg.k, cfg.l, derive_seed(rep_seed, 3 * attempt + 2), ao);
      const double shared = seconds_since(t0);
      for (FitMethod m : cfg.methods) {
        if (!is_amle(m)) continue;
        const auto t1 = Clock::now();
        const ParamVector est = mode_estimate(abc.params, m);
        if (!all_finite(est)) throw std::runtime_error("non-finite AMLE estimate");
        out.record.estimates[m] = est;
        out.record.converged[m] = true;
        out.record.seconds[m] = shared + seconds_since(t1);
      }
    } catch (const std::exception&) {
      return out;
    }
  }
  out.ok = true;
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n < 8) throw std::domain_error("experiment: n must be >= 8");
  if (B < 1) throw std::domain_error("experiment: B must be >= 1");
  if (methods.empty()) throw std::domain_error("experiment: no methods");
  if (std::any_of(methods.begin(), methods.end(), is_amle)) {
    if (l < 5 || l > k) throw std::domain_error("experiment: need 5 <= l <= k");
    if (prior_bootstrap < 20) throw std::domain_error("experiment: prior_bootstrap must be >= 20");
  }
  for (double e : eps_I_grid)
    if (!(e > 0.0)) throw std::domain_error("experiment: eps_i_grid entries must be > 0");
  quadrature.validate();
}

ExperimentConfig parse_experiment_config(std::istream& in) {
  ExperimentConfig cfg;
  ParamVector th = cfg.true_params.to_vector();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));

    bool matched = false;
    for (std::size_t j = 0; j < kNumParams; ++j) {
      if (key == kParamNames[j]) {
        th[j] = parse_real(key, value);
        matched = true;
      }
    }
    if (matched) continue;
    if (key == "n") cfg.n = parse_unsigned(key, value);
    else if (key == "B") cfg.B = parse_unsigned(key, value);
    else if (key == "k") cfg.k = parse_unsigned(key, value);
    else if (key == "l") cfg.l = parse_unsigned(key, value);
    else if (key == "eps_i") cfg.quadrature.eps_I = parse_real(key, value);
    else if (key == "eps_i_grid") {
      cfg.eps_I_grid.clear();
      for (const auto& s : split_list(value)) cfg.eps_I_grid.push_back(parse_real(key, s));
    } else if (key == "methods") {
      cfg.methods.clear();
      for (const auto& s : split_list(value)) cfg.methods.push_back(parse_fit_method(s));
    } else if (key == "base_seed") cfg.base_seed = parse_unsigned(key, value);
    else if (key == "retry_cap") cfg.retry_cap = parse_unsigned(key, value);
    else if (key == "prior_bootstrap") cfg.prior_bootstrap = parse_unsigned(key, value);
    else if (key == "outlier_rule") cfg.outlier_rule = parse_outlier_rule(value);
    else if (key == "threads") cfg.threads = static_cast<unsigned>(parse_unsigned(key, value));
    else throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  cfg.true_params = MixtureParams::from_vector(th);
  cfg.validate();
  return cfg;
}

std::map<std::string, std::string> describe(const ExperimentConfig& cfg) {
  std::map<std::string, std::string> m;
  const ParamVector th = cfg.true_params.to_vector();
  for (std::size_t j = 0; j < kNumParams; ++j) m[kParamNames[j]] = format_number(th[j]);
  m["n"] = std::to_string(cfg.n);
  m["B"] = std::to_string(cfg.B);
  m["k"] = std::to_string(cfg.k);
  m["l"] = std::to_string(cfg.l);
  m["eps_i"] = format_number(cfg.quadrature.eps_I);
  std::string grid, methods;
  for (double e : cfg.eps_I_grid) grid += (grid.empty() ? "" : ",") + format_number(e);
  for (FitMethod f : cfg.methods) methods += (methods.empty() ? "" : ",") + std::string(to_string(f));
  m["eps_i_grid"] = grid;
  m["methods"] = methods;
  m["base_seed"] = std::to_string(cfg.base_seed);
  m["retry_cap"] = std::to_string(cfg.retry_cap);
  m["prior_bootstrap"] = std::to_string(cfg.prior_bootstrap);
  m["outlier_rule"] = std::string(to_string(cfg.outlier_rule));
  return m;
}

ParameterStats summarize(std::span<const double> estimates, double truth) {
  if (estimates.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan, nan};
  }
  ParameterStats s;
  s.bias = stats::mean(estimates) - truth;
  s.sd = stats::sd(estimates, /*population=*/true);
  s.rmse = std::sqrt(s.bias * s.bias + s.sd * s.sd);
  return s;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentReport report;
  report.config = cfg;
  report.replications.resize(cfg.B);
  std::vector<std::map<FitMethod, std::size_t>> stage_failures(cfg.B);

  parallel_for(cfg.B, cfg.threads, [&](std::size_t r) {
    const std::uint64_t rep_seed = derive_seed(cfg.base_seed, r);
    ReplicationRecord& rec = report.replications[r];
    rec.index = r;
    rec.failed = true;
    for (std::size_t attempt = 0; attempt <= cfg.retry_cap; ++attempt) {
      AttemptOutcome o = run_attempt(cfg, rep_seed, attempt);
      rec.attempts = attempt + 1;
      if (o.ok) {
        rec.estimates = std::move(o.record.estimates);
        rec.converged = std::move(o.record.converged);
        rec.seconds = std::move(o.record.seconds);
        rec.failed = false;
        break;
      }
      // Every method depends on the MLE stage; only AMLE methods on the rest.
      for (FitMethod m : cfg.methods)
        if (o.mle_failed || is_amle(m)) ++stage_failures[r][m];
    }
  });

  const ParamVector truth = cfg.true_params.to_vector();
  for (FitMethod m : cfg.methods) {
    MethodSummary s{m};
    std::array<std::vector<double>, kNumParams> cols;
    double seconds = 0.0;
    for (std::size_t r = 0; r < cfg.B; ++r) {
      s.failures += stage_failures[r].count(m) ? stage_failures[r].at(m) : 0;
      const auto& rec = report.replications[r];
      if (rec.failed) continue;
      ++s.replications;
      if (!rec.converged.at(m)) ++s.non_converged;
      seconds += rec.seconds.at(m);
      for (std::size_t j = 0; j < kNumParams; ++j) cols[j].push_back(rec.estimates.at(m)[j]);
    }
    s.mean_seconds = s.replications ? seconds / static_cast<double>(s.replications) : 0.0;
    for (std::size_t j = 0; j < kNumParams; ++j) {
      s.raw[j] = summarize(cols[j], truth[j]);
      std::vector<double> sorted = cols[j];
      std::sort(sorted.begin(), sorted.end());
      const std::size_t g = sorted.size() / 20;
      s.trimmed[j] = summarize(std::span<const double>(sorted).subspan(g, sorted.size() - 2 * g), truth[j]);
    }
    report.methods.push_back(s);
  }
  for (const auto& rec : report.replications) report.failed_replications += rec.failed ? 1 : 0;
  return report;
}

std::vector<EpsRow> eps_sensitivity(const ExperimentConfig& cfg) {
  if (cfg.eps_I_grid.empty()) throw std::domain_error("eps_sensitivity: empty eps_i_grid");
  std::vector<EpsRow> rows;
  for (double eps : cfg.eps_I_grid) {
    ExperimentConfig c = cfg;
    c.methods = {FitMethod::MLE};
    c.quadrature.eps_I = eps;
    c.eps_I_grid.clear();
    const ExperimentReport rep = run_experiment(c);
    const MethodSummary& s = rep.methods.front();
    EpsRow row{eps, s.mean_seconds, {}, s.failures};
    for (std::size_t j = 0; j < kNumParams; ++j) row.rmse[j] = s.raw[j].rmse;
    rows.push_back(row);
  }
  return rows;
}

void write_report_csv(std::ostream& out, const ExperimentReport& report) {
  out << "method,parameter,true,bias,sd,rmse,trim_bias,trim_sd,trim_rmse,replications,failures,"
         "non_converged\n";
  const ParamVector truth = report.config.true_params.to_vector();
  for (const auto& s : report.methods) {
    for (std::size_t j = 0; j < kNumParams; ++j) {
      out << to_string(s.method) << ',' << kParamNames[j] << ',' << format_number(truth[j]) << ','
          << format_number(s.raw[j].bias) << ',' << format_number(s.raw[j].sd) << ','
          << format_number(s.raw[j].rmse) << ',' << format_number(s.trimmed[j].bias) << ','
          << format_number(s.trimmed[j].sd) << ',' << format_number(s.trimmed[j].rmse) << ','
          << s.replications << ',' << s.failures << ',' << s.non_converged << '\n';
    }
  }
}

void write_report_json(std::ostream& out, const ExperimentReport& report) {
  using nlohmann::ordered_json;
  auto num = [](double v) -> ordered_json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  ordered_json j;
  ordered_json config;
  for (const auto& [k, v] : describe(report.config)) config[k] = v;
  j["config"] = config;
  j["failed_replications"] = report.failed_replications;
  ordered_json methods = ordered_json::array();
  for (const auto& s : report.methods) {
    ordered_json m;
    m["method"] = std::string(to_string(s.method));
    m["replications"] = s.replications;
    m["failures"] = s.failures;
    m["non_converged"] = s.non_converged;
    ordered_json params;
    for (std::size_t p = 0; p < kNumParams; ++p) {
      params[kParamNames[p]] = {
          {"bias", num(s.raw[p].bias)},         {"sd", num(s.raw[p].sd)},
          {"rmse", num(s.raw[p].rmse)},         {"trim_bias", num(s.trimmed[p].bias)},
          {"trim_sd", num(s.trimmed[p].sd)},    {"trim_rmse", num(s.trimmed[p].rmse)},
      };
    }
    m["parameters"] = params;
    methods.push_back(m);
  }
  j["methods"] = methods;
  out << j.dump(2) << '\n';
}

void write_estimates_csv(std::ostream& out, const ExperimentReport& report) {
  out << "replication,attempts,method,mu_c,tau,mu,sigma,beta,xi,converged\n";
  for (const auto& rec : report.replications) {
    if (rec.failed) continue;
    for (FitMethod m : report.config.methods) {
      out << rec.index << ',' << rec.attempts << ',' << to_string(m);
      for (double v : rec.estimates.at(m)) out << ',' << format_number(v);
      out << ',' << (rec.converged.at(m) ? 1 : 0) << '\n';
    }
  }
}

void write_timings_csv(std::ostream& out, const ExperimentReport& report) {
  out << "method,mean_seconds\n";
  for (const auto& s : report.methods) out << to_string(s.method) << ',' << format_number(s.mean_seconds) << '\n';
}

void write_eps_table_csv(std::ostream& out, const std::vector<EpsRow>& rows) {
  out << "eps_I";
  for (const char* p : kParamNames) out << ",rmse_" << p;
  out << ",failures\n";
  for (const auto& r : rows) {
    out << format_number(r.eps_I);
    for (double v : r.rmse) out << ',' << format_number(v);
    out << ',' << r.failures << '\n';
  }
}

void write_eps_timings_csv(std::ostream& out, const std::vector<EpsRow>& rows) {
  out << "eps_I,mean_seconds\n";
  for (const auto& r : rows) out << format_number(r.eps_I) << ',' << format_number(r.mean_seconds) << '\n';
}

}  // namespace dynmix
