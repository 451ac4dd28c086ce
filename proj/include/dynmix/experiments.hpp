#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "dynmix/amle.hpp"
#include "dynmix/distributions.hpp"
#include "dynmix/mle.hpp"
#include "dynmix/quadrature.hpp"

namespace dynmix {

struct ExperimentConfig {
  MixtureParams true_params{1.0, 2.0, 0.0, 0.5, 3.5, 0.25};
  std::size_t n = 500;
  std::size_t B = 100;
  std::size_t k = 500'000;
  std::size_t l = 100;
  std::vector<double> eps_I_grid;
  std::vector<FitMethod> methods{FitMethod::MLE, FitMethod::AmleM};
  std::uint64_t base_seed = 1;
  std::size_t retry_cap = 10;
  /// Parametric bootstrap replicates behind each prior box.
  std::size_t prior_bootstrap = 100;
  OutlierRule outlier_rule = OutlierRule::Classical;
  QuadratureConfig quadrature;
  /// Worker threads; 0 means all hardware threads.
  unsigned threads = 0;

  /// Throws std::domain_error on an unusable configuration.
  void validate() const;
};

/// Parses "key = value" lines; '#' starts a comment. Keys: mu_c, tau, mu,
/// sigma, beta, xi, n, B, k, l, eps_i, eps_i_grid (comma list), methods (comma
/// list of mle, amle-m, amle-uk, amle-mk, amle-puk), base_seed, retry_cap,
/// prior_bootstrap, outlier_rule, threads. Unknown keys are errors.
ExperimentConfig parse_experiment_config(std::istream& in);

/// Key/value pairs of a configuration, in the file format above.
std::map<std::string, std::string> describe(const ExperimentConfig& cfg);

struct ParameterStats {
  double bias = 0.0;
  double sd = 0.0;    // population (divide by the number of replications)
  double rmse = 0.0;  // sqrt(bias^2 + sd^2)
};

struct MethodSummary {
  FitMethod method;
  std::array<ParameterStats, kNumParams> raw{};
  /// Same statistics after dropping floor(0.05 R) estimates from each end of
  /// every parameter column.
  std::array<ParameterStats, kNumParams> trimmed{};
  std::size_t replications = 0;
  /// Attempts discarded because this method's stage failed.
  std::size_t failures = 0;
  /// Kept fits flagged as not converged.
  std::size_t non_converged = 0;
  /// Mean wall-clock seconds per fit. Not reproducible; kept out of reports.
  double mean_seconds = 0.0;
};

struct ReplicationRecord {
  std::size_t index = 0;
  std::size_t attempts = 0;
  bool failed = false;
  std::map<FitMethod, ParamVector> estimates;
  std::map<FitMethod, bool> converged;
  std::map<FitMethod, double> seconds;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<MethodSummary> methods;
  std::vector<ReplicationRecord> replications;
  std::size_t failed_replications = 0;
};

/// Replication r simulates from substream derive_seed(base_seed, r) and,
/// after a failed fit, from attempts 1, 2, ... of the same stream up to
/// retry_cap. AMLE methods share one prior box (parametric bootstrap around
/// the MLE) and one ABC run per replication.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// Bias, population sd and RMSE of estimates around `truth`.
ParameterStats summarize(std::span<const double> estimates, double truth);

struct EpsRow {
  double eps_I;
  double mean_seconds;
  ParamVector rmse;
  std::size_t failures;
};

/// MLE-only experiment for each eps_I in cfg.eps_I_grid, on identical data.
std::vector<EpsRow> eps_sensitivity(const ExperimentConfig& cfg);

/// method,parameter,true,bias,sd,rmse,trim_bias,trim_sd,trim_rmse,replications,failures,non_converged
void write_report_csv(std::ostream& out, const ExperimentReport& report);
/// The same content as JSON, with the configuration.
void write_report_json(std::ostream& out, const ExperimentReport& report);
/// replication,attempts,method,mu_c,tau,mu,sigma,beta,xi,converged
void write_estimates_csv(std::ostream& out, const ExperimentReport& report);
/// method,mean_seconds
void write_timings_csv(std::ostream& out, const ExperimentReport& report);
/// eps_I,rmse_mu_c,...,rmse_xi,failures (times go to write_eps_timings_csv)
void write_eps_table_csv(std::ostream& out, const std::vector<EpsRow>& rows);
void write_eps_timings_csv(std::ostream& out, const std::vector<EpsRow>& rows);

}  // namespace dynmix
