#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dynmix/distributions.hpp"
#include "dynmix/optimize.hpp"
#include "dynmix/quadrature.hpp"

namespace dynmix {

enum class FitMethod { MLE, AmleM, AmleUK, AmleMK, AmlePUK };

/// "MLE", "AMLE-M", ... as used in reports.
std::string_view to_string(FitMethod m);
/// Accepts the report names and the CLI spellings "mle", "amle-m", ...
/// (case-insensitive). Throws std::invalid_argument otherwise.
FitMethod parse_fit_method(std::string_view s);

struct FitResult {
  MixtureParams estimate;
  std::optional<ParamVector> std_errors;
  FitMethod method = FitMethod::MLE;
  std::optional<double> loglik;
  /// iterations, evaluations, converged (0/1), epsilon, acceptance_rate, ...
  std::map<std::string, double> diagnostics;

  bool converged() const {
    auto it = diagnostics.find("converged");
    return it == diagnostics.end() || it->second != 0.0;
  }
};

/// Sum of log numerators minus n log Z, with Z evaluated once.
///
/// Returns -inf when some numerator underflows to zero. Throws
/// QuadratureError if Z does not converge.
double log_likelihood(const MixtureParams& theta, const Sample& data, const QuadratureConfig& cfg = {});

/// Log-likelihood with a precomputed Z.
double log_likelihood(const MixtureParams& theta, std::span<const double> data, double z);

/// Starting point for numerical maximization:
///   mu, sigma  lognormal MLE of the observations below the median,
///   beta, xi   GPD MLE of the excesses over the median,
///   tau        log(sd(x) / 2), floored at 0.05,
///   mu_c       first quartile (type 7).
/// Falls back to xi = 0.1, beta = mean excess if the GPD fit fails.
/// Requires n >= 8.
MixtureParams starting_values(const Sample& data);

struct MleOptions {
  QuadratureConfig quadrature;
  NelderMeadOptions optimizer;
  /// Overrides starting_values() when set.
  std::optional<MixtureParams> start;
};

/// Maximizes the log-likelihood by Nelder-Mead over
/// (mu_c, log tau, mu, log sigma, log beta, xi). Deterministic. The result is
/// flagged through diagnostics["converged"] rather than thrown when the
/// iteration cap is hit. Requires n >= 8.
FitResult fit_mle(const Sample& data, const MleOptions& options = {});

enum class BootstrapMode { Parametric, Nonparametric };

struct BootstrapOptions {
  BootstrapMode mode = BootstrapMode::Nonparametric;
  /// Parameters to simulate from in parametric mode. If unset the fitter is
  /// applied to the data first.
  std::optional<MixtureParams> fitted;
  unsigned threads = 0;
};

struct BootstrapResult {
  /// Standard deviation (divisor B' - 1) of the B' successful refits.
  ParamVector std_errors{};
  /// Successful refits, in replicate order.
  std::vector<ParamVector> replicates;
  /// Replicates whose refit threw or returned non-finite estimates.
  std::size_t failures = 0;
  /// Kept replicates whose fitter reported non-convergence.
  std::size_t non_converged = 0;
};

using Fitter = std::function<FitResult(const Sample&)>;

/// Refits B resampled (nonparametric) or simulated (parametric) data sets.
/// Replicate b draws from substream (seed, b), so the result does not depend
/// on the thread count. Throws std::runtime_error if more than B/2 refits fail.
BootstrapResult bootstrap_se(const Sample& data, std::size_t B, const Fitter& fitter,
                             std::uint64_t seed, const BootstrapOptions& options = {});

}  // namespace dynmix
