#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "dynmix/rng.hpp"

namespace dynmix {

inline constexpr std::size_t kNumParams = 6;
using ParamVector = std::array<double, kNumParams>;

/// Index of each parameter in every vectorized form (ParamVector, prior
/// boxes, bootstrap matrices, report rows).
enum class Param : std::size_t { MuC = 0, Tau = 1, Mu = 2, Sigma = 3, Beta = 4, Xi = 5 };

inline constexpr std::array<const char*, kNumParams> kParamNames = {"mu_c", "tau",  "mu",
                                                                    "sigma", "beta", "xi"};

/// Parameters of the lognormal / generalized Pareto dynamic mixture.
///
/// The mixing weight is the Cauchy cdf with location mu_c and scale tau, the
/// body is lognormal(mu, sigma) and the tail is a zero-threshold GPD with
/// scale beta and shape xi. The lognormal dispersion is stored as sigma (not
/// sigma^2).
class MixtureParams {
 public:
  /// Throws std::domain_error unless tau, sigma, beta > 0 and all are finite.
  MixtureParams(double mu_c, double tau, double mu, double sigma, double beta, double xi);

  static MixtureParams from_vector(const ParamVector& v) {
    return {v[0], v[1], v[2], v[3], v[4], v[5]};
  }
  ParamVector to_vector() const { return {mu_c_, tau_, mu_, sigma_, beta_, xi_}; }

  double mu_c() const noexcept { return mu_c_; }
  double tau() const noexcept { return tau_; }
  double mu() const noexcept { return mu_; }
  double sigma() const noexcept { return sigma_; }
  double beta() const noexcept { return beta_; }
  double xi() const noexcept { return xi_; }

  double operator[](Param p) const noexcept { return to_vector()[static_cast<std::size_t>(p)]; }

  friend bool operator==(const MixtureParams&, const MixtureParams&) = default;

 private:
  double mu_c_;
  double tau_;
  double mu_;
  double sigma_;
  double beta_;
  double xi_;
};

/// Positive observations x_1..x_n.
class Sample {
 public:
  /// Throws std::domain_error if empty or if any value is not finite and > 0.
  explicit Sample(std::vector<double> values);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

 private:
  std::vector<double> values_;
};

/// Thrown when the rejection sampler exceeds its proposal budget.
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Below this |xi| the GPD uses its exponential limit.
inline constexpr double kXiExponentialLimit = 1e-10;

namespace detail {

inline double weight(double x, double mu_c, double tau) noexcept {
  return 0.5 + std::atan((x - mu_c) / tau) * std::numbers::inv_pi;
}

inline double lognormal_pdf(double x, double mu, double sigma) noexcept {
  const double z = (std::log(x) - mu) / sigma;
  return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * sigma * x);
}

inline double gpd_pdf(double x, double beta, double xi) noexcept {
  if (x < 0.0) return 0.0;
  if (std::abs(xi) < kXiExponentialLimit) return std::exp(-x / beta) / beta;
  const double t = 1.0 + xi * x / beta;
  if (t <= 0.0) return 0.0;
  return std::pow(t, -1.0 / xi - 1.0) / beta;
}

/// Survival function of the zero-threshold GPD.
inline double gpd_survival(double x, double beta, double xi) noexcept {
  if (x <= 0.0) return 1.0;
  if (std::abs(xi) < kXiExponentialLimit) return std::exp(-x / beta);
  const double t = 1.0 + xi * x / beta;
  if (t <= 0.0) return 0.0;
  return std::pow(t, -1.0 / xi);
}

inline double mixture_density_unnorm(double x, const MixtureParams& th) noexcept {
  const double p = weight(x, th.mu_c(), th.tau());
  return (1.0 - p) * lognormal_pdf(x, th.mu(), th.sigma()) + p * gpd_pdf(x, th.beta(), th.xi());
}

}  // namespace detail

/// Cauchy-cdf mixing weight 1/2 + atan((x - mu_c)/tau)/pi.
double weight(double x, double mu_c, double tau);

double lognormal_pdf(double x, double mu, double sigma);

/// Zero-threshold GPD density. Returns 0 outside the support (x < 0, or
/// x >= -beta/xi when xi < 0).
double gpd_pdf(double x, double beta, double xi);

/// Numerator (1 - p(x)) f_1(x) + p(x) f_2(x) of the mixture density.
double mixture_density_unnorm(double x, const MixtureParams& theta);

/// Quantile function of the zero-threshold GPD.
double gpd_quantile(double u, double beta, double xi);

/// Draws n i.i.d. observations from the normalized mixture by acceptance-rejection
/// against the equal-weight component mixture. Deterministic in `seed`.
///
/// Throws SimulationError if more than `max_proposals_per_draw * n + 10000`
/// proposals are needed (parameter regions where the normalizing constant is
/// vanishingly small).
Sample simulate(const MixtureParams& theta, std::size_t n, std::uint64_t seed,
                std::size_t max_proposals_per_draw = 1000);

/// Same as simulate() but draws from an engine the caller owns and fills `out`.
void simulate_into(const MixtureParams& theta, std::span<double> out, Rng& rng,
                   std::size_t max_proposals_per_draw = 1000);

/// GPD maximum likelihood on positive excesses.
struct GpdFit {
  double beta;
  double xi;
  double loglik;
  bool converged;
};

/// Numerical GPD MLE (Nelder-Mead on (log beta, xi), started from the method of
/// moments). Throws std::domain_error with fewer than 3 excesses.
GpdFit fit_gpd(std::span<const double> excesses);

}  // namespace dynmix
