#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "dynmix/distributions.hpp"

namespace dynmix {

struct QuadratureConfig {
  /// Unit-interval contribution below which summation of I stops.
  double eps_I = 1e-4;
  /// Safety cap on the number of unit intervals.
  std::size_t max_intervals = 1'000'000;
  /// Relative tolerance of the adaptive Gauss-Kronrod rule on each interval.
  double per_interval_tol = 1e-10;

  /// Throws std::domain_error on eps_I <= 0, max_intervals == 0 or per_interval_tol <= 0.
  void validate() const;
};

/// Raised when the interval-wise summation does not settle within
/// max_intervals. Carries the partial sum reached.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double partial_sum, std::size_t intervals)
      : std::runtime_error(what), partial_sum_(partial_sum), intervals_(intervals) {}
  double partial_sum() const noexcept { return partial_sum_; }
  std::size_t intervals() const noexcept { return intervals_; }

 private:
  double partial_sum_;
  std::size_t intervals_;
};

struct IntegralIResult {
  double value;
  /// Number of unit intervals [n-1, n] summed.
  std::size_t intervals;
};

/// I = int_0^inf [f_2(x) - f_1(x)] atan((x - mu_c)/tau) dx, summed over unit
/// intervals [n-1, n].
///
/// Summation stops once two consecutive intervals contribute less than eps_I
/// in absolute value, and only after the lognormal mass beyond n has dropped
/// below eps_I (and, for xi < 0, after the GPD support endpoint). Each unit
/// interval is integrated with adaptive Gauss-Kronrod (G7/K15); the running
/// sum is compensated.
IntegralIResult evaluate_integral_I(const MixtureParams& theta, const QuadratureConfig& cfg = {});

double integral_I(const MixtureParams& theta, const QuadratureConfig& cfg = {});

/// Z = 1 + I / pi.
double normalizing_constant(const MixtureParams& theta, const QuadratureConfig& cfg = {});

/// The normalized mixture as a distribution: pdf, cdf, survival and quantile.
///
/// The numerator is integrated once over a fixed panel decomposition (unit
/// intervals near the origin, log-spaced panels around the lognormal bulk and
/// the weight transition, then geometrically growing panels, with a
/// closed-form GPD remainder beyond the last panel). cdf and quantile reuse the
/// panel prefix sums and integrate only a partial final panel. Normalization
/// uses the full integral of the numerator, so cdf(x) -> 1 as x -> inf
/// independently of eps_I.
///
/// Immutable after construction; safe to share between threads.
class MixtureDistribution {
 public:
  explicit MixtureDistribution(const MixtureParams& theta, const QuadratureConfig& cfg = {});

  const MixtureParams& params() const noexcept { return theta_; }

  /// Integral of the numerator over (0, inf).
  double total_mass() const noexcept { return total_; }

  double pdf(double x) const;
  double cdf(double x) const;
  /// 1 - cdf(x), evaluated from the upper panels to keep relative accuracy
  /// in the far tail.
  double survival(double x) const;
  /// q with |cdf(q) - alpha| < 1e-8 (relative accuracy on 1 - alpha in the
  /// upper tail). Requires 0 < alpha < 1.
  double quantile(double alpha) const;

 private:
  double partial(std::size_t panel, double x) const;
  double tail_remainder(double x) const;

  MixtureParams theta_;
  double tol_;
  std::vector<double> edges_;   // panel i is [edges_[i], edges_[i+1]]
  std::vector<double> prefix_;  // mass of panels before i (size = panels + 1)
  std::vector<double> suffix_;  // mass from panel i onward, including the remainder
  double remainder_ = 0.0;      // mass beyond edges_.back()
  double total_ = 0.0;
};

/// Convenience wrappers; each call builds a MixtureDistribution.
double mixture_cdf(double x, const MixtureParams& theta, const QuadratureConfig& cfg = {});
double mixture_quantile(double alpha, const MixtureParams& theta, const QuadratureConfig& cfg = {});

}  // namespace dynmix
