#pragma once

#include <span>
#include <vector>

// Small descriptive-statistics helpers shared by the estimators.
namespace dynmix::stats {

double mean(std::span<const double> v);

/// Standard deviation with divisor n - 1 (sample) or n (population).
double sd(std::span<const double> v, bool population = false);

/// Linear interpolation of order statistics (R type 7). `sorted` must be
/// ascending and nonempty; prob in [0, 1].
double quantile_sorted(std::span<const double> sorted, double prob);

/// Type-7 quantile of unsorted data.
double quantile(std::span<const double> v, double prob);

double median(std::span<const double> v);

/// Neumaier-compensated sum.
class CompensatedSum {
 public:
  void add(double x) noexcept;
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace dynmix::stats
