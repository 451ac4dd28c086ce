#include "dynmix/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dynmix::stats {

double mean(std::span<const double> v) {
  if (v.empty()) throw std::domain_error("mean of empty range");
  CompensatedSum s;
  for (double x : v) s.add(x);
  return s.value() / static_cast<double>(v.size());
}

double sd(std::span<const double> v, bool population) {
  const std::size_t n = v.size();
  if (n < (population ? 1u : 2u)) throw std::domain_error("sd: not enough values");
  const double m = mean(v);
  CompensatedSum s;
  for (double x : v) s.add((x - m) * (x - m));
  return std::sqrt(s.value() / static_cast<double>(population ? n : n - 1));
}

double quantile_sorted(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw std::domain_error("quantile of empty range");
  if (!(prob >= 0.0 && prob <= 1.0)) throw std::domain_error("quantile: prob outside [0,1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double quantile(std::span<const double> v, double prob) {
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end());
  return quantile_sorted(sorted, prob);
}

double median(std::span<const double> v) { return quantile(v, 0.5); }

void CompensatedSum::add(double x) noexcept {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x))
    comp_ += (sum_ - t) + x;
  else
    comp_ += (x - t) + sum_;
  sum_ = t;
}

}  // namespace dynmix::stats
