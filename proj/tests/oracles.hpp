#pragma once

// Test-only reference computations. Nothing here calls into the quadrature
// or distance code under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "dynmix/distributions.hpp"
#include "dynmix/rng.hpp"

namespace oracle {

inline dynmix::MixtureParams design_point(double xi = 0.25) {
  return {1.0, 2.0, 0.0, 0.5, 3.5, xi};
}

/// Kolmogorov-Smirnov statistic of a sample against a continuous cdf.
inline double ks_statistic(std::span<const double> sample, const std::function<double(double)>& cdf) {
  std::vector<double> s(sample.begin(), sample.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = cdf(s[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

struct MonteCarloEstimate {
  double value;
  double std_error;
};

/// Z = 1 - E_{f1}[p(X)] + E_{f2}[p(X)] from `draws` independent draws of each
/// component (lognormal by exponentiated normals, GPD by inverse cdf).
inline MonteCarloEstimate mc_normalizing_constant(const dynmix::MixtureParams& th, std::size_t draws,
                                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto p = [&](double x) { return 0.5 + std::atan((x - th.mu_c()) / th.tau()) / std::numbers::pi; };
  double s1 = 0, q1 = 0, s2 = 0, q2 = 0;
  for (std::size_t i = 0; i < draws; ++i) {
    const double x1 = std::exp(th.mu() + th.sigma() * normal(rng));
    const double u = unif(rng);
    const double x2 = th.beta() * (std::pow(1.0 - u, -th.xi()) - 1.0) / th.xi();
    const double a = p(x1), b = p(x2);
    s1 += a;
    q1 += a * a;
    s2 += b;
    q2 += b * b;
  }
  const double n = static_cast<double>(draws);
  const double m1 = s1 / n, m2 = s2 / n;
  const double v1 = q1 / n - m1 * m1, v2 = q2 / n - m2 * m2;
  return {1.0 - m1 + m2, std::sqrt(v1 / n + v2 / n)};
}

/// Cramer-von Mises distance by direct evaluation of both empirical step
/// functions at every distinct pooled point.
inline double brute_force_cvm(std::span<const double> x, std::span<const double> z) {
  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), z.begin(), z.end());
  std::sort(pooled.begin(), pooled.end());
  pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());
  const double n = static_cast<double>(x.size()), m = static_cast<double>(z.size());
  auto count_le = [](std::span<const double> v, double t) {
    return static_cast<double>(std::count_if(v.begin(), v.end(), [t](double a) { return a <= t; }));
  };
  auto count_eq = [](std::span<const double> v, double t) {
    return static_cast<double>(std::count(v.begin(), v.end(), t));
  };
  double total = 0.0;
  for (double t : pooled) {
    const double F = count_le(x, t) / n;
    const double G = count_le(z, t) / m;
    const double w = 0.5 * (count_eq(x, t) / n + count_eq(z, t) / m);
    total += w * (F - G) * (F - G);
  }
  return total;
}

}  // namespace oracle
