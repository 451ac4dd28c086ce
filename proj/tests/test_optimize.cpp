#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "dynmix/optimize.hpp"

using namespace dynmix;
using doctest::Approx;

TEST_CASE("Nelder-Mead finds the Rosenbrock minimum") {
  auto f = [](std::span<const double> x) {
    return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
  };
  const std::vector<double> x0{-1.2, 1.0};
  NelderMeadOptions opt;
  opt.rel_tol = 1e-14;
  opt.max_iterations = 5000;
  const auto r = nelder_mead(f, x0, opt);
  CHECK(r.converged);
  CHECK(r.x[0] == Approx(1.0).epsilon(1e-3));
  CHECK(r.x[1] == Approx(1.0).epsilon(1e-3));
  CHECK(r.value < 1e-8);
}

TEST_CASE("Nelder-Mead quadratic in six dimensions") {
  auto f = [](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += static_cast<double>(i + 1) * (x[i] - 0.5 * i) * (x[i] - 0.5 * i);
    return s;
  };
  const std::vector<double> x0(6, 3.0);
  NelderMeadOptions opt;
  opt.rel_tol = 1e-15;
  opt.max_iterations = 20000;
  const auto r = nelder_mead(f, x0, opt);
  for (std::size_t i = 0; i < 6; ++i) CHECK(r.x[i] == Approx(0.5 * i).epsilon(1e-3).scale(1.0));
}

TEST_CASE("infeasible points are never accepted") {
  // Minimum of the unconstrained quadratic lies in the infeasible region x > 1.
  int infeasible_calls = 0;
  auto f = [&](std::span<const double> x) {
    if (x[0] > 1.0) {
      ++infeasible_calls;
      return std::numeric_limits<double>::infinity();
    }
    if (x[0] < -5.0) return std::numeric_limits<double>::quiet_NaN();
    return (x[0] - 2.0) * (x[0] - 2.0);
  };
  const std::vector<double> x0{0.0};
  const auto r = nelder_mead(f, x0);
  CHECK(std::isfinite(r.value));
  CHECK(r.x[0] <= 1.0);
  CHECK(r.x[0] > 0.9);
  CHECK(infeasible_calls > 0);
}

TEST_CASE("iteration cap is reported as non-convergence") {
  auto f = [](std::span<const double> x) {
    return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
  };
  const std::vector<double> x0{-1.2, 1.0};
  NelderMeadOptions opt;
  opt.max_iterations = 5;
  const auto r = nelder_mead(f, x0, opt);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations <= 5);
}
