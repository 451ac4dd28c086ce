#pragma once

#include <functional>
#include <span>
#include <vector>

namespace dynmix {

struct NelderMeadOptions {
  int max_iterations = 2000;
  /// Stop when f_max - f_min <= rel_tol * (|f_min| + rel_tol) over the simplex.
  double rel_tol = 1e-8;
  /// Initial simplex edge along each coordinate. Empty means
  /// 0.1 * max(|x0_i|, 1) per coordinate.
  std::vector<double> initial_step;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value;
  int iterations;
  int evaluations;
  bool converged;
};

/// Derivative-free minimization. Non-finite objective values are treated as
/// +inf, so infeasible points are simply never accepted into the simplex.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::span<const double> x0, const NelderMeadOptions& options = {});

}  // namespace dynmix
