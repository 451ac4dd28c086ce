#include "dynmix/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace dynmix {

namespace {

double sanitize(double v) {
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::span<const double> x0, const NelderMeadOptions& options) {
  const std::size_t dim = x0.size();
  if (dim == 0) throw std::invalid_argument("nelder_mead: empty starting point");
  if (!options.initial_step.empty() && options.initial_step.size() != dim)
    throw std::invalid_argument("nelder_mead: initial_step has wrong size");

  constexpr double kReflect = 1.0;
  constexpr double kExpand = 2.0;
  constexpr double kContract = 0.5;
  constexpr double kShrink = 0.5;

  int evaluations = 0;
  auto eval = [&](const std::vector<double>& x) {
    ++evaluations;
    return sanitize(f(x));
  };

  std::vector<std::vector<double>> simplex(dim + 1, std::vector<double>(x0.begin(), x0.end()));
  for (std::size_t i = 0; i < dim; ++i) {
    const double step = options.initial_step.empty() ? 0.1 * std::max(std::abs(x0[i]), 1.0)
                                                      : options.initial_step[i];
    simplex[i + 1][i] += step;
  }
  std::vector<double> values(dim + 1);
  for (std::size_t i = 0; i <= dim; ++i) values[i] = eval(simplex[i]);

  std::vector<std::size_t> order(dim + 1);
  std::vector<double> centroid(dim), trial(dim), trial2(dim);
  int iter = 0;
  bool converged = false;

  auto point_along = [&](double coef, std::vector<double>& out, const std::vector<double>& worst) {
    for (std::size_t j = 0; j < dim; ++j) out[j] = centroid[j] + coef * (centroid[j] - worst[j]);
  };

  for (; iter < options.max_iterations; ++iter) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Stable sort keeps the tie order deterministic.
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[dim - 1];

    const double f_best = values[best];
    const double f_worst = values[worst];
    if (std::isfinite(f_worst) &&
        f_worst - f_best <= options.rel_tol * (std::abs(f_best) + options.rel_tol)) {
      converged = true;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= dim; ++i) {
      if (i == worst) continue;
      for (std::size_t j = 0; j < dim; ++j) centroid[j] += simplex[i][j];
    }
    for (auto& c : centroid) c /= static_cast<double>(dim);

    point_along(kReflect, trial, simplex[worst]);
    const double f_reflect = eval(trial);

    if (f_reflect < f_best) {
      point_along(kExpand, trial2, simplex[worst]);
      const double f_expand = eval(trial2);
      if (f_expand < f_reflect) {
        simplex[worst] = trial2;
        values[worst] = f_expand;
      } else {
        simplex[worst] = trial;
        values[worst] = f_reflect;
      }
      continue;
    }
    if (f_reflect < values[second_worst]) {
      simplex[worst] = trial;
      values[worst] = f_reflect;
      continue;
    }

    // Contraction: outside if the reflected point improved on the worst vertex.
    const bool outside = f_reflect < f_worst;
    point_along(outside ? kContract : -kContract, trial2, simplex[worst]);
    const double f_contract = eval(trial2);
    if (f_contract < (outside ? f_reflect : f_worst)) {
      simplex[worst] = trial2;
      values[worst] = f_contract;
      continue;
    }

    for (std::size_t i = 0; i <= dim; ++i) {
      if (i == best) continue;
      for (std::size_t j = 0; j < dim; ++j)
        simplex[i][j] = simplex[best][j] + kShrink * (simplex[i][j] - simplex[best][j]);
      values[i] = eval(simplex[i]);
    }
  }

  const auto best_it = std::min_element(values.begin(), values.end());
  const auto best = static_cast<std::size_t>(best_it - values.begin());
  return {simplex[best], values[best], iter, evaluations, converged};
}

}  // namespace dynmix
