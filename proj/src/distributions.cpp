#include "dynmix/distributions.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <string>

#include "dynmix/optimize.hpp"
#include "dynmix/stats.hpp"

namespace dynmix {

MixtureParams::MixtureParams(double mu_c, double tau, double mu, double sigma, double beta,
                             double xi)
    : mu_c_(mu_c), tau_(tau), mu_(mu), sigma_(sigma), beta_(beta), xi_(xi) {
  for (double v : to_vector())
    if (!std::isfinite(v)) throw std::domain_error("MixtureParams: non-finite parameter");
  if (tau <= 0.0) throw std::domain_error("MixtureParams: tau must be > 0");
  if (sigma <= 0.0) throw std::domain_error("MixtureParams: sigma must be > 0");
  if (beta <= 0.0) throw std::domain_error("MixtureParams: beta must be > 0");
}

Sample::Sample(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw std::domain_error("Sample: no observations");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]) || values_[i] <= 0.0)
      throw std::domain_error("Sample: observation " + std::to_string(i + 1) +
                              " is not a positive finite number");
  }
}

double weight(double x, double mu_c, double tau) {
  if (!(tau > 0.0)) throw std::domain_error("weight: tau must be > 0");
  return detail::weight(x, mu_c, tau);
}

double lognormal_pdf(double x, double mu, double sigma) {
  if (!(x > 0.0)) throw std::domain_error("lognormal_pdf: x must be > 0");
  if (!(sigma > 0.0)) throw std::domain_error("lognormal_pdf: sigma must be > 0");
  return detail::lognormal_pdf(x, mu, sigma);
}

double gpd_pdf(double x, double beta, double xi) {
  if (!(beta > 0.0)) throw std::domain_error("gpd_pdf: beta must be > 0");
  return detail::gpd_pdf(x, beta, xi);
}

double mixture_density_unnorm(double x, const MixtureParams& theta) {
  if (!(x > 0.0)) throw std::domain_error("mixture_density_unnorm: x must be > 0");
  return detail::mixture_density_unnorm(x, theta);
}

double gpd_quantile(double u, double beta, double xi) {
  if (!(u >= 0.0 && u < 1.0)) throw std::domain_error("gpd_quantile: u outside [0,1)");
  if (std::abs(xi) < kXiExponentialLimit) return -beta * std::log1p(-u);
  return beta * std::expm1(-xi * std::log1p(-u)) / xi;
}

void simulate_into(const MixtureParams& theta, std::span<double> out, Rng& rng,
                   std::size_t max_proposals_per_draw) {
  std::normal_distribution<double> normal;
  const std::size_t budget = max_proposals_per_draw * out.size() + 10000;
  std::size_t proposals = 0;
  for (double& slot : out) {
    for (;;) {
      if (++proposals > budget)
        throw SimulationError("simulate: acceptance-rejection budget exhausted");
      double x;
      if (rng.uniform() < 0.5) {
        x = std::exp(theta.mu() + theta.sigma() * normal(rng));
      } else {
        x = gpd_quantile(rng.uniform(), theta.beta(), theta.xi());
      }
      if (!(x > 0.0) || !std::isfinite(x)) continue;
      const double f1 = detail::lognormal_pdf(x, theta.mu(), theta.sigma());
      const double f2 = detail::gpd_pdf(x, theta.beta(), theta.xi());
      const double total = f1 + f2;
      if (!(total > 0.0)) continue;
      const double p = detail::weight(x, theta.mu_c(), theta.tau());
      const double accept = ((1.0 - p) * f1 + p * f2) / total;
      if (rng.uniform() < accept) {
        slot = x;
        break;
      }
    }
  }
}

Sample simulate(const MixtureParams& theta, std::size_t n, std::uint64_t seed,
                std::size_t max_proposals_per_draw) {
  if (n == 0) throw std::domain_error("simulate: n must be >= 1");
  std::vector<double> draws(n);
  Rng rng(seed);
  simulate_into(theta, draws, rng, max_proposals_per_draw);
  return Sample(std::move(draws));
}

namespace {

double gpd_negloglik(std::span<const double> y, double beta, double xi) {
  const double n = static_cast<double>(y.size());
  if (!(beta > 0.0)) return std::numeric_limits<double>::infinity();
  stats::CompensatedSum s;
  if (std::abs(xi) < kXiExponentialLimit) {
    for (double v : y) s.add(v / beta);
    return n * std::log(beta) + s.value();
  }
  for (double v : y) {
    const double t = xi * v / beta;
    if (t <= -1.0) return std::numeric_limits<double>::infinity();
    s.add(std::log1p(t));
  }
  return n * std::log(beta) + (1.0 + 1.0 / xi) * s.value();
}

}  // namespace

GpdFit fit_gpd(std::span<const double> excesses) {
  if (excesses.size() < 3) throw std::domain_error("fit_gpd: need at least 3 excesses");
  for (double v : excesses)
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::domain_error("fit_gpd: invalid excess");

  const double m = stats::mean(excesses);
  if (!(m > 0.0)) throw std::domain_error("fit_gpd: excesses are all zero");
  const double var = stats::sd(excesses) * stats::sd(excesses);
  double xi0 = var > 0.0 ? 0.5 * (1.0 - m * m / var) : 0.1;
  xi0 = std::clamp(xi0, -0.4, 0.9);
  const double beta0 = std::max(m * (1.0 - xi0), 1e-8);

  auto objective = [&](std::span<const double> p) { return gpd_negloglik(excesses, std::exp(p[0]), p[1]); };
  // The moment start may sit outside the support when xi0 < 0; fall back to
  // the exponential fit in that case.
  std::vector<double> start{std::log(beta0), xi0};
  if (!std::isfinite(objective(start))) start = {std::log(m), 0.0};

  NelderMeadOptions opts;
  opts.max_iterations = 2000;
  opts.rel_tol = 1e-12;
  opts.initial_step = {0.2, 0.1};
  auto res = nelder_mead(objective, start, opts);
  // One restart from the optimum polishes a collapsed simplex.
  res = nelder_mead(objective, res.x, opts);
  return {std::exp(res.x[0]), res.x[1], -res.value, res.converged};
}

}  // namespace dynmix
