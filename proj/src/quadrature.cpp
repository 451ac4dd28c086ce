#include "dynmix/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "dynmix/stats.hpp"

namespace dynmix {

namespace {

using Kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;
constexpr unsigned kMaxDepth = 15;

template <class F>
double integrate(F&& f, double a, double b, double tol) {
  if (!(b > a)) return 0.0;
  double error = 0.0;
  return Kronrod::integrate(f, a, b, kMaxDepth, tol, &error);
}

double lognormal_survival(double x, double mu, double sigma) {
  if (x <= 0.0) return 1.0;
  return 0.5 * std::erfc((std::log(x) - mu) / (sigma * std::numbers::sqrt2));
}

}  // namespace

void QuadratureConfig::validate() const {
  if (!(eps_I > 0.0)) throw std::domain_error("QuadratureConfig: eps_I must be > 0");
  if (max_intervals < 1) throw std::domain_error("QuadratureConfig: max_intervals must be >= 1");
  if (!(per_interval_tol > 0.0))
    throw std::domain_error("QuadratureConfig: per_interval_tol must be > 0");
}

IntegralIResult evaluate_integral_I(const MixtureParams& theta, const QuadratureConfig& cfg) {
  cfg.validate();
  const double mu_c = theta.mu_c(), tau = theta.tau(), mu = theta.mu(), sigma = theta.sigma();
  const double beta = theta.beta(), xi = theta.xi();
  auto integrand = [=](double x) {
    return (detail::gpd_pdf(x, beta, xi) - detail::lognormal_pdf(x, mu, sigma)) *
           std::atan((x - mu_c) / tau);
  };

  // Stopping is not allowed before the lognormal upper (1 - eps_I) quantile,
  // nor, for a bounded GPD (xi < 0), before its upper (1 - eps_I) quantile.
  // The latter lies inside the support and tends to the exponential quantile
  // as xi -> 0-, so tiny negative xi does not force a walk to beta/|xi|.
  const double z = std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * std::min(cfg.eps_I, 0.5));
  double guard = std::exp(mu + sigma * z);
  if (xi < 0.0) guard = std::max(guard, gpd_quantile(1.0 - std::min(cfg.eps_I, 0.5), beta, xi));

  stats::CompensatedSum sum;
  int below = 0;
  for (std::size_t n = 1; n <= cfg.max_intervals; ++n) {
    const double a = static_cast<double>(n - 1);
    const double piece = integrate(integrand, a, a + 1.0, cfg.per_interval_tol);
    sum.add(piece);
    below = std::abs(piece) < cfg.eps_I ? below + 1 : 0;
    if (below >= 2 && static_cast<double>(n) >= guard) return {sum.value(), n};
  }
  throw QuadratureError("integral_I: no convergence within " + std::to_string(cfg.max_intervals) +
                            " unit intervals",
                        sum.value(), cfg.max_intervals);
}

double integral_I(const MixtureParams& theta, const QuadratureConfig& cfg) {
  return evaluate_integral_I(theta, cfg).value;
}

double normalizing_constant(const MixtureParams& theta, const QuadratureConfig& cfg) {
  return 1.0 + integral_I(theta, cfg) * std::numbers::inv_pi;
}

// ---------------------------------------------------------------------------

MixtureDistribution::MixtureDistribution(const MixtureParams& theta, const QuadratureConfig& cfg)
    : theta_(theta), tol_(cfg.per_interval_tol) {
  cfg.validate();
  const double mu = theta.mu(), sigma = theta.sigma(), beta = theta.beta(), xi = theta.xi();
  const double mu_c = theta.mu_c(), tau = theta.tau();

  std::vector<double> edges{0.0};
  double feature_max = 16.0;
  for (int k = 1; k <= 16; ++k) edges.push_back(k);

  // Lognormal bulk, log-spaced.
  const double log_step = std::min(0.5 * sigma, 0.25);
  for (double z = -8.0; z <= 8.0 + 1e-12; z += log_step / sigma) {
    const double e = std::exp(mu + sigma * z);
    if (e > 0.0 && std::isfinite(e)) edges.push_back(e);
  }
  feature_max = std::max(feature_max, std::exp(mu + 8.0 * sigma));

  // Weight transition.
  for (int k = -10; k <= 10; ++k) {
    const double e = mu_c + tau * k;
    if (e > 0.0) edges.push_back(e);
  }
  feature_max = std::max(feature_max, mu_c + 10.0 * tau);

  // GPD scale.
  for (int k = -6; k <= 4; ++k) edges.push_back(std::ldexp(beta, k));
  feature_max = std::max(feature_max, 16.0 * beta);
  if (xi < 0.0) {
    edges.push_back(-beta / xi);
    feature_max = std::max(feature_max, -beta / xi);
  }

  // Quarter-octave panels from the smallest positive edge up to feature_max.
  std::sort(edges.begin(), edges.end());
  const double lowest = *std::upper_bound(edges.begin(), edges.end(), 0.0);
  constexpr double kRatio = 1.189207115002721;  // 2^(1/4)
  for (double e = lowest; e < feature_max; e *= kRatio) edges.push_back(e);
  std::sort(edges.begin(), edges.end());

  // Extend geometrically until the closed-form remainder is exact to ~1e-17.
  double last = std::max(edges.back(), feature_max);
  auto remainder_error = [&](double a) {
    const double p = detail::weight(a, mu_c, tau);
    return lognormal_survival(a, mu, sigma) + (1.0 - p) * detail::gpd_survival(a, beta, xi);
  };
  while (remainder_error(last) > 1e-17 && last < 1e300) {
    last *= kRatio;
    edges.push_back(last);
  }
  std::sort(edges.begin(), edges.end());

  edges_.clear();
  for (double e : edges) {
    if (!edges_.empty() && e - edges_.back() <= 1e-12 * std::max(e, 1e-300)) continue;
    edges_.push_back(e);
  }

  const std::size_t panels = edges_.size() - 1;
  std::vector<double> mass(panels);
  for (std::size_t i = 0; i < panels; ++i) mass[i] = partial(i, edges_[i + 1]);
  remainder_ = tail_remainder(edges_.back());

  prefix_.assign(panels + 1, 0.0);
  stats::CompensatedSum up;
  for (std::size_t i = 0; i < panels; ++i) {
    up.add(mass[i]);
    prefix_[i + 1] = up.value();
  }
  suffix_.assign(panels + 1, 0.0);
  stats::CompensatedSum down;
  down.add(remainder_);
  suffix_[panels] = down.value();
  for (std::size_t i = panels; i-- > 0;) {
    down.add(mass[i]);
    suffix_[i] = down.value();
  }
  total_ = suffix_[0];
  if (!(total_ > 0.0) || !std::isfinite(total_))
    throw QuadratureError("MixtureDistribution: numerator does not integrate to a positive value",
                          total_, panels);
}

double MixtureDistribution::partial(std::size_t panel, double x) const {
  const MixtureParams& th = theta_;
  return integrate([&th](double t) { return detail::mixture_density_unnorm(t, th); },
                   edges_[panel], x, tol_);
}

double MixtureDistribution::tail_remainder(double x) const {
  const double p = detail::weight(x, theta_.mu_c(), theta_.tau());
  return p * detail::gpd_survival(x, theta_.beta(), theta_.xi()) +
         (1.0 - p) * lognormal_survival(x, theta_.mu(), theta_.sigma());
}

double MixtureDistribution::pdf(double x) const {
  if (!(x > 0.0)) return 0.0;
  return detail::mixture_density_unnorm(x, theta_) / total_;
}

double MixtureDistribution::cdf(double x) const {
  if (!(x > 0.0)) return 0.0;
  if (x >= edges_.back()) return std::clamp(1.0 - tail_remainder(x) / total_, 0.0, 1.0);
  const auto i = static_cast<std::size_t>(std::upper_bound(edges_.begin(), edges_.end(), x) -
                                          edges_.begin() - 1);
  return std::clamp((prefix_[i] + partial(i, x)) / total_, 0.0, 1.0);
}

double MixtureDistribution::survival(double x) const {
  if (!(x > 0.0)) return 1.0;
  if (x >= edges_.back()) return std::clamp(tail_remainder(x) / total_, 0.0, 1.0);
  const auto i = static_cast<std::size_t>(std::upper_bound(edges_.begin(), edges_.end(), x) -
                                          edges_.begin() - 1);
  return std::clamp((suffix_[i] - partial(i, x)) / total_, 0.0, 1.0);
}

double MixtureDistribution::quantile(double alpha) const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("quantile: alpha must be in (0,1)");
  const std::size_t panels = edges_.size() - 1;

  std::size_t panel;
  double in_panel;  // numerator mass to accumulate inside the panel
  double scale;     // magnitude used for the relative stopping rule
  if (alpha <= 0.5) {
    const double target = alpha * total_;
    panel = static_cast<std::size_t>(std::upper_bound(prefix_.begin(), prefix_.end(), target) -
                                     prefix_.begin() - 1);
    panel = std::min(panel, panels - 1);
    in_panel = target - prefix_[panel];
    scale = target;
  } else {
    const double tail = (1.0 - alpha) * total_;
    if (tail <= remainder_) {
      // Beyond the last panel: invert the closed-form remainder on a log scale.
      double lo = edges_.back(), hi = lo * 2.0;
      while (tail_remainder(hi) > tail && hi < 1e300) hi *= 2.0;
      for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
        const double mid = std::sqrt(lo * hi);
        (tail_remainder(mid) > tail ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    }
    // suffix_ is nonincreasing; find the last panel whose suffix reaches `tail`.
    std::size_t lo = 0, hi = panels;  // suffix_[lo] >= tail > suffix_[hi]
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      (suffix_[mid] >= tail ? lo : hi) = mid;
    }
    panel = lo;
    in_panel = suffix_[panel] - tail;
    scale = tail;
  }

  const double a = edges_[panel], b = edges_[panel + 1];
  const double panel_mass = prefix_[panel + 1] - prefix_[panel];
  in_panel = std::clamp(in_panel, 0.0, panel_mass);
  const double tol = 1e-11 * scale;

  double lo = a, hi = b;
  double x = panel_mass > 0.0 ? a + (b - a) * (in_panel / panel_mass) : 0.5 * (a + b);
  for (int it = 0; it < 200; ++it) {
    const double h = partial(panel, x) - in_panel;
    if (std::abs(h) <= tol) break;
    (h < 0.0 ? lo : hi) = x;
    if (hi - lo <= 1e-15 * hi) break;
    const double d = detail::mixture_density_unnorm(x, theta_);
    const double newton = d > 0.0 ? x - h / d : std::numeric_limits<double>::quiet_NaN();
    x = (newton > lo && newton < hi) ? newton : 0.5 * (lo + hi);
  }
  return x;
}

double mixture_cdf(double x, const MixtureParams& theta, const QuadratureConfig& cfg) {
  if (!(x > 0.0)) throw std::domain_error("mixture_cdf: x must be > 0");
  return MixtureDistribution(theta, cfg).cdf(x);
}

double mixture_quantile(double alpha, const MixtureParams& theta, const QuadratureConfig& cfg) {
  return MixtureDistribution(theta, cfg).quantile(alpha);
}

}  // namespace dynmix
