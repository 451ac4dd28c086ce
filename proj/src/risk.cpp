#include "dynmix/risk.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "dynmix/stats.hpp"

namespace dynmix {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kEsClip = 1e-9;

void check_level(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("risk level must be in (0,1)");
}

}  // namespace

double value_at_risk(const MixtureParams& theta, double alpha, const QuadratureConfig& cfg) {
  check_level(alpha);
  return MixtureDistribution(theta, cfg).quantile(alpha);
}

double tail_probability(const MixtureParams& theta, double t, const QuadratureConfig& cfg) {
  if (!(t > 0.0)) return 1.0;
  return MixtureDistribution(theta, cfg).survival(t);
}

double expected_shortfall(const MixtureDistribution& dist, double alpha) {
  check_level(alpha);
  const double xi = dist.params().xi(), beta = dist.params().beta();
  if (xi >= 1.0) return kInf;
  const double top = 1.0 - kEsClip;
  if (alpha >= top) throw std::domain_error("expected_shortfall: alpha too close to 1");

  auto integrand = [&](double v) {
    const double w = std::exp(-v);
    return dist.quantile(-std::expm1(-v)) * w;
  };
  double error = 0.0;
  const double body = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      integrand, -std::log1p(-alpha), -std::log(kEsClip), 15, 1e-6, &error);
  const double q_top = dist.quantile(top);
  const double clipped = kEsClip * (q_top + beta) / (1.0 - xi);
  return (body + clipped) / (1.0 - alpha);
}

double expected_shortfall(const MixtureParams& theta, double alpha, const QuadratureConfig& cfg) {
  check_level(alpha);
  if (theta.xi() >= 1.0) return kInf;
  return expected_shortfall(MixtureDistribution(theta, cfg), alpha);
}

PotFit pot_fit(const Sample& data, double u_level) {
  if (!(u_level > 0.0 && u_level < 1.0)) throw std::domain_error("pot_fit: u_level must be in (0,1)");
  const double u = stats::quantile(data.values(), u_level);
  std::vector<double> excesses;
  for (double x : data)
    if (x > u) excesses.push_back(x - u);
  if (excesses.size() < 10)
    throw std::domain_error("pot_fit: fewer than 10 observations above the threshold");
  const GpdFit g = fit_gpd(excesses);
  return {u, static_cast<double>(excesses.size()) / static_cast<double>(data.size()), g.beta, g.xi};
}

double pot_var(const PotFit& fit, double alpha) {
  check_level(alpha);
  const double boundary = 1.0 - fit.zeta_u;
  if (alpha < boundary) throw std::domain_error("pot_var: level below the POT threshold level");
  if (alpha == boundary) return fit.u;
  const double r = (1.0 - alpha) / fit.zeta_u;
  if (std::abs(fit.xi) < kXiExponentialLimit) return fit.u - fit.beta * std::log(r);
  return fit.u + fit.beta / fit.xi * std::expm1(-fit.xi * std::log(r));
}

double pot_es(const PotFit& fit, double alpha) {
  const double var = pot_var(fit, alpha);
  if (fit.xi >= 1.0) return kInf;
  return var / (1.0 - fit.xi) + (fit.beta - fit.xi * fit.u) / (1.0 - fit.xi);
}

double pot_tail_probability(const PotFit& fit, double t) {
  if (t < fit.u) throw std::domain_error("pot_tail_probability: t below the threshold");
  return fit.zeta_u * detail::gpd_survival(t - fit.u, fit.beta, fit.xi);
}

RiskReport model_risk_report(const MixtureParams& theta, std::string method, std::span<const double> levels,
                             std::span<const double> thresholds, const QuadratureConfig& cfg) {
  const MixtureDistribution dist(theta, cfg);
  RiskReport r;
  r.method = std::move(method);
  r.levels.assign(levels.begin(), levels.end());
  r.tail_thresholds.assign(thresholds.begin(), thresholds.end());
  for (double a : levels) {
    check_level(a);
    r.var.push_back(dist.quantile(a));
    r.es.push_back(theta.xi() >= 1.0 ? kInf : expected_shortfall(dist, a));
  }
  for (double t : thresholds) r.tail_probs.push_back(t > 0.0 ? dist.survival(t) : 1.0);
  return r;
}

RiskReport pot_risk_report(const PotFit& fit, std::span<const double> levels,
                           std::span<const double> thresholds) {
  RiskReport r;
  r.method = "GPD";
  r.levels.assign(levels.begin(), levels.end());
  r.tail_thresholds.assign(thresholds.begin(), thresholds.end());
  for (double a : levels) {
    check_level(a);
    const bool defined = a >= 1.0 - fit.zeta_u;
    r.var.push_back(defined ? pot_var(fit, a) : kNaN);
    r.es.push_back(defined ? pot_es(fit, a) : kNaN);
  }
  for (double t : thresholds) r.tail_probs.push_back(t >= fit.u ? pot_tail_probability(fit, t) : kNaN);
  return r;
}

RiskReport empirical_measures(const Sample& data, std::span<const double> levels,
                              std::span<const double> thresholds) {
  std::vector<double> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  RiskReport r;
  r.method = "EMP";
  r.levels.assign(levels.begin(), levels.end());
  r.tail_thresholds.assign(thresholds.begin(), thresholds.end());
  for (double a : levels) {
    check_level(a);
    const double q = stats::quantile_sorted(sorted, a);
    const auto first_above = std::upper_bound(sorted.begin(), sorted.end(), q);
    r.var.push_back(q);
    r.es.push_back(first_above == sorted.end() ? q : stats::mean(std::span<const double>(first_above, sorted.end())));
  }
  for (double t : thresholds) {
    const auto at_least = sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), t);
    r.tail_probs.push_back(static_cast<double>(at_least) / n);
  }
  return r;
}

double mare(std::span<const double> empirical, std::span<const double> estimated) {
  if (empirical.size() != estimated.size() || empirical.empty())
    throw std::domain_error("mare: need equal, nonzero lengths");
  stats::CompensatedSum s;
  for (std::size_t i = 0; i < empirical.size(); ++i) {
    if (empirical[i] == 0.0) throw std::domain_error("mare: empirical value is zero");
    s.add(std::abs(empirical[i] - estimated[i]) / std::abs(empirical[i]));
  }
  return s.value() / static_cast<double>(empirical.size());
}

void attach_mare(RiskReport& row, const RiskReport& empirical) {
  auto one = [](std::span<const double> emp, std::span<const double> est) -> std::optional<double> {
    std::vector<double> a, b;
    for (std::size_t i = 0; i < std::min(emp.size(), est.size()); ++i) {
      if (std::isfinite(est[i]) && std::isfinite(emp[i]) && emp[i] != 0.0) {
        a.push_back(emp[i]);
        b.push_back(est[i]);
      }
    }
    if (a.empty()) return std::nullopt;
    return mare(a, b);
  };
  row.mare_var = one(empirical.var, row.var);
  row.mare_es = one(empirical.es, row.es);
}

double weight_threshold(const MixtureParams& theta, double alpha) {
  check_level(alpha);
  return theta.mu_c() + theta.tau() * std::tan(std::numbers::pi * (alpha - 0.5));
}

std::string format_number(double v) {
  if (std::isnan(v)) return "-";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_level(double alpha) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, 100.0 * alpha, std::chars_format::general, 10);
  return std::string(buf, res.ptr) + "%";
}

void write_risk_table(std::ostream& out, std::span<const RiskReport> rows, RiskTable which) {
  if (which == RiskTable::Mare) {
    out << "measure";
    for (const auto& r : rows) out << ',' << r.method;
    out << "\nMARE VaR";
    for (const auto& r : rows) out << ',' << (r.mare_var ? format_number(*r.mare_var) : "-");
    out << "\nMARE ES";
    for (const auto& r : rows) out << ',' << (r.mare_es ? format_number(*r.mare_es) : "-");
    out << '\n';
    return;
  }
  out << "method";
  if (rows.empty()) {
    out << '\n';
    return;
  }
  const bool tail = which == RiskTable::Tail;
  const auto& header = tail ? rows.front().tail_thresholds : rows.front().levels;
  for (double h : header) out << ',' << (tail ? format_number(h) : format_level(h));
  out << '\n';
  for (const auto& r : rows) {
    const auto& values = tail ? r.tail_probs : which == RiskTable::VaR ? r.var : r.es;
    out << r.method;
    for (double v : values) out << ',' << format_number(v);
    out << '\n';
  }
}

}  // namespace dynmix
