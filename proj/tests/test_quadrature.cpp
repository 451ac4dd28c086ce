#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "doctest.h"
#include "dynmix/distributions.hpp"
#include "dynmix/quadrature.hpp"
#include "dynmix/stats.hpp"
#include "oracles.hpp"

using namespace dynmix;
using doctest::Approx;

namespace {

QuadratureConfig tight(double eps = 1e-10) {
  QuadratureConfig cfg;
  cfg.eps_I = eps;
  return cfg;
}

// int_0^inf g(x) atan((x - mu_c)/tau) dx on the whole half line by
// exp-sinh quadrature, without any interval splitting.
template <class G>
double weighted_half_line(G g, const MixtureParams& th) {
  boost::math::quadrature::exp_sinh<double> integrator;
  auto f = [&](double x) { return x > 0.0 ? g(x) * std::atan((x - th.mu_c()) / th.tau()) : 0.0; };
  return integrator.integrate(f, 1e-14);
}

}  // namespace

TEST_CASE("QuadratureConfig validation") {
  QuadratureConfig cfg;
  cfg.eps_I = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::domain_error);
  cfg = {};
  cfg.max_intervals = 0;
  CHECK_THROWS_AS(cfg.validate(), std::domain_error);
  CHECK_NOTHROW(QuadratureConfig{}.validate());
}

TEST_CASE("integral_I matches a direct half-line integration of each component") {
  for (double xi : {0.25, 0.5}) {
    const auto th = oracle::design_point(xi);
    const double j2 = weighted_half_line([&](double x) { return detail::gpd_pdf(x, th.beta(), th.xi()); }, th);
    const double j1 =
        weighted_half_line([&](double x) { return detail::lognormal_pdf(x, th.mu(), th.sigma()); }, th);
    // The unit-interval rule drops everything past its last interval N, which
    // is at most pi/2 times the component tail masses there.
    const auto r = evaluate_integral_I(th, tight());
    const double N = static_cast<double>(r.intervals);
    const double dropped = std::numbers::pi / 2 *
                           (detail::gpd_survival(N, th.beta(), th.xi()) +
                            0.5 * std::erfc(std::log(N) / (th.sigma() * std::numbers::sqrt2)));
    CHECK(std::abs(r.value - (j2 - j1)) <= dropped + 1e-9);
    CHECK(std::abs(integral_I(th, tight(1e-12)) - (j2 - j1)) < std::abs(r.value - (j2 - j1)) + 1e-12);
  }
}

TEST_CASE("normalizing constant agrees with the Monte Carlo identity") {
  const auto th = oracle::design_point();
  const auto mc = oracle::mc_normalizing_constant(th, 2'000'000, 99);
  const double z = normalizing_constant(th, tight(1e-8));
  CHECK(std::abs(z - mc.value) < 3.0 * mc.std_error);
}

TEST_CASE("degenerate weight gives Z -> 1") {
  const MixtureParams th(-1e9, 1.0, 0.0, 0.5, 3.5, 0.25);
  CHECK(normalizing_constant(th, tight()) == Approx(1.0).epsilon(1e-6));
  // With the default tolerance the truncated tail costs at most ~1e-3.
  CHECK(std::abs(normalizing_constant(th) - 1.0) < 1e-3);
}

TEST_CASE("Z is smooth in mu") {
  const auto th = oracle::design_point();
  const double z0 = normalizing_constant(th, tight());
  const MixtureParams moved(1.0, 2.0, 1e-4, 0.5, 3.5, 0.25);
  const double z1 = normalizing_constant(moved, tight());
  CHECK(std::abs(z1 - z0) < 1e-3);
  CHECK(std::abs(z1 - z0) > 0.0);
}

TEST_CASE("shrinking eps_I refines Z monotonically") {
  const auto th = oracle::design_point();
  const double reference = normalizing_constant(th, tight(1e-10));
  double prev = INFINITY;
  std::size_t prev_intervals = 0;
  for (int s = 2; s <= 8; ++s) {
    const auto cfg = tight(std::pow(10.0, -s));
    const double err = std::abs(1.0 + integral_I(th, cfg) / std::numbers::pi - reference);
    const auto intervals = evaluate_integral_I(th, cfg).intervals;
    CHECK(err <= prev);
    CHECK(intervals >= prev_intervals);
    prev = err;
    prev_intervals = intervals;
  }
}

TEST_CASE("non-convergence reports the partial sum") {
  QuadratureConfig cfg;
  cfg.max_intervals = 3;
  try {
    (void)integral_I(oracle::design_point(), cfg);
    FAIL("expected QuadratureError");
  } catch (const QuadratureError& e) {
    CHECK(e.intervals() == 3);
    CHECK(std::isfinite(e.partial_sum()));
  }
}

TEST_CASE("heavy tails with xi >= 1 still converge") {
  const MixtureParams th(1.0, 2.0, 0.0, 0.5, 3.5, 1.2);
  const double z = normalizing_constant(th);
  CHECK(std::isfinite(z));
  CHECK(z > 0.0);
}

TEST_CASE("normalized density integrates to one") {
  const auto th = oracle::design_point();
  const MixtureDistribution dist(th);
  const double z = normalizing_constant(th, tight());
  CHECK(dist.total_mass() / z == Approx(1.0).epsilon(1e-7));
  CHECK(dist.cdf(INFINITY) == 1.0);
  CHECK(dist.cdf(1e300) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cdf is nondecreasing and quantiles round-trip") {
  for (double xi : {-0.2, 0.25, 0.5, 0.92}) {
    const MixtureParams th(1.0, 2.0, 0.0, 0.5, 3.5, xi);
    const MixtureDistribution dist(th);
    double prev = 0.0;
    for (double x = 0.01; x < 1e4; x *= 1.05) {
      const double c = dist.cdf(x);
      CHECK(c >= prev);
      prev = c;
    }
    for (double a : {1e-6, 0.01, 0.25, 0.5, 0.9, 0.99, 0.995, 0.9999}) {
      const double q = dist.quantile(a);
      CHECK(std::abs(dist.cdf(q) - a) < 1e-8);
      CHECK(dist.survival(q) == Approx(1.0 - a).epsilon(1e-7));
    }
    CHECK(dist.quantile(0.9) < dist.quantile(0.99));
  }
  CHECK_THROWS_AS(mixture_quantile(0.0, oracle::design_point()), std::domain_error);
  CHECK_THROWS_AS(mixture_quantile(1.0, oracle::design_point()), std::domain_error);
}

TEST_CASE("far-tail quantiles keep relative accuracy") {
  const MixtureParams th(1.0, 2.0, 0.0, 0.5, 3.5, 0.9);
  const MixtureDistribution dist(th);
  for (double tail : {1e-6, 1e-9, 1e-12}) {
    const double q = dist.quantile(1.0 - tail);
    CHECK(dist.survival(q) == Approx(tail).epsilon(1e-4));
  }
}

TEST_CASE("median matches simulation") {
  const auto th = oracle::design_point();
  const std::size_t n = 1'000'000;
  const Sample s = simulate(th, n, 2024);
  const double emp = stats::median(s.values());
  const double iqr = stats::quantile(s.values(), 0.75) - stats::quantile(s.values(), 0.25);
  CHECK(std::abs(mixture_quantile(0.5, th) - emp) < 3.0 * iqr / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(mixture_cdf(emp, th) - 0.5) < 3.0 * 0.5 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("awkward parameter regions still normalize") {
  // Lognormal bulk far beyond where the GPD has decayed, a narrow body, and a
  // sharp weight transition.
  const std::vector<MixtureParams> cases = {
      {1.0, 2.0, 6.0, 0.3, 0.5, 0.1},
      {1.0, 2.0, -4.0, 0.05, 3.5, 0.25},
      {20.0, 0.01, 1.0, 1.5, 10.0, 0.6},
  };
  for (const auto& th : cases) {
    const MixtureDistribution dist(th);
    const double z = normalizing_constant(th, tight());
    CHECK(dist.total_mass() / z == Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("bounded GPD tails stop inside the support") {
  // xi just below zero behaves like the exponential limit; the support end
  // beta/|xi| is far beyond any mass that matters.
  const MixtureParams near_zero(0.45, 2.1, -0.27, 0.3, 4.9, -7.8e-5);
  const MixtureParams exponential(0.45, 2.1, -0.27, 0.3, 4.9, 0.0);
  const auto r = evaluate_integral_I(near_zero);
  CHECK(r.intervals < 1000);
  CHECK(normalizing_constant(near_zero, tight(1e-8)) ==
        Approx(normalizing_constant(exponential, tight(1e-8))).epsilon(1e-4));

  // A clearly bounded tail against direct integration over the support.
  const MixtureParams bounded(1.0, 2.0, 0.0, 0.5, 3.5, -0.2);
  const double end = 3.5 / 0.2;
  auto f = [&](double x) {
    return (detail::gpd_pdf(x, 3.5, -0.2) - detail::lognormal_pdf(x, 0.0, 0.5)) * std::atan((x - 1.0) / 2.0);
  };
  const double lognormal_tail = boost::math::quadrature::exp_sinh<double>().integrate(
      [&](double t) { return t > 0.0 ? f(end + t) : 0.0; }, 1e-14);
  double body = 0.0;
  for (int k = 0; k < 35; ++k)
    body += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, end * k / 35.0, end * (k + 1) / 35.0);
  CHECK(integral_I(bounded, tight(1e-12)) == Approx(body + lognormal_tail).epsilon(1e-8));
}
