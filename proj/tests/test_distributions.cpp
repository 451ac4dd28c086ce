#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "dynmix/distributions.hpp"
#include "dynmix/quadrature.hpp"
#include "dynmix/stats.hpp"
#include "oracles.hpp"

using namespace dynmix;
using doctest::Approx;

TEST_CASE("weight is the Cauchy cdf") {
  CHECK(weight(1.0, 1.0, 2.0) == Approx(0.5).epsilon(1e-15));
  CHECK(weight(3.0, 1.0, 2.0) == Approx(0.75).epsilon(1e-15));
  CHECK(weight(1e12, 1.0, 2.0) == Approx(1.0).epsilon(1e-10));
  CHECK_THROWS_AS(weight(1.0, 0.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(weight(1.0, 0.0, -1.0), std::domain_error);

  double prev = 0.0;
  for (double x = 0.01; x < 100.0; x *= 1.1) {
    const double w = weight(x, 3.0, 0.7);
    CHECK(w >= prev);
    CHECK(w > 0.0);
    CHECK(w < 1.0);
    prev = w;
  }
}

TEST_CASE("lognormal density") {
  CHECK(lognormal_pdf(1.0, 0.0, 0.5) == Approx(1.0 / (std::sqrt(2.0 * std::numbers::pi) * 0.5)));
  CHECK(lognormal_pdf(1.0, 0.0, 1.0) == Approx(0.3989422804014327));
  CHECK_THROWS_AS(lognormal_pdf(0.0, 0.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(lognormal_pdf(-1.0, 0.0, 1.0), std::domain_error);
}

TEST_CASE("GPD density") {
  CHECK(gpd_pdf(0.0, 3.5, 0.25) == Approx(1.0 / 3.5));
  CHECK(gpd_pdf(1.0, 1.0, 0.0) == Approx(std::exp(-1.0)));
  CHECK_THROWS_AS(gpd_pdf(1.0, 0.0, 0.1), std::domain_error);

  SUBCASE("tail exponent -1/xi - 1") {
    const double r = gpd_pdf(2e6, 3.5, 0.5) / gpd_pdf(1e6, 3.5, 0.5);
    CHECK(r == Approx(std::pow(2.0, -3.0)).epsilon(1e-4));
  }
  SUBCASE("bounded support for xi < 0") {
    CHECK(gpd_pdf(9.9, 2.0, -0.2) > 0.0);
    CHECK(gpd_pdf(10.0, 2.0, -0.2) == 0.0);
    CHECK(gpd_pdf(11.0, 2.0, -0.2) == 0.0);
  }
  SUBCASE("exponential branch agrees with the general branch near xi = 0") {
    for (double x : {0.1, 1.0, 5.0, 20.0}) {
      const double limit = gpd_pdf(x, 2.0, 0.0);
      CHECK(gpd_pdf(x, 2.0, 1e-6) == Approx(limit).epsilon(1e-4));
      CHECK(gpd_pdf(x, 2.0, -1e-6) == Approx(limit).epsilon(1e-4));
    }
  }
}

TEST_CASE("GPD quantile inverts the cdf") {
  for (double xi : {-0.3, 0.0, 0.25, 0.9}) {
    for (double u : {0.01, 0.5, 0.99}) {
      const double x = gpd_quantile(u, 2.0, xi);
      CHECK(1.0 - detail::gpd_survival(x, 2.0, xi) == Approx(u).epsilon(1e-12));
    }
  }
}

TEST_CASE("mixture numerator") {
  const auto th = oracle::design_point();
  // 0.5 * lognormal_pdf(1,0,0.5) + 0.5 * gpd_pdf(1,3.5,0.25), evaluated by hand.
  CHECK(mixture_density_unnorm(1.0, th) == Approx(0.500120222788264).epsilon(1e-13));

  const MixtureParams no_tail(1e9, 1.0, 0.0, 0.5, 3.5, 0.25);
  const MixtureParams all_tail(-1e9, 1.0, 0.0, 0.5, 3.5, 0.25);
  for (double x : {0.3, 1.0, 4.0}) {
    CHECK(mixture_density_unnorm(x, no_tail) == Approx(lognormal_pdf(x, 0.0, 0.5)).epsilon(1e-8));
    CHECK(mixture_density_unnorm(x, all_tail) == Approx(gpd_pdf(x, 3.5, 0.25)).epsilon(1e-8));
  }
  CHECK_THROWS_AS(mixture_density_unnorm(0.0, th), std::domain_error);
}

TEST_CASE("mixture numerator is nonnegative and continuous on a fine grid") {
  const auto th = oracle::design_point(0.5);
  const double h = 1e-3;
  double prev = mixture_density_unnorm(h, th);
  for (double x = 2 * h; x < 50.0; x += h) {
    const double v = mixture_density_unnorm(x, th);
    CHECK(v >= 0.0);
    // |f'| is well below 5 on this range, so adjacent jumps must stay under 5h.
    CHECK(std::abs(v - prev) < 5.0 * h);
    prev = v;
  }
}

TEST_CASE("MixtureParams validation") {
  CHECK_THROWS_AS(MixtureParams(1, 0, 0, 0.5, 3.5, 0.25), std::domain_error);
  CHECK_THROWS_AS(MixtureParams(1, 2, 0, -0.5, 3.5, 0.25), std::domain_error);
  CHECK_THROWS_AS(MixtureParams(1, 2, 0, 0.5, 0.0, 0.25), std::domain_error);
  CHECK_THROWS_AS(MixtureParams(NAN, 2, 0, 0.5, 3.5, 0.25), std::domain_error);
  const auto th = oracle::design_point();
  const ParamVector v = th.to_vector();
  CHECK(v == ParamVector{1.0, 2.0, 0.0, 0.5, 3.5, 0.25});
  CHECK(MixtureParams::from_vector(v) == th);
  CHECK(th[Param::Beta] == 3.5);
}

TEST_CASE("Sample rejects non-positive values") {
  CHECK_THROWS_AS(Sample({}), std::domain_error);
  CHECK_THROWS_AS(Sample({1.0, 0.0}), std::domain_error);
  CHECK_THROWS_AS(Sample({1.0, -2.0}), std::domain_error);
  CHECK_THROWS_AS(Sample({1.0, INFINITY}), std::domain_error);
  CHECK(Sample({1.0, 2.0}).size() == 2);
}

TEST_CASE("simulate is deterministic in the seed") {
  const auto th = oracle::design_point();
  const Sample a = simulate(th, 200, 42);
  const Sample b = simulate(th, 200, 42);
  const Sample c = simulate(th, 200, 43);
  CHECK(std::equal(a.begin(), a.end(), b.begin()));
  CHECK_FALSE(std::equal(a.begin(), a.end(), c.begin()));
  CHECK(std::all_of(a.begin(), a.end(), [](double x) { return x > 0.0; }));
}

TEST_CASE("simulated draws follow the quadrature cdf") {
  for (double xi : {0.25, 0.5}) {
    const auto th = oracle::design_point(xi);
    const MixtureDistribution dist(th);
    auto cdf = [&](double x) { return dist.cdf(x); };
    const double ks3 = oracle::ks_statistic(simulate(th, 1000, 7).values(), cdf);
    const double ks4 = oracle::ks_statistic(simulate(th, 10000, 7).values(), cdf);
    const double ks5 = oracle::ks_statistic(simulate(th, 100000, 7).values(), cdf);
    CHECK(ks5 < 0.01);
    CHECK(ks4 < ks3);
    CHECK(ks5 < ks4);
  }
}

TEST_CASE("degenerate weight simulates the plain GPD") {
  const MixtureParams th(-1e9, 1.0, 0.0, 0.5, 3.5, 0.25);
  const Sample s = simulate(th, 100000, 11);
  auto cdf = [](double x) { return 1.0 - detail::gpd_survival(x, 3.5, 0.25); };
  CHECK(oracle::ks_statistic(s.values(), cdf) < 0.01);
}

TEST_CASE("negative shape keeps the bounded GPD support") {
  const MixtureParams th(-1e9, 1.0, 0.0, 0.5, 2.0, -0.2);
  const Sample s = simulate(th, 5000, 3);
  CHECK(*std::max_element(s.begin(), s.end()) < 10.0);
}

TEST_CASE("rejection sampler gives up in degenerate regions") {
  // Lognormal mass sits where the weight is ~1 and GPD mass where it is ~0,
  // so the normalizing constant is vanishingly small.
  const MixtureParams th(5.0, 1e-3, 5.0, 0.05, 0.01, 0.0);
  CHECK_THROWS_AS(simulate(th, 100, 1, 10), SimulationError);
}

TEST_CASE("GPD maximum likelihood") {
  const MixtureParams gpd_only(-1e9, 1.0, 0.0, 0.5, 3.5, 0.25);
  const Sample s = simulate(gpd_only, 10000, 5);
  const auto fit = fit_gpd(s.values());
  CHECK(std::abs(fit.xi - 0.25) < 0.05);
  CHECK(std::abs(fit.beta - 3.5) < 0.3);
  CHECK(fit.converged);
  CHECK_THROWS_AS(fit_gpd(std::vector<double>{1.0, 2.0}), std::domain_error);
}
