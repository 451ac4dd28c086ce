#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "dynmix/quadrature.hpp"
#include "dynmix/risk.hpp"
#include "dynmix/stats.hpp"
#include "oracles.hpp"

using namespace dynmix;
using doctest::Approx;

namespace {

// GPD draws by inverse cdf, independent of the library simulator.
std::vector<double> gpd_draws(double beta, double xi, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> out(n);
  for (double& x : out) x = beta * (std::pow(1.0 - u(g), -xi) - 1.0) / xi;
  return out;
}

std::vector<double> iota(int from, int to) {
  std::vector<double> v;
  for (int i = from; i <= to; ++i) v.push_back(i);
  return v;
}

}  // namespace

TEST_CASE("MARE") {
  CHECK(mare(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}) == 0.0);
  CHECK(mare(std::vector<double>{2}, std::vector<double>{1}) == Approx(0.5));
  CHECK(mare(std::vector<double>{1, 2}, std::vector<double>{2, 1}) == Approx(0.75));
  CHECK_THROWS(mare(std::vector<double>{1, 2}, std::vector<double>{1}));
  CHECK_THROWS(mare(std::vector<double>{0}, std::vector<double>{1}));
}

TEST_CASE("empirical measures") {
  const std::vector<double> levels{0.5};
  const auto r = empirical_measures(Sample(iota(1, 100)), levels, std::vector<double>{50});
  CHECK(r.tail_probs[0] == Approx(0.51));
  CHECK(r.method == "EMP");
  CHECK(empirical_measures(Sample(iota(1, 3)), levels, {}).var[0] == 2.0);
  CHECK(empirical_measures(Sample(iota(1, 4)), levels, {}).es[0] == Approx(3.5));
  // Nothing strictly above the top quantile: ES is the quantile itself.
  CHECK(empirical_measures(Sample(iota(1, 4)), std::vector<double>{0.999999}, {}).es[0] ==
        Approx(empirical_measures(Sample(iota(1, 4)), std::vector<double>{0.999999}, {}).var[0]));
}

TEST_CASE("weight threshold") {
  const auto th = oracle::design_point();
  CHECK(weight_threshold(th, 0.5) == Approx(1.0));
  CHECK(weight_threshold(th, 0.75) == Approx(3.0));
  for (double a : {0.1, 0.5, 0.9, 0.95, 0.99, 0.995}) {
    const double x = weight_threshold(th, a);
    CHECK(std::abs(weight(x, th.mu_c(), th.tau()) - a) < 1e-12);
  }
}

TEST_CASE("POT fit and measures") {
  const auto x = gpd_draws(3.5, 0.25, 10'000, 17);
  const Sample data(x);
  const PotFit f = pot_fit(data, 0.9);
  CHECK(f.u == stats::quantile(x, 0.9));
  CHECK(std::abs(f.zeta_u - 0.1) < 3.0 * std::sqrt(0.09 / 10'000.0) + 1e-12);
  CHECK(std::abs(f.xi - 0.25) < 0.1);

  CHECK(pot_var(f, 1.0 - f.zeta_u) == f.u);
  CHECK_THROWS_AS(pot_var(f, 0.5), std::domain_error);
  CHECK_THROWS_AS(pot_es(f, 0.5), std::domain_error);
  CHECK_THROWS_AS(pot_tail_probability(f, f.u * 0.5), std::domain_error);

  // True GPD 99% quantile.
  const double truth = 3.5 * (std::pow(0.01, -0.25) - 1.0) / 0.25;
  CHECK(std::abs(pot_var(f, 0.99) - truth) < 0.1 * truth);
  CHECK(pot_es(f, 0.99) > pot_var(f, 0.99));
  CHECK(pot_tail_probability(f, pot_var(f, 0.99)) == Approx(0.01).epsilon(1e-10));

  const std::vector<double> levels = kDefaultRiskLevels;
  const auto row = pot_risk_report(f, levels, std::vector<double>{1.0, 30.0});
  CHECK(std::isnan(row.var[0]));
  CHECK(std::isnan(row.tail_probs[0]));
  CHECK(std::isfinite(row.var[4]));
  CHECK(row.method == "GPD");

  CHECK_THROWS_AS(pot_fit(Sample(iota(1, 50)), 0.9), std::domain_error);
}

TEST_CASE("model risk measures") {
  for (double xi : {0.25, 0.5}) {
    const auto th = oracle::design_point(xi);
    double prev_var = 0.0, prev_es = 0.0;
    for (double a : kDefaultRiskLevels) {
      const double v = value_at_risk(th, a), es = expected_shortfall(th, a);
      CHECK(es >= v);
      CHECK(v > prev_var);
      CHECK(es > prev_es);
      CHECK(std::abs(tail_probability(th, v) - (1.0 - a)) < 1e-6);
      prev_var = v;
      prev_es = es;
    }
    CHECK(tail_probability(th, 1e-12) == Approx(1.0));
  }
  CHECK(expected_shortfall(MixtureParams{1.0, 2.0, 0.0, 0.5, 3.5, 1.0}, 0.9) == std::numeric_limits<double>::infinity());
  CHECK(expected_shortfall(MixtureParams{1.0, 2.0, 0.0, 0.5, 3.5, 1.3}, 0.9) == std::numeric_limits<double>::infinity());
}

TEST_CASE("ES of a pure GPD matches the closed form") {
  // mu_c far below zero makes the GPD weight 1 to within 1e-8.
  const MixtureParams th{-1e8, 1.0, 0.0, 0.5, 3.5, 0.25};
  for (double a : kDefaultRiskLevels) {
    const double q = 3.5 * (std::pow(1.0 - a, -0.25) - 1.0) / 0.25;
    const double closed = q / 0.75 + 3.5 / 0.75;
    CHECK(value_at_risk(th, a) == Approx(q).epsilon(1e-6));
    CHECK(std::abs(expected_shortfall(th, a) / closed - 1.0) < 1e-4);
  }
}

TEST_CASE("tail probability matches simulation") {
  const auto th = oracle::design_point();
  const Sample s = simulate(th, 1'000'000, 99);
  for (double t : {2.0, 10.0, 30.0}) {
    const double p = tail_probability(th, t);
    const double emp =
        static_cast<double>(std::count_if(s.begin(), s.end(), [t](double x) { return x >= t; })) / 1e6;
    CHECK(std::abs(emp - p) < 3.0 * std::sqrt(p * (1.0 - p) / 1e6));
  }
  std::vector<double> sorted(s.begin(), s.end());
  std::sort(sorted.begin(), sorted.end());
  const double med = stats::quantile_sorted(sorted, 0.5);
  CHECK(std::abs(value_at_risk(th, 0.5) - med) < 0.01 * med);
}

TEST_CASE("risk tables") {
  const auto th = oracle::design_point();
  const Sample data = simulate(th, 2000, 5);
  const std::vector<double> levels = kDefaultRiskLevels, ts{5.0, 20.0};
  std::vector<RiskReport> rows;
  rows.push_back(model_risk_report(th, "MLE", levels, ts));
  rows.push_back(pot_risk_report(pot_fit(data), levels, ts));
  const auto emp = empirical_measures(data, levels, ts);
  for (auto& r : rows) attach_mare(r, emp);
  REQUIRE(rows[0].mare_var);
  REQUIRE(rows[1].mare_var);
  // GPD MARE only covers its finite levels.
  std::vector<double> e, g;
  for (std::size_t i = 1; i < levels.size(); ++i) {
    e.push_back(emp.var[i]);
    g.push_back(rows[1].var[i]);
  }
  CHECK(*rows[1].mare_var == Approx(mare(e, g)));
  rows.push_back(emp);

  std::ostringstream var, mares;
  write_risk_table(var, rows, RiskTable::VaR);
  const std::string v = var.str();
  CHECK(v.rfind("method,50%,90%,95%,99%,99.5%\n", 0) == 0);
  CHECK(v.find("\nGPD,-,") != std::string::npos);
  write_risk_table(mares, std::span(rows).first(2), RiskTable::Mare);
  CHECK(mares.str().rfind("measure,MLE,GPD\nMARE VaR,", 0) == 0);
  CHECK(mares.str().find("\nMARE ES,") != std::string::npos);

  CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "-");
  CHECK(format_number(std::numeric_limits<double>::infinity()) == "Inf");
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_level(0.995) == "99.5%");
  CHECK(format_level(0.5) == "50%");
}
