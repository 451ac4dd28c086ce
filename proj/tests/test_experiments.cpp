#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "dynmix/experiments.hpp"
#include "json.hpp"

using namespace dynmix;
using doctest::Approx;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.n = 100;
  c.B = 2;
  c.k = 1000;
  c.l = 20;
  c.prior_bootstrap = 20;
  c.base_seed = 17;
  c.threads = 1;
  return c;
}

std::string report_text(const ExperimentReport& r) {
  std::ostringstream out;
  write_report_csv(out, r);
  write_report_json(out, r);
  write_estimates_csv(out, r);
  return out.str();
}

}  // namespace

TEST_CASE("summary statistics") {
  std::mt19937_64 g(1);
  std::normal_distribution<double> nrm(0.3, 2.0);
  std::vector<double> v(37);
  for (double& x : v) x = nrm(g);
  const ParameterStats s = summarize(v, 0.25);
  double sq = 0.0, mean = 0.0;
  for (double x : v) {
    sq += (x - 0.25) * (x - 0.25);
    mean += x;
  }
  mean /= 37.0;
  CHECK(s.bias == Approx(mean - 0.25).epsilon(1e-12));
  CHECK(s.rmse == Approx(std::sqrt(sq / 37.0)).epsilon(1e-10));
  CHECK(s.rmse * s.rmse == Approx(s.bias * s.bias + s.sd * s.sd).epsilon(1e-10));
  CHECK(std::isnan(summarize(std::vector<double>{}, 1.0).rmse));
}

TEST_CASE("config parsing") {
  std::istringstream ok(R"(# comment
xi = 0.5
n = 200   # trailing comment
B = 4
methods = mle, amle-puk
eps_i_grid = 1e-2, 1e-4
outlier_rule = adjusted
base_seed = 9
)");
  const ExperimentConfig c = parse_experiment_config(ok);
  CHECK(c.true_params.xi() == 0.5);
  CHECK(c.true_params.beta() == 3.5);
  CHECK(c.n == 200);
  CHECK(c.B == 4);
  CHECK(c.methods == std::vector<FitMethod>{FitMethod::MLE, FitMethod::AmlePUK});
  CHECK(c.eps_I_grid == std::vector<double>{1e-2, 1e-4});
  CHECK(c.outlier_rule == OutlierRule::Adjusted);
  CHECK(c.base_seed == 9);
  CHECK(describe(c).at("n") == "200");

  for (const char* bad : {"n = ten\n", "bogus = 1\n", "just words\n", "sigma = -1\n", "methods = mle, nope\n",
                          "n = 4\n", "l = 3\n"}) {
    std::istringstream in(bad);
    CAPTURE(bad);
    CHECK_THROWS(parse_experiment_config(in).validate());
  }
}

TEST_CASE("experiment runs are deterministic and thread-count invariant") {
  ExperimentConfig c = small_config();
  const ExperimentReport a = run_experiment(c);
  const ExperimentReport b = run_experiment(c);
  c.threads = 3;
  const ExperimentReport t = run_experiment(c);
  CHECK(report_text(a) == report_text(b));
  CHECK(report_text(a) == report_text(t));

  REQUIRE(a.methods.size() == 2);
  CHECK(a.methods[0].replications + a.failed_replications == 2);
  CHECK(a.replications.size() == 2);

  // Replications see distinct data: their estimates differ.
  std::set<double> mus;
  for (const auto& r : a.replications)
    if (!r.failed) mus.insert(r.estimates.at(FitMethod::MLE)[2]);
  CHECK(mus.size() == a.methods[0].replications);

  // Changing the base seed changes the data.
  ExperimentConfig d = small_config();
  d.base_seed = 18;
  CHECK(report_text(run_experiment(d)) != report_text(a));

  const auto j = nlohmann::json::parse([&] {
    std::ostringstream o;
    write_report_json(o, a);
    return o.str();
  }());
  CHECK(j.at("methods").size() == 2);
  CHECK(j.at("methods")[0].at("method") == "MLE");
}

TEST_CASE("a single replication") {
  ExperimentConfig c = small_config();
  c.B = 1;
  c.methods = {FitMethod::MLE};
  const ExperimentReport r = run_experiment(c);
  REQUIRE(r.methods.size() == 1);
  // With one replication the spread is zero and rmse equals |bias|.
  for (std::size_t j = 0; j < kNumParams; ++j) {
    CHECK(r.methods[0].raw[j].sd == 0.0);
    CHECK(r.methods[0].raw[j].rmse == Approx(std::abs(r.methods[0].raw[j].bias)));
  }
  CHECK(report_text(r) == report_text(run_experiment(c)));
}

TEST_CASE("eps sensitivity table") {
  ExperimentConfig c = small_config();
  c.B = 2;
  c.eps_I_grid = {1e-2, 1e-4};
  const auto rows = eps_sensitivity(c);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].eps_I == 1e-2);
  std::ostringstream out;
  write_eps_table_csv(out, rows);
  std::istringstream in(out.str());
  std::string header, line;
  std::getline(in, header);
  CHECK(header == "eps_I,rmse_mu_c,rmse_tau,rmse_mu,rmse_sigma,rmse_beta,rmse_xi,failures");
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 2);
}
