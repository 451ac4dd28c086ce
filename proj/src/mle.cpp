#include "dynmix/mle.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <stdexcept>
#include <string>

#include "dynmix/parallel.hpp"
#include "dynmix/rng.hpp"
#include "dynmix/stats.hpp"

namespace dynmix {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct MethodName {
  FitMethod method;
  std::string_view report;
  std::string_view cli;
};

constexpr MethodName kMethodNames[] = {
    {FitMethod::MLE, "MLE", "mle"},           {FitMethod::AmleM, "AMLE-M", "amle-m"},
    {FitMethod::AmleUK, "AMLE-UK", "amle-uk"}, {FitMethod::AmleMK, "AMLE-MK", "amle-mk"},
    {FitMethod::AmlePUK, "AMLE-PUK", "amle-puk"},
};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

ParamVector to_internal(const MixtureParams& th) {
  return {th.mu_c(), std::log(th.tau()), th.mu(), std::log(th.sigma()), std::log(th.beta()), th.xi()};
}

// Returns nullopt when the transformed point does not map to valid parameters
// (overflow of the exponentials).
std::optional<MixtureParams> from_internal(std::span<const double> u) {
  const double tau = std::exp(u[1]), sigma = std::exp(u[3]), beta = std::exp(u[4]);
  if (!(tau > 0.0 && sigma > 0.0 && beta > 0.0) || !std::isfinite(tau) || !std::isfinite(sigma) ||
      !std::isfinite(beta) || !std::isfinite(u[0]) || !std::isfinite(u[2]) || !std::isfinite(u[5]))
    return std::nullopt;
  return MixtureParams(u[0], tau, u[2], sigma, beta, u[5]);
}

bool all_finite(const ParamVector& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

std::string_view to_string(FitMethod m) {
  for (const auto& n : kMethodNames)
    if (n.method == m) return n.report;
  return "?";
}

FitMethod parse_fit_method(std::string_view s) {
  for (const auto& n : kMethodNames)
    if (iequals(s, n.report) || iequals(s, n.cli)) return n.method;
  throw std::invalid_argument("unknown fit method '" + std::string(s) + "'");
}

double log_likelihood(const MixtureParams& theta, std::span<const double> data, double z) {
  if (!(z > 0.0) || !std::isfinite(z)) return -kInf;
  stats::CompensatedSum s;
  for (double x : data) {
    const double f = detail::mixture_density_unnorm(x, theta);
    if (!(f > 0.0)) return -kInf;
    s.add(std::log(f));
  }
  return s.value() - static_cast<double>(data.size()) * std::log(z);
}

double log_likelihood(const MixtureParams& theta, const Sample& data, const QuadratureConfig& cfg) {
  return log_likelihood(theta, data.values(), normalizing_constant(theta, cfg));
}

MixtureParams starting_values(const Sample& data) {
  if (data.size() < 8) throw std::domain_error("starting_values: need at least 8 observations");
  std::vector<double> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());
  const double med = stats::quantile_sorted(sorted, 0.5);

  std::vector<double> lower_logs, excesses;
  for (double x : sorted) {
    if (x < med) lower_logs.push_back(std::log(x));
    if (x > med) excesses.push_back(x - med);
  }
  if (lower_logs.empty() || excesses.size() < 3)
    throw std::domain_error("starting_values: too many ties at the median");

  const double mu0 = stats::mean(lower_logs);
  const double sigma0 = std::max(stats::sd(lower_logs, /*population=*/true), 1e-3);

  double beta0 = stats::mean(excesses), xi0 = 0.1;
  try {
    const GpdFit g = fit_gpd(excesses);
    if (std::isfinite(g.beta) && g.beta > 0.0 && std::isfinite(g.xi)) {
      beta0 = g.beta;
      xi0 = g.xi;
    }
  } catch (const std::exception&) {
  }

  const double tau0 = std::max(std::log(stats::sd(sorted) / 2.0), 0.05);
  const double mu_c0 = stats::quantile_sorted(sorted, 0.25);
  return {mu_c0, tau0, mu0, sigma0, beta0, xi0};
}

FitResult fit_mle(const Sample& data, const MleOptions& options) {
  options.quadrature.validate();
  const MixtureParams start = options.start ? *options.start : starting_values(data);
  const std::span<const double> x = data.values();

  auto objective = [&](std::span<const double> u) {
    const auto th = from_internal(u);
    if (!th) return kInf;
    try {
      return -log_likelihood(*th, x, normalizing_constant(*th, options.quadrature));
    } catch (const QuadratureError&) {
      return kInf;
    }
  };

  const ParamVector u0 = to_internal(start);
  const NelderMeadResult res = nelder_mead(objective, u0, options.optimizer);
  const auto estimate = from_internal(res.x);
  if (!estimate || !std::isfinite(res.value))
    throw std::runtime_error("fit_mle: no finite log-likelihood reached");

  FitResult out{*estimate, std::nullopt, FitMethod::MLE, -res.value, {}};
  out.diagnostics["iterations"] = res.iterations;
  out.diagnostics["evaluations"] = res.evaluations;
  out.diagnostics["converged"] = res.converged ? 1.0 : 0.0;
  out.diagnostics["eps_I"] = options.quadrature.eps_I;
  return out;
}

BootstrapResult bootstrap_se(const Sample& data, std::size_t B, const Fitter& fitter,
                             std::uint64_t seed, const BootstrapOptions& options) {
  if (B < 2) throw std::domain_error("bootstrap_se: B must be >= 2");
  std::optional<MixtureParams> fitted = options.fitted;
  if (options.mode == BootstrapMode::Parametric && !fitted) fitted = fitter(data).estimate;

  enum class Outcome { Failed, Kept, KeptNonConverged };
  std::vector<ParamVector> estimates(B);
  std::vector<Outcome> outcome(B, Outcome::Failed);
  const std::size_t n = data.size();

  parallel_for(B, options.threads, [&](std::size_t b) {
    Rng rng = Rng::substream(seed, b);
    std::vector<double> draw(n);
    try {
      if (options.mode == BootstrapMode::Parametric) {
        simulate_into(*fitted, draw, rng);
      } else {
        for (double& v : draw) {
          const auto i = std::min(static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)), n - 1);
          v = data[i];
        }
      }
      const FitResult fit = fitter(Sample(std::move(draw)));
      estimates[b] = fit.estimate.to_vector();
      if (all_finite(estimates[b]))
        outcome[b] = fit.converged() ? Outcome::Kept : Outcome::KeptNonConverged;
    } catch (const std::exception&) {
    }
  });

  BootstrapResult out;
  for (std::size_t b = 0; b < B; ++b) {
    if (outcome[b] == Outcome::Failed) {
      ++out.failures;
      continue;
    }
    if (outcome[b] == Outcome::KeptNonConverged) ++out.non_converged;
    out.replicates.push_back(estimates[b]);
  }
  if (out.failures * 2 > B || out.replicates.size() < 2)
    throw std::runtime_error("bootstrap_se: " + std::to_string(out.failures) + " of " +
                             std::to_string(B) + " refits failed");

  std::vector<double> column(out.replicates.size());
  for (std::size_t j = 0; j < kNumParams; ++j) {
    for (std::size_t r = 0; r < column.size(); ++r) column[r] = out.replicates[r][j];
    out.std_errors[j] = stats::sd(column);
  }
  return out;
}

}  // namespace dynmix
