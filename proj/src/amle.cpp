#include "dynmix/amle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "dynmix/parallel.hpp"
#include "dynmix/rng.hpp"
#include "dynmix/stats.hpp"

namespace dynmix {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kGridPoints = 512;
constexpr bool kPositive[kNumParams] = {false, true, false, true, true, false};
constexpr double kPositiveFloor = 1e-6;

std::vector<double> column(std::span<const ParamVector> rows, std::size_t j) {
  std::vector<double> c(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) c[r] = rows[r][j];
  return c;
}

// Silverman bandwidth; 0 for a constant column.
double bandwidth(std::span<const double> c) {
  const double s = stats::sd(c);
  if (!(s > 0.0)) return 0.0;
  const double iqr = stats::quantile(c, 0.75) - stats::quantile(c, 0.25);
  const double spread = iqr > 0.0 ? std::min(s, iqr / 1.34) : s;
  return 0.9 * spread * std::pow(static_cast<double>(c.size()), -0.2);
}

// Unnormalized Gaussian KDE.
double kde(std::span<const double> c, double h, double t) {
  double s = 0.0;
  for (double v : c) {
    const double z = (t - v) / h;
    s += std::exp(-0.5 * z * z);
  }
  return s;
}

// Argmax of the KDE over kGridPoints equally spaced points on [a, b]; the
// first maximum wins.
double grid_argmax(std::span<const double> c, double h, double a, double b) {
  double best = a, best_value = -kInf;
  for (std::size_t g = 0; g < kGridPoints; ++g) {
    const double t = a + (b - a) * static_cast<double>(g) / static_cast<double>(kGridPoints - 1);
    const double v = kde(c, h, t);
    if (v > best_value) {
      best_value = v;
      best = t;
    }
  }
  return best;
}

}  // namespace

void PriorBox::validate() const {
  for (std::size_t j = 0; j < kNumParams; ++j) {
    if (!std::isfinite(lower[j]) || !std::isfinite(upper[j]))
      throw std::domain_error(std::string("PriorBox: non-finite bound for ") + kParamNames[j]);
    if (!(lower[j] < upper[j]))
      throw std::domain_error(std::string("PriorBox: empty interval for ") + kParamNames[j]);
    if (kPositive[j] && !(lower[j] > 0.0))
      throw std::domain_error(std::string("PriorBox: lower bound of ") + kParamNames[j] + " must be > 0");
  }
}

bool PriorBox::contains(const ParamVector& v) const {
  for (std::size_t j = 0; j < kNumParams; ++j)
    if (!(v[j] >= lower[j] && v[j] <= upper[j])) return false;
  return true;
}

double cvm_distance_sorted(std::span<const double> x, std::span<const double> z) {
  if (x.empty() || z.empty()) throw std::domain_error("cvm_distance: empty sample");
  const double n = static_cast<double>(x.size()), m = static_cast<double>(z.size());
  std::size_t i = 0, j = 0;
  double total = 0.0;
  while (i < x.size() || j < z.size()) {
    const double t = j == z.size() || (i < x.size() && x[i] <= z[j]) ? x[i] : z[j];
    std::size_t cx = 0, cz = 0;
    while (i < x.size() && x[i] == t) ++i, ++cx;
    while (j < z.size() && z[j] == t) ++j, ++cz;
    const double d = static_cast<double>(i) / n - static_cast<double>(j) / m;
    const double w = 0.5 * (static_cast<double>(cx) / n + static_cast<double>(cz) / m);
    total += w * d * d;
  }
  return total;
}

double cvm_distance(std::span<const double> x, std::span<const double> z) {
  std::vector<double> a(x.begin(), x.end()), b(z.begin(), z.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return cvm_distance_sorted(a, b);
}

double cvm_distance(const Sample& x, const Sample& z) { return cvm_distance(x.values(), z.values()); }

AbcSample abc_select(std::span<const ParamVector> params, std::span<const double> distances,
                     std::size_t l) {
  if (params.size() != distances.size()) throw std::invalid_argument("abc_select: size mismatch");
  if (l < 1 || l > params.size()) throw std::domain_error("abc_select: need 1 <= l <= k");
  std::vector<std::size_t> order(params.size());
  std::iota(order.begin(), order.end(), 0);
  auto by_distance = [&](std::size_t a, std::size_t b) {
    return distances[a] < distances[b] || (distances[a] == distances[b] && a < b);
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(l), order.end(), by_distance);

  AbcSample out;
  out.k = params.size();
  out.params.reserve(l);
  out.distances.reserve(l);
  for (std::size_t r = 0; r < l; ++r) {
    out.params.push_back(params[order[r]]);
    out.distances.push_back(distances[order[r]]);
  }
  out.epsilon = out.distances.back();
  return out;
}

AbcSample abc_reject(const Sample& data, const PriorBox& prior, std::size_t k, std::size_t l,
                     std::uint64_t seed, const AbcOptions& options) {
  prior.validate();
  if (l < 1 || l > k) throw std::domain_error("abc_reject: need 1 <= l <= k");
  std::vector<double> observed(data.begin(), data.end());
  std::sort(observed.begin(), observed.end());
  const std::size_t n = observed.size();

  std::vector<ParamVector> params(k);
  std::vector<double> distances(k, kInf);
  parallel_for(k, options.threads, [&](std::size_t i) {
    thread_local std::vector<double> synthetic;
    Rng rng = Rng::substream(seed, i);
    ParamVector& v = params[i];
    for (std::size_t j = 0; j < kNumParams; ++j)
      v[j] = prior.lower[j] + (prior.upper[j] - prior.lower[j]) * rng.uniform();
    synthetic.resize(n);
    try {
      simulate_into(MixtureParams::from_vector(v), synthetic, rng, options.max_proposals_per_draw);
    } catch (const SimulationError&) {
      return;
    }
    std::sort(synthetic.begin(), synthetic.end());
    distances[i] = cvm_distance_sorted(observed, synthetic);
  });

  AbcSample out = abc_select(params, distances, l);
  if (options.keep_all) {
    out.all_params = std::move(params);
    out.all_distances = std::move(distances);
  }
  return out;
}

double medcouple(std::span<const double> values) {
  if (values.size() < 3) throw std::domain_error("medcouple: need at least 3 values");
  std::vector<double> y(values.begin(), values.end());
  std::sort(y.begin(), y.end());
  const double med = stats::quantile_sorted(y, 0.5);

  // lower: z <= 0 ascending; upper: z >= 0 ascending. Zeros are the last
  // entries of lower and the first entries of upper.
  std::vector<double> lower, upper;
  for (double v : y) {
    const double z = v - med;
    if (z <= 0.0) lower.push_back(z);
    if (z >= 0.0) upper.push_back(z);
  }
  const auto ties = static_cast<std::ptrdiff_t>(std::count(lower.begin(), lower.end(), 0.0));
  const auto nl = static_cast<std::ptrdiff_t>(lower.size());

  std::vector<double> h;
  h.reserve(lower.size() * upper.size());
  for (std::ptrdiff_t a = 0; a < static_cast<std::ptrdiff_t>(upper.size()); ++a) {
    for (std::ptrdiff_t b = 0; b < nl; ++b) {
      const double zu = upper[static_cast<std::size_t>(a)], zl = lower[static_cast<std::size_t>(b)];
      if (zu == 0.0 && zl == 0.0) {
        // Tie kernel: sign(a + c - ties + 1) with c the position among the
        // zeros of lower.
        const std::ptrdiff_t c = b - (nl - ties);
        const std::ptrdiff_t s = a + c - ties + 1;
        h.push_back(static_cast<double>((s > 0) - (s < 0)));
      } else {
        h.push_back((zu + zl) / (zu - zl));
      }
    }
  }
  return stats::median(h);
}

std::string_view to_string(OutlierRule r) { return r == OutlierRule::Classical ? "classical" : "adjusted"; }

OutlierRule parse_outlier_rule(std::string_view s) {
  if (s == "classical") return OutlierRule::Classical;
  if (s == "adjusted") return OutlierRule::Adjusted;
  throw std::invalid_argument("unknown outlier rule '" + std::string(s) + "'");
}

Fences boxplot_fences(std::span<const double> values, OutlierRule rule) {
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  const double q1 = stats::quantile_sorted(s, 0.25), q3 = stats::quantile_sorted(s, 0.75);
  const double iqr = q3 - q1;
  double lo = 1.5, hi = 1.5;
  if (rule == OutlierRule::Adjusted && s.size() >= 3) {
    const double mc = medcouple(s);
    if (mc >= 0.0) {
      lo *= std::exp(-4.0 * mc);
      hi *= std::exp(3.0 * mc);
    } else {
      lo *= std::exp(-3.0 * mc);
      hi *= std::exp(4.0 * mc);
    }
  }
  return {q1 - lo * iqr, q3 + hi * iqr};
}

std::vector<double> remove_outliers(std::span<const double> values, OutlierRule rule) {
  const Fences f = boxplot_fences(values, rule);
  std::vector<double> kept;
  for (double v : values)
    if (v >= f.lower && v <= f.upper) kept.push_back(v);
  return kept;
}

PriorBox prior_box_from_bootstrap(std::span<const ParamVector> replicates, OutlierRule rule,
                                  std::array<bool, kNumParams>* fallback) {
  if (replicates.size() < 3) throw std::domain_error("prior box: need at least 3 replicates");
  PriorBox box;
  for (std::size_t j = 0; j < kNumParams; ++j) {
    const std::vector<double> raw = column(replicates, j);
    std::vector<double> kept = remove_outliers(raw, rule);
    const bool fell_back = kept.size() < 3;
    if (fell_back) kept = raw;
    if (fallback) (*fallback)[j] = fell_back;
    std::sort(kept.begin(), kept.end());

    const bool range = j == static_cast<std::size_t>(Param::MuC) || j == static_cast<std::size_t>(Param::Tau);
    double lo = range ? kept.front() : stats::quantile_sorted(kept, 0.005);
    double hi = range ? kept.back() : stats::quantile_sorted(kept, 0.995);
    if (kPositive[j]) lo = std::max(lo, kPositiveFloor);
    if (!(hi > lo)) {
      const double c = lo;
      const double w = 0.01 * std::abs(c) + 1e-6;
      lo = kPositive[j] ? std::max(c - w, kPositiveFloor) : c - w;
      hi = c + w;
    }
    box.lower[j] = lo;
    box.upper[j] = hi;
  }
  box.validate();
  return box;
}

PriorBoxResult build_prior_box(const Sample& data, std::size_t B, OutlierRule rule,
                               std::uint64_t seed, const PriorBoxOptions& options) {
  if (B < 20) throw std::domain_error("build_prior_box: B must be >= 20");
  PriorBoxResult out{PriorBox{}, fit_mle(data, options.mle), BootstrapResult{}, {}};

  const MleOptions& mle = options.mle;
  BootstrapOptions bo;
  bo.mode = options.mode;
  bo.fitted = out.mle.estimate;
  bo.threads = options.threads;
  out.bootstrap = bootstrap_se(
      data, B, [&mle](const Sample& s) { return fit_mle(s, mle); }, seed, bo);
  out.mle.std_errors = out.bootstrap.std_errors;
  out.box = prior_box_from_bootstrap(out.bootstrap.replicates, rule, &out.fallback);
  return out;
}

ParamVector mode_estimate(std::span<const ParamVector> rows, FitMethod method) {
  if (rows.size() < 5) throw std::domain_error("mode_estimate: need at least 5 rows");
  std::array<std::vector<double>, kNumParams> cols;
  std::array<double, kNumParams> h{};
  for (std::size_t j = 0; j < kNumParams; ++j) {
    cols[j] = column(rows, j);
    h[j] = bandwidth(cols[j]);
  }

  ParamVector out{};
  switch (method) {
    case FitMethod::AmleM:
      for (std::size_t j = 0; j < kNumParams; ++j) out[j] = stats::mean(cols[j]);
      return out;

    case FitMethod::AmleUK:
    case FitMethod::AmlePUK:
      for (std::size_t j = 0; j < kNumParams; ++j) {
        const auto [mn, mx] = std::minmax_element(cols[j].begin(), cols[j].end());
        if (h[j] == 0.0 || *mn == *mx) {
          out[j] = *mn;
          continue;
        }
        double a = *mn, b = *mx;
        out[j] = grid_argmax(cols[j], h[j], a, b);
        if (method == FitMethod::AmleUK) continue;
        // The product of univariate densities factorizes, so each coordinate
        // is refined on its own.
        for (int sweep = 0; sweep < 2; ++sweep) {
          const double step = (b - a) / static_cast<double>(kGridPoints - 1);
          a = std::max(*mn, out[j] - 4.0 * step);
          b = std::min(*mx, out[j] + 4.0 * step);
          out[j] = grid_argmax(cols[j], h[j], a, b);
        }
      }
      return out;

    case FitMethod::AmleMK: {
      std::size_t best = 0;
      double best_value = -kInf;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        double s = 0.0;
        for (const auto& other : rows) {
          double e = 0.0;
          for (std::size_t j = 0; j < kNumParams; ++j) {
            if (h[j] == 0.0) continue;
            const double z = (rows[r][j] - other[j]) / h[j];
            e += z * z;
          }
          s += std::exp(-0.5 * e);
        }
        if (s > best_value) {
          best_value = s;
          best = r;
        }
      }
      return rows[best];
    }

    case FitMethod::MLE:
      break;
  }
  throw std::invalid_argument("mode_estimate: MLE is not an ABC mode estimator");
}

MixtureParams mode_estimate(const AbcSample& sample, FitMethod method) {
  return MixtureParams::from_vector(mode_estimate(sample.params, method));
}

FitResult amle_result(const AbcSample& sample, FitMethod method) {
  FitResult out{mode_estimate(sample, method), std::nullopt, method, std::nullopt, {}};
  out.diagnostics["epsilon"] = sample.epsilon;
  out.diagnostics["k"] = static_cast<double>(sample.k);
  out.diagnostics["l"] = static_cast<double>(sample.params.size());
  out.diagnostics["acceptance_rate"] =
      static_cast<double>(sample.params.size()) / static_cast<double>(sample.k);
  out.diagnostics["converged"] = 1.0;
  return out;
}

FitResult fit_amle(const Sample& data, const PriorBox& prior, std::size_t k, std::size_t l,
                   FitMethod method, std::uint64_t seed, const AbcOptions& options) {
  if (method == FitMethod::MLE) throw std::invalid_argument("fit_amle: method must be an AMLE variant");
  return amle_result(abc_reject(data, prior, k, l, seed, options), method);
}

}  // namespace dynmix
