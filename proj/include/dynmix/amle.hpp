#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dynmix/distributions.hpp"
#include "dynmix/mle.hpp"

namespace dynmix {

/// Support of the uniform ABC prior, one interval per parameter.
struct PriorBox {
  ParamVector lower{};
  ParamVector upper{};

  /// Throws std::domain_error unless lower < upper everywhere, all bounds are
  /// finite and the tau, sigma and beta bounds are > 0.
  void validate() const;
  bool contains(const ParamVector& v) const;
};

/// Accepted proposals of an ABC rejection run, sorted by distance.
struct AbcSample {
  std::vector<ParamVector> params;
  std::vector<double> distances;  // ascending
  double epsilon = 0.0;           // largest accepted distance
  std::size_t k = 0;              // proposals drawn

  /// Every proposal in draw order; filled only when requested.
  std::vector<ParamVector> all_params;
  std::vector<double> all_distances;
};

/// Cramer-von Mises distance between the empirical cdfs of x and z,
/// integrated against their average. Symmetric; ties are pooled.
double cvm_distance(std::span<const double> x, std::span<const double> z);
double cvm_distance(const Sample& x, const Sample& z);

/// Same as cvm_distance() for inputs already sorted ascending.
double cvm_distance_sorted(std::span<const double> x, std::span<const double> z);

struct AbcOptions {
  unsigned threads = 0;
  /// Keep all k proposals and distances in the result.
  bool keep_all = false;
  /// Rejection-sampler budget per synthetic observation; proposals that
  /// exhaust it get distance +inf.
  std::size_t max_proposals_per_draw = 100;
};

/// Best-of-k rejection: draws k parameter vectors uniformly on the prior box,
/// simulates a data set of the same size for each, and keeps the l with the
/// smallest CvM distance to the data (ties broken by proposal index).
/// Proposal i uses substream (seed, i).
AbcSample abc_reject(const Sample& data, const PriorBox& prior, std::size_t k, std::size_t l,
                     std::uint64_t seed, const AbcOptions& options = {});

/// The l best of an already evaluated set of proposals.
AbcSample abc_select(std::span<const ParamVector> params, std::span<const double> distances,
                     std::size_t l);

/// Robust skewness of Brys, Hubert and Struyf. Values equal to the median
/// take part on both sides with the usual tie kernel. Requires n >= 3; 0 for a
/// constant input.
double medcouple(std::span<const double> values);

enum class OutlierRule { Classical, Adjusted };

std::string_view to_string(OutlierRule r);
/// "classical" or "adjusted"; throws std::invalid_argument otherwise.
OutlierRule parse_outlier_rule(std::string_view s);

struct Fences {
  double lower;
  double upper;
};

/// Box-plot fences with type-7 quartiles. Classical: Q1 - 1.5 IQR, Q3 + 1.5 IQR.
/// Adjusted (MC = medcouple >= 0): Q1 - 1.5 e^{-4 MC} IQR, Q3 + 1.5 e^{3 MC} IQR,
/// with the exponents swapped for MC < 0.
Fences boxplot_fences(std::span<const double> values, OutlierRule rule);

/// Values strictly inside the fences, original order kept.
std::vector<double> remove_outliers(std::span<const double> values, OutlierRule rule);

struct PriorBoxOptions {
  BootstrapMode mode = BootstrapMode::Nonparametric;
  MleOptions mle;
  unsigned threads = 0;
};

struct PriorBoxResult {
  PriorBox box;
  FitResult mle;
  BootstrapResult bootstrap;
  /// Columns with fewer than 3 values left after screening, which use the
  /// uncleaned range instead.
  std::array<bool, kNumParams> fallback{};
};

/// Prior box from the screened bootstrap distribution of the MLE: 0.5% and
/// 99.5% percentiles for mu, sigma, beta, xi; min and max for mu_c and tau.
/// Lower bounds of tau, sigma and beta are floored at 1e-6; an empty
/// interval around c is widened to c -+ (0.01|c| + 1e-6). Requires B >= 20.
PriorBoxResult build_prior_box(const Sample& data, std::size_t B, OutlierRule rule,
                               std::uint64_t seed, const PriorBoxOptions& options = {});

/// Prior box from a B x 6 bootstrap matrix (the screening and percentile step
/// of build_prior_box).
PriorBox prior_box_from_bootstrap(std::span<const ParamVector> replicates, OutlierRule rule,
                                  std::array<bool, kNumParams>* fallback = nullptr);

/// Point estimate from an ABC sample.
///   AmleM   column means
///   AmleUK  per-column argmax of a Gaussian KDE on 512 points over [min, max]
///   AmleMK  accepted row maximizing the product-Gaussian multivariate KDE
///   AmlePUK coordinate search for the maximum of the product of the
///           univariate KDEs: one 512-point sweep over [min, max], then two
///           512-point sweeps within 4 grid steps of the current point
/// Bandwidths follow Silverman, 0.9 min(sd, IQR/1.34) l^{-1/5}; a constant
/// column returns its value. Requires at least 5 rows.
ParamVector mode_estimate(std::span<const ParamVector> rows, FitMethod method);
MixtureParams mode_estimate(const AbcSample& sample, FitMethod method);

/// FitResult of an AMLE method from an existing ABC sample.
FitResult amle_result(const AbcSample& sample, FitMethod method);

/// abc_reject followed by mode_estimate.
FitResult fit_amle(const Sample& data, const PriorBox& prior, std::size_t k, std::size_t l,
                   FitMethod method, std::uint64_t seed, const AbcOptions& options = {});

}  // namespace dynmix
