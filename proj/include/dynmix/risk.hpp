#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dynmix/distributions.hpp"
#include "dynmix/quadrature.hpp"

namespace dynmix {

inline const std::vector<double> kDefaultRiskLevels = {0.5, 0.9, 0.95, 0.99, 0.995};

/// alpha-quantile of the fitted mixture.
double value_at_risk(const MixtureParams& theta, double alpha, const QuadratureConfig& cfg = {});

/// P(X >= t).
double tail_probability(const MixtureParams& theta, double t, const QuadratureConfig& cfg = {});

/// (1/(1-alpha)) int_alpha^1 VaR_u du. Returns +inf when xi >= 1.
///
/// The integral over u < 1 - 1e-9 is adaptive Gauss-Kronrod in v = -log(1-u)
/// at relative tolerance 1e-6; the clipped top mass is added with the GPD
/// tail mean (q + beta)/(1 - xi) at its lower edge q.
double expected_shortfall(const MixtureParams& theta, double alpha, const QuadratureConfig& cfg = {});
double expected_shortfall(const MixtureDistribution& dist, double alpha);

struct PotFit {
  double u;       // threshold
  double zeta_u;  // fraction of observations above u
  double beta;
  double xi;
};

/// GPD fitted to the excesses over the type-7 u_level-quantile. Needs at
/// least 10 exceedances.
PotFit pot_fit(const Sample& data, double u_level = 0.90);

/// Tail quantile u + (beta/xi)[((1-alpha)/zeta_u)^{-xi} - 1]. Defined for
/// alpha >= 1 - zeta_u only (std::domain_error below); exactly u at the
/// boundary.
double pot_var(const PotFit& fit, double alpha);

/// VaR/(1 - xi) + (beta - xi u)/(1 - xi); +inf when xi >= 1. Same domain as pot_var.
double pot_es(const PotFit& fit, double alpha);

/// zeta_u (1 + xi (t-u)/beta)^{-1/xi} for t >= u; std::domain_error below u.
double pot_tail_probability(const PotFit& fit, double t);

/// One row of the risk tables. Entries that are undefined for a method are
/// NaN and print as "-"; infinite ES prints as "Inf".
struct RiskReport {
  std::string method;
  std::vector<double> levels;
  std::vector<double> var;
  std::vector<double> es;
  std::vector<double> tail_thresholds;
  std::vector<double> tail_probs;
  std::optional<double> mare_var;
  std::optional<double> mare_es;
};

RiskReport model_risk_report(const MixtureParams& theta, std::string method, std::span<const double> levels,
                             std::span<const double> thresholds, const QuadratureConfig& cfg = {});

/// GPD benchmark row; levels below 1 - zeta_u and thresholds below u are NaN.
RiskReport pot_risk_report(const PotFit& fit, std::span<const double> levels,
                           std::span<const double> thresholds);

/// Empirical row: type-7 quantiles, mean of the observations strictly above
/// each quantile (the quantile itself if none), and #{x >= t}/n.
RiskReport empirical_measures(const Sample& data, std::span<const double> levels,
                              std::span<const double> thresholds);

/// Mean of |M_i - Mhat_i| / M_i. Requires equal nonzero lengths and nonzero M_i.
double mare(std::span<const double> empirical, std::span<const double> estimated);

/// Fills mare_var and mare_es of `row` against `empirical`, over the levels
/// where the row is finite. Leaves them empty if no level qualifies.
void attach_mare(RiskReport& row, const RiskReport& empirical);

/// Smallest x with weight(x) > alpha: mu_c + tau tan(pi (alpha - 1/2)).
double weight_threshold(const MixtureParams& theta, double alpha);

enum class RiskTable { VaR, ES, Tail, Mare };

/// Delimited table with one row per method. VaR/ES columns are the levels
/// ("50%", "99.5%") and Tail columns the thresholds. The Mare table is
/// transposed: rows "MARE VaR" and "MARE ES", one column per method.
void write_risk_table(std::ostream& out, std::span<const RiskReport> rows, RiskTable which);

/// Shortest round-trip decimal form; "-" for NaN, "Inf"/"-Inf" for infinities.
std::string format_number(double v);

/// "50%", "99.5%".
std::string format_level(double alpha);

}  // namespace dynmix
