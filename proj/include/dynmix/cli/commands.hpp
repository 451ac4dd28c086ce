#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dynmix/amle.hpp"
#include "dynmix/distributions.hpp"
#include "dynmix/mle.hpp"
#include "dynmix/risk.hpp"
#include "json.hpp"

namespace dynmix::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInput = 2,
  kExitNumerical = 3,
  kExitMissingFile = 4,
};

struct SimulateOptions {
  ParamVector params{1.0, 2.0, 0.0, 0.5, 3.5, 0.25};
  std::size_t n = 500;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = ".";
};

struct FitOptions {
  std::filesystem::path data;
  std::string column;
  FitMethod method = FitMethod::MLE;
  std::uint64_t seed = 1;
  double eps_i = 1e-4;
  std::size_t k = 500'000;
  std::size_t l = 100;
  /// Bootstrap replicates for standard errors; 0 skips them.
  std::size_t bootstrap = 0;
  /// Bootstrap replicates behind the AMLE prior box.
  std::size_t prior_bootstrap = 100;
  BootstrapMode prior_mode = BootstrapMode::Nonparametric;
  OutlierRule outlier_rule = OutlierRule::Classical;
  unsigned threads = 0;
  bool dump_proposals = false;
  std::filesystem::path out_dir = ".";
};

/// One model row of the risk tables.
struct ModelSpec {
  std::string label;
  ParamVector params;
};

struct RiskOptions {
  /// fit.csv files written by `fit`; each contributes one row.
  std::vector<std::filesystem::path> fits;
  /// Explicit parameter rows.
  std::vector<ModelSpec> models;
  std::optional<std::filesystem::path> data;
  std::string column;
  std::vector<double> levels = kDefaultRiskLevels;
  std::vector<double> thresholds;
  std::vector<double> weight_levels{0.9, 0.95, 0.99, 0.995};
  double u_level = 0.9;
  double eps_i = 1e-4;
  std::filesystem::path out_dir = ".";
};

struct ExperimentOptions {
  std::filesystem::path config;
  std::optional<unsigned> threads;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir = ".";
};

struct PlotDataOptions {
  std::vector<std::filesystem::path> fits;
  std::vector<ModelSpec> models;
  std::optional<std::filesystem::path> data;
  std::string column;
  /// abc_sample.csv written by `fit` with an AMLE method.
  std::optional<std::filesystem::path> abc;
  std::size_t grid = 400;
  std::size_t bins = 30;
  double eps_i = 1e-4;
  std::filesystem::path out_dir = ".";
};

/// Each command writes its outputs and a manifest.json into out_dir and
/// returns an ExitCode. Errors are reported on stderr.
int run_simulate(const SimulateOptions& o);
int run_fit(const FitOptions& o);
int run_risk(const RiskOptions& o);
int run_experiment_command(const ExperimentOptions& o);
int run_plotdata(const PlotDataOptions& o);

/// Re-runs the command recorded in a manifest, optionally into another
/// directory.
int run_replay(const std::filesystem::path& manifest, const std::optional<std::filesystem::path>& out_dir);

/// Reads the method label and parameter estimates of a fit.csv.
ModelSpec read_fit_file(const std::filesystem::path& path);

nlohmann::ordered_json to_json(const SimulateOptions& o);
nlohmann::ordered_json to_json(const FitOptions& o);
nlohmann::ordered_json to_json(const RiskOptions& o);
nlohmann::ordered_json to_json(const ExperimentOptions& o);
nlohmann::ordered_json to_json(const PlotDataOptions& o);

}  // namespace dynmix::cli
