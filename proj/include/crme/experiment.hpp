#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "crme/distribution.hpp"
#include "crme/elicitation.hpp"
#include "crme/error.hpp"

namespace crme {

/// Config parse or validation failure; the message starts with
/// "<origin>:<line>:<column>:" when a location is known.
class ConfigError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

/// One experiment, read from a YAML file:
///
///   name: table1-k2-reward-cost
///   seed: 11
///   num_samples: 1000000
///   num_classes: 2
///   feature_dim: 10        # optional, default 10
///   weight_scale: 1.5      # optional, default 1.5
///   reward_bounds: [5]     # A_i
///   cost_bounds: [0.3]     # B_i, cost i ranges over [-B_i, 0]
///   true_weights: [0.10, 0.05, 0.05, 0.80]
///   epsilon: 0.001         # or: iterations: 6
///   output_dir: out/k2     # optional
///   cache_dir: cache       # optional distribution cache
struct ExperimentConfig {
  std::string name;
  DistributionParams distribution;
  std::vector<double> reward_bounds;
  std::vector<double> cost_bounds;
  std::optional<std::vector<double>> true_weights;
  std::optional<double> epsilon;
  std::optional<std::size_t> iterations;
  std::filesystem::path output_dir;
  std::filesystem::path cache_dir;

  AttributeSchema schema() const;
  /// Throws ConfigError when neither epsilon nor iterations is set.
  StoppingRule stopping() const;
  /// Throws ConfigError when no true weights are configured.
  WeightVector truth() const;
};

ExperimentConfig parse_config(const std::string& yaml_text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// CRME_OUTPUT_DIR replaces output_dir, CRME_NUM_SAMPLES replaces num_samples.
void apply_environment_overrides(ExperimentConfig& config);

nlohmann::json config_to_json(const ExperimentConfig& config);
/// SHA-256 of the canonical JSON form of the effective config.
std::string config_hash(const ExperimentConfig& config);

/// Rounded to two decimals, every coordinate agrees.
bool matches_at_two_decimals(const std::vector<double>& lhs, const std::vector<double>& rhs);

struct ElicitReport {
  ExperimentConfig config;
  WeightVector truth;
  ElicitationResult result;
  std::vector<double> coordinate_errors;
  double l1_error = 0.0;
  std::size_t expected_queries = 0;
  double wall_time_seconds = 0.0;
};

ElicitReport run_elicit(const ExperimentConfig& config);
nlohmann::json report_to_json(const ElicitReport& report, bool include_timing = true);
/// coordinate,true,elicited,abs_error rows followed by summary lines.
std::string report_to_csv(const ElicitReport& report);
/// Writes report.json, report.csv, trace.csv and trace.json into `dir`.
void write_elicit_outputs(const ElicitReport& report, const std::filesystem::path& dir);

/// Runs with a fixed iteration budget (overriding the config's stopping rule)
/// and writes trace.csv / trace.json into `dir` when it is non-empty.
ElicitationResult run_trace(const ExperimentConfig& config, std::size_t iterations,
                            const std::filesystem::path& dir);

struct AttributeVerification {
  std::size_t attribute = 0;
  std::string label;
  double mid = 0.0;
  double grid_argmax = 0.0;
  double gap = 0.0;
  bool within_tolerance = false;
  bool unimodal = false;
  bool passed() const { return within_tolerance && unimodal; }
};

struct VerifyReport {
  double tolerance = 0.0;
  double grid_resolution = 0.0;
  std::vector<AttributeVerification> attributes;
  bool passed() const;
};

/// True when the sequence never strictly increases after it has strictly
/// decreased.
bool is_unimodal(const std::vector<double>& values);

/// Simulated-oracle utility of the hypothesis classifier for every x in
/// {0, 1/steps, ..., 1}.
std::vector<double> utility_profile(const AttributeSchema& schema,
                                    const SyntheticDistribution& distribution,
                                    const WeightVector& truth, std::size_t attribute,
                                    std::size_t steps);

/// Elicits with the simulated oracle and checks, per attribute, that the
/// converged midpoint lies within the search tolerance of the grid argmax
/// of the utility and that the utility is unimodal on a 1/64 grid.
VerifyReport verify_instance(const AttributeSchema& schema,
                             std::shared_ptr<const SyntheticDistribution> distribution,
                             const WeightVector& truth, const StoppingRule& stopping,
                             double grid_resolution);

VerifyReport run_verify(const ExperimentConfig& config, double grid_resolution);
nlohmann::json verify_to_json(const VerifyReport& report);

/// File names of the four preset configurations behind the accuracy table.
const std::vector<std::string>& table_presets();

struct TableRow {
  ElicitReport report;
  bool weights_match = false;
  bool l1_ok = false;
  bool queries_ok = false;
  bool passed() const { return weights_match && l1_ok && queries_ok; }
};

/// Runs every preset from `preset_dir` and writes table.csv, table.json and
/// one subdirectory of elicit outputs per preset into `out_dir`.
std::vector<TableRow> run_table(const std::filesystem::path& preset_dir,
                                           const std::filesystem::path& out_dir);

}  // namespace crme
