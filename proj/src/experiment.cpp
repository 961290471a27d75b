#include "crme/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include "crme/trace_io.hpp"

namespace crme {
namespace {

using nlohmann::json;

constexpr double kTableL1Tolerance = 0.02;
constexpr std::size_t kUnimodalitySteps = 64;

[[noreturn]] void fail_at(const std::string& origin, const YAML::Mark& mark,
                          const std::string& message) {
  std::ostringstream out;
  out << origin;
  if (!mark.is_null()) out << ':' << mark.line + 1 << ':' << mark.column + 1;
  out << ": " << message;
  throw ConfigError(out.str());
}

template <typename T>
T scalar(const std::string& origin, const YAML::Node& node, const std::string& key) {
  if (!node.IsScalar()) fail_at(origin, node.Mark(), "'" + key + "' must be a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail_at(origin, node.Mark(), "'" + key + "' has the wrong type");
  }
}

std::vector<double> real_list(const std::string& origin, const YAML::Node& node,
                              const std::string& key) {
  if (!node.IsSequence()) fail_at(origin, node.Mark(), "'" + key + "' must be a list");
  std::vector<double> out;
  for (const auto& item : node) out.push_back(scalar<double>(origin, item, key));
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ParameterError("cannot write " + path.string());
  out << text;
}

std::string real(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

}  // namespace

AttributeSchema ExperimentConfig::schema() const {
  return AttributeSchema(distribution.num_classes, reward_bounds, cost_bounds);
}

StoppingRule ExperimentConfig::stopping() const {
  if (epsilon) return StoppingRule::tolerance(*epsilon);
  if (iterations) return StoppingRule::iterations(*iterations);
  throw ConfigError(name + ": config sets neither epsilon nor iterations");
}

WeightVector ExperimentConfig::truth() const {
  if (!true_weights) throw ConfigError(name + ": simulated runs need true_weights");
  return WeightVector::from_flat(schema(), *true_weights);
}

ExperimentConfig parse_config(const std::string& yaml_text, const std::string& origin) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    fail_at(origin, e.mark, e.msg);
  }
  if (!root.IsMap()) fail_at(origin, root.Mark(), "config must be a mapping");

  static const std::set<std::string> known = {
      "name",          "seed",       "num_samples", "num_classes", "feature_dim",
      "weight_scale",  "reward_bounds", "cost_bounds", "true_weights", "epsilon",
      "iterations",    "output_dir", "cache_dir"};
  for (const auto& entry : root) {
    const auto key = entry.first.as<std::string>();
    if (!known.count(key)) fail_at(origin, entry.first.Mark(), "unknown key '" + key + "'");
  }
  auto require = [&](const char* key) {
    if (!root[key]) fail_at(origin, root.Mark(), std::string("missing required key '") + key + "'");
    return root[key];
  };

  ExperimentConfig config;
  config.name = root["name"] ? scalar<std::string>(origin, root["name"], "name") : origin;
  config.distribution.seed = scalar<std::uint64_t>(origin, require("seed"), "seed");
  config.distribution.num_samples =
      scalar<std::size_t>(origin, require("num_samples"), "num_samples");
  config.distribution.num_classes =
      scalar<std::size_t>(origin, require("num_classes"), "num_classes");
  if (root["feature_dim"]) {
    config.distribution.feature_dim =
        scalar<std::size_t>(origin, root["feature_dim"], "feature_dim");
  }
  if (root["weight_scale"]) {
    config.distribution.weight_scale = scalar<double>(origin, root["weight_scale"], "weight_scale");
  }
  if (root["reward_bounds"]) {
    config.reward_bounds = real_list(origin, root["reward_bounds"], "reward_bounds");
  }
  if (root["cost_bounds"]) config.cost_bounds = real_list(origin, root["cost_bounds"], "cost_bounds");
  if (root["epsilon"]) config.epsilon = scalar<double>(origin, root["epsilon"], "epsilon");
  if (root["iterations"]) {
    config.iterations = scalar<std::size_t>(origin, root["iterations"], "iterations");
  }
  if (config.epsilon && config.iterations) {
    fail_at(origin, root["iterations"].Mark(), "set either epsilon or iterations, not both");
  }
  if (root["output_dir"]) {
    config.output_dir = scalar<std::string>(origin, root["output_dir"], "output_dir");
  }
  if (root["cache_dir"]) config.cache_dir = scalar<std::string>(origin, root["cache_dir"], "cache_dir");

  const auto& dist = config.distribution;
  if (dist.num_samples < 1) fail_at(origin, root["num_samples"].Mark(), "num_samples must be >= 1");
  if (dist.num_classes < 2) fail_at(origin, root["num_classes"].Mark(), "num_classes must be >= 2");
  if (dist.feature_dim < 1) fail_at(origin, root["feature_dim"].Mark(), "feature_dim must be >= 1");
  if (!(dist.weight_scale > 0.0)) {
    fail_at(origin, root["weight_scale"].Mark(), "weight_scale must be > 0");
  }
  for (double a : config.reward_bounds) {
    if (!(a > 0.0)) fail_at(origin, root["reward_bounds"].Mark(), "reward bounds must be > 0");
  }
  for (double b : config.cost_bounds) {
    if (!(b > 0.0)) {
      fail_at(origin, root["cost_bounds"].Mark(),
              "cost bounds are magnitudes B_i and must be > 0");
    }
  }
  if (config.epsilon && !(*config.epsilon > 0.0 && *config.epsilon < 1.0)) {
    fail_at(origin, root["epsilon"].Mark(), "epsilon must lie in (0, 1)");
  }
  if (root["true_weights"]) {
    const auto node = root["true_weights"];
    auto weights = real_list(origin, node, "true_weights");
    const std::size_t dim =
        dist.num_classes + config.reward_bounds.size() + config.cost_bounds.size();
    if (weights.size() != dim) {
      fail_at(origin, node.Mark(),
              "true_weights has " + std::to_string(weights.size()) + " entries, expected " +
                  std::to_string(dim));
    }
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) fail_at(origin, node.Mark(), "true_weights must be nonnegative");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      fail_at(origin, node.Mark(), "true_weights must sum to 1 (got " + real(total) + ")");
    }
    config.true_weights = std::move(weights);
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config");
  std::stringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string());
}

void apply_environment_overrides(ExperimentConfig& config) {
  if (const char* dir = std::getenv("CRME_OUTPUT_DIR"); dir && *dir) config.output_dir = dir;
  if (const char* n = std::getenv("CRME_NUM_SAMPLES"); n && *n) {
    char* end = nullptr;
    const unsigned long long value = std::strtoull(n, &end, 10);
    if (*end != '\0' || value == 0) throw ConfigError("CRME_NUM_SAMPLES must be a positive integer");
    config.distribution.num_samples = value;
  }
}

json config_to_json(const ExperimentConfig& config) {
  json j = {{"name", config.name},
            {"seed", config.distribution.seed},
            {"num_samples", config.distribution.num_samples},
            {"num_classes", config.distribution.num_classes},
            {"feature_dim", config.distribution.feature_dim},
            {"weight_scale", config.distribution.weight_scale},
            {"reward_bounds", config.reward_bounds},
            {"cost_bounds", config.cost_bounds},
            {"true_weights", config.true_weights ? json(*config.true_weights) : json(nullptr)},
            {"epsilon", config.epsilon ? json(*config.epsilon) : json(nullptr)},
            {"iterations", config.iterations ? json(*config.iterations) : json(nullptr)}};
  return j;
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string canonical = config_to_json(config).dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(canonical.data(), canonical.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xF];
  }
  return hex;
}

bool matches_at_two_decimals(const std::vector<double>& lhs, const std::vector<double>& rhs) {
  if (lhs.size() != rhs.size()) return false;
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    if (std::lround(lhs[i] * 100.0) != std::lround(rhs[i] * 100.0)) return false;
  }
  return true;
}

ElicitReport run_elicit(const ExperimentConfig& config) {
  const auto began = std::chrono::steady_clock::now();
  const AttributeSchema schema = config.schema();
  const WeightVector truth = config.truth();
  const StoppingRule stopping = config.stopping();
  auto distribution = std::make_shared<const SyntheticDistribution>(
      load_or_generate(config.distribution, config.cache_dir));

  SimulatedOracle oracle(truth);
  ElicitReport report{config, truth, elicit(oracle, schema, distribution, stopping, truth)};
  const auto elicited = report.result.weights.flat();
  const auto expected = truth.flat();
  for (std::size_t i = 0; i < elicited.size(); ++i) {
    report.coordinate_errors.push_back(std::abs(elicited[i] - expected[i]));
  }
  report.l1_error = l1_distance(report.result.weights, truth);
  report.expected_queries = expected_total_queries(schema, stopping);
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - began).count();
  return report;
}

json report_to_json(const ElicitReport& report, bool include_timing) {
  const AttributeSchema schema = report.config.schema();
  json ratios = json::array();
  for (std::size_t i = 1; i < report.result.mids.size(); ++i) {
    ratios.push_back({{"attribute", i},
                      {"label", schema.label(i)},
                      {"mid", report.result.mids[i]},
                      {"ratio", ratio_from_mid(report.result.mids[i])}});
  }
  json j = {{"name", report.config.name},
            {"config_hash", config_hash(report.config)},
            {"seed", report.config.distribution.seed},
            {"config", config_to_json(report.config)},
            {"schema", schema_to_json(schema)},
            {"true_weights", weights_to_json(schema, report.truth)},
            {"elicited_weights", weights_to_json(schema, report.result.weights)},
            {"coordinate_errors", report.coordinate_errors},
            {"l1_error", report.l1_error},
            {"query_count", report.result.query_count},
            {"expected_query_count", report.expected_queries},
            {"searches", ratios},
            {"matches_at_2dp",
             matches_at_two_decimals(report.result.weights.flat(), report.truth.flat())}};
  if (include_timing) j["wall_time_seconds"] = report.wall_time_seconds;
  return j;
}

std::string report_to_csv(const ElicitReport& report) {
  const AttributeSchema schema = report.config.schema();
  const auto truth = report.truth.flat();
  const auto elicited = report.result.weights.flat();
  std::string out = "coordinate,true,elicited,abs_error\n";
  for (std::size_t i = 0; i < truth.size(); ++i) {
    out += schema.label(i) + ',' + real(truth[i]) + ',' + real(elicited[i]) + ',' +
           real(report.coordinate_errors[i]) + '\n';
  }
  out += "l1_error,,," + real(report.l1_error) + '\n';
  out += "query_count,,," + std::to_string(report.result.query_count) + '\n';
  return out;
}

void write_elicit_outputs(const ElicitReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const AttributeSchema schema = report.config.schema();
  write_text(dir / "report.json", report_to_json(report).dump(2) + '\n');
  write_text(dir / "report.csv", report_to_csv(report));
  write_text(dir / "trace.csv", trace_to_csv(schema, report.result.trace));
  write_text(dir / "trace.json", trace_to_json(schema, report.result.trace).dump(2) + '\n');
}

ElicitationResult run_trace(const ExperimentConfig& config, std::size_t iterations,
                            const std::filesystem::path& dir) {
  const AttributeSchema schema = config.schema();
  const WeightVector truth = config.truth();
  auto distribution = std::make_shared<const SyntheticDistribution>(
      load_or_generate(config.distribution, config.cache_dir));
  SimulatedOracle oracle(truth);
  auto result = elicit(oracle, schema, distribution, StoppingRule::iterations(iterations), truth);
  if (!dir.empty()) {
    std::filesystem::create_directories(dir);
    write_text(dir / "trace.csv", trace_to_csv(schema, result.trace));
    write_text(dir / "trace.json", trace_to_json(schema, result.trace).dump(2) + '\n');
  }
  return result;
}

bool is_unimodal(const std::vector<double>& values) {
  bool descending = false;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] < values[i - 1]) {
      descending = true;
    } else if (values[i] > values[i - 1] && descending) {
      return false;
    }
  }
  return true;
}

std::vector<double> utility_profile(const AttributeSchema& schema,
                                    const SyntheticDistribution& distribution,
                                    const WeightVector& truth, std::size_t attribute,
                                    std::size_t steps) {
  if (steps < 1) throw ParameterError("utility grid needs at least one step");
  std::vector<double> out;
  out.reserve(steps + 1);
  for (std::size_t j = 0; j <= steps; ++j) {
    const double x = static_cast<double>(j) / static_cast<double>(steps);
    out.push_back(evaluate(truth, hypothesis_stats(schema, distribution, x, attribute)));
  }
  return out;
}

bool VerifyReport::passed() const {
  for (const auto& a : attributes) {
    if (!a.passed()) return false;
  }
  return true;
}

VerifyReport verify_instance(const AttributeSchema& schema,
                             std::shared_ptr<const SyntheticDistribution> distribution,
                             const WeightVector& truth, const StoppingRule& stopping,
                             double grid_resolution) {
  const double tolerance =
      stopping.epsilon().value_or(std::ldexp(1.0, -static_cast<int>(stopping.iterations_per_search())));
  if (!(grid_resolution > 0.0) || grid_resolution > tolerance / 2.0) {
    throw ParameterError("grid resolution must lie in (0, epsilon / 2]");
  }
  SimulatedOracle oracle(truth);
  const auto result = elicit(oracle, schema, distribution, stopping);

  VerifyReport report{tolerance, grid_resolution, {}};
  const auto steps = static_cast<std::size_t>(std::ceil(1.0 / grid_resolution - 1e-9));
  for (std::size_t attribute = 1; attribute < schema.dimension(); ++attribute) {
    const auto fine = utility_profile(schema, *distribution, truth, attribute, steps);
    const double best = *std::max_element(fine.begin(), fine.end());
    AttributeVerification check;
    check.attribute = attribute;
    check.label = schema.label(attribute);
    check.mid = result.mids[attribute];
    check.gap = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < fine.size(); ++j) {
      if (fine[j] != best) continue;
      const double x = static_cast<double>(j) / static_cast<double>(steps);
      const double gap = std::abs(check.mid - x);
      if (gap < check.gap) {
        check.gap = gap;
        check.grid_argmax = x;
      }
    }
    check.within_tolerance = check.gap <= tolerance;
    check.unimodal =
        is_unimodal(utility_profile(schema, *distribution, truth, attribute, kUnimodalitySteps));
    report.attributes.push_back(check);
  }
  return report;
}

VerifyReport run_verify(const ExperimentConfig& config, double grid_resolution) {
  auto distribution = std::make_shared<const SyntheticDistribution>(
      load_or_generate(config.distribution, config.cache_dir));
  return verify_instance(config.schema(), distribution, config.truth(), config.stopping(),
                         grid_resolution);
}

json verify_to_json(const VerifyReport& report) {
  json rows = json::array();
  for (const auto& a : report.attributes) {
    rows.push_back({{"attribute", a.attribute},
                    {"label", a.label},
                    {"mid", a.mid},
                    {"grid_argmax", a.grid_argmax},
                    {"gap", a.gap},
                    {"within_tolerance", a.within_tolerance},
                    {"unimodal", a.unimodal},
                    {"passed", a.passed()}});
  }
  return {{"tolerance", report.tolerance},
          {"grid_resolution", report.grid_resolution},
          {"attributes", rows},
          {"passed", report.passed()}};
}

const std::vector<std::string>& table_presets() {
  static const std::vector<std::string> presets = {
      "table_k2_reward_cost.yaml", "table_k2_two_costs.yaml",
      "table_k3_two_costs_reward.yaml", "table_k3_cost_two_rewards.yaml"};
  return presets;
}

std::vector<TableRow> run_table(const std::filesystem::path& preset_dir,
                                           const std::filesystem::path& out_dir) {
  std::vector<TableRow> rows;
  json table = json::array();
  std::string csv = "name,num_classes,true_weights,elicited_weights,l1_error,query_count,passed\n";
  for (const auto& file : table_presets()) {
    ExperimentConfig config = load_config(preset_dir / file);
    apply_environment_overrides(config);
    TableRow row{run_elicit(config)};
    const auto elicited = row.report.result.weights.flat();
    const auto truth = row.report.truth.flat();
    row.weights_match = matches_at_two_decimals(elicited, truth);
    row.l1_ok = row.report.l1_error <= kTableL1Tolerance;
    row.queries_ok = row.report.result.query_count == row.report.expected_queries;

    auto rounded = [](const std::vector<double>& v) {
      std::string out = "(";
      for (std::size_t i = 0; i < v.size(); ++i) {
        char buffer[16];
        std::snprintf(buffer, sizeof buffer, "%.2f", v[i]);
        out += (i ? " " : "") + std::string(buffer);
      }
      return out + ")";
    };
    csv += config.name + ',' + std::to_string(config.distribution.num_classes) + ',' +
           rounded(truth) + ',' + rounded(elicited) + ',' + real(row.report.l1_error) + ',' +
           std::to_string(row.report.result.query_count) + ',' + (row.passed() ? "1" : "0") + '\n';
    json entry = report_to_json(row.report);
    entry["passed"] = row.passed();
    table.push_back(entry);
    if (!out_dir.empty()) write_elicit_outputs(row.report, out_dir / config.name);
    rows.push_back(std::move(row));
  }
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_text(out_dir / "table.csv", csv);
    write_text(out_dir / "table.json", table.dump(2) + '\n');
  }
  return rows;
}

}  // namespace crme
