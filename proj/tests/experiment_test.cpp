#include "crme/experiment.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <random>

namespace crme {
namespace {

const char* kBase = R"(name: small
seed: 5
num_samples: 20000
num_classes: 2
reward_bounds: [5]
cost_bounds: [0.3]
true_weights: [0.10, 0.05, 0.05, 0.80]
epsilon: 0.001
)";

std::string error_of(const std::string& yaml) {
  try {
    parse_config(yaml, "bad.yaml");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(ParseConfig, ReadsEveryField) {
  const auto config = parse_config(kBase);
  EXPECT_EQ(config.name, "small");
  EXPECT_EQ(config.distribution, (DistributionParams{5, 20000, 2, 10, 1.5}));
  EXPECT_EQ(config.reward_bounds, std::vector<double>{5});
  EXPECT_EQ(config.cost_bounds, std::vector<double>{0.3});
  EXPECT_EQ(config.stopping(), StoppingRule::tolerance(0.001));
  EXPECT_EQ(config.schema(), AttributeSchema(2, {5}, {0.3}));
  EXPECT_EQ(config.truth().flat(), (std::vector<double>{0.10, 0.05, 0.05, 0.80}));
}

TEST(ParseConfig, ErrorsCarryLineNumbers) {
  EXPECT_EQ(error_of("seed: 1\nnum_samples: 10\nnum_classes: 2\nbogus: 3\n").rfind("bad.yaml:4:", 0),
            0u);
  const std::string negative =
      error_of("seed: 1\nnum_samples: 10\nnum_classes: 2\ncost_bounds: [-0.3]\n");
  EXPECT_EQ(negative.rfind("bad.yaml:4:", 0), 0u) << negative;
  const std::string sum = error_of(
      "seed: 1\nnum_samples: 10\nnum_classes: 2\n\ntrue_weights: [0.5, 0.4]\nepsilon: 0.1\n");
  EXPECT_EQ(sum.rfind("bad.yaml:5:", 0), 0u) << sum;
  EXPECT_NE(error_of("seed: 1\nnum_samples: 10\nnum_classes: 2\ntrue_weights: [1]\n"), "");
  EXPECT_NE(error_of("seed: 1\nnum_samples: 10\nnum_classes: 2\nepsilon: 0.1\niterations: 3\n"),
            "");
  EXPECT_NE(error_of("seed: 1\nnum_classes: 2\n"), "");
  EXPECT_NE(error_of("seed: [1]\nnum_samples: 10\nnum_classes: 2\n"), "");
  EXPECT_NE(error_of("seed: 1\nnum_samples: 10\nnum_classes: 2\nepsilon: 1.5\n"), "");
  EXPECT_NE(error_of("seed: 1\n  num_samples: : 10\n"), "");
  EXPECT_THROW(parse_config("seed: 1\nnum_samples: 10\nnum_classes: 2\n").truth(), ConfigError);
  EXPECT_THROW(parse_config("seed: 1\nnum_samples: 10\nnum_classes: 2\n").stopping(), ConfigError);
}

TEST(ParseConfig, EnvironmentOverrides) {
  auto config = parse_config(kBase);
  ::setenv("CRME_OUTPUT_DIR", "/tmp/crme-override", 1);
  ::setenv("CRME_NUM_SAMPLES", "1234", 1);
  apply_environment_overrides(config);
  ::unsetenv("CRME_OUTPUT_DIR");
  EXPECT_EQ(config.output_dir, "/tmp/crme-override");
  EXPECT_EQ(config.distribution.num_samples, 1234u);
  ::setenv("CRME_NUM_SAMPLES", "12x", 1);
  EXPECT_THROW(apply_environment_overrides(config), ConfigError);
  ::unsetenv("CRME_NUM_SAMPLES");
}

TEST(ParseConfig, ShippedPresetsAreValid) {
  for (const auto& name : table_presets()) {
    const auto config = load_config(std::filesystem::path(CRME_PRESET_DIR) / name);
    EXPECT_EQ(config.distribution.num_samples, 1'000'000u) << name;
    EXPECT_NO_THROW(config.truth()) << name;
    EXPECT_EQ(config.stopping(), StoppingRule::tolerance(0.001)) << name;
  }
  EXPECT_NO_THROW(
      load_config(std::filesystem::path(CRME_PRESET_DIR) / "convergence_k2_cost.yaml").truth());
}

TEST(ConfigHash, DependsOnContentOnly) {
  const auto a = parse_config(kBase);
  auto b = parse_config(std::string("# comment\n") + kBase);
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 64u);
  b.distribution.seed = 6;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(RunElicit, ReportsAreDeterministicModuloTiming) {
  const auto config = parse_config(kBase);
  const auto first = run_elicit(config);
  const auto second = run_elicit(config);
  EXPECT_EQ(report_to_json(first, false).dump(), report_to_json(second, false).dump());
  EXPECT_EQ(report_to_csv(first), report_to_csv(second));
  const auto j = report_to_json(first);
  EXPECT_EQ(j["config_hash"], config_hash(config));
  EXPECT_EQ(j["seed"], 5u);
  EXPECT_EQ(j["query_count"], 120u);
  EXPECT_TRUE(j.contains("wall_time_seconds"));
  EXPECT_NEAR(first.l1_error, l1_distance(first.result.weights, first.truth), 0.0);

  const auto dir = std::filesystem::temp_directory_path() / "crme_elicit_outputs";
  std::filesystem::remove_all(dir);
  write_elicit_outputs(first, dir);
  for (const char* file : {"report.json", "report.csv", "trace.csv", "trace.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / file)) << file;
  }
  std::filesystem::remove_all(dir);
}

TEST(RunElicit, ElicitedWeightsAreAFixedPoint) {
  auto config = parse_config(kBase);
  const auto first = run_elicit(config);
  config.true_weights = first.result.weights.flat();
  const auto second = run_elicit(config);
  EXPECT_TRUE(matches_at_two_decimals(second.result.weights.flat(), first.result.weights.flat()));
}

TEST(RunTrace, ZeroBudgetHasOnlyTheInitialRow) {
  const auto result = run_trace(parse_config(kBase), 0, {});
  EXPECT_EQ(result.trace.size(), 1u);
}

TEST(RunTrace, ConvergenceTraceIsMonotoneAboveTheFloor) {
  auto config = load_config(std::filesystem::path(CRME_PRESET_DIR) / "convergence_k2_cost.yaml");
  config.distribution.num_samples = 100'000;
  const auto result = run_trace(config, 10, {});
  ASSERT_EQ(result.trace.size(), 21u);
  const double floor = 10.0 * 0.001;
  for (std::size_t t = 1; t < result.trace.size(); ++t) {
    const double before = *result.trace[t - 1].l1_error;
    if (before <= floor) break;
    EXPECT_LE(*result.trace[t].l1_error, before + 1e-12) << "row " << t;
  }
  EXPECT_LT(*result.trace.back().l1_error, 0.01);
}

TEST(Verify, ZeroWeightPushesTheOptimumToTheBoundary) {
  const AttributeSchema schema(2, {}, {0.3});
  const auto dist = std::make_shared<const SyntheticDistribution>(generate({9, 20'000, 2, 10, 1.5}));
  const auto truth = WeightVector::from_flat(schema, std::vector<double>{0.6, 0.4, 0.0});
  const auto report = verify_instance(schema, dist, truth, StoppingRule::tolerance(0.001), 0.0005);
  ASSERT_EQ(report.attributes.size(), 2u);
  EXPECT_TRUE(report.passed());
  EXPECT_EQ(report.attributes[1].grid_argmax, 1.0);
  EXPECT_GE(report.attributes[1].mid, 1.0 - 0.001);
}

TEST(Verify, SingleRewardAcrossTwentySeeds) {
  const AttributeSchema schema(2, {5}, {});
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    const auto dist =
        std::make_shared<const SyntheticDistribution>(generate({seed, 20'000, 2, 10, 1.5}));
    const auto truth = normalize(
        WeightVector::from_flat(schema, std::vector<double>{unit(rng), unit(rng), unit(rng)}));
    const auto report =
        verify_instance(schema, dist, truth, StoppingRule::tolerance(0.001), 0.0005);
    for (const auto& a : report.attributes) {
      EXPECT_LE(a.gap, 0.001) << "seed " << seed << " " << a.label;
      EXPECT_TRUE(a.unimodal) << "seed " << seed << " " << a.label;
    }
  }
}

TEST(Verify, RejectsCoarseGrid) {
  const AttributeSchema schema(2, {5}, {});
  const auto dist = std::make_shared<const SyntheticDistribution>(generate({9, 1000, 2, 10, 1.5}));
  const auto truth = WeightVector::from_flat(schema, std::vector<double>{0.4, 0.3, 0.3});
  EXPECT_THROW(verify_instance(schema, dist, truth, StoppingRule::tolerance(0.001), 0.001),
               ParameterError);
  EXPECT_THROW(verify_instance(schema, dist, truth, StoppingRule::tolerance(0.001), 0.0),
               ParameterError);
}

TEST(IsUnimodal, Cases) {
  EXPECT_TRUE(is_unimodal({}));
  EXPECT_TRUE(is_unimodal({1, 2, 3, 3, 2, 1}));
  EXPECT_TRUE(is_unimodal({3, 2, 1}));
  EXPECT_TRUE(is_unimodal({1, 1, 1}));
  EXPECT_FALSE(is_unimodal({1, 3, 2, 3}));
  EXPECT_FALSE(is_unimodal({2, 1, 2}));
}

}  // namespace
}  // namespace crme
