#include "crme/metric.hpp"

#include <gtest/gtest.h>

#include <random>

#include "crme/error.hpp"

namespace crme {
namespace {

const AttributeSchema kSchema(2, {5}, {0.3});

ClassifierStats random_stats(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return {{0.5 * unit(rng), 0.5 * unit(rng)}, {5.0 * unit(rng)}, {-0.3 * unit(rng)}};
}

TEST(Evaluate, InnerProductOverAllGroups) {
  const auto w = WeightVector::from_flat(kSchema, std::vector<double>{1, 0, 0, 0});
  EXPECT_EQ(evaluate(w, ClassifierStats::zeros(kSchema)), 0.0);
  EXPECT_EQ(evaluate(w, {{0.4, 0.2}, {3.0}, {-0.1}}), 0.4);

  const auto table = WeightVector::from_flat(kSchema, std::vector<double>{0.10, 0.05, 0.05, 0.80});
  EXPECT_NEAR(evaluate(table, {{1, 1}, {1}, {1}}), 1.00, 1e-12);
  EXPECT_NEAR(evaluate(table, {{0.3, 0.2}, {2.0}, {-0.25}}),
              0.10 * 0.3 + 0.05 * 0.2 + 0.05 * 2.0 - 0.80 * 0.25, 1e-15);
}

TEST(Evaluate, RejectsShapeMismatch) {
  const auto w = WeightVector::from_flat(kSchema, std::vector<double>{1, 0, 0, 0});
  EXPECT_THROW(evaluate(w, {{0.4}, {3.0}, {-0.1}}), ParameterError);
  EXPECT_THROW(evaluate(w, {{0.4, 0.1}, {}, {-0.1}}), ParameterError);
  EXPECT_THROW(WeightVector::from_flat(kSchema, std::vector<double>{1, 0, 0}), ParameterError);
  EXPECT_THROW(WeightVector::from_flat(kSchema, std::vector<double>{1, -0.1, 0, 0}), ParameterError);
}

TEST(Evaluate, IsLinearInTheStatistics) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto w = normalize(WeightVector::from_flat(
        kSchema, std::vector<double>{unit(rng), unit(rng), unit(rng), unit(rng)}));
    const auto s1 = random_stats(rng);
    const auto s2 = random_stats(rng);
    const double alpha = unit(rng);
    ClassifierStats mix = s1;
    const auto f1 = s1.flat();
    const auto f2 = s2.flat();
    for (std::size_t i = 0; i < kSchema.dimension(); ++i) {
      mix.at(kSchema, i) = alpha * f1[i] + (1.0 - alpha) * f2[i];
    }
    EXPECT_NEAR(evaluate(w, mix), alpha * evaluate(w, s1) + (1.0 - alpha) * evaluate(w, s2),
                1e-12);
  }
}

TEST(Normalize, DividesByTheL1Norm) {
  const AttributeSchema three(3, {}, {});
  const auto w = normalize(WeightVector::from_flat(three, std::vector<double>{2, 1, 1}));
  EXPECT_EQ(w.flat(), (std::vector<double>{0.5, 0.25, 0.25}));

  const auto again = normalize(w);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(again.flat()[i], w.flat()[i], 1e-12);

  const auto odd = normalize(WeightVector::from_flat(three, std::vector<double>{1, 1.0 / 3.0, 9}));
  EXPECT_NEAR(odd.l1_norm(), 1.0, 1e-12);
  EXPECT_TRUE(odd.is_normalized());

  EXPECT_THROW(normalize(WeightVector::from_flat(three, std::vector<double>{0, 0, 0})),
               ParameterError);
}

TEST(SimulatedOracle, StrictPreference) {
  const auto w = WeightVector::from_flat(kSchema, std::vector<double>{1, 0, 0, 0});
  SimulatedOracle oracle(w);
  const ClassifierStats s = {{0.3, 0.1}, {1.0}, {-0.1}};
  EXPECT_FALSE(oracle.compare(s, s).prefers_first);
  EXPECT_TRUE(oracle.compare({{0.7, 0}, {0}, {0}}, {{0.3, 0}, {0}, {0}}).prefers_first);
  EXPECT_FALSE(oracle.compare({{0.3, 0}, {0}, {0}}, {{0.7, 0}, {0}, {0}}).prefers_first);
}

TEST(SimulatedOracle, ScaleInvariantAndAntisymmetric) {
  std::mt19937_64 rng(11);
  const auto w = WeightVector::from_flat(kSchema, std::vector<double>{0.10, 0.05, 0.05, 0.80});
  WeightVector scaled = w;
  for (auto* group : {&scaled.accuracy, &scaled.reward, &scaled.cost}) {
    for (double& v : *group) v *= 3.7;
  }
  auto base = simulated_oracle(w);
  auto big = simulated_oracle(scaled);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto s1 = random_stats(rng);
    const auto s2 = random_stats(rng);
    const bool forward = base->compare(s1, s2).prefers_first;
    EXPECT_EQ(forward, big->compare(s1, s2).prefers_first);
    if (forward) EXPECT_FALSE(base->compare(s2, s1).prefers_first);
  }
}

TEST(SimulatedOracle, ArgmaxInvariantUnderPositiveScaling) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto w = WeightVector::from_flat(
        kSchema, std::vector<double>{unit(rng), unit(rng), unit(rng), unit(rng)});
    const double lambda = 0.01 + 100.0 * unit(rng);
    WeightVector scaled = w;
    for (auto* group : {&scaled.accuracy, &scaled.reward, &scaled.cost}) {
      for (double& v : *group) v *= lambda;
    }
    std::vector<ClassifierStats> candidates;
    for (int i = 0; i < 20; ++i) candidates.push_back(random_stats(rng));
    auto argmax = [&](const WeightVector& weights) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < candidates.size(); ++i) {
        if (evaluate(weights, candidates[i]) > evaluate(weights, candidates[best])) best = i;
      }
      return best;
    };
    EXPECT_EQ(argmax(w), argmax(scaled));
  }
}

TEST(ScriptedOracle, ReplaysRecordedAnswers) {
  const auto w = WeightVector::from_flat(kSchema, std::vector<double>{0.25, 0.25, 0.25, 0.25});
  SimulatedOracle truth(w);
  RecordingOracle recorder(truth);
  std::mt19937_64 rng(4);
  std::vector<std::pair<ClassifierStats, ClassifierStats>> pairs;
  for (int i = 0; i < 50; ++i) {
    pairs.emplace_back(random_stats(rng), random_stats(rng));
    recorder.compare(pairs.back().first, pairs.back().second);
  }
  ScriptedOracle replay(recorder.answers());
  for (const auto& [a, b] : pairs) {
    EXPECT_EQ(replay.compare(a, b), truth.compare(a, b));
  }
  EXPECT_EQ(replay.consumed(), 50u);
  EXPECT_THROW(replay.compare(pairs[0].first, pairs[0].second), StateError);
}

}  // namespace
}  // namespace crme
