#include "crme/distribution.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <numeric>

#include "crme/error.hpp"

namespace crme {
namespace {

DistributionParams params(std::uint64_t seed, std::size_t n, std::size_t k) {
  DistributionParams p;
  p.seed = seed;
  p.num_samples = n;
  p.num_classes = k;
  return p;
}

TEST(Distribution, SoftmaxRowsAreNormalized) {
  const auto dist = generate(params(42, 1000, 3));
  ASSERT_EQ(dist.num_samples(), 1000u);
  ASSERT_EQ(dist.num_classes(), 3u);
  for (std::size_t s = 0; s < dist.num_samples(); ++s) {
    const auto row = dist.eta(s);
    double total = 0.0;
    for (double v : row) {
      EXPECT_GT(v, 0.0);
      total += v;
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
  const auto priors = dist.priors();
  EXPECT_NEAR(std::accumulate(priors.begin(), priors.end(), 0.0), 1.0, 1e-9);
}

TEST(Distribution, GenerationIsDeterministic) {
  const auto a = generate(params(7, 5000, 3));
  const auto b = generate(params(7, 5000, 3));
  const auto c = generate(params(8, 5000, 3));
  EXPECT_TRUE(std::equal(a.eta_matrix().begin(), a.eta_matrix().end(), b.eta_matrix().begin()));
  EXPECT_FALSE(std::equal(a.eta_matrix().begin(), a.eta_matrix().end(), c.eta_matrix().begin()));
}

TEST(Distribution, IdenticalWeightRowsGiveUniformProbabilities) {
  auto p = params(3, 2000, 4);
  std::vector<double> row = {0.3, -1.2, 0.7, 1.1, -0.4, 0.0, 0.9, -1.5, 0.2, 1.4};
  std::vector<double> weights;
  for (std::size_t c = 0; c < p.num_classes; ++c) weights.insert(weights.end(), row.begin(), row.end());
  const auto dist = generate_with_weights(p, weights);
  for (double v : dist.eta_matrix()) EXPECT_EQ(v, 0.25);
  for (double z : dist.priors()) EXPECT_NEAR(z, 0.25, 1e-12);
}

TEST(Distribution, PriorsMatchIndependentRecomputation) {
  const auto dist = generate(params(5, 20000, 3));
  const auto again = recompute_priors(dist);
  ASSERT_EQ(again.size(), 3u);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(again[c], dist.prior(c));
}

TEST(Distribution, RejectsInvalidParameters) {
  EXPECT_THROW(generate(params(1, 0, 2)), ParameterError);
  EXPECT_THROW(generate(params(1, 10, 1)), ParameterError);
  auto p = params(1, 10, 2);
  p.feature_dim = 0;
  EXPECT_THROW(generate(p), ParameterError);
  p = params(1, 10, 2);
  p.weight_scale = 0.0;
  EXPECT_THROW(generate(p), ParameterError);
  p.weight_scale = -1.0;
  EXPECT_THROW(generate(p), ParameterError);
  EXPECT_THROW(generate_with_weights(params(1, 10, 2), std::vector<double>(3, 0.0)),
               ParameterError);
  EXPECT_THROW(SyntheticDistribution(2, {0.5, 0.6}, 0), ParameterError);
}

TEST(Distribution, FullScaleSampleCount) {
  const auto dist = generate(params(7, 10'000'000, 2));
  EXPECT_EQ(dist.num_samples(), 10'000'000u);
  EXPECT_NEAR(dist.prior(0) + dist.prior(1), 1.0, 1e-9);
}

TEST(TradeoffCurve, EndpointsAndMonotonicity) {
  const auto dist = generate(params(21, 20000, 3));
  std::vector<double> grid;
  for (double r = 0.0; r <= 20.0; r += 0.05) grid.push_back(r);
  grid.push_back(1e9);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      if (i == j) continue;
      const auto curve = tradeoff_curve(dist, i, j, grid);
      ASSERT_EQ(curve.size(), grid.size());
      EXPECT_EQ(curve.front(), 1.0);
      EXPECT_LT(curve.back(), 1e-3);
      for (std::size_t t = 1; t < curve.size(); ++t) EXPECT_LE(curve[t], curve[t - 1]);
      // Strictly decreasing somewhere in the bulk, not a step function.
      EXPECT_GT(curve[20], curve[60]);
    }
  }
}

TEST(TradeoffCurve, RejectsBadArguments) {
  const auto dist = generate(params(21, 100, 3));
  const std::vector<double> grid = {0.0, 1.0};
  EXPECT_THROW(tradeoff_curve(dist, 0, 1, std::vector<double>{}), ParameterError);
  EXPECT_THROW(tradeoff_curve(dist, 1, 1, grid), ParameterError);
  EXPECT_THROW(tradeoff_curve(dist, 0, 3, grid), ParameterError);
  EXPECT_THROW(tradeoff_curve(dist, 0, 1, std::vector<double>{2.0, 1.0}), ParameterError);
}

TEST(TradeoffCurve, ZeroDenominatorCountsAsInfinite) {
  const SyntheticDistribution dist(2, {1.0, 0.0, 0.5, 0.5}, 0);
  const auto curve = tradeoff_curve(dist, 0, 1, std::vector<double>{0.0, 2.0, 1e300});
  EXPECT_EQ(curve[0], 1.0);
  EXPECT_EQ(curve[1], 0.5);
  EXPECT_EQ(curve[2], 0.5);
}

TEST(DistributionCache, RoundTripsAndChecksKey) {
  const auto dir = std::filesystem::temp_directory_path() / "crme_cache_test";
  std::filesystem::remove_all(dir);
  const auto p = params(9, 3000, 3);
  const auto first = load_or_generate(p, dir);
  const auto path = dir / cache_file_name(p);
  ASSERT_TRUE(std::filesystem::exists(path));

  const auto loaded = load_distribution(path, p);
  ASSERT_TRUE(loaded.has_value());
  EXPECT_TRUE(std::equal(first.eta_matrix().begin(), first.eta_matrix().end(),
                         loaded->eta_matrix().begin()));
  EXPECT_TRUE(std::equal(first.priors().begin(), first.priors().end(), loaded->priors().begin()));

  auto other = p;
  other.weight_scale = 1.0;
  EXPECT_FALSE(load_distribution(path, other).has_value());
  EXPECT_NE(cache_file_name(p), cache_file_name(other));
  EXPECT_FALSE(load_distribution(dir / "missing.bin", p).has_value());
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace crme
