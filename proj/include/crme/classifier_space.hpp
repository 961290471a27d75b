#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "crme/distribution.hpp"

namespace crme {

enum class AttributeKind { accuracy, reward, cost };

/// Closed range an attribute can take: [0, A] for a reward, [-B, 0] for a cost.
struct AttributeRange {
  double lower = 0.0;
  double upper = 0.0;
  double span() const { return upper - lower; }
};

/**
 * Shape of the statistics space. Attributes are indexed canonically from 0:
 * class accuracies 0..k-1, then rewards, then costs. Attribute 0 (class-1
 * accuracy) is the reference every other weight is elicited against.
 */
class AttributeSchema {
 public:
  AttributeSchema(std::size_t num_classes, std::vector<double> reward_bounds,
                  std::vector<double> cost_bounds);

  std::size_t num_classes() const { return num_classes_; }
  std::size_t num_rewards() const { return reward_bounds_.size(); }
  std::size_t num_costs() const { return cost_bounds_.size(); }
  std::size_t dimension() const { return num_classes_ + num_rewards() + num_costs(); }

  /// Upper bounds A_i of the rewards.
  const std::vector<double>& reward_bounds() const { return reward_bounds_; }
  /// Magnitudes B_i of the cost lower bounds.
  const std::vector<double>& cost_bounds() const { return cost_bounds_; }

  AttributeKind kind(std::size_t attribute) const;
  /// Range of a reward or cost attribute. Throws for accuracies.
  AttributeRange range(std::size_t attribute) const;
  /// "d1".."dk", "r1".., "c1".. with 1-based numbering inside each group.
  std::string label(std::size_t attribute) const;

  friend bool operator==(const AttributeSchema&, const AttributeSchema&) = default;

 private:
  std::size_t num_classes_;
  std::vector<double> reward_bounds_;
  std::vector<double> cost_bounds_;
};

/// A point of the query space: diagonal confusions, rewards and costs.
struct ClassifierStats {
  std::vector<double> accuracies;
  std::vector<double> rewards;
  std::vector<double> costs;

  /// All-zero statistics shaped by the schema.
  static ClassifierStats zeros(const AttributeSchema& schema);

  /// Concatenation in canonical attribute order.
  std::vector<double> flat() const;
  double& at(const AttributeSchema& schema, std::size_t attribute);
  double at(const AttributeSchema& schema, std::size_t attribute) const;

  friend bool operator==(const ClassifierStats&, const ClassifierStats&) = default;
};

/// True when every coordinate lies in its admissible box and the
/// accuracies sum to at most 1 (+tolerance).
bool within_bounds(const ClassifierStats& stats, const AttributeSchema& schema,
                   std::span<const double> priors, double tolerance = 1e-12);

/// Statistics of the restricted Bayes optimal classifier between class 0 and
/// class_index with hypothesis weights m on class 0 and (1 - m) on
/// class_index. Predicts class 0 when m * eta_0 >= (1 - m) * eta_i.
/// Rewards and costs stay at zero.
ClassifierStats rbo_stats(const SyntheticDistribution& dist, const AttributeSchema& schema,
                          double m, std::size_t class_index);

struct EllipseOptimum {
  ClassifierStats stats;
  double theta = 0.0;
  double p_wrong = 0.0;
};

/// Tangency point of the level line m * d_0 + (1 - m) * attribute with the
/// quarter-ellipse frontier d_0 = zeta_0 sin(theta),
/// attribute = lower + span cos(theta). `attribute` is a canonical index of a
/// reward or cost. The m = 1 endpoint is taken as the exact limit.
EllipseOptimum ellipse_optimal_stats(std::span<const double> priors, double m,
                                     std::size_t attribute, const AttributeSchema& schema);

struct NoisyAccuracy {
  double accuracy = 0.0;
  double standard_error = 0.0;
};

/// Simulates the always-predict-class-0 classifier whose prediction is
/// replaced, with probability p_wrong, by a label outside the support.
/// Returns the empirical class-0 accuracy.
NoisyAccuracy realize_noisy_predictions(const SyntheticDistribution& dist, double p_wrong,
                                        std::uint64_t seed);

}  // namespace crme
