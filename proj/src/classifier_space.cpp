#include "crme/classifier_space.hpp"

#include <cmath>
#include <numbers>

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>

#include "crme/error.hpp"

namespace crme {
namespace {

void check_unit(double m, const char* what) {
  if (!(m >= 0.0 && m <= 1.0)) {
    throw ParameterError(std::string(what) + " must lie in [0, 1]");
  }
}

}  // namespace

AttributeSchema::AttributeSchema(std::size_t num_classes, std::vector<double> reward_bounds,
                                 std::vector<double> cost_bounds)
    : num_classes_(num_classes),
      reward_bounds_(std::move(reward_bounds)),
      cost_bounds_(std::move(cost_bounds)) {
  if (num_classes_ < 2) throw ParameterError("num_classes must be >= 2");
  for (double a : reward_bounds_) {
    if (!(a > 0.0) || !std::isfinite(a)) throw ParameterError("reward bounds must be > 0");
  }
  for (double b : cost_bounds_) {
    if (!(b > 0.0) || !std::isfinite(b)) throw ParameterError("cost bounds must be > 0");
  }
}

AttributeKind AttributeSchema::kind(std::size_t attribute) const {
  if (attribute < num_classes_) return AttributeKind::accuracy;
  if (attribute < num_classes_ + num_rewards()) return AttributeKind::reward;
  if (attribute < dimension()) return AttributeKind::cost;
  throw ParameterError("attribute index " + std::to_string(attribute) + " out of range");
}

AttributeRange AttributeSchema::range(std::size_t attribute) const {
  switch (kind(attribute)) {
    case AttributeKind::reward:
      return {0.0, reward_bounds_[attribute - num_classes_]};
    case AttributeKind::cost:
      return {-cost_bounds_[attribute - num_classes_ - num_rewards()], 0.0};
    case AttributeKind::accuracy:
      break;
  }
  throw ParameterError("accuracy attributes have no fixed range");
}

std::string AttributeSchema::label(std::size_t attribute) const {
  switch (kind(attribute)) {
    case AttributeKind::accuracy:
      return "d" + std::to_string(attribute + 1);
    case AttributeKind::reward:
      return "r" + std::to_string(attribute - num_classes_ + 1);
    case AttributeKind::cost:
      return "c" + std::to_string(attribute - num_classes_ - num_rewards() + 1);
  }
  return {};
}

ClassifierStats ClassifierStats::zeros(const AttributeSchema& schema) {
  return {std::vector<double>(schema.num_classes(), 0.0),
          std::vector<double>(schema.num_rewards(), 0.0),
          std::vector<double>(schema.num_costs(), 0.0)};
}

std::vector<double> ClassifierStats::flat() const {
  std::vector<double> out;
  out.reserve(accuracies.size() + rewards.size() + costs.size());
  out.insert(out.end(), accuracies.begin(), accuracies.end());
  out.insert(out.end(), rewards.begin(), rewards.end());
  out.insert(out.end(), costs.begin(), costs.end());
  return out;
}

double& ClassifierStats::at(const AttributeSchema& schema, std::size_t attribute) {
  switch (schema.kind(attribute)) {
    case AttributeKind::accuracy:
      return accuracies.at(attribute);
    case AttributeKind::reward:
      return rewards.at(attribute - schema.num_classes());
    case AttributeKind::cost:
      break;
  }
  return costs.at(attribute - schema.num_classes() - schema.num_rewards());
}

double ClassifierStats::at(const AttributeSchema& schema, std::size_t attribute) const {
  return const_cast<ClassifierStats&>(*this).at(schema, attribute);
}

bool within_bounds(const ClassifierStats& stats, const AttributeSchema& schema,
                   std::span<const double> priors, double tolerance) {
  if (stats.accuracies.size() != schema.num_classes() ||
      stats.rewards.size() != schema.num_rewards() || stats.costs.size() != schema.num_costs() ||
      priors.size() != schema.num_classes()) {
    return false;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < schema.num_classes(); ++i) {
    const double d = stats.accuracies[i];
    if (d < -tolerance || d > priors[i] + tolerance) return false;
    total += d;
  }
  if (total > 1.0 + tolerance) return false;
  for (std::size_t i = 0; i < schema.num_rewards(); ++i) {
    const double r = stats.rewards[i];
    if (r < -tolerance || r > schema.reward_bounds()[i] + tolerance) return false;
  }
  for (std::size_t i = 0; i < schema.num_costs(); ++i) {
    const double c = stats.costs[i];
    if (c < -schema.cost_bounds()[i] - tolerance || c > tolerance) return false;
  }
  return true;
}

ClassifierStats rbo_stats(const SyntheticDistribution& dist, const AttributeSchema& schema,
                          double m, std::size_t class_index) {
  check_unit(m, "hypothesis weight m");
  const std::size_t k = dist.num_classes();
  if (schema.num_classes() != k) {
    throw ParameterError("schema and distribution disagree on the number of classes");
  }
  if (class_index < 1 || class_index >= k) {
    throw ParameterError("RBO class index must be in [1, k)");
  }

  const auto eta = dist.eta_matrix();
  const std::size_t n = dist.num_samples();
  const double other_weight = 1.0 - m;
  double first = 0.0;
  double second = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const double p0 = eta[s * k];
    const double pi = eta[s * k + class_index];
    if (m * p0 >= other_weight * pi) {
      first += p0;
    } else {
      second += pi;
    }
  }
  auto stats = ClassifierStats::zeros(schema);
  stats.accuracies[0] = first / static_cast<double>(n);
  stats.accuracies[class_index] = second / static_cast<double>(n);
  return stats;
}

EllipseOptimum ellipse_optimal_stats(std::span<const double> priors, double m,
                                     std::size_t attribute, const AttributeSchema& schema) {
  check_unit(m, "hypothesis weight m");
  if (priors.size() != schema.num_classes()) {
    throw ParameterError("priors must have one entry per class");
  }
  const AttributeRange range = schema.range(attribute);
  const double zeta = priors[0];

  EllipseOptimum out;
  double sin_theta = 1.0;
  double cos_theta = 0.0;
  if (m < 1.0) {
    out.theta = std::atan(zeta * m / (range.span() * (1.0 - m)));
    sin_theta = std::sin(out.theta);
    cos_theta = std::cos(out.theta);
  } else {
    out.theta = std::numbers::pi / 2.0;
  }
  out.p_wrong = 1.0 - sin_theta;
  out.stats = ClassifierStats::zeros(schema);
  out.stats.accuracies[0] = zeta * sin_theta;
  out.stats.at(schema, attribute) = range.lower + range.span() * cos_theta;
  return out;
}

NoisyAccuracy realize_noisy_predictions(const SyntheticDistribution& dist, double p_wrong,
                                        std::uint64_t seed) {
  check_unit(p_wrong, "p_wrong");
  boost::random::mt19937_64 engine(seed);
  boost::random::bernoulli_distribution<double> corrupted(p_wrong);

  const std::size_t k = dist.num_classes();
  const std::size_t n = dist.num_samples();
  const auto eta = dist.eta_matrix();
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    if (!corrupted(engine)) {
      const double v = eta[s * k];
      sum += v;
      sum_sq += v * v;
    }
  }
  const double count = static_cast<double>(n);
  NoisyAccuracy out;
  out.accuracy = sum / count;
  if (n > 1) {
    const double variance = std::max(0.0, (sum_sq - sum * sum / count) / (count - 1.0));
    out.standard_error = std::sqrt(variance / count);
  }
  return out;
}

}  // namespace crme
