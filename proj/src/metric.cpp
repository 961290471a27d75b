#include "crme/metric.hpp"

#include <cmath>

#include "crme/error.hpp"

namespace crme {
namespace {

double dot(std::span<const double> weights, std::span<const double> values) {
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) total += weights[i] * values[i];
  return total;
}

void scale(std::vector<double>& values, double factor) {
  for (double& v : values) v /= factor;
}

}  // namespace

WeightVector WeightVector::from_flat(const AttributeSchema& schema,
                                     std::span<const double> values) {
  if (values.size() != schema.dimension()) {
    throw ParameterError("weight vector has " + std::to_string(values.size()) +
                         " entries, schema expects " + std::to_string(schema.dimension()));
  }
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ParameterError("weights must be finite and >= 0");
  }
  const auto k = schema.num_classes();
  const auto r = schema.num_rewards();
  WeightVector w;
  w.accuracy.assign(values.begin(), values.begin() + k);
  w.reward.assign(values.begin() + k, values.begin() + k + r);
  w.cost.assign(values.begin() + k + r, values.end());
  return w;
}

std::vector<double> WeightVector::flat() const {
  std::vector<double> out;
  out.reserve(size());
  out.insert(out.end(), accuracy.begin(), accuracy.end());
  out.insert(out.end(), reward.begin(), reward.end());
  out.insert(out.end(), cost.begin(), cost.end());
  return out;
}

double WeightVector::l1_norm() const {
  double total = 0.0;
  for (double v : flat()) total += std::abs(v);
  return total;
}

bool WeightVector::is_normalized(double tolerance) const {
  return std::abs(l1_norm() - 1.0) <= tolerance;
}

double evaluate(const WeightVector& weights, const ClassifierStats& stats) {
  if (weights.accuracy.size() != stats.accuracies.size() ||
      weights.reward.size() != stats.rewards.size() ||
      weights.cost.size() != stats.costs.size()) {
    throw ParameterError("weight vector and classifier statistics differ in shape");
  }
  return dot(weights.accuracy, stats.accuracies) + dot(weights.cost, stats.costs) +
         dot(weights.reward, stats.rewards);
}

WeightVector normalize(const WeightVector& weights) {
  const double norm = weights.l1_norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw ParameterError("cannot normalize a weight vector with zero or non-finite norm");
  }
  WeightVector out = weights;
  scale(out.accuracy, norm);
  scale(out.reward, norm);
  scale(out.cost, norm);
  return out;
}

double l1_distance(const WeightVector& lhs, const WeightVector& rhs) {
  const auto a = lhs.flat();
  const auto b = rhs.flat();
  if (a.size() != b.size()) throw ParameterError("weight vectors differ in size");
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(a[i] - b[i]);
  return total;
}

SimulatedOracle::SimulatedOracle(WeightVector truth) : truth_(std::move(truth)) {
  for (double v : truth_.flat()) {
    if (!(v >= 0.0)) throw ParameterError("oracle weights must be nonnegative");
  }
}

OracleAnswer SimulatedOracle::compare(const ClassifierStats& first,
                                      const ClassifierStats& second) {
  return {evaluate(truth_, first) > evaluate(truth_, second)};
}

std::unique_ptr<Oracle> simulated_oracle(const WeightVector& truth) {
  return std::make_unique<SimulatedOracle>(truth);
}

ScriptedOracle::ScriptedOracle(std::vector<bool> answers) : answers_(std::move(answers)) {}

OracleAnswer ScriptedOracle::compare(const ClassifierStats&, const ClassifierStats&) {
  if (next_ >= answers_.size()) throw StateError("scripted oracle ran out of answers");
  return {answers_[next_++]};
}

OracleAnswer RecordingOracle::compare(const ClassifierStats& first,
                                      const ClassifierStats& second) {
  const OracleAnswer answer = inner_.compare(first, second);
  answers_.push_back(answer.prefers_first);
  return answer;
}

}  // namespace crme
