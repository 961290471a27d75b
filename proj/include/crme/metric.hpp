#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "crme/classifier_space.hpp"

namespace crme {

/// Nonnegative weights over (accuracies, rewards, costs). The canonical flat
/// form is the concatenation in that order.
struct WeightVector {
  std::vector<double> accuracy;
  std::vector<double> reward;
  std::vector<double> cost;

  /// Splits a flat canonical vector according to the schema. Entries must be
  /// nonnegative and finite.
  static WeightVector from_flat(const AttributeSchema& schema, std::span<const double> values);

  std::vector<double> flat() const;
  std::size_t size() const { return accuracy.size() + reward.size() + cost.size(); }
  double l1_norm() const;
  bool is_normalized(double tolerance = 1e-9) const;

  friend bool operator==(const WeightVector&, const WeightVector&) = default;
};

/// <a^d, d> + <a^c, c> + <a^r, r>.
double evaluate(const WeightVector& weights, const ClassifierStats& stats);

/// Divides every entry by the L1 norm of the concatenation.
WeightVector normalize(const WeightVector& weights);

/// Sum of absolute coordinate differences.
double l1_distance(const WeightVector& lhs, const WeightVector& rhs);

struct OracleAnswer {
  bool prefers_first = false;
  friend bool operator==(const OracleAnswer&, const OracleAnswer&) = default;
};

/// Anything that can state a preference between two classifiers: the
/// simulated ground truth, a replayed script, or a human behind the service.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual OracleAnswer compare(const ClassifierStats& first, const ClassifierStats& second) = 0;
};

/// Prefers the first classifier iff its metric value is strictly larger.
class SimulatedOracle final : public Oracle {
 public:
  explicit SimulatedOracle(WeightVector truth);
  OracleAnswer compare(const ClassifierStats& first, const ClassifierStats& second) override;
  const WeightVector& truth() const { return truth_; }

 private:
  WeightVector truth_;
};

std::unique_ptr<Oracle> simulated_oracle(const WeightVector& truth);

/// Replays a fixed sequence of answers; throws StateError once exhausted.
class ScriptedOracle final : public Oracle {
 public:
  explicit ScriptedOracle(std::vector<bool> answers);
  OracleAnswer compare(const ClassifierStats& first, const ClassifierStats& second) override;
  std::size_t consumed() const { return next_; }

 private:
  std::vector<bool> answers_;
  std::size_t next_ = 0;
};

/// Forwards to another oracle and keeps every answer it gave.
class RecordingOracle final : public Oracle {
 public:
  explicit RecordingOracle(Oracle& inner) : inner_(inner) {}
  OracleAnswer compare(const ClassifierStats& first, const ClassifierStats& second) override;
  const std::vector<bool>& answers() const { return answers_; }

 private:
  Oracle& inner_;
  std::vector<bool> answers_;
};

}  // namespace crme
