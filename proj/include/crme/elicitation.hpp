#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "crme/classifier_space.hpp"
#include "crme/distribution.hpp"
#include "crme/metric.hpp"

namespace crme {

/// Bracket [lower, upper] on the hypothesis weight m of the searched
/// attribute relative to the class-1 accuracy.
struct SearchInterval {
  double lower = 0.0;
  double upper = 1.0;

  double width() const { return upper - lower; }
  double midpoint() const { return (lower + upper) / 2.0; }

  friend bool operator==(const SearchInterval&, const SearchInterval&) = default;
};

/// Either a bracket-width tolerance or a fixed iteration count per attribute.
class StoppingRule {
 public:
  /// Stop once the bracket width is <= epsilon. Requires 0 < epsilon < 1.
  static StoppingRule tolerance(double epsilon);
  /// Run exactly `iterations` halvings per attribute.
  static StoppingRule iterations(std::size_t iterations);

  bool is_tolerance() const { return epsilon_.has_value(); }
  std::optional<double> epsilon() const { return epsilon_; }
  std::size_t iterations_per_search() const { return iterations_; }
  bool satisfied(std::size_t completed_iterations) const {
    return completed_iterations >= iterations_;
  }

  friend bool operator==(const StoppingRule&, const StoppingRule&) = default;

 private:
  StoppingRule(std::optional<double> epsilon, std::size_t iterations)
      : epsilon_(epsilon), iterations_(iterations) {}

  std::optional<double> epsilon_;
  std::size_t iterations_;
};

/// Smallest t with 2^-t <= epsilon, i.e. ceil(log2(1 / epsilon)).
std::size_t iterations_for_tolerance(double epsilon);

/// Five hypotheses at (a, c, d, e, b) and the four adjacent comparisons
/// (a,c), (c,d), (d,e), (e,b) the oracle must answer, in that order.
struct QueryBatch {
  std::size_t attribute = 0;
  /// Number of batches answered before this one; identifies the batch.
  std::size_t sequence = 0;
  std::array<double, 5> points{};
  std::array<ClassifierStats, 5> hypotheses;

  std::pair<const ClassifierStats&, const ClassifierStats&> pair(std::size_t index) const {
    return {hypotheses.at(index), hypotheses.at(index + 1)};
  }
};

struct BatchAnswers {
  std::size_t sequence = 0;
  std::array<OracleAnswer, 4> answers{};
};

struct TraceRow {
  std::size_t attribute = 0;
  /// Iterations completed on `attribute`; 0 only for the initial row.
  std::size_t iteration = 0;
  SearchInterval interval;
  double mid = 0.5;
  double ratio = 1.0;
  std::size_t query_count = 0;
  /// Normalized running estimate in canonical order. Attributes not yet
  /// searched carry weight 0, the current one uses its bracket midpoint.
  std::vector<double> estimate;
  std::optional<double> l1_error;

  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

/**
 * Everything needed to resume a metric elicitation between oracle answers.
 *
 * Attribute 0 has its weight pinned to 1 before normalization; attributes
 * 1..dim-1 are searched one after another. Once every search has finished
 * `current_attribute == schema.dimension()`.
 */
struct ElicitationState {
  AttributeSchema schema;
  std::shared_ptr<const SyntheticDistribution> distribution;
  StoppingRule stopping;
  /// Ground truth, used only to fill the trace's L1 error column.
  std::optional<WeightVector> truth;

  std::size_t current_attribute = 1;
  SearchInterval interval;
  std::size_t iteration = 0;
  std::vector<std::optional<double>> mids;
  std::vector<std::optional<double>> ratios;
  std::size_t query_count = 0;
  std::vector<TraceRow> trace;

  bool finished() const { return current_attribute >= schema.dimension(); }
  std::size_t completed_iterations() const { return query_count / 4; }
};

ElicitationState start(AttributeSchema schema,
                       std::shared_ptr<const SyntheticDistribution> distribution,
                       StoppingRule stopping, std::optional<WeightVector> truth = std::nullopt);

/// Optimal classifier for hypothesis weights x on the class-1 accuracy and
/// 1 - x on `attribute`: the RBO classifier for accuracies, the
/// quarter-ellipse tangency point for rewards and costs.
ClassifierStats hypothesis_stats(const AttributeSchema& schema,
                                 const SyntheticDistribution& distribution, double x,
                                 std::size_t attribute);

/// The pending batch, or the final normalized weights once finished.
std::variant<QueryBatch, WeightVector> next_queries(const ElicitationState& state);

/// Applies the answers for the pending batch: b = d if q_ac or q_cd,
/// else [c, e] if q_de, else a = d. Throws StateError when the sequence
/// number does not match or the state is finished.
void advance(ElicitationState& state, const BatchAnswers& answers);

/// The bracket update on its own.
SearchInterval narrow(const SearchInterval& interval, const std::array<OracleAnswer, 4>& answers);

/// (1 - mid) / mid. Throws DegenerateRatioError for mid == 0.
double ratio_from_mid(double mid);

/// Normalized estimate in the trace convention (see TraceRow::estimate).
WeightVector current_estimate(const ElicitationState& state);

/// (dim - 1) * 4 * iterations per search.
std::size_t expected_total_queries(const AttributeSchema& schema, const StoppingRule& stopping);

struct ElicitationResult {
  WeightVector weights;
  std::vector<TraceRow> trace;
  std::vector<double> mids;  // index 0 unused (0.0)
  std::size_t query_count = 0;
};

/// Drives start / next_queries / advance against an oracle until done.
ElicitationResult elicit(Oracle& oracle, const AttributeSchema& schema,
                         std::shared_ptr<const SyntheticDistribution> distribution,
                         StoppingRule stopping, std::optional<WeightVector> truth = std::nullopt);

}  // namespace crme
