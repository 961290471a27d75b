#include "crme/elicitation.hpp"

#include <cmath>

#include "crme/error.hpp"

namespace crme {
namespace {

std::vector<double> raw_weights(const ElicitationState& state) {
  const std::size_t dim = state.schema.dimension();
  std::vector<double> raw(dim, 0.0);
  raw[0] = 1.0;
  for (std::size_t i = 1; i < dim; ++i) {
    if (state.ratios[i]) {
      raw[i] = *state.ratios[i];
    } else if (i == state.current_attribute) {
      raw[i] = ratio_from_mid(state.interval.midpoint());
    }
  }
  return raw;
}

TraceRow make_row(const ElicitationState& state, std::size_t attribute) {
  TraceRow row;
  row.attribute = attribute;
  row.iteration = attribute == state.current_attribute ? state.iteration : 0;
  row.interval = state.interval;
  row.mid = state.interval.midpoint();
  row.ratio = ratio_from_mid(row.mid);
  row.query_count = state.query_count;
  const WeightVector estimate = current_estimate(state);
  row.estimate = estimate.flat();
  if (state.truth) row.l1_error = l1_distance(estimate, *state.truth);
  return row;
}

void finish_attribute(ElicitationState& state) {
  const double mid = state.interval.midpoint();
  state.mids[state.current_attribute] = mid;
  state.ratios[state.current_attribute] = ratio_from_mid(mid);
}

// Moves past attributes whose search needs no further iterations.
void settle(ElicitationState& state) {
  while (!state.finished() && state.stopping.satisfied(state.iteration)) {
    finish_attribute(state);
    ++state.current_attribute;
    state.interval = SearchInterval{};
    state.iteration = 0;
  }
}

}  // namespace

StoppingRule StoppingRule::tolerance(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ParameterError("epsilon must lie in (0, 1)");
  return StoppingRule(epsilon, iterations_for_tolerance(epsilon));
}

StoppingRule StoppingRule::iterations(std::size_t iterations) {
  if (iterations > 1000) throw ParameterError("iteration budget must be <= 1000");
  return StoppingRule(std::nullopt, iterations);
}

std::size_t iterations_for_tolerance(double epsilon) {
  if (!(epsilon > 0.0)) throw ParameterError("epsilon must be positive");
  std::size_t t = 0;
  for (double width = 1.0; width > epsilon; width /= 2.0) ++t;
  return t;
}

ElicitationState start(AttributeSchema schema,
                       std::shared_ptr<const SyntheticDistribution> distribution,
                       StoppingRule stopping, std::optional<WeightVector> truth) {
  if (!distribution) throw ParameterError("a distribution is required");
  if (distribution->num_classes() != schema.num_classes()) {
    throw ParameterError("schema and distribution disagree on the number of classes");
  }
  if (truth && truth->size() != schema.dimension()) {
    throw ParameterError("true weights do not match the schema dimension");
  }
  const std::size_t dim = schema.dimension();
  ElicitationState state{std::move(schema), std::move(distribution), stopping, std::move(truth)};
  state.mids.assign(dim, std::nullopt);
  state.ratios.assign(dim, std::nullopt);
  state.trace.push_back(make_row(state, state.current_attribute));
  settle(state);
  return state;
}

ClassifierStats hypothesis_stats(const AttributeSchema& schema,
                                 const SyntheticDistribution& distribution, double x,
                                 std::size_t attribute) {
  if (attribute == 0 || attribute >= schema.dimension()) {
    throw ParameterError("hypotheses exist only for attributes 1..dim-1");
  }
  if (schema.kind(attribute) == AttributeKind::accuracy) {
    return rbo_stats(distribution, schema, x, attribute);
  }
  return ellipse_optimal_stats(distribution.priors(), x, attribute, schema).stats;
}

std::variant<QueryBatch, WeightVector> next_queries(const ElicitationState& state) {
  if (state.finished()) return current_estimate(state);

  const double a = state.interval.lower;
  const double b = state.interval.upper;
  QueryBatch batch;
  batch.attribute = state.current_attribute;
  batch.sequence = state.completed_iterations();
  batch.points = {a, (3.0 * a + b) / 4.0, (a + b) / 2.0, (a + 3.0 * b) / 4.0, b};
  for (std::size_t i = 0; i < batch.points.size(); ++i) {
    batch.hypotheses[i] =
        hypothesis_stats(state.schema, *state.distribution, batch.points[i], batch.attribute);
  }
  return batch;
}

SearchInterval narrow(const SearchInterval& interval,
                      const std::array<OracleAnswer, 4>& answers) {
  const double a = interval.lower;
  const double b = interval.upper;
  const double c = (3.0 * a + b) / 4.0;
  const double d = (a + b) / 2.0;
  const double e = (a + 3.0 * b) / 4.0;
  if (answers[0].prefers_first || answers[1].prefers_first) return {a, d};
  if (answers[2].prefers_first) return {c, e};
  return {d, b};
}

void advance(ElicitationState& state, const BatchAnswers& answers) {
  if (state.finished()) throw StateError("elicitation already finished");
  if (answers.sequence != state.completed_iterations()) {
    throw StateError("answers for batch " + std::to_string(answers.sequence) +
                     " but batch " + std::to_string(state.completed_iterations()) +
                     " is pending");
  }
  state.interval = narrow(state.interval, answers.answers);
  ++state.iteration;
  state.query_count += 4;

  const std::size_t attribute = state.current_attribute;
  if (state.stopping.satisfied(state.iteration)) finish_attribute(state);
  state.trace.push_back(make_row(state, attribute));
  settle(state);
}

double ratio_from_mid(double mid) {
  if (mid == 0.0) {
    throw DegenerateRatioError("midpoint 0: the weight ratio exceeds the searchable range");
  }
  if (!(mid > 0.0 && mid <= 1.0)) throw ParameterError("midpoint must lie in (0, 1]");
  return (1.0 - mid) / mid;
}

WeightVector current_estimate(const ElicitationState& state) {
  return normalize(WeightVector::from_flat(state.schema, raw_weights(state)));
}

std::size_t expected_total_queries(const AttributeSchema& schema, const StoppingRule& stopping) {
  return (schema.dimension() - 1) * 4 * stopping.iterations_per_search();
}

ElicitationResult elicit(Oracle& oracle, const AttributeSchema& schema,
                         std::shared_ptr<const SyntheticDistribution> distribution,
                         StoppingRule stopping, std::optional<WeightVector> truth) {
  ElicitationState state = start(schema, std::move(distribution), stopping, std::move(truth));
  for (;;) {
    auto next = next_queries(state);
    if (auto* done = std::get_if<WeightVector>(&next)) {
      ElicitationResult result;
      result.weights = std::move(*done);
      result.trace = std::move(state.trace);
      result.query_count = state.query_count;
      result.mids.assign(schema.dimension(), 0.0);
      for (std::size_t i = 1; i < schema.dimension(); ++i) result.mids[i] = *state.mids[i];
      return result;
    }
    const auto& batch = std::get<QueryBatch>(next);
    BatchAnswers answers{batch.sequence, {}};
    for (std::size_t j = 0; j < answers.answers.size(); ++j) {
      const auto [first, second] = batch.pair(j);
      answers.answers[j] = oracle.compare(first, second);
    }
    advance(state, answers);
  }
}

}  // namespace crme
