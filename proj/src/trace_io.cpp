#include "crme/trace_io.hpp"

#include <cstdio>

#include "crme/error.hpp"

namespace crme {
namespace {

using nlohmann::json;

std::string real(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

json optional_real(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_real(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

std::string trace_to_csv(const AttributeSchema& schema, const std::vector<TraceRow>& rows) {
  std::string out = "attribute,label,iteration,lower,upper,mid,ratio,query_count";
  for (std::size_t i = 0; i < schema.dimension(); ++i) out += ",w_" + schema.label(i);
  out += ",l1_error\n";
  for (const auto& row : rows) {
    out += std::to_string(row.attribute) + ',' + schema.label(row.attribute) + ',' +
           std::to_string(row.iteration) + ',' + real(row.interval.lower) + ',' +
           real(row.interval.upper) + ',' + real(row.mid) + ',' + real(row.ratio) + ',' +
           std::to_string(row.query_count);
    for (double w : row.estimate) out += ',' + real(w);
    out += ',';
    if (row.l1_error) out += real(*row.l1_error);
    out += '\n';
  }
  return out;
}

json trace_to_json(const AttributeSchema& schema, const std::vector<TraceRow>& rows) {
  json out = json::array();
  for (const auto& row : rows) {
    out.push_back({{"attribute", row.attribute},
                   {"label", schema.label(row.attribute)},
                   {"iteration", row.iteration},
                   {"lower", row.interval.lower},
                   {"upper", row.interval.upper},
                   {"mid", row.mid},
                   {"ratio", row.ratio},
                   {"query_count", row.query_count},
                   {"estimate", row.estimate},
                   {"l1_error", optional_real(row.l1_error)}});
  }
  return out;
}

std::vector<TraceRow> trace_from_json(const json& rows) {
  std::vector<TraceRow> out;
  for (const auto& j : rows) {
    TraceRow row;
    row.attribute = j.at("attribute").get<std::size_t>();
    row.iteration = j.at("iteration").get<std::size_t>();
    row.interval = {j.at("lower").get<double>(), j.at("upper").get<double>()};
    row.mid = j.at("mid").get<double>();
    row.ratio = j.at("ratio").get<double>();
    row.query_count = j.at("query_count").get<std::size_t>();
    row.estimate = j.at("estimate").get<std::vector<double>>();
    row.l1_error = optional_real(j.at("l1_error"));
    out.push_back(std::move(row));
  }
  return out;
}

json schema_to_json(const AttributeSchema& schema) {
  return {{"num_classes", schema.num_classes()},
          {"reward_bounds", schema.reward_bounds()},
          {"cost_bounds", schema.cost_bounds()}};
}

AttributeSchema schema_from_json(const json& j) {
  return AttributeSchema(j.at("num_classes").get<std::size_t>(),
                         j.value("reward_bounds", std::vector<double>{}),
                         j.value("cost_bounds", std::vector<double>{}));
}

json stopping_to_json(const StoppingRule& rule) {
  if (rule.is_tolerance()) return {{"epsilon", *rule.epsilon()}};
  return {{"iterations", rule.iterations_per_search()}};
}

StoppingRule stopping_from_json(const json& j) {
  if (j.contains("epsilon")) return StoppingRule::tolerance(j.at("epsilon").get<double>());
  if (j.contains("iterations")) return StoppingRule::iterations(j.at("iterations").get<std::size_t>());
  throw ParameterError("stopping rule needs either epsilon or iterations");
}

json weights_to_json(const AttributeSchema& schema, const WeightVector& weights) {
  const auto flat = weights.flat();
  json labelled = json::object();
  for (std::size_t i = 0; i < flat.size(); ++i) labelled[schema.label(i)] = flat[i];
  return {{"labelled", labelled}, {"values", flat}};
}

json state_to_json(const ElicitationState& state) {
  json mids = json::array();
  json ratios = json::array();
  for (const auto& m : state.mids) mids.push_back(optional_real(m));
  for (const auto& r : state.ratios) ratios.push_back(optional_real(r));
  return {{"schema", schema_to_json(state.schema)},
          {"stopping", stopping_to_json(state.stopping)},
          {"truth", state.truth ? json(state.truth->flat()) : json(nullptr)},
          {"current_attribute", state.current_attribute},
          {"interval", {state.interval.lower, state.interval.upper}},
          {"iteration", state.iteration},
          {"mids", mids},
          {"ratios", ratios},
          {"query_count", state.query_count},
          {"trace", trace_to_json(state.schema, state.trace)}};
}

ElicitationState state_from_json(const json& j,
                                 std::shared_ptr<const SyntheticDistribution> distribution) {
  AttributeSchema schema = schema_from_json(j.at("schema"));
  std::optional<WeightVector> truth;
  if (!j.at("truth").is_null()) {
    truth = WeightVector::from_flat(schema, j.at("truth").get<std::vector<double>>());
  }
  ElicitationState state{schema, std::move(distribution), stopping_from_json(j.at("stopping")),
                         std::move(truth)};
  state.current_attribute = j.at("current_attribute").get<std::size_t>();
  const auto& interval = j.at("interval");
  state.interval = {interval.at(0).get<double>(), interval.at(1).get<double>()};
  state.iteration = j.at("iteration").get<std::size_t>();
  for (const auto& m : j.at("mids")) state.mids.push_back(optional_real(m));
  for (const auto& r : j.at("ratios")) state.ratios.push_back(optional_real(r));
  state.query_count = j.at("query_count").get<std::size_t>();
  state.trace = trace_from_json(j.at("trace"));
  if (state.mids.size() != schema.dimension() || state.ratios.size() != schema.dimension()) {
    throw ParameterError("serialized state does not match its schema");
  }
  return state;
}

}  // namespace crme
