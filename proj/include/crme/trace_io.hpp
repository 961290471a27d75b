#pragma once

#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "crme/elicitation.hpp"

namespace crme {

/// Delimited trace export: one header line, one line per row, fields
///   attribute,label,iteration,lower,upper,mid,ratio,query_count,<w_label...>,l1_error
/// Reals are written with 17 significant digits; l1_error is empty when the
/// truth is unknown.
std::string trace_to_csv(const AttributeSchema& schema, const std::vector<TraceRow>& rows);

nlohmann::json trace_to_json(const AttributeSchema& schema, const std::vector<TraceRow>& rows);
std::vector<TraceRow> trace_from_json(const nlohmann::json& rows);

nlohmann::json schema_to_json(const AttributeSchema& schema);
AttributeSchema schema_from_json(const nlohmann::json& j);

nlohmann::json stopping_to_json(const StoppingRule& rule);
StoppingRule stopping_from_json(const nlohmann::json& j);

/// Labelled weights, e.g. {"d1": 0.1, ..., "c1": 0.8}, plus the flat vector.
nlohmann::json weights_to_json(const AttributeSchema& schema, const WeightVector& weights);

/// Full engine state except the distribution, which the caller re-attaches.
nlohmann::json state_to_json(const ElicitationState& state);
ElicitationState state_from_json(const nlohmann::json& j,
                                 std::shared_ptr<const SyntheticDistribution> distribution);

}  // namespace crme
