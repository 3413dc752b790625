#pragma once

// JSON mappings for configuration, checkpoints and reports. Every top-level
// document carries "schema_version".

#include <string>

#include <json.hpp>

#include "messplus/core.hpp"
#include "messplus/features.hpp"
#include "messplus/metrics.hpp"
#include "messplus/predictor.hpp"
#include "messplus/router.hpp"
#include "messplus/simulator.hpp"

namespace messplus {

inline constexpr int kSchemaVersion = 1;

using Json = nlohmann::json;

void to_json(Json& j, const SlaParams& v);
void from_json(const Json& j, SlaParams& v);
void to_json(Json& j, const GroundTruthModel& v);
void from_json(const Json& j, GroundTruthModel& v);
void to_json(Json& j, const ModelProfile& v);
void from_json(const Json& j, ModelProfile& v);
void to_json(Json& j, const ZooConfig& v);
void from_json(const Json& j, ZooConfig& v);
void to_json(Json& j, const FeatureExtractor& v);
void from_json(const Json& j, FeatureExtractor& v);
void to_json(Json& j, const LearningRateSchedule& v);
void from_json(const Json& j, LearningRateSchedule& v);
void to_json(Json& j, const PredictorState& v);
void from_json(const Json& j, PredictorState& v);
void to_json(Json& j, const ScenarioConfig& v);
void from_json(const Json& j, ScenarioConfig& v);
void to_json(Json& j, const RunSummary& v);
void to_json(Json& j, const ComplianceReport& v);
void to_json(Json& j, const OverheadReport& v);
void to_json(Json& j, const OverheadSummary& v);
void to_json(Json& j, const RoutingDecision& v);
void to_json(Json& j, const VirtualQueue& v);
void from_json(const Json& j, VirtualQueue& v);

/// Writes `doc` to `path` through a temporary file and rename, so readers
/// see either the old or the new content.
void write_json_atomic(const std::string& path, const Json& doc);
Json read_json_file(const std::string& path);

void save_predictor_checkpoint(const std::string& path, const PredictorState& state);
PredictorState load_predictor_checkpoint(const std::string& path);

}  // namespace messplus
