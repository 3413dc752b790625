#include "messplus/serialization.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace messplus {

namespace {

void check_schema(const Json& j, const char* what) {
    if (j.contains("schema_version") && j.at("schema_version").get<int>() != kSchemaVersion) {
        throw ParameterError(std::string("unsupported ") + what + " schema_version");
    }
}

}  // namespace

void to_json(Json& j, const SlaParams& v) {
    j = Json{{"alpha", v.alpha}, {"v", v.v}, {"c", v.c}};
}

void from_json(const Json& j, SlaParams& v) {
    v.alpha = j.value("alpha", v.alpha);
    v.v = j.value("v", v.v);
    v.c = j.value("c", v.c);
}

void to_json(Json& j, const GroundTruthModel& v) {
    j = Json{{"kind", v.kind == GroundTruthModel::Kind::logistic ? "logistic" : "fixed_rate"}, {"rate", v.rate}};
    if (v.kind == GroundTruthModel::Kind::logistic) {
        j["weights"] = v.weights;
    }
}

void from_json(const Json& j, GroundTruthModel& v) {
    const auto kind = j.value("kind", std::string("fixed_rate"));
    if (kind == "logistic") {
        v.kind = GroundTruthModel::Kind::logistic;
    } else if (kind == "fixed_rate") {
        v.kind = GroundTruthModel::Kind::fixed_rate;
    } else {
        throw ParameterError("unknown ground truth kind: " + kind);
    }
    v.rate = j.value("rate", 0.5);
    v.weights = j.value("weights", std::vector<double>{});
}

void to_json(Json& j, const ModelProfile& v) {
    j = Json{{"name", v.display_name}, {"base_cost_j", v.base_cost_j}, {"cost_per_token_j", v.cost_per_token_j}};
    if (v.truth) {
        j["truth"] = *v.truth;
    }
}

void from_json(const Json& j, ModelProfile& v) {
    v.display_name = j.at("name").get<std::string>();
    v.base_cost_j = j.at("base_cost_j").get<double>();
    v.cost_per_token_j = j.value("cost_per_token_j", 0.0);
    if (j.contains("truth")) {
        v.truth = j.at("truth").get<GroundTruthModel>();
    } else {
        v.truth.reset();
    }
}

void to_json(Json& j, const ZooConfig& v) {
    j = Json{{"models", v.models}, {"largest", v.largest.index}};
}

void from_json(const Json& j, ZooConfig& v) {
    v.models = j.at("models").get<std::vector<ModelProfile>>();
    for (std::size_t i = 0; i < v.models.size(); ++i) {
        v.models[i].id = ModelId{i};
    }
    if (j.contains("largest")) {
        v.largest = ModelId{j.at("largest").get<std::size_t>()};
    } else {
        // Default: the most expensive model at zero tokens.
        std::size_t largest = 0;
        for (std::size_t i = 1; i < v.models.size(); ++i) {
            if (v.models[i].base_cost_j > v.models[largest].base_cost_j) {
                largest = i;
            }
        }
        v.largest = ModelId{largest};
    }
    v.validate();
}

void to_json(Json& j, const FeatureExtractor& v) {
    j = Json{{"kind", std::string(to_string(v.kind))}, {"dim", v.dim}, {"seed", v.seed}};
}

void from_json(const Json& j, FeatureExtractor& v) {
    v.kind = feature_kind_from_string(j.value("kind", std::string("passthrough")));
    v.dim = j.value("dim", v.dim);
    v.seed = j.value("seed", v.seed);
}

void to_json(Json& j, const LearningRateSchedule& v) {
    j = Json{{"kind", std::string(to_string(v.kind))},
             {"mu", v.mu},
             {"l_smooth", v.l_smooth},
             {"eta0", v.eta0},
             {"k0", v.k0}};
}

void from_json(const Json& j, LearningRateSchedule& v) {
    v.kind = schedule_kind_from_string(j.value("kind", std::string("inverse_decay")));
    v.mu = j.value("mu", v.mu);
    v.l_smooth = j.value("l_smooth", v.l_smooth);
    v.eta0 = j.value("eta0", v.eta0);
    v.k0 = j.value("k0", v.k0);
    v.validate();
}

void to_json(Json& j, const PredictorState& v) {
    j = Json{{"schema_version", kSchemaVersion},
             {"dim", v.dim},
             {"M", v.models},
             {"mu", v.mu},
             {"schedule", v.schedule},
             {"k", v.k},
             {"z", v.z}};
}

void from_json(const Json& j, PredictorState& v) {
    check_schema(j, "predictor checkpoint");
    v.dim = j.at("dim").get<std::size_t>();
    v.models = j.at("M").get<std::size_t>();
    v.mu = j.at("mu").get<double>();
    v.schedule = j.at("schedule").get<LearningRateSchedule>();
    v.k = j.at("k").get<std::uint64_t>();
    v.z = j.at("z").get<std::vector<double>>();
    v.validate();
}

void to_json(Json& j, const ScenarioConfig& v) {
    j = Json{{"schema_version", kSchemaVersion},
             {"zoo", v.zoo},
             {"sla", v.sla},
             {"horizon", v.horizon},
             {"dim", v.dim},
             {"cluster_count", v.cluster_count},
             {"world_seed", v.world_seed},
             {"seed", v.seed},
             {"label_noise", v.label_noise},
             {"token_min", v.token_min},
             {"token_max", v.token_max},
             {"center_scale", v.center_scale},
             {"cluster_sigma", v.cluster_sigma},
             {"mu", v.mu},
             {"schedule", v.schedule}};
}

void from_json(const Json& j, ScenarioConfig& v) {
    check_schema(j, "scenario");
    if (j.contains("zoo")) {
        v.zoo = j.at("zoo").get<ZooConfig>();
    }
    if (j.contains("sla")) {
        v.sla = j.at("sla").get<SlaParams>();
    }
    v.horizon = j.value("horizon", v.horizon);
    v.dim = j.value("dim", v.dim);
    v.cluster_count = j.value("cluster_count", v.cluster_count);
    v.world_seed = j.value("world_seed", v.world_seed);
    v.seed = j.value("seed", v.seed);
    v.label_noise = j.value("label_noise", v.label_noise);
    v.token_min = j.value("token_min", v.token_min);
    v.token_max = j.value("token_max", v.token_max);
    v.center_scale = j.value("center_scale", v.center_scale);
    v.cluster_sigma = j.value("cluster_sigma", v.cluster_sigma);
    v.mu = j.value("mu", v.mu);
    if (j.contains("schedule")) {
        v.schedule = j.at("schedule").get<LearningRateSchedule>();
    }
}

void to_json(Json& j, const RunSummary& v) {
    j = Json{{"requests", v.requests},
             {"total_cost_j", v.total_cost_j},
             {"mean_cost_j", v.mean_cost_j},
             {"mean_cost_mj", v.mean_cost_j / kJoulesPerMegajoule},
             {"mean_satisfaction", v.mean_satisfaction},
             {"call_counts", v.call_counts},
             {"call_ratios", v.call_ratios},
             {"explorations", v.explorations},
             {"exploration_cost_j", v.exploration_cost_j},
             {"exploration_share", v.exploration_share},
             {"llm_calls", v.llm_calls},
             {"mean_call_cost_j", v.mean_call_cost_j},
             {"final_queue", v.final_queue},
             {"queue_over_t", v.queue_over_t},
             {"mean_queue", v.mean_queue},
             {"max_queue", v.max_queue},
             {"max_queue_minus_sqrt_t", v.max_queue_minus_sqrt_t}};
}

void to_json(Json& j, const ComplianceReport& v) {
    j = Json{{"schema_version", kSchemaVersion},
             {"compliant", v.compliant},
             {"grace_t0", v.grace_t0},
             {"max_violation", v.max_violation},
             {"first_violation_t", v.first_violation_t ? Json(*v.first_violation_t) : Json(nullptr)},
             {"final_satisfaction", v.final_satisfaction},
             {"shortfall", v.shortfall},
             {"queue_over_t", v.queue_over_t},
             {"queue_bound_holds", v.queue_bound_holds}};
}

void to_json(Json& j, const OverheadReport& v) {
    j = Json{{"schema_version", kSchemaVersion},
             {"predictor_cost_j", v.predictor_cost_j},
             {"mean_call_cost_j", v.mean_call_cost_j},
             {"overhead_pct", v.overhead_pct}};
}

void to_json(Json& j, const OverheadSummary& v) {
    j = Json{{"schema_version", kSchemaVersion},
             {"ratio_of_averages_pct", v.ratio_of_averages_pct},
             {"average_of_ratios_pct", v.average_of_ratios_pct},
             {"per_scenario_pct", v.per_scenario_pct}};
}

void to_json(Json& j, const RoutingDecision& v) {
    j = Json{{"t", v.t},
             {"explored", v.explored},
             {"chosen", v.chosen.index},
             {"y", v.y},
             {"s_hat", v.s_hat},
             {"cost_incurred_j", v.cost_incurred_j},
             {"queue_before", v.queue_before},
             {"queue_after", v.queue_after}};
    j["realized_satisfaction"] = v.realized_satisfaction ? Json(*v.realized_satisfaction) : Json(nullptr);
}

void to_json(Json& j, const VirtualQueue& v) {
    j = Json{{"q", v.q}, {"t", v.t}};
}

void from_json(const Json& j, VirtualQueue& v) {
    v.q = j.at("q").get<double>();
    v.t = j.at("t").get<std::uint64_t>();
}

void write_json_atomic(const std::string& path, const Json& doc) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) {
        fs::create_directories(target.parent_path());
    }
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        }
        out << doc.dump(2) << '\n';
        out.flush();
        if (!out) {
            throw std::runtime_error("failed writing " + tmp.string());
        }
    }
    fs::rename(tmp, target);
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    return Json::parse(in);
}

void save_predictor_checkpoint(const std::string& path, const PredictorState& state) {
    write_json_atomic(path, Json(state));
}

PredictorState load_predictor_checkpoint(const std::string& path) {
    return read_json_file(path).get<PredictorState>();
}

}  // namespace messplus
