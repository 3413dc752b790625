#include "messplus/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <stdexcept>

namespace messplus {

namespace fs = std::filesystem;

namespace {

Gateway::Response error(int status, const std::string& message) {
    return {status, Json{{"schema_version", kSchemaVersion}, {"error", message}}};
}

bool valid_tenant_id(const std::string& id) {
    return !id.empty() && std::all_of(id.begin(), id.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '-' || c == '_';
    });
}

int status_for(const RoutingError& e) {
    switch (e.kind()) {
        case RoutingError::Kind::unknown_decision:
            return 404;
        case RoutingError::Kind::missing_labels:
            return 400;
        case RoutingError::Kind::out_of_order:
        case RoutingError::Kind::duplicate_feedback:
            return 409;
    }
    return 400;
}

TenantConfig parse_tenant(const Json& j) {
    TenantConfig t;
    t.id = j.at("id").get<std::string>();
    if (!valid_tenant_id(t.id)) {
        throw ParameterError("tenant id must be non-empty and use only [A-Za-z0-9_-]: '" + t.id + "'");
    }
    const auto mode = j.value("mode", std::string("live"));
    if (mode == "live") {
        t.mode = TenantConfig::Mode::live;
    } else if (mode == "trace") {
        t.mode = TenantConfig::Mode::trace;
    } else {
        throw ParameterError("unknown tenant mode: " + mode);
    }
    auto& r = t.router;
    r.sla = j.at("sla").get<SlaParams>();
    r.zoo = j.at("zoo").get<ZooConfig>();
    if (j.contains("features")) {
        r.extractor = j.at("features").get<FeatureExtractor>();
    }
    r.mu = j.value("mu", r.mu);
    if (j.contains("schedule")) {
        r.schedule = j.at("schedule").get<LearningRateSchedule>();
    }
    r.seed = j.value("seed", r.seed);
    r.shadow_exploration = j.value("shadow_exploration", false);
    r.cost_unit_j = j.value("cost_unit_j", r.cost_unit_j);
    r.validate();
    return t;
}

}  // namespace

ServiceConfig parse_service_config(const Json& doc) {
    ServiceConfig c;
    if (doc.contains("schema_version") && doc.at("schema_version").get<int>() != kSchemaVersion) {
        throw ParameterError("unsupported service config schema_version");
    }
    c.host = doc.value("host", c.host);
    c.port = doc.value("port", c.port);
    c.data_dir = doc.value("data_dir", c.data_dir);
    c.segment_max_bytes = doc.value("segment_max_bytes", c.segment_max_bytes);
    for (const auto& t : doc.value("tenants", Json::array())) {
        c.tenants.push_back(parse_tenant(t));
    }
    for (std::size_t i = 0; i < c.tenants.size(); ++i) {
        for (std::size_t k = i + 1; k < c.tenants.size(); ++k) {
            if (c.tenants[i].id == c.tenants[k].id) {
                throw ParameterError("duplicate tenant id: " + c.tenants[i].id);
            }
        }
    }
    return c;
}

ServiceConfig load_service_config(const std::string& path) {
    return parse_service_config(read_json_file(path));
}

void apply_env_overrides(ServiceConfig& config) {
    if (const char* port = std::getenv("MESSPLUS_PORT")) {
        config.port = std::stoi(port);
    }
    if (const char* dir = std::getenv("MESSPLUS_DATA_DIR")) {
        config.data_dir = dir;
    }
}

struct Gateway::Tenant {
    Tenant(TenantConfig cfg, const fs::path& dir, std::size_t segment_bytes)
        : config(std::move(cfg)),
          router(config.router),
          log(dir, segment_bytes),
          metrics(config.router.zoo.size(), config.router.sla.alpha, false) {}

    TenantConfig config;
    mutable std::mutex write_mutex;
    Router router;
    EventLog log;
    MetricStream metrics;
    std::deque<RoutingDecision> awaiting;
    std::uint64_t feedback_count = 0;

    mutable std::mutex snapshot_mutex;
    std::shared_ptr<const Json> snapshot;

    RequestEvent event_from(const Json& record) const {
        RequestEvent ev;
        ev.t = router.state().t;
        ev.token_count = record.value("token_count", std::uint64_t{0});
        const auto& ex = config.router.extractor;
        if (ex.kind == FeatureExtractor::Kind::passthrough) {
            if (!record.contains("features")) {
                throw ParameterError("this tenant expects a 'features' array");
            }
            ev.features = record.at("features").get<std::vector<double>>();
            if (ev.features.size() != ex.dim) {
                throw ParameterError("features must have length " + std::to_string(ex.dim));
            }
        } else {
            if (!record.contains("text")) {
                throw ParameterError("this tenant expects a 'text' field");
            }
            ev.text = record.at("text").get<std::string>();
        }
        return ev;
    }

    /// Applies a route record to a copy of the router; commit() installs it.
    std::pair<Router, RoutingDecision> trial_route(const Json& record) const {
        Router trial(router.state());
        DeferredLabels deferred;
        auto decision = trial.step(event_from(record), deferred);
        return {std::move(trial), std::move(decision)};
    }

    void commit_route(Router trial, RoutingDecision decision) {
        router = std::move(trial);
        awaiting.push_back(std::move(decision));
    }

    Router trial_feedback(const Json& record, int& bit) const {
        Router trial(router.state());
        const auto t = record.at("decision_id").get<std::uint64_t>();
        if (record.contains("labels")) {
            auto labels = record.at("labels").get<std::vector<std::uint8_t>>();
            if (labels.size() != config.router.zoo.size()) {
                throw ParameterError("labels must have one entry per model");
            }
            bit = labels.at(config.router.zoo.largest.index);
            trial.apply_exploration_feedback(t, std::move(labels));
        } else {
            bit = record.at("satisfied").get<bool>() ? 1 : 0;
            trial.apply_feedback(t, bit);
        }
        return trial;
    }

    void commit_feedback(Router trial, int bit) {
        router = std::move(trial);
        auto decision = std::move(awaiting.front());
        awaiting.pop_front();
        decision.realized_satisfaction = bit;
        decision.queue_after = router.state().queue.q;
        metrics.update(decision);
        ++feedback_count;
    }

    Json state_json() const {
        const auto& st = router.state();
        return Json{{"schema_version", kSchemaVersion},
                    {"tenant", config.id},
                    {"t", st.t},
                    {"queue", st.queue},
                    {"pending", st.pending.size()},
                    {"feedback_received", feedback_count},
                    {"event_log_offset", log.records()},
                    {"predictor", st.predictor}};
    }

    void publish() {
        auto snap = std::make_shared<const Json>(state_json());
        std::lock_guard lock(snapshot_mutex);
        snapshot = std::move(snap);
    }

    std::shared_ptr<const Json> read_snapshot() const {
        std::lock_guard lock(snapshot_mutex);
        return snapshot;
    }

    void replay() {
        for (const auto& payload : log.read_all()) {
            const auto record = Json::parse(payload);
            const auto type = record.at("type").get<std::string>();
            if (type == "route") {
                auto [trial, decision] = trial_route(record);
                commit_route(std::move(trial), std::move(decision));
            } else if (type == "feedback") {
                int bit = 0;
                auto trial = trial_feedback(record, bit);
                commit_feedback(std::move(trial), bit);
            } else {
                throw std::runtime_error("unknown event type in log: " + type);
            }
        }
        publish();
    }
};

Gateway::Gateway(ServiceConfig config) : config_(std::move(config)) {
    for (const auto& tc : config_.tenants) {
        const auto dir = fs::path(config_.data_dir) / "tenants" / tc.id;
        auto tenant = std::make_unique<Tenant>(tc, dir, config_.segment_max_bytes);
        tenant->replay();
        tenants_.emplace(tc.id, std::move(tenant));
    }
}

Gateway::~Gateway() {
    stop();
}

Gateway::Tenant* Gateway::find(const std::string& id) const {
    const auto it = tenants_.find(id);
    return it == tenants_.end() ? nullptr : it->second.get();
}

Gateway::Response Gateway::route(const Json& request) {
    if (!request.is_object() || !request.contains("tenant") || !request.at("tenant").is_string()) {
        return error(400, "request must be an object with a 'tenant' string");
    }
    Tenant* tenant = find(request.at("tenant").get<std::string>());
    if (!tenant) {
        return error(404, "unknown tenant");
    }
    if (tenant->config.mode == TenantConfig::Mode::trace) {
        return error(409, "tenant runs in trace mode; labels are required for every request");
    }
    std::lock_guard lock(tenant->write_mutex);
    try {
        Json record{{"type", "route"}, {"t", tenant->router.state().t}};
        record["token_count"] = request.value("token_count", std::uint64_t{0});
        if (request.contains("features")) {
            record["features"] = request.at("features");
        }
        if (request.contains("text")) {
            record["text"] = request.at("text");
        }
        auto [trial, decision] = tenant->trial_route(record);
        tenant->log.append(record.dump());
        Json body{{"schema_version", kSchemaVersion},
                  {"decision_id", decision.t},
                  {"model", decision.chosen.index},
                  {"model_name", tenant->config.router.zoo[decision.chosen].display_name},
                  {"explored", decision.explored},
                  {"s_hat", decision.s_hat}};
        tenant->commit_route(std::move(trial), std::move(decision));
        tenant->publish();
        return {200, std::move(body)};
    } catch (const ParameterError& e) {
        return error(400, e.what());
    } catch (const Json::exception& e) {
        return error(400, e.what());
    }
}

Gateway::Response Gateway::feedback(const Json& request) {
    if (!request.is_object() || !request.contains("tenant") || !request.at("tenant").is_string()) {
        return error(400, "request must be an object with a 'tenant' string");
    }
    Tenant* tenant = find(request.at("tenant").get<std::string>());
    if (!tenant) {
        return error(404, "unknown tenant");
    }
    std::lock_guard lock(tenant->write_mutex);
    try {
        Json record{{"type", "feedback"}, {"decision_id", request.at("decision_id").get<std::uint64_t>()}};
        if (request.contains("labels")) {
            record["labels"] = request.at("labels").get<std::vector<std::uint8_t>>();
        } else {
            record["satisfied"] = request.at("satisfied").get<bool>();
        }
        int bit = 0;
        auto trial = tenant->trial_feedback(record, bit);
        tenant->log.append(record.dump());
        tenant->commit_feedback(std::move(trial), bit);
        tenant->publish();
        const auto& q = tenant->router.state().queue;
        return {200, Json{{"schema_version", kSchemaVersion},
                          {"decision_id", record.at("decision_id")},
                          {"queue", q.q},
                          {"queue_updates", q.t}}};
    } catch (const RoutingError& e) {
        return error(status_for(e), e.what());
    } catch (const ParameterError& e) {
        return error(400, e.what());
    } catch (const Json::exception& e) {
        return error(400, e.what());
    }
}

Gateway::Response Gateway::metrics(const std::string& id) const {
    const Tenant* tenant = find(id);
    if (!tenant) {
        return error(404, "unknown tenant");
    }
    std::lock_guard lock(tenant->write_mutex);
    Json body{{"schema_version", kSchemaVersion},
              {"tenant", id},
              {"requests_routed", tenant->router.state().t - 1},
              {"feedback_received", tenant->feedback_count}};
    body["summary"] = tenant->metrics.empty() ? Json(nullptr) : Json(tenant->metrics.summary());
    return {200, std::move(body)};
}

Gateway::Response Gateway::state(const std::string& id) const {
    const Tenant* tenant = find(id);
    if (!tenant) {
        return error(404, "unknown tenant");
    }
    return {200, *tenant->read_snapshot()};
}

Gateway::Response Gateway::checkpoint(const Json& request) {
    std::vector<Tenant*> targets;
    if (request.is_object() && request.contains("tenant")) {
        Tenant* tenant = find(request.at("tenant").get<std::string>());
        if (!tenant) {
            return error(404, "unknown tenant");
        }
        targets.push_back(tenant);
    } else {
        for (auto& [id, tenant] : tenants_) {
            targets.push_back(tenant.get());
        }
    }
    Json written = Json::array();
    for (Tenant* tenant : targets) {
        std::lock_guard lock(tenant->write_mutex);
        const auto path = (tenant->log.dir() / "checkpoint.json").string();
        write_json_atomic(path, tenant->state_json());
        written.push_back(Json{{"tenant", tenant->config.id},
                               {"path", path},
                               {"event_log_offset", tenant->log.records()}});
    }
    return {200, Json{{"schema_version", kSchemaVersion}, {"checkpoints", written}}};
}

void Gateway::install_routes() {
    server_ = std::make_unique<httplib::Server>();
    auto post = [this](const char* path, Response (Gateway::*handler)(const Json&)) {
        server_->Post(path, [this, handler](const httplib::Request& req, httplib::Response& res) {
            Response r;
            Json body;
            try {
                body = req.body.empty() ? Json::object() : Json::parse(req.body);
                r = (this->*handler)(body);
            } catch (const Json::exception& e) {
                r = error(400, std::string("malformed JSON: ") + e.what());
            }
            res.status = r.status;
            res.set_content(r.body.dump(), "application/json");
        });
    };
    post("/v1/route", &Gateway::route);
    post("/v1/feedback", &Gateway::feedback);
    post("/v1/admin/checkpoint", &Gateway::checkpoint);

    auto get = [this](const char* path, Response (Gateway::*handler)(const std::string&) const) {
        server_->Get(path, [this, handler](const httplib::Request& req, httplib::Response& res) {
            const auto r = (this->*handler)(req.get_param_value("tenant"));
            res.status = r.status;
            res.set_content(r.body.dump(), "application/json");
        });
    };
    get("/v1/metrics", &Gateway::metrics);
    get("/v1/state", &Gateway::state);
}

int Gateway::start() {
    install_routes();
    int port = config_.port;
    if (port == 0) {
        port = server_->bind_to_any_port(config_.host);
    } else if (!server_->bind_to_port(config_.host, port)) {
        port = -1;
    }
    if (port < 0) {
        throw std::runtime_error("cannot bind " + config_.host + ":" + std::to_string(config_.port));
    }
    server_thread_ = std::thread([this] { server_->listen_after_bind(); });
    return port;
}

void Gateway::serve() {
    install_routes();
    if (!server_->listen(config_.host, config_.port)) {
        throw std::runtime_error("cannot listen on " + config_.host + ":" + std::to_string(config_.port));
    }
}

void Gateway::stop() {
    if (server_) {
        server_->stop();
    }
    if (server_thread_.joinable()) {
        server_thread_.join();
    }
}

}  // namespace messplus
