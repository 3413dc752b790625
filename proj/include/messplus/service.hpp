#pragma once

// HTTP+JSON gateway around per-tenant routers running in deferred-feedback
// mode. Every state change is appended to the tenant's event log before the
// response is sent; restarting replays the log to the same (Q, z, t).
//
//   POST /v1/route            {tenant, text | features, token_count}
//   POST /v1/feedback         {tenant, decision_id, satisfied | labels}
//   GET  /v1/metrics?tenant=  run summary of the fed-back decisions
//   GET  /v1/state?tenant=    queue, predictor and counters
//   POST /v1/admin/checkpoint {tenant?}   predictor + queue, atomically

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "messplus/event_log.hpp"
#include "messplus/metrics.hpp"
#include "messplus/router.hpp"
#include "messplus/serialization.hpp"

namespace httplib {
class Server;
}

namespace messplus {

struct TenantConfig {
    enum class Mode { live, trace };

    std::string id;
    Mode mode = Mode::live;
    RouterConfig router;
};

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string data_dir = "messplus-data";
    std::size_t segment_max_bytes = 4u << 20;
    std::vector<TenantConfig> tenants;
};

/// Parses the service config document. Keys: port, host, data_dir,
/// segment_max_bytes, tenants[] with id, mode, sla, zoo, features, mu,
/// schedule, seed, shadow_exploration.
ServiceConfig parse_service_config(const Json& doc);
ServiceConfig load_service_config(const std::string& path);

/// MESSPLUS_PORT and MESSPLUS_DATA_DIR take precedence over the file.
void apply_env_overrides(ServiceConfig& config);

class Gateway {
public:
    struct Response {
        int status = 200;
        Json body;
    };

    /// Opens (or creates) every tenant's event log and replays it.
    explicit Gateway(ServiceConfig config);
    ~Gateway();

    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    Response route(const Json& request);
    Response feedback(const Json& request);
    Response metrics(const std::string& tenant) const;
    Response state(const std::string& tenant) const;
    Response checkpoint(const Json& request);

    /// Binds (port 0 picks a free port) and serves on a background thread.
    /// Returns the bound port.
    int start();
    /// Blocks serving on the configured host/port.
    void serve();
    void stop();

    const ServiceConfig& config() const noexcept { return config_; }

private:
    struct Tenant;

    Tenant* find(const std::string& id) const;
    void install_routes();

    ServiceConfig config_;
    std::map<std::string, std::unique_ptr<Tenant>> tenants_;
    std::unique_ptr<httplib::Server> server_;
    std::thread server_thread_;
};

}  // namespace messplus
