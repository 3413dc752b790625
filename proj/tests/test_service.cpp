#include <doctest.h>

#include <httplib.h>

#include <filesystem>

#include "messplus/service.hpp"
#include "messplus/rng.hpp"
#include "temp_dir.hpp"

using namespace messplus;
namespace fs = std::filesystem;

namespace {

Json tenant_json(const std::string& id, const std::string& mode = "live") {
    return Json{{"id", id},
                {"mode", mode},
                {"sla", {{"alpha", 0.66}, {"v", 0.001}, {"c", 0.1}}},
                {"zoo",
                 {{"models",
                   {{{"name", "L1B"}, {"base_cost_j", 0.12e6}},
                    {{"name", "L8B"}, {"base_cost_j", 0.54e6}},
                    {{"name", "L70B"}, {"base_cost_j", 2.91e6}}}}}},
                {"features", {{"kind", "passthrough"}, {"dim", 2}}},
                {"seed", 42}};
}

ServiceConfig service_config(const fs::path& dir) {
    Json doc{{"port", 0},
             {"data_dir", dir.string()},
             {"tenants", {tenant_json("gold"), tenant_json("bronze"), tenant_json("batch", "trace")}}};
    return parse_service_config(doc);
}

Json route_req(double a, double b) {
    return Json{{"tenant", "gold"}, {"features", {a, b}}, {"token_count", 10}};
}

Json feedback_req(std::uint64_t id, bool sat) {
    return Json{{"tenant", "gold"}, {"decision_id", id}, {"satisfied", sat}};
}

/// A mixed route/feedback workload; every request is valid in order.
std::vector<std::pair<bool, Json>> workload(std::size_t routes) {
    SplitMix64 rng(17);
    std::vector<std::pair<bool, Json>> ops;
    std::uint64_t next_feedback = 1;
    for (std::uint64_t t = 1; t <= routes; ++t) {
        ops.emplace_back(true, route_req(rng.normal(), rng.normal()));
        while (next_feedback <= t && rng.uniform() < 0.7) {
            ops.emplace_back(false, feedback_req(next_feedback++, rng.bernoulli(0.6)));
        }
    }
    return ops;
}

void apply(Gateway& g, const std::pair<bool, Json>& op) {
    const auto r = op.first ? g.route(op.second) : g.feedback(op.second);
    REQUIRE(r.status == 200);
}

}  // namespace

TEST_CASE("fresh tenant snapshot") {
    TempDir dir;
    Gateway g(service_config(dir.path()));
    const auto s = g.state("gold");
    CHECK(s.status == 200);
    CHECK(s.body["t"] == 1);
    CHECK(s.body["queue"]["q"] == 0.0);
    CHECK(s.body["schema_version"] == kSchemaVersion);
    CHECK(g.state("nobody").status == 404);
    CHECK(g.metrics("nobody").status == 404);
}

TEST_CASE("route and feedback contract") {
    TempDir dir;
    Gateway g(service_config(dir.path()));

    const auto r = g.route(route_req(0.1, 0.2));
    REQUIRE(r.status == 200);
    CHECK(r.body["decision_id"] == 1);
    CHECK(r.body["model"].get<int>() >= 0);
    CHECK(r.body["model"].get<int>() < 3);
    CHECK(r.body["explored"] == false);

    CHECK(g.route(Json{{"tenant", "zzz"}, {"features", {0.1, 0.2}}}).status == 404);
    CHECK(g.route(Json{{"tenant", "gold"}, {"features", {0.1}}}).status == 400);
    CHECK(g.route(Json{{"tenant", "gold"}, {"features", "oops"}}).status == 400);
    CHECK(g.route(Json{{"features", {0.1, 0.2}}}).status == 400);
    CHECK(g.route(Json{{"tenant", "batch"}, {"features", {0.1, 0.2}}}).status == 409);

    const auto f = g.feedback(feedback_req(1, false));
    REQUIRE(f.status == 200);
    CHECK(f.body["queue"].get<double>() == doctest::Approx(0.66));
    CHECK(g.feedback(feedback_req(1, true)).status == 409);
    CHECK(g.feedback(feedback_req(5, true)).status == 404);

    g.route(route_req(0.0, 0.0));
    g.route(route_req(0.0, 0.0));
    CHECK(g.feedback(feedback_req(3, true)).status == 409);
    CHECK(g.feedback(feedback_req(2, true)).status == 200);

    const auto m = g.metrics("gold");
    CHECK(m.status == 200);
    CHECK(m.body["feedback_received"] == 2);
    CHECK(m.body["summary"]["requests"] == 2);
    // Other tenants are untouched.
    CHECK(g.state("bronze").body["t"] == 1);
}

TEST_CASE("snapshot counters track the log") {
    TempDir dir;
    Gateway g(service_config(dir.path()));
    const auto ops = workload(40);
    for (const auto& op : ops) {
        apply(g, op);
    }
    const auto s = g.state("gold").body;
    CHECK(s["event_log_offset"] == ops.size());
    CHECK(s["t"] == 41);
}

TEST_CASE("restart replays to the same state") {
    TempDir dir;
    Json before;
    {
        Gateway g(service_config(dir.path()));
        for (const auto& op : workload(60)) {
            apply(g, op);
        }
        before = g.state("gold").body;
    }
    Gateway again(service_config(dir.path()));
    CHECK(again.state("gold").body == before);
}

TEST_CASE("crash at random offsets replays to the surviving prefix") {
    TempDir dir;
    const auto ops = workload(80);
    const auto golden = dir.path() / "golden";
    {
        auto cfg = service_config(golden);
        Gateway g(cfg);
        for (const auto& op : ops) {
            apply(g, op);
        }
    }
    const auto seg = golden / "tenants" / "gold" / "events-000001.log";
    const auto size = fs::file_size(seg);
    SplitMix64 rng(2024);
    for (int crash = 0; crash < 3; ++crash) {
        const auto cut = rng.uniform_int(1, size - 1);
        CAPTURE(cut);
        const auto crashed = dir.path() / ("crash" + std::to_string(crash));
        fs::copy(golden, crashed, fs::copy_options::recursive);
        fs::resize_file(crashed / "tenants" / "gold" / "events-000001.log", cut);

        Gateway recovered(service_config(crashed));
        const auto state = recovered.state("gold").body;
        const std::size_t survived = state["event_log_offset"].get<std::size_t>();
        CHECK(survived < ops.size());

        const auto fresh_dir = dir.path() / ("fresh" + std::to_string(crash));
        Gateway reference(service_config(fresh_dir));
        for (std::size_t i = 0; i < survived; ++i) {
            apply(reference, ops[i]);
        }
        CHECK(reference.state("gold").body == state);

        // The recovered tenant keeps accepting traffic.
        CHECK(recovered.route(route_req(0.3, 0.3)).status == 200);
    }
}

TEST_CASE("checkpoint is written atomically") {
    TempDir dir;
    Gateway g(service_config(dir.path()));
    g.route(route_req(0.1, 0.1));
    const auto r = g.checkpoint(Json{{"tenant", "gold"}});
    REQUIRE(r.status == 200);
    const auto path = r.body["checkpoints"][0]["path"].get<std::string>();
    CHECK(fs::exists(path));
    CHECK_FALSE(fs::exists(path + ".tmp"));
    const auto doc = read_json_file(path);
    CHECK(doc["t"] == 2);
    CHECK(doc["predictor"]["M"] == 3);
    CHECK(g.checkpoint(Json{{"tenant", "zzz"}}).status == 404);
}

TEST_CASE("HTTP round trip") {
    TempDir dir;
    Gateway g(service_config(dir.path()));
    const int port = g.start();
    REQUIRE(port > 0);
    httplib::Client client("127.0.0.1", port);

    auto res = client.Post("/v1/route", route_req(0.2, 0.4).dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    const auto body = Json::parse(res->body);
    CHECK(body["decision_id"] == 1);

    res = client.Post("/v1/route", "{not json", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);

    res = client.Post("/v1/feedback", feedback_req(1, false).dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(Json::parse(res->body)["queue"].get<double>() == doctest::Approx(0.66));

    res = client.Get("/v1/state?tenant=gold");
    REQUIRE(res);
    CHECK(Json::parse(res->body)["t"] == 2);
    res = client.Get("/v1/metrics?tenant=missing");
    REQUIRE(res);
    CHECK(res->status == 404);
    g.stop();
}

TEST_CASE("config validation") {
    Json doc{{"tenants", {tenant_json("a"), tenant_json("a")}}};
    CHECK_THROWS_AS(parse_service_config(doc), ParameterError);
    Json bad_id{{"tenants", {tenant_json("../escape")}}};
    CHECK_THROWS_AS(parse_service_config(bad_id), ParameterError);
}
