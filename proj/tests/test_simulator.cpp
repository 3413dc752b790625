#include <doctest.h>

#include <sstream>

#include "messplus/simulator.hpp"

using namespace messplus;

TEST_CASE("fixed-rate labels follow the configured rates") {
    auto cfg = canonical_fixed_rate_scenario(42);
    cfg.horizon = 10000;
    const auto trace = generate_trace(cfg);
    const double rates[] = {0.5828, 0.6820, 0.7370};
    for (std::size_t m = 0; m < 3; ++m) {
        double hits = 0;
        for (const auto& ev : trace.events) {
            hits += (*ev.labels)[m];
        }
        CHECK(std::abs(hits / 10000.0 - rates[m]) <= 0.02);
    }
}

TEST_CASE("calibrated logistic truths hit their marginal rates") {
    const auto cfg = canonical_scenario();
    const auto rates = truth_rates(cfg.zoo);
    CHECK(rates[0] == doctest::Approx(0.5828).epsilon(1e-6));
    auto big = cfg;
    big.horizon = 40000;
    big.seed = 1234;
    const auto trace = generate_trace(big);
    for (std::size_t m = 0; m < 3; ++m) {
        double hits = 0;
        for (const auto& ev : trace.events) {
            hits += (*ev.labels)[m];
        }
        CHECK(std::abs(hits / 40000.0 - rates[m]) <= 0.015);
    }
}

TEST_CASE("generation is deterministic and T = 1 gives one record") {
    auto cfg = canonical_scenario(7);
    cfg.horizon = 500;
    const auto a = generate_trace(cfg);
    const auto b = generate_trace(cfg);
    REQUIRE(a.events.size() == 500);
    for (std::size_t i = 0; i < a.events.size(); ++i) {
        CHECK(a.events[i].features == b.events[i].features);
        CHECK(*a.events[i].labels == *b.events[i].labels);
    }
    cfg.horizon = 1;
    const auto one = generate_trace(cfg);
    CHECK(one.events.size() == 1);
    CHECK(one.events[0].t == 1);
}

TEST_CASE("trace JSONL round-trip") {
    auto cfg = canonical_scenario();
    cfg.horizon = 50;
    const auto trace = generate_trace(cfg);
    std::stringstream ss;
    write_trace(ss, trace);
    const auto back = read_trace(ss);
    CHECK(back.header.zoo_hash == trace.header.zoo_hash);
    REQUIRE(back.events.size() == trace.events.size());
    for (std::size_t i = 0; i < back.events.size(); ++i) {
        CHECK(back.events[i].features == trace.events[i].features);
        CHECK(*back.events[i].labels == *trace.events[i].labels);
        CHECK(*back.events[i].costs_j == *trace.events[i].costs_j);
    }
}

TEST_CASE("trace with a gap is rejected") {
    auto cfg = canonical_scenario();
    cfg.horizon = 5;
    auto trace = generate_trace(cfg);
    trace.events[3].t = 9;
    CHECK_THROWS_AS(trace.validate(), ParameterError);
}

TEST_CASE("zoo mismatch between trace and config is rejected") {
    auto cfg = canonical_scenario();
    cfg.horizon = 5;
    const auto trace = generate_trace(cfg);
    auto other = cfg;
    other.zoo.models[0].base_cost_j *= 2;
    CHECK_THROWS_AS(run_experiment(trace, PolicySpec{}, other, other.sla, 42), ParameterError);
}

TEST_CASE("always-largest on the canonical zoo") {
    auto cfg = canonical_scenario();
    cfg.horizon = 20000;
    const auto trace = generate_trace(cfg);
    const auto s = run_experiment(trace, parse_policy("single:L70B", cfg.zoo), cfg, cfg.sla, 42).summary();
    CHECK(s.mean_cost_j == doctest::Approx(2.91e6));
    CHECK(std::abs(s.mean_satisfaction - 0.737) <= 0.015);
}

TEST_CASE("oracle is never more expensive than an SLA-compliant policy") {
    auto cfg = canonical_scenario();
    cfg.horizon = 3000;
    const auto trace = generate_trace(cfg);
    const double oracle =
        run_experiment(trace, parse_policy("oracle", cfg.zoo), cfg, cfg.sla, 42).summary().mean_cost_j;
    for (const auto& spec : default_policy_set(cfg.zoo)) {
        const auto s = run_experiment(trace, spec, cfg, cfg.sla, 42).summary();
        if (s.mean_satisfaction >= cfg.sla.alpha) {
            CHECK(oracle <= s.mean_cost_j);
        }
    }
}

TEST_CASE("with V huge and an empty queue the router takes the cheapest model") {
    auto cfg = canonical_scenario();
    cfg.horizon = 3000;
    const auto trace = generate_trace(cfg);
    SlaParams sla{0.66, 1e6, 1e-9};
    auto policy = make_policy(PolicySpec{}, cfg, sla, 42);
    TraceStream stream(trace);
    const auto run = run_experiment(stream, *policy, 3, sla);
    double q = 0.0;
    for (const auto& step : run.steps()) {
        if (!step.explored && q == 0.0) {
            CHECK(step.chosen == 0);
        }
        q = step.queue;
    }
}

TEST_CASE("policy parsing") {
    const auto zoo = canonical_scenario().zoo;
    CHECK(parse_policy("messplus", zoo).kind == PolicyKind::messplus);
    CHECK(parse_policy("single:1", zoo).model == ModelId{1});
    CHECK(parse_policy("single:L70B", zoo).model == ModelId{2});
    CHECK(parse_policy("threshold:0.3", zoo).threshold == 0.3);
    CHECK_THROWS_AS(parse_policy("single:L2B", zoo), ParameterError);
    CHECK_THROWS_AS(parse_policy("nope", zoo), ParameterError);
    CHECK(default_policy_set(zoo).size() == 6);
}

TEST_CASE("infeasible alpha is detected") {
    auto cfg = canonical_scenario();
    cfg.sla.alpha = 0.8;
    CHECK_THROWS_AS(check_sla_feasible(cfg), InfeasibleSlaError);
    cfg.sla.alpha = 0.7;
    CHECK_NOTHROW(check_sla_feasible(cfg));
}

TEST_CASE("sweep output is independent of the worker count") {
    auto cfg = canonical_scenario();
    cfg.horizon = 1500;
    const auto one = sweep(cfg, {0.6, 0.66}, {0.01, 0.001}, {0.1}, {42, 43}, 1);
    const auto four = sweep(cfg, {0.6, 0.66}, {0.01, 0.001}, {0.1}, {42, 43}, 4);
    std::ostringstream a, b;
    write_sweep_csv(a, one);
    write_sweep_csv(b, four);
    CHECK(a.str() == b.str());
    CHECK(one.cells.size() == 8);
}

TEST_CASE("exploration share grows with c") {
    auto cfg = canonical_scenario();
    cfg.horizon = 5000;
    const auto report = sweep(cfg, {0.66}, {0.001}, {0.01, 0.1, 1.0}, {42}, 1);
    REQUIRE(report.cells.size() == 3);
    CHECK(report.cells[0].exploration_share < report.cells[1].exploration_share);
    CHECK(report.cells[1].exploration_share < report.cells[2].exploration_share);
}
