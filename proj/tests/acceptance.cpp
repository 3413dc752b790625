// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "messplus/baselines.hpp"
#include "messplus/kernels.hpp"
#include "messplus/router.hpp"
#include "messplus/service.hpp"
#include "messplus/simulator.hpp"

using namespace messplus;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
        }
        if (!detail.empty()) {
            detail += "; ";
        }
        detail += (ok ? "" : "!") + what;
    }
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

const std::uint64_t kSeeds[] = {42, 43, 44};

MetricStream run_policy(const ExperimentTrace& trace, const std::string& policy, const ScenarioConfig& cfg,
                        const SlaParams& sla, std::uint64_t seed) {
    return run_experiment(trace, parse_policy(policy, cfg.zoo), cfg, sla, seed);
}

// Rank-based AUC with midranks for ties.
double auc(std::vector<std::pair<double, int>> scored) {
    std::sort(scored.begin(), scored.end());
    double pos = 0, neg = 0, rank_sum = 0;
    for (std::size_t i = 0; i < scored.size();) {
        std::size_t j = i;
        while (j < scored.size() && scored[j].first == scored[i].first) {
            ++j;
        }
        const double mid = (static_cast<double>(i + j) + 1.0) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            if (scored[k].second) {
                rank_sum += mid;
                ++pos;
            } else {
                ++neg;
            }
        }
        i = j;
    }
    return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

Outcome canonical_runs() {
    Outcome o;
    for (auto seed : kSeeds) {
        const auto start = std::chrono::steady_clock::now();
        const auto cfg = canonical_scenario(seed);
        const auto trace = generate_trace(cfg);
        const auto mess = run_policy(trace, "messplus", cfg, cfg.sla, seed).summary();
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const auto guess = run_policy(trace, "guessing", cfg, cfg.sla, seed).summary();
        const auto largest = run_policy(trace, "single:L70B", cfg, cfg.sla, seed).summary();
        const double floor = cfg.sla.alpha - 1.0 / std::sqrt(static_cast<double>(cfg.horizon)) - 0.003;
        const auto s = std::to_string(seed);
        o.require(mess.mean_satisfaction >= floor, "seed " + s + " sat " + fmt("%.4f", mess.mean_satisfaction));
        o.require(mess.mean_cost_j < largest.mean_cost_j,
                  "cost " + fmt("%.3f", mess.mean_cost_j / 1e6) + " < largest " + fmt("%.2f", largest.mean_cost_j / 1e6));
        o.require(mess.mean_cost_j < guess.mean_cost_j, "< guessing " + fmt("%.3f", guess.mean_cost_j / 1e6));
        o.require(secs <= 60.0, fmt("%.2fs", secs));
    }
    return o;
}

Outcome queue_bounds() {
    Outcome o;
    for (auto seed : kSeeds) {
        const auto cfg = canonical_scenario(seed);
        const auto trace = generate_trace(cfg);
        const auto s = run_policy(trace, "messplus", cfg, cfg.sla, seed).summary();
        const auto tag = "seed " + std::to_string(seed) + " ";
        o.require(s.max_queue_minus_sqrt_t <= 10.0, tag + "max(Q-sqrt t) " + fmt("%.3f", s.max_queue_minus_sqrt_t));
        o.require(s.mean_queue <= 25.0, "mean Q " + fmt("%.3f", s.mean_queue));
        o.require(s.queue_over_t <= 0.02, "Q_T/T " + fmt("%.2e", s.queue_over_t));
    }
    return o;
}

Outcome v_tradeoff() {
    Outcome o;
    const double vs[] = {1e-4, 1e-3, 1e-2};
    for (auto seed : kSeeds) {
        const auto cfg = canonical_scenario(seed);
        const auto trace = generate_trace(cfg);
        std::vector<std::uint64_t> tts;
        std::vector<double> cost;
        for (double v : vs) {
            SlaParams sla = cfg.sla;
            sla.v = v;
            const auto run = run_policy(trace, "messplus", cfg, sla, seed);
            const auto t = time_to_sla(run, sla.alpha, 0.0);
            tts.push_back(t ? *t : cfg.horizon + 1);
            cost.push_back(run.summary().mean_cost_j);
        }
        std::ostringstream d;
        d << "seed " << seed << " tts " << tts[0] << "/" << tts[1] << "/" << tts[2] << " cost "
          << fmt("%.3f", cost[0] / 1e6) << "/" << fmt("%.3f", cost[1] / 1e6) << "/" << fmt("%.3f", cost[2] / 1e6);
        const bool tts_ok = tts[0] <= tts[1] && tts[1] <= tts[2];
        const bool cost_ok = cost[1] <= cost[0] * 1.02 && cost[2] <= cost[1] * 1.02;
        o.require(tts_ok && cost_ok, d.str());
    }
    return o;
}

Outcome exploration_count() {
    Outcome o;
    const std::uint64_t horizon = 10000;
    double mean = 0.0, var = 0.0;
    for (std::uint64_t t = 1; t <= horizon; ++t) {
        // The first request is always an exploration step.
        const double p = t == 1 ? 1.0 : std::min(1.0, 0.1 / std::pow(static_cast<double>(t), 0.25));
        mean += p;
        var += p * (1.0 - p);
    }
    const double band = 3.0 * std::sqrt(var);
    for (auto seed : kSeeds) {
        auto cfg = canonical_scenario(seed);
        cfg.horizon = horizon;
        const auto trace = generate_trace(cfg);
        const auto n = run_policy(trace, "messplus", cfg, cfg.sla, seed).summary().explorations;
        o.require(std::abs(static_cast<double>(n) - mean) <= band,
                  "seed " + std::to_string(seed) + " " + std::to_string(n) + " in " + fmt("%.1f", mean) + "+-" +
                      fmt("%.1f", band));
    }
    return o;
}

Outcome predictor_correctness() {
    Outcome o;
    std::mt19937_64 gen(123);
    std::normal_distribution<double> normal;
    std::uniform_int_distribution<int> small(1, 5);
    double worst = 0.0;
    for (int inst = 0; inst < 100; ++inst) {
        const std::size_t m = small(gen), d = small(gen);
        auto st = PredictorState::zeros(m, d, std::abs(normal(gen)) * 0.05);
        for (auto& v : st.z) v = normal(gen);
        std::vector<double> x(d);
        for (auto& v : x) v = normal(gen);
        std::vector<std::uint8_t> s(m);
        for (auto& b : s) b = static_cast<std::uint8_t>(gen() & 1u);
        const auto g = gradient(st, x, s);
        double diff = 0.0, norm = 0.0;
        for (std::size_t i = 0; i < st.z.size(); ++i) {
            const double h = 1e-5;
            auto plus = st, minus = st;
            plus.z[i] += h;
            minus.z[i] -= h;
            const double fd = (loss(plus, x, s) - loss(minus, x, s)) / (2.0 * h);
            diff += (fd - g[i]) * (fd - g[i]);
            norm += g[i] * g[i];
        }
        worst = std::max(worst, std::sqrt(diff) / std::max(std::sqrt(norm), 1e-300));
    }
    o.require(worst <= 1e-5, "max rel err " + fmt("%.2e", worst));

    auto zero = PredictorState::zeros(3, 4, 0.0);
    std::vector<double> x{0.7, -1.2, 3.0, 0.1};
    const auto p = predict(zero, x);
    o.require(std::all_of(p.begin(), p.end(), [](double v) { return v == 0.5; }), "z=0 gives 0.5");
    std::vector<std::uint8_t> labels{1, 0, 1};
    const double l = loss(zero, x, labels);
    o.require(std::abs(l - std::log(2.0)) <= 1e-12, "loss(0) - ln2 = " + fmt("%.1e", l - std::log(2.0)));
    return o;
}

Outcome predictor_learnability() {
    Outcome o;
    const auto base = canonical_scenario(42);
    auto held_cfg = base;
    held_cfg.seed = 90210;
    TraceGenerator held(held_cfg);
    std::vector<RequestEvent> holdout;
    for (int i = 0; i < 20000; ++i) {
        holdout.push_back(held.draw());
    }
    auto mean_loss = [&](const PredictorState& st) {
        double total = 0.0;
        for (const auto& ev : holdout) total += loss(st, ev.features, *ev.labels);
        return total / static_cast<double>(holdout.size());
    };

    const std::uint64_t energy_t = base.horizon;
    std::vector<double> energy;
    for (double c : {0.01, 0.1, 1.0}) {
        auto cfg = base;
        cfg.sla.c = c;
        Router router(router_config(cfg, cfg.sla, cfg.seed));
        TraceGenerator gen(cfg);
        EventLabels labels;
        PredictorState at50;
        double spent = 0.0, spent_at_t = 0.0;
        while (router.state().predictor.k < 2000 || router.state().t <= energy_t) {
            const auto d = router.step(gen.draw(), labels);
            if (d.explored) {
                spent += d.cost_incurred_j;
            }
            if (d.t == energy_t) {
                spent_at_t = spent;
            }
            if (d.explored && router.state().predictor.k == 50) {
                at50 = router.state().predictor;
            }
            if (d.explored && router.state().predictor.k == 2000) {
                const auto& st = router.state().predictor;
                const double l50 = mean_loss(at50), l2000 = mean_loss(st);
                std::vector<double> aucs;
                for (std::size_t m = 0; m < cfg.zoo.size(); ++m) {
                    std::vector<std::pair<double, int>> scored;
                    for (const auto& ev : holdout) {
                        scored.emplace_back(predict(st, ev.features)[m], (*ev.labels)[m]);
                    }
                    aucs.push_back(auc(std::move(scored)));
                }
                std::ostringstream d2;
                d2 << "c=" << c << " t=" << d.t << " loss " << fmt("%.4f", l50) << "->" << fmt("%.4f", l2000)
                   << " auc";
                for (double a : aucs) d2 << " " << fmt("%.3f", a);
                const bool ok = l2000 < l50 && *std::min_element(aucs.begin(), aucs.end()) >= 0.9;
                o.require(ok, d2.str());
            }
        }
        energy.push_back(spent_at_t);
    }
    std::ostringstream e;
    e << "explore MJ@T=" << energy_t << " " << fmt("%.1f", energy[0] / 1e6) << "<" << fmt("%.1f", energy[1] / 1e6)
      << "<" << fmt("%.1f", energy[2] / 1e6);
    o.require(energy[0] < energy[1] && energy[1] < energy[2], e.str());
    return o;
}

// Enumerates every score; ties to lower cost, then lower index.
std::size_t brute_force(double v, double q, double alpha, const std::vector<double>& costs,
                        const std::vector<double>& s_hat) {
    std::vector<double> score(costs.size());
    for (std::size_t m = 0; m < costs.size(); ++m) {
        score[m] = v * costs[m] + q * (alpha - s_hat[m]);
    }
    const double best = *std::min_element(score.begin(), score.end());
    std::vector<std::size_t> tied;
    for (std::size_t m = 0; m < costs.size(); ++m) {
        if (score[m] == best) tied.push_back(m);
    }
    return *std::min_element(tied.begin(), tied.end(), [&](std::size_t a, std::size_t b) {
        return costs[a] < costs[b] || (costs[a] == costs[b] && a < b);
    });
}

Outcome per_request_optimizer() {
    Outcome o;
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> msize(1, 8);
    int agree = 0, min_cost = 0;
    for (int i = 0; i < 10000; ++i) {
        const std::size_t m = msize(gen);
        std::vector<double> costs(m), s_hat(m);
        for (std::size_t k = 0; k < m; ++k) {
            // Occasional repeated costs and predictions exercise the tie rules.
            costs[k] = (gen() % 5 == 0 && k > 0) ? costs[k - 1] : std::exp(u(gen) * 6.0 - 3.0);
            s_hat[k] = (gen() % 5 == 0 && k > 0) ? s_hat[k - 1] : u(gen);
        }
        const double v = std::pow(10.0, u(gen) * 6.0 - 5.0);
        const double q = (gen() % 10 == 0) ? 0.0 : u(gen) * 50.0;
        const double alpha = 0.01 + 0.98 * u(gen);
        agree += solve_per_request(v, q, alpha, costs, s_hat).index == brute_force(v, q, alpha, costs, s_hat);
    }
    for (int i = 0; i < 1000; ++i) {
        const std::size_t m = msize(gen);
        std::vector<double> costs(m), s_hat(m);
        for (std::size_t k = 0; k < m; ++k) {
            costs[k] = std::exp(u(gen) * 6.0 - 3.0);
            s_hat[k] = u(gen);
        }
        const auto argmin = static_cast<std::size_t>(std::min_element(costs.begin(), costs.end()) - costs.begin());
        min_cost += solve_per_request(std::pow(10.0, u(gen) * 6.0 - 5.0), 0.0, u(gen), costs, s_hat).index == argmin;
    }
    o.require(agree == 10000, std::to_string(agree) + "/10000 match enumeration");
    o.require(min_cost == 1000, std::to_string(min_cost) + "/1000 Q=0 pick min cost");
    return o;
}

Outcome guessing_calibration() {
    Outcome o;
    std::mt19937_64 gen(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> msize(1, 8);
    int ok = 0, raised = 0;
    double worst = 1.0;
    for (int i = 0; i < 1000; ++i) {
        const std::size_t m = msize(gen);
        std::vector<double> acc(m);
        for (auto& a : acc) a = 0.01 + 0.98 * u(gen);
        const double top = *std::max_element(acc.begin(), acc.end());
        const double alpha = 0.005 + (top - 0.005) * u(gen);
        const auto g = calibrate_guessing(acc, alpha);
        double sum = 0.0, expected = 0.0;
        bool nonneg = true;
        for (std::size_t k = 0; k < m; ++k) {
            nonneg = nonneg && g.probs[k] >= 0.0;
            sum += g.probs[k];
            expected += g.probs[k] * acc[k];
        }
        worst = std::min(worst, expected - alpha);
        ok += nonneg && std::abs(sum - 1.0) <= 1e-9 && expected >= alpha - 1e-6;

        const double infeasible = top + (1.0 - top) * (0.01 + 0.98 * u(gen));
        try {
            calibrate_guessing(acc, infeasible);
        } catch (const InfeasibleSlaError&) {
            ++raised;
        }
    }
    o.require(ok == 1000, std::to_string(ok) + "/1000 on simplex, min slack " + fmt("%.2e", worst));
    o.require(raised == 1000, std::to_string(raised) + "/1000 infeasible raise");
    return o;
}

std::string decisions_csv(const ExperimentTrace& trace, const ScenarioConfig& cfg, std::uint64_t seed) {
    std::ostringstream out;
    write_steps_csv(out, run_policy(trace, "messplus", cfg, cfg.sla, seed));
    return out.str();
}

Outcome determinism_and_replay() {
    Outcome o;
    const auto cfg = canonical_scenario(42);
    const auto trace = generate_trace(cfg);
    const auto first = decisions_csv(trace, cfg, 42);
    o.require(first == decisions_csv(trace, cfg, 42), "repeat run CSV identical");

    const auto isa = kernels::active_isa();
    kernels::set_active_isa(kernels::Isa::scalar);
    const auto scalar = decisions_csv(trace, cfg, 42);
    kernels::set_active_isa(isa);
    o.require(first == scalar, std::string("scalar vs ") + std::string(kernels::isa_name(isa)) + " identical");

    const auto root = fs::temp_directory_path() / ("messplus-acceptance-" + std::to_string(std::random_device{}()));
    auto service = [&](const fs::path& dir) {
        Json tenant{{"id", "t0"},
                    {"sla", cfg.sla},
                    {"zoo", cfg.zoo},
                    {"features", {{"kind", "passthrough"}, {"dim", cfg.dim}}},
                    {"seed", 42}};
        return parse_service_config(Json{{"data_dir", dir.string()}, {"tenants", {tenant}}});
    };
    // Workload: routes from the canonical stream, feedback from its labels.
    std::vector<Json> ops;
    std::mt19937_64 gen(5);
    std::uint64_t next = 1;
    for (std::size_t i = 0; i < 400; ++i) {
        const auto& ev = trace.events[i];
        ops.push_back(Json{{"tenant", "t0"}, {"features", ev.features}, {"token_count", ev.token_count}});
        while (next <= i + 1 && gen() % 3 != 0) {
            ops.push_back(Json{{"tenant", "t0"}, {"decision_id", next}, {"satisfied", (gen() & 1u) == 1u}});
            ++next;
        }
    }
    auto apply = [](Gateway& g, const Json& op) {
        return (op.contains("decision_id") ? g.feedback(op) : g.route(op)).status == 200;
    };
    {
        Gateway g(service(root / "golden"));
        bool all_ok = true;
        for (const auto& op : ops) all_ok = apply(g, op) && all_ok;
        o.require(all_ok, std::to_string(ops.size()) + " service ops accepted");
    }
    const auto seg = root / "golden" / "tenants" / "t0" / "events-000001.log";
    const auto size = fs::file_size(seg);
    std::uniform_int_distribution<std::uintmax_t> offset(1, size - 1);
    for (int crash = 0; crash < 3; ++crash) {
        const auto cut = offset(gen);
        const auto dir = root / ("crash" + std::to_string(crash));
        fs::copy(root / "golden", dir, fs::copy_options::recursive);
        fs::resize_file(dir / "tenants" / "t0" / "events-000001.log", cut);
        Gateway recovered(service(dir));
        const auto state = recovered.state("t0").body;
        const auto survived = state["event_log_offset"].get<std::size_t>();
        Gateway reference(service(root / ("ref" + std::to_string(crash))));
        for (std::size_t i = 0; i < survived; ++i) apply(reference, ops[i]);
        const auto ref = reference.state("t0").body;
        const bool same = ref["queue"] == state["queue"] && ref["predictor"] == state["predictor"] &&
                          ref["t"] == state["t"];
        o.require(same, "crash@" + std::to_string(cut) + "B replays " + std::to_string(survived) + " events");
    }
    std::error_code ec;
    fs::remove_all(root, ec);
    return o;
}

Outcome overhead() {
    Outcome o;
    MetricStream stream(1, 0.5);
    RoutingDecision d;
    d.t = 1;
    d.cost_incurred_j = 414.69;
    d.realized_satisfaction = 1;
    stream.update(d);
    const auto single = overhead_report(stream, 16.43);
    o.require(std::abs(single.overhead_pct - 3.96) <= 0.01, "ratio of averages " + fmt("%.4f%%", single.overhead_pct));

    const std::vector<std::pair<double, double>> per_benchmark{{5.75, 589.97},  {5.69, 516.07}, {16.80, 236.17},
                                                               {41.13, 833.21}, {15.38, 273.44}, {15.12, 263.64},
                                                               {26.67, 304.45}, {4.89, 300.56}};
    const auto summary = overhead_summary(per_benchmark);
    double mean_ratio = 0.0;
    for (const auto& [p, c] : per_benchmark) mean_ratio += 100.0 * p / c;
    mean_ratio /= static_cast<double>(per_benchmark.size());
    o.require(summary.per_scenario_pct.size() == per_benchmark.size() &&
                  std::abs(summary.average_of_ratios_pct - mean_ratio) <= 1e-12,
              "per-scenario average of ratios " + fmt("%.3f%%", summary.average_of_ratios_pct));
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"canonical scenario: SLA met, cheaper than largest and guessing", canonical_runs},
        {"queue bounds", queue_bounds},
        {"V trade-off", v_tradeoff},
        {"exploration schedule", exploration_count},
        {"predictor correctness", predictor_correctness},
        {"predictor learnability", predictor_learnability},
        {"per-request optimizer", per_request_optimizer},
        {"educated-guessing calibration", guessing_calibration},
        {"determinism and persistence", determinism_and_replay},
        {"overhead report", overhead},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failures += !o.pass;
        std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
