// messplus: simulate, replay, sweep, serve, report, calibrate-guessing.
//
// Exit codes: 0 ok, 1 usage or configuration error, 2 infeasible SLA.

#include <CLI11.hpp>

#include <pthread.h>
#include <signal.h>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "messplus/baselines.hpp"
#include "messplus/serialization.hpp"
#include "messplus/service.hpp"
#include "messplus/simulator.hpp"

namespace fs = std::filesystem;
using namespace messplus;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInfeasible = 2;

struct Overrides {
    std::string config;
    std::string out = "out";
    std::vector<std::uint64_t> seeds;
    std::optional<double> alpha;
    std::optional<double> v;
    std::optional<double> c;
    std::optional<std::uint64_t> horizon;
    unsigned jobs = 1;
    std::vector<std::string> policies;
};

void add_scenario_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "Scenario JSON (defaults to the canonical three-model scenario)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out, "Output directory")->capture_default_str();
    cmd->add_option("--seed", o.seeds, "Sampling seed; repeat for several runs");
    cmd->add_option("--alpha", o.alpha, "SLA satisfaction target");
    cmd->add_option("--v", o.v, "Cost/queue trade-off weight V");
    cmd->add_option("--c", o.c, "Exploration constant c");
    cmd->add_option("--t-horizon", o.horizon, "Number of requests T");
}

/// Canonical scenario, overlaid with the config file and then the flags.
/// A config may set "preset": "canonical" | "canonical_fixed_rate".
ScenarioConfig load_scenario(const Overrides& o) {
    ScenarioConfig cfg = canonical_scenario();
    if (!o.config.empty()) {
        const Json doc = read_json_file(o.config);
        const auto preset = doc.value("preset", std::string("canonical"));
        if (preset == "canonical_fixed_rate") {
            cfg = canonical_fixed_rate_scenario();
        } else if (preset != "canonical") {
            throw ParameterError("unknown preset: " + preset);
        }
        const auto rates = truth_rates(cfg.zoo);
        from_json(doc, cfg);
        // World parameters changed under the preset zoo: refit its truths.
        if (!doc.contains("zoo") && preset == "canonical") {
            const auto truths = calibrate_logistic_truths(cfg, rates);
            for (std::size_t i = 0; i < truths.size(); ++i) {
                cfg.zoo.models[i].truth = truths[i];
            }
        }
    }
    if (o.alpha) cfg.sla.alpha = *o.alpha;
    if (o.v) cfg.sla.v = *o.v;
    if (o.c) cfg.sla.c = *o.c;
    if (o.horizon) cfg.horizon = *o.horizon;
    cfg.sla.validate();
    cfg.validate();
    return cfg;
}

std::vector<std::uint64_t> seed_list(const Overrides& o, const ScenarioConfig& cfg) {
    return o.seeds.empty() ? std::vector<std::uint64_t>{cfg.seed} : o.seeds;
}

std::vector<PolicySpec> policy_list(const Overrides& o, const ZooConfig& zoo) {
    if (o.policies.empty()) {
        return {PolicySpec{}};
    }
    std::vector<PolicySpec> out;
    for (const auto& p : o.policies) {
        if (p == "all") {
            const auto all = default_policy_set(zoo);
            out.insert(out.end(), all.begin(), all.end());
        } else {
            out.push_back(parse_policy(p, zoo));
        }
    }
    return out;
}

std::string file_tag(std::string label) {
    for (auto& ch : label) {
        if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_') {
            ch = '_';
        }
    }
    return label;
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
}

/// Default grace for compliance: the first 10% of the horizon.
std::uint64_t default_grace(std::uint64_t horizon) {
    return horizon / 10;
}

Json run_record(const std::string& label, std::uint64_t seed, const MetricStream& stream, const SlaParams& sla,
                std::uint64_t grace) {
    return Json{{"policy", label},
                {"seed", seed},
                {"summary", stream.summary()},
                {"compliance", compliance_report(stream, sla, grace)}};
}

void emit_run(const fs::path& out, const std::string& label, std::uint64_t seed, const MetricStream& stream,
              const SlaParams& sla, std::uint64_t grace) {
    const auto tag = file_tag(label) + "-" + std::to_string(seed);
    std::ofstream csv(out / ("steps-" + tag + ".csv"), std::ios::binary);
    write_steps_csv(csv, stream);
    write_json_atomic((out / ("compliance-" + tag + ".json")).string(),
                      Json(compliance_report(stream, sla, grace)));
}

Json summary_doc(const ScenarioConfig& cfg, Json runs) {
    return Json{{"schema_version", kSchemaVersion},
                {"metadata", {{"generated_at", utc_now()}}},
                {"scenario", cfg},
                {"runs", std::move(runs)}};
}

int cmd_simulate(const Overrides& o, bool write_traces, std::optional<std::uint64_t> grace_flag) {
    const auto cfg = load_scenario(o);
    check_sla_feasible(cfg);
    const auto policies = policy_list(o, cfg.zoo);
    const fs::path out(o.out);
    fs::create_directories(out);
    const auto grace = grace_flag.value_or(default_grace(cfg.horizon));

    Json runs = Json::array();
    for (const auto seed : seed_list(o, cfg)) {
        auto scenario = cfg;
        scenario.seed = seed;
        const auto trace = generate_trace(scenario);
        if (write_traces) {
            save_trace((out / ("trace-" + std::to_string(seed) + ".jsonl")).string(), trace);
        }
        for (const auto& spec : policies) {
            const auto label = spec.label(cfg.zoo);
            const auto stream = run_experiment(trace, spec, scenario, cfg.sla, seed);
            emit_run(out, label, seed, stream, cfg.sla, grace);
            runs.push_back(run_record(label, seed, stream, cfg.sla, grace));
            const auto s = stream.summary();
            std::cout << label << " seed=" << seed << " cost_mj=" << s.mean_cost_j / kJoulesPerMegajoule
                      << " satisfaction=" << s.mean_satisfaction << " explorations=" << s.explorations << "\n";
        }
    }
    write_json_atomic((out / "summary.json").string(), summary_doc(cfg, std::move(runs)));
    return kExitOk;
}

int cmd_replay(const Overrides& o, const std::string& trace_path, std::optional<std::uint64_t> grace_flag) {
    const auto cfg = load_scenario(o);
    check_sla_feasible(cfg);
    const auto trace = load_trace(trace_path);
    const auto policies = policy_list(o, cfg.zoo);
    const fs::path out(o.out);
    fs::create_directories(out);
    const auto grace = grace_flag.value_or(default_grace(trace.events.size()));

    Json runs = Json::array();
    for (const auto seed : seed_list(o, cfg)) {
        for (const auto& spec : policies) {
            const auto label = spec.label(cfg.zoo);
            const auto stream = run_experiment(trace, spec, cfg, cfg.sla, seed);
            emit_run(out, label, seed, stream, cfg.sla, grace);
            runs.push_back(run_record(label, seed, stream, cfg.sla, grace));
        }
    }
    write_json_atomic((out / "summary.json").string(), summary_doc(cfg, std::move(runs)));
    return kExitOk;
}

int cmd_sweep(const Overrides& o, std::vector<double> alphas, std::vector<double> vs, std::vector<double> cs) {
    const auto cfg = load_scenario(o);
    if (alphas.empty()) alphas = {cfg.sla.alpha};
    if (vs.empty()) vs = {cfg.sla.v};
    if (cs.empty()) cs = {cfg.sla.c};
    for (const auto a : alphas) {
        auto probe = cfg;
        probe.sla.alpha = a;
        probe.sla.validate();
        check_sla_feasible(probe);
    }
    for (const auto v : vs) {
        SlaParams{cfg.sla.alpha, v, cfg.sla.c}.validate();
    }
    for (const auto c : cs) {
        SlaParams{cfg.sla.alpha, cfg.sla.v, c}.validate();
    }
    const auto report = sweep(cfg, alphas, vs, cs, seed_list(o, cfg), o.jobs);
    const fs::path out(o.out);
    fs::create_directories(out);
    std::ofstream csv(out / "sweep.csv", std::ios::binary);
    write_sweep_csv(csv, report);
    std::cout << "wrote " << report.cells.size() << " cells to " << (out / "sweep.csv").string() << "\n";
    return kExitOk;
}

struct ReportRow {
    std::string policy;
    std::size_t runs = 0;
    double cost_j = 0.0;
    double satisfaction = 0.0;
    std::vector<double> call_ratios;
    double explorations = 0.0;
};

int cmd_report(const Overrides& o, const std::vector<std::string>& inputs,
               const std::vector<std::string>& overhead_pairs) {
    if (inputs.empty() && overhead_pairs.empty()) {
        throw ParameterError("report needs at least one summary.json input or --overhead pair");
    }
    for (const auto& path : inputs) {
        if (!fs::exists(path)) {
            throw ParameterError("missing input: " + path);
        }
    }
    const fs::path out(o.out);
    fs::create_directories(out);

    if (!inputs.empty()) {
        std::vector<ReportRow> rows;
        std::vector<std::string> model_names;
        double alpha = 0.0;
        for (const auto& path : inputs) {
            const Json doc = read_json_file(path);
            const auto scenario = doc.at("scenario").get<ScenarioConfig>();
            alpha = scenario.sla.alpha;
            if (model_names.empty()) {
                for (const auto& m : scenario.zoo.models) {
                    model_names.push_back(m.display_name);
                }
            }
            for (const auto& run : doc.at("runs")) {
                const auto policy = run.at("policy").get<std::string>();
                auto it = std::find_if(rows.begin(), rows.end(), [&](const auto& r) { return r.policy == policy; });
                if (it == rows.end()) {
                    rows.push_back(ReportRow{policy, 0, 0.0, 0.0, std::vector<double>(model_names.size()), 0.0});
                    it = rows.end() - 1;
                }
                const auto& s = run.at("summary");
                it->runs += 1;
                it->cost_j += s.at("mean_cost_j").get<double>();
                it->satisfaction += s.at("mean_satisfaction").get<double>();
                it->explorations += s.at("explorations").get<double>();
                const auto ratios = s.at("call_ratios").get<std::vector<double>>();
                for (std::size_t m = 0; m < ratios.size() && m < it->call_ratios.size(); ++m) {
                    it->call_ratios[m] += ratios[m];
                }
            }
        }
        std::ostringstream csv;
        csv.precision(10);
        csv << "policy,runs,cost_mj,satisfaction";
        for (const auto& name : model_names) {
            csv << ",call_ratio_" << name;
        }
        csv << ",explorations,violates_sla\n";
        for (const auto& r : rows) {
            const double n = static_cast<double>(r.runs);
            const double sat = r.satisfaction / n;
            csv << r.policy << "," << r.runs << "," << r.cost_j / n / kJoulesPerMegajoule << "," << sat;
            for (const auto ratio : r.call_ratios) {
                csv << "," << ratio / n;
            }
            csv << "," << r.explorations / n << "," << (sat < alpha ? "true" : "false") << "\n";
        }
        write_text(out / "report.csv", csv.str());
        std::cout << csv.str();
    }

    if (!overhead_pairs.empty()) {
        std::vector<std::pair<double, double>> pairs;
        for (const auto& text : overhead_pairs) {
            const auto colon = text.find(':');
            if (colon == std::string::npos) {
                throw ParameterError("--overhead expects PREDICTOR_J:CALL_J, got " + text);
            }
            pairs.emplace_back(std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1)));
        }
        const auto summary = overhead_summary(pairs);
        write_json_atomic((out / "overhead.json").string(), Json(summary));
        std::cout << "overhead ratio_of_averages_pct=" << summary.ratio_of_averages_pct
                  << " average_of_ratios_pct=" << summary.average_of_ratios_pct << "\n";
    }
    return kExitOk;
}

int cmd_calibrate(const Overrides& o, std::vector<double> accuracies, bool write_file) {
    const auto cfg = load_scenario(o);
    if (accuracies.empty()) {
        accuracies = truth_rates(cfg.zoo);
    }
    const auto policy = calibrate_guessing(accuracies, cfg.sla.alpha);
    const Json doc{{"schema_version", kSchemaVersion},
                   {"alpha", cfg.sla.alpha},
                   {"accuracies", accuracies},
                   {"probs", policy.probs},
                   {"expected_accuracy", policy.expected_accuracy()}};
    std::cout << doc.dump(2) << "\n";
    if (write_file) {
        fs::create_directories(o.out);
        write_json_atomic((fs::path(o.out) / "guessing.json").string(), doc);
    }
    return kExitOk;
}

int cmd_serve(const std::string& config_path, std::optional<int> port) {
    auto cfg = load_service_config(config_path);
    apply_env_overrides(cfg);
    if (port) {
        cfg.port = *port;
    }
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    Gateway gateway(cfg);
    const int bound = gateway.start();
    std::cout << "listening on " << cfg.host << ":" << bound << " with " << cfg.tenants.size() << " tenant(s)"
              << std::endl;
    int sig = 0;
    sigwait(&signals, &sig);
    gateway.stop();
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cost-optimal SLA-constrained model routing: simulator, baselines, gateway"};
    app.require_subcommand(1);

    Overrides o;
    std::optional<std::uint64_t> grace;
    bool no_trace = false;
    std::string trace_path;
    std::vector<double> alphas, vs, cs, accuracies;
    std::vector<std::string> inputs, overhead;
    std::optional<int> port;

    auto* simulate = app.add_subcommand("simulate", "Generate traces and run policies on them");
    add_scenario_flags(simulate, o);
    simulate->add_option("--policy", o.policies,
                         "messplus | guessing | oracle | threshold[:x] | single:<name|index> | all");
    simulate->add_option("--grace", grace, "Requests excluded from the compliance check (default T/10)");
    simulate->add_flag("--no-trace", no_trace, "Do not write the generated traces");

    auto* replay = app.add_subcommand("replay", "Run policies over a recorded trace");
    add_scenario_flags(replay, o);
    replay->add_option("--trace", trace_path, "Trace JSONL file")->required()->check(CLI::ExistingFile);
    replay->add_option("--policy", o.policies, "Policy spec; repeatable");
    replay->add_option("--grace", grace, "Requests excluded from the compliance check");

    auto* sweep_cmd = app.add_subcommand("sweep", "Grid over alpha, V, c and seeds");
    add_scenario_flags(sweep_cmd, o);
    sweep_cmd->add_option("--alphas", alphas, "Alpha grid")->delimiter(',');
    sweep_cmd->add_option("--vs", vs, "V grid")->delimiter(',');
    sweep_cmd->add_option("--cs", cs, "c grid")->delimiter(',');
    sweep_cmd->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();

    auto* report = app.add_subcommand("report", "Per-policy comparison table from summary.json files");
    report->add_option("inputs", inputs, "summary.json files");
    report->add_option("--out", o.out, "Output directory")->capture_default_str();
    report->add_option("--overhead", overhead, "PREDICTOR_J:CALL_J pair per scenario; repeatable");

    auto* serve = app.add_subcommand("serve", "Run the HTTP gateway");
    std::string service_config;
    serve->add_option("--config", service_config, "Service config JSON")->required()->check(CLI::ExistingFile);
    serve->add_option("--port", port, "Listen port (MESSPLUS_PORT also overrides the file)");

    auto* calibrate = app.add_subcommand("calibrate-guessing", "Calibrate the educated-guessing mix");
    add_scenario_flags(calibrate, o);
    calibrate->add_option("--accuracies", accuracies, "Per-model accuracies (default: scenario truth rates)")
        ->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*simulate) return cmd_simulate(o, !no_trace, grace);
        if (*replay) return cmd_replay(o, trace_path, grace);
        if (*sweep_cmd) return cmd_sweep(o, alphas, vs, cs);
        if (*report) return cmd_report(o, inputs, overhead);
        if (*serve) return cmd_serve(service_config, port);
        if (*calibrate) return cmd_calibrate(o, accuracies, calibrate->get_option("--out")->count() > 0);
    } catch (const InfeasibleSlaError& e) {
        std::cerr << "infeasible SLA: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
