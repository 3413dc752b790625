#include "messplus/simulator.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <thread>

#include "messplus/baselines.hpp"
#include "messplus/kernels.hpp"
#include "messplus/serialization.hpp"

namespace messplus {

namespace {

constexpr std::uint64_t kWorldStream = 0x5bd1e9955bd1e995ULL;

std::vector<double> draw_point(SplitMix64& rng, const std::vector<std::vector<double>>& centers, double sigma) {
    const auto& center = centers[rng.uniform_int(0, centers.size() - 1)];
    std::vector<double> x(center.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = center[i] + sigma * rng.normal();
    }
    return x;
}

void normalize(std::vector<double>& v) {
    const double norm = std::sqrt(kernels::dot(v, v));
    if (norm > 0.0) {
        for (double& e : v) {
            e /= norm;
        }
    }
}

double mean_probability(const std::vector<std::vector<double>>& sample, const std::vector<double>& w, double bias) {
    double sum = 0.0;
    for (const auto& x : sample) {
        sum += sigmoid(kernels::dot(w, x) + bias);
    }
    return sum / static_cast<double>(sample.size());
}

ZooConfig canonical_zoo() {
    ZooConfig zoo;
    const char* names[] = {"L1B", "L8B", "L70B"};
    const double costs_mj[] = {0.12, 0.54, 2.91};
    for (std::size_t i = 0; i < 3; ++i) {
        ModelProfile p;
        p.id = ModelId{i};
        p.display_name = names[i];
        p.base_cost_j = costs_mj[i] * kJoulesPerMegajoule;
        zoo.models.push_back(p);
    }
    zoo.largest = ModelId{2};
    return zoo;
}

const std::vector<double> kCanonicalRates = {0.5828, 0.6820, 0.7370};

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void ScenarioConfig::validate() const {
    zoo.validate();
    sla.validate();
    if (horizon < 1) {
        throw ParameterError("horizon T must be >= 1");
    }
    if (dim < 1) {
        throw ParameterError("feature dimension d must be >= 1");
    }
    if (cluster_count < 1) {
        throw ParameterError("cluster_count must be >= 1");
    }
    if (!(label_noise >= 0.0 && label_noise < 0.5)) {
        throw ParameterError("label_noise must lie in [0, 0.5)");
    }
    if (token_min > token_max) {
        throw ParameterError("token_min must not exceed token_max");
    }
    if (!(mu >= 0.0)) {
        throw ParameterError("mu must be >= 0");
    }
    schedule.validate();
    for (const auto& m : zoo.models) {
        if (!m.truth) {
            throw ParameterError("model '" + m.display_name + "' has no ground truth for simulation");
        }
        m.truth->validate(dim);
    }
}

std::vector<std::vector<double>> cluster_centers(const ScenarioConfig& config) {
    SplitMix64 rng(config.world_seed ^ kWorldStream);
    std::vector<std::vector<double>> centers(config.cluster_count, std::vector<double>(config.dim));
    for (auto& c : centers) {
        for (double& v : c) {
            v = config.center_scale * rng.normal();
        }
    }
    return centers;
}

std::vector<GroundTruthModel> calibrate_logistic_truths(const ScenarioConfig& config, const std::vector<double>& rates,
                                                        double sharpness, bool monotone) {
    const auto centers = cluster_centers(config);
    SplitMix64 world(config.world_seed * 0x9e3779b97f4a7c15ULL + 1);
    std::vector<double> direction(config.dim);
    for (double& v : direction) {
        v = world.normal();
    }
    normalize(direction);

    SplitMix64 sample_rng = world.split();
    std::vector<std::vector<double>> sample(40000);
    for (auto& x : sample) {
        x = draw_point(sample_rng, centers, config.cluster_sigma);
    }

    std::vector<GroundTruthModel> truths;
    for (double rate : rates) {
        if (!(rate > 0.0 && rate < 1.0)) {
            throw ParameterError("logistic truth rates must lie in (0, 1)");
        }
        std::vector<double> w = direction;
        if (!monotone) {
            for (double& v : w) {
                v += 0.35 * world.normal() / std::sqrt(static_cast<double>(config.dim));
            }
            normalize(w);
        }
        for (double& v : w) {
            v *= sharpness;
        }
        double lo = -60.0;
        double hi = 60.0;
        for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (lo + hi);
            (mean_probability(sample, w, mid) < rate ? lo : hi) = mid;
        }
        GroundTruthModel truth;
        truth.kind = GroundTruthModel::Kind::logistic;
        truth.rate = rate;
        truth.weights = std::move(w);
        truth.weights.push_back(0.5 * (lo + hi));
        truths.push_back(std::move(truth));
    }
    return truths;
}

ScenarioConfig canonical_scenario(std::uint64_t seed) {
    ScenarioConfig config;
    config.zoo = canonical_zoo();
    config.sla = SlaParams{0.66, 0.001, 0.1};
    config.horizon = 20000;
    config.seed = seed;
    const auto truths = calibrate_logistic_truths(config, kCanonicalRates);
    for (std::size_t i = 0; i < truths.size(); ++i) {
        config.zoo.models[i].truth = truths[i];
    }
    return config;
}

ScenarioConfig canonical_fixed_rate_scenario(std::uint64_t seed) {
    ScenarioConfig config;
    config.zoo = canonical_zoo();
    config.sla = SlaParams{0.66, 0.001, 0.1};
    config.horizon = 20000;
    config.seed = seed;
    for (std::size_t i = 0; i < kCanonicalRates.size(); ++i) {
        GroundTruthModel truth;
        truth.kind = GroundTruthModel::Kind::fixed_rate;
        truth.rate = kCanonicalRates[i];
        config.zoo.models[i].truth = truth;
    }
    return config;
}

std::vector<double> truth_rates(const ZooConfig& zoo) {
    std::vector<double> rates;
    for (const auto& m : zoo.models) {
        if (!m.truth) {
            throw ParameterError("model '" + m.display_name + "' has no ground truth rate");
        }
        rates.push_back(m.truth->rate);
    }
    return rates;
}

void check_sla_feasible(const ScenarioConfig& config) {
    const auto rates = truth_rates(config.zoo);
    double best = 0.0;
    for (double r : rates) {
        best = std::max(best, r);
    }
    if (config.sla.alpha > best) {
        throw InfeasibleSlaError("alpha = " + format_double(config.sla.alpha) +
                                 " exceeds the best model satisfaction rate " + format_double(best));
    }
}

TraceGenerator::TraceGenerator(ScenarioConfig config, std::optional<std::uint64_t> limit)
    : config_(std::move(config)), feature_rng_(0), label_rng_(0), token_rng_(0) {
    config_.validate();
    centers_ = cluster_centers(config_);
    SplitMix64 master(config_.seed);
    feature_rng_ = master.split();
    label_rng_ = master.split();
    token_rng_ = master.split();
    limit_ = limit.value_or(config_.horizon);
}

std::vector<double> TraceGenerator::draw_features() {
    return draw_point(feature_rng_, centers_, config_.cluster_sigma);
}

RequestEvent TraceGenerator::draw() {
    RequestEvent ev;
    ev.t = ++t_;
    ev.features = draw_features();
    ev.token_count = token_rng_.uniform_int(config_.token_min, config_.token_max);
    const auto& models = config_.zoo.models;
    std::vector<std::uint8_t> labels(models.size());
    std::vector<double> costs(models.size());
    for (std::size_t m = 0; m < models.size(); ++m) {
        const double p = models[m].truth->probability(ev.features);
        bool s = label_rng_.uniform() < p;
        // Always consume the noise draw so streams stay aligned across noise levels.
        if (label_rng_.uniform() < config_.label_noise) {
            s = !s;
        }
        labels[m] = s ? 1 : 0;
        costs[m] = request_cost(models[m], ev);
    }
    ev.labels = std::move(labels);
    ev.costs_j = std::move(costs);
    return ev;
}

std::optional<RequestEvent> TraceGenerator::next() {
    if (t_ >= limit_) {
        return std::nullopt;
    }
    return draw();
}

void ExperimentTrace::validate() const {
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& ev = events[i];
        if (ev.t != i + 1) {
            throw ParameterError("trace records must be ordered by t without gaps (at record " +
                                 std::to_string(i + 1) + ")");
        }
        if (ev.features.size() != header.dim) {
            throw ParameterError("trace record " + std::to_string(ev.t) + " has the wrong feature dimension");
        }
        if (!ev.labels || ev.labels->size() != header.models) {
            throw ParameterError("trace record " + std::to_string(ev.t) + " needs one label per model");
        }
        for (auto s : *ev.labels) {
            if (s > 1) {
                throw ParameterError("trace labels must be 0 or 1");
            }
        }
        if (!ev.costs_j || ev.costs_j->size() != header.models) {
            throw ParameterError("trace record " + std::to_string(ev.t) + " needs one cost per model");
        }
        for (double c : *ev.costs_j) {
            if (!(c > 0.0)) {
                throw ParameterError("trace costs must be > 0");
            }
        }
    }
}

std::string zoo_profile_hash(const ZooConfig& zoo) {
    std::string canon;
    for (const auto& m : zoo.models) {
        canon += m.display_name + "|" + format_double(m.base_cost_j) + "|" + format_double(m.cost_per_token_j) + ";";
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(seeded_fnv1a(0, canon)));
    return buf;
}

ExperimentTrace generate_trace(const ScenarioConfig& config) {
    ExperimentTrace trace;
    trace.header.models = config.zoo.size();
    trace.header.dim = config.dim;
    trace.header.zoo_hash = zoo_profile_hash(config.zoo);
    TraceGenerator gen(config);
    trace.events.reserve(config.horizon);
    while (auto ev = gen.next()) {
        trace.events.push_back(std::move(*ev));
    }
    return trace;
}

void write_trace(std::ostream& out, const ExperimentTrace& trace) {
    Json header{{"schema_version", trace.header.schema_version},
                {"type", "header"},
                {"M", trace.header.models},
                {"d", trace.header.dim},
                {"zoo_hash", trace.header.zoo_hash}};
    out << header.dump() << '\n';
    for (const auto& ev : trace.events) {
        Json rec{{"t", ev.t}, {"token_count", ev.token_count}, {"features", ev.features}};
        if (!ev.text.empty()) {
            rec["text"] = ev.text;
        }
        rec["labels"] = ev.labels ? Json(*ev.labels) : Json::array();
        rec["costs"] = ev.costs_j ? Json(*ev.costs_j) : Json::array();
        out << rec.dump() << '\n';
    }
}

ExperimentTrace read_trace(std::istream& in) {
    ExperimentTrace trace;
    std::string line;
    if (!std::getline(in, line)) {
        throw ParameterError("trace is empty");
    }
    const auto header = Json::parse(line);
    if (header.value("type", std::string()) != "header") {
        throw ParameterError("trace must start with a header record");
    }
    trace.header.schema_version = header.at("schema_version").get<int>();
    if (trace.header.schema_version != kSchemaVersion) {
        throw ParameterError("unsupported trace schema_version");
    }
    trace.header.models = header.at("M").get<std::size_t>();
    trace.header.dim = header.at("d").get<std::size_t>();
    trace.header.zoo_hash = header.value("zoo_hash", std::string());
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto rec = Json::parse(line);
        RequestEvent ev;
        ev.t = rec.at("t").get<std::uint64_t>();
        ev.token_count = rec.value("token_count", std::uint64_t{0});
        ev.features = rec.at("features").get<std::vector<double>>();
        ev.text = rec.value("text", std::string());
        ev.labels = rec.at("labels").get<std::vector<std::uint8_t>>();
        ev.costs_j = rec.at("costs").get<std::vector<double>>();
        trace.events.push_back(std::move(ev));
    }
    trace.validate();
    return trace;
}

void save_trace(const std::string& path, const ExperimentTrace& trace) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    write_trace(out, trace);
    if (!out) {
        throw std::runtime_error("failed writing " + path);
    }
}

ExperimentTrace load_trace(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    return read_trace(in);
}

std::optional<RequestEvent> TraceStream::next() {
    if (pos_ >= trace_.events.size()) {
        return std::nullopt;
    }
    return trace_.events[pos_++];
}

std::string PolicySpec::label(const ZooConfig& zoo) const {
    switch (kind) {
        case PolicyKind::messplus:
            return "messplus";
        case PolicyKind::single:
            return "single:" + zoo[model].display_name;
        case PolicyKind::guessing:
            return "guessing";
        case PolicyKind::threshold:
            return "threshold:" + format_double(threshold);
        case PolicyKind::oracle:
            return "oracle";
    }
    return "unknown";
}

PolicySpec parse_policy(const std::string& text, const ZooConfig& zoo) {
    PolicySpec spec;
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string arg = colon == std::string::npos ? std::string() : text.substr(colon + 1);
    if (head == "messplus") {
        spec.kind = PolicyKind::messplus;
    } else if (head == "guessing") {
        spec.kind = PolicyKind::guessing;
    } else if (head == "oracle") {
        spec.kind = PolicyKind::oracle;
    } else if (head == "threshold") {
        spec.kind = PolicyKind::threshold;
        if (!arg.empty()) {
            spec.threshold = std::stod(arg);
        }
    } else if (head == "single") {
        spec.kind = PolicyKind::single;
        bool found = false;
        for (const auto& m : zoo.models) {
            if (m.display_name == arg || std::to_string(m.id.index) == arg) {
                spec.model = m.id;
                found = true;
                break;
            }
        }
        if (!found) {
            throw ParameterError("unknown model for single policy: '" + arg + "'");
        }
    } else {
        throw ParameterError("unknown policy: '" + text + "'");
    }
    return spec;
}

std::vector<PolicySpec> default_policy_set(const ZooConfig& zoo) {
    std::vector<PolicySpec> out;
    for (const auto& m : zoo.models) {
        PolicySpec s;
        s.kind = PolicyKind::single;
        s.model = m.id;
        out.push_back(s);
    }
    for (auto kind : {PolicyKind::guessing, PolicyKind::messplus, PolicyKind::oracle}) {
        PolicySpec s;
        s.kind = kind;
        out.push_back(s);
    }
    return out;
}

RouterConfig router_config(const ScenarioConfig& config, const SlaParams& sla, std::uint64_t seed) {
    RouterConfig rc;
    rc.zoo = config.zoo;
    rc.sla = sla;
    rc.extractor.kind = FeatureExtractor::Kind::passthrough;
    rc.extractor.dim = config.dim;
    rc.mu = config.mu;
    rc.schedule = config.schedule;
    rc.seed = seed;
    return rc;
}

std::unique_ptr<Policy> make_policy(const PolicySpec& spec, const ScenarioConfig& config, const SlaParams& sla,
                                    std::uint64_t seed) {
    switch (spec.kind) {
        case PolicyKind::messplus:
            return std::make_unique<MessPlusPolicy>(router_config(config, sla, seed));
        case PolicyKind::single:
            return std::make_unique<SingleModelPolicy>(config.zoo, spec.model);
        case PolicyKind::guessing:
            return std::make_unique<GuessingRouter>(
                config.zoo, calibrate_guessing(truth_rates(config.zoo), sla.alpha), seed);
        case PolicyKind::threshold: {
            ThresholdRouter::Options opt;
            std::size_t small = 0;
            for (std::size_t m = 1; m < config.zoo.size(); ++m) {
                if (config.zoo.models[m].base_cost_j < config.zoo.models[small].base_cost_j) {
                    small = m;
                }
            }
            opt.small = ModelId{small};
            opt.large = config.zoo.largest;
            opt.threshold = spec.threshold;
            opt.c = sla.c;
            opt.mu = config.mu;
            opt.schedule = config.schedule;
            opt.extractor.kind = FeatureExtractor::Kind::passthrough;
            opt.extractor.dim = config.dim;
            opt.seed = seed;
            return std::make_unique<ThresholdRouter>(config.zoo, opt);
        }
        case PolicyKind::oracle:
            return std::make_unique<OracleRouter>(config.zoo);
    }
    throw ParameterError("unknown policy kind");
}

MetricStream run_experiment(RequestStream& requests, Policy& policy, std::size_t models, const SlaParams& sla,
                            bool keep_steps) {
    MetricStream stream(models, sla.alpha, keep_steps);
    while (auto ev = requests.next()) {
        stream.update(policy.decide(*ev));
    }
    return stream;
}

MetricStream run_experiment(const ExperimentTrace& trace, const PolicySpec& spec, const ScenarioConfig& config,
                            const SlaParams& sla, std::uint64_t seed) {
    if (trace.header.models != config.zoo.size()) {
        throw ParameterError("trace has " + std::to_string(trace.header.models) + " models, zoo has " +
                             std::to_string(config.zoo.size()));
    }
    if (trace.header.dim != config.dim) {
        throw ParameterError("trace feature dimension does not match the scenario");
    }
    if (!trace.header.zoo_hash.empty() && trace.header.zoo_hash != zoo_profile_hash(config.zoo)) {
        throw ParameterError("trace was recorded for a different zoo profile");
    }
    auto policy = make_policy(spec, config, sla, seed);
    TraceStream stream(trace);
    return run_experiment(stream, *policy, config.zoo.size(), sla);
}

SweepReport sweep(const ScenarioConfig& config, const std::vector<double>& alphas, const std::vector<double>& vs,
                  const std::vector<double>& cs, const std::vector<std::uint64_t>& seeds, unsigned jobs) {
    if (alphas.empty() || vs.empty() || cs.empty() || seeds.empty()) {
        throw ParameterError("sweep grids must be non-empty");
    }
    std::vector<ExperimentTrace> traces;
    for (auto seed : seeds) {
        auto cfg = config;
        cfg.seed = seed;
        traces.push_back(generate_trace(cfg));
    }

    struct Job {
        SlaParams sla;
        std::size_t seed_index;
    };
    std::vector<Job> grid;
    for (double a : alphas) {
        for (double v : vs) {
            for (double c : cs) {
                for (std::size_t s = 0; s < seeds.size(); ++s) {
                    SlaParams sla{a, v, c};
                    sla.validate();
                    grid.push_back(Job{sla, s});
                }
            }
        }
    }

    SweepReport report;
    report.cells.resize(grid.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < grid.size(); i = next++) {
            try {
                const auto& job = grid[i];
                const auto seed = seeds[job.seed_index];
                MessPlusPolicy policy(router_config(config, job.sla, seed));
                TraceStream stream(traces[job.seed_index]);
                const auto metrics = run_experiment(stream, policy, config.zoo.size(), job.sla);
                const auto summary = metrics.summary();
                auto& cell = report.cells[i];
                cell.alpha = job.sla.alpha;
                cell.v = job.sla.v;
                cell.c = job.sla.c;
                cell.seed = seed;
                cell.time_to_sla = time_to_sla(metrics, job.sla.alpha);
                cell.mean_cost_j = summary.mean_cost_j;
                cell.mean_satisfaction = summary.mean_satisfaction;
                cell.exploration_share = summary.exploration_share;
                cell.explorations = summary.explorations;
                cell.queue_over_t = summary.queue_over_t;
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
    };
    const unsigned n_threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(grid.size())));
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < n_threads; ++i) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& th : pool) {
        th.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return report;
}

void write_sweep_csv(std::ostream& out, const SweepReport& report) {
    out << "alpha,v,c,seed,time_to_sla,mean_cost_j,mean_cost_mj,mean_satisfaction,exploration_share,explorations,"
           "queue_over_t\n";
    for (const auto& c : report.cells) {
        out << format_double(c.alpha) << ',' << format_double(c.v) << ',' << format_double(c.c) << ',' << c.seed
            << ',' << (c.time_to_sla ? std::to_string(*c.time_to_sla) : std::string()) << ','
            << format_double(c.mean_cost_j) << ',' << format_double(c.mean_cost_j / kJoulesPerMegajoule) << ','
            << format_double(c.mean_satisfaction) << ',' << format_double(c.exploration_share) << ','
            << c.explorations << ',' << format_double(c.queue_over_t) << '\n';
    }
}

}  // namespace messplus
