#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "messplus/core.hpp"
#include "messplus/features.hpp"
#include "messplus/metrics.hpp"
#include "messplus/policy.hpp"
#include "messplus/predictor.hpp"
#include "messplus/rng.hpp"

namespace messplus {

struct ScenarioConfig {
    ZooConfig zoo;
    SlaParams sla;
    std::uint64_t horizon = 20000;
    std::size_t dim = 16;
    std::size_t cluster_count = 8;
    /// Fixes cluster centres and logistic truths; `seed` drives sampling.
    std::uint64_t world_seed = 7;
    std::uint64_t seed = 42;
    double label_noise = 0.0;
    std::uint64_t token_min = 16;
    std::uint64_t token_max = 512;
    double center_scale = 1.0;
    double cluster_sigma = 0.6;
    /// Predictor settings used by the router and the threshold baseline.
    double mu = 1e-4;
    LearningRateSchedule schedule;

    void validate() const;
};

/// Builds `rates.size()` logistic truths whose marginal satisfaction rates
/// over the scenario's feature distribution match `rates`. Each weight
/// vector points along a shared difficulty direction (plus a per-model
/// perturbation unless `monotone`), scaled to `sharpness`; biases are found
/// by bisection on a fixed calibration sample.
std::vector<GroundTruthModel> calibrate_logistic_truths(const ScenarioConfig& config,
                                                        const std::vector<double>& rates,
                                                        double sharpness = 4.0, bool monotone = false);

/// Three-model zoo with per-request costs 0.12 / 0.54 / 2.91 MJ and
/// satisfaction rates (58.28 / 68.20 / 73.70 %), logistic ground truth,
/// alpha = 0.66, V = 0.001, c = 0.1, T = 20000.
ScenarioConfig canonical_scenario(std::uint64_t seed = 42);

/// Same zoo with request-independent Bernoulli truths.
ScenarioConfig canonical_fixed_rate_scenario(std::uint64_t seed = 42);

std::vector<std::vector<double>> cluster_centers(const ScenarioConfig& config);

/// Marginal satisfaction rate of every zoo member (fixed or calibrated).
std::vector<double> truth_rates(const ZooConfig& zoo);

/// Throws InfeasibleSlaError if alpha exceeds every model's truth rate.
void check_sla_feasible(const ScenarioConfig& config);

class RequestStream {
public:
    virtual ~RequestStream() = default;
    virtual std::optional<RequestEvent> next() = 0;
};

/// Lazily draws i.i.d. requests from a scenario.
class TraceGenerator final : public RequestStream {
public:
    explicit TraceGenerator(ScenarioConfig config, std::optional<std::uint64_t> limit = std::nullopt);

    std::optional<RequestEvent> next() override;
    RequestEvent draw();

    /// Feature vector drawn from the scenario distribution (no labels).
    std::vector<double> draw_features();

private:
    ScenarioConfig config_;
    std::vector<std::vector<double>> centers_;
    SplitMix64 feature_rng_;
    SplitMix64 label_rng_;
    SplitMix64 token_rng_;
    std::uint64_t t_ = 0;
    std::uint64_t limit_;
};

struct TraceHeader {
    int schema_version = 1;
    std::size_t models = 0;
    std::size_t dim = 0;
    std::string zoo_hash;
};

struct ExperimentTrace {
    TraceHeader header;
    std::vector<RequestEvent> events;

    /// Ordered by t without gaps, binary labels, positive costs.
    void validate() const;
};

/// Hex FNV-1a of the zoo's names and cost profiles.
std::string zoo_profile_hash(const ZooConfig& zoo);

ExperimentTrace generate_trace(const ScenarioConfig& config);

/// Line-delimited JSON: a header object, then one object per request.
void write_trace(std::ostream& out, const ExperimentTrace& trace);
ExperimentTrace read_trace(std::istream& in);
void save_trace(const std::string& path, const ExperimentTrace& trace);
ExperimentTrace load_trace(const std::string& path);

class TraceStream final : public RequestStream {
public:
    explicit TraceStream(const ExperimentTrace& trace) : trace_(trace) {}
    std::optional<RequestEvent> next() override;

private:
    const ExperimentTrace& trace_;
    std::size_t pos_ = 0;
};

enum class PolicyKind { messplus, single, guessing, threshold, oracle };

struct PolicySpec {
    PolicyKind kind = PolicyKind::messplus;
    ModelId model;           // single
    double threshold = 0.5;  // threshold

    std::string label(const ZooConfig& zoo) const;
};

/// Parses "messplus", "guessing", "threshold[:0.5]", "oracle", "single:<index|name>".
PolicySpec parse_policy(const std::string& text, const ZooConfig& zoo);

/// The comparison set: every single model, guessing, messplus, oracle.
std::vector<PolicySpec> default_policy_set(const ZooConfig& zoo);

RouterConfig router_config(const ScenarioConfig& config, const SlaParams& sla, std::uint64_t seed);

std::unique_ptr<Policy> make_policy(const PolicySpec& spec, const ScenarioConfig& config, const SlaParams& sla,
                                    std::uint64_t seed);

/// Drives `policy` over the stream in order and records every decision.
MetricStream run_experiment(RequestStream& requests, Policy& policy, std::size_t models, const SlaParams& sla,
                            bool keep_steps = true);

MetricStream run_experiment(const ExperimentTrace& trace, const PolicySpec& spec, const ScenarioConfig& config,
                            const SlaParams& sla, std::uint64_t seed);

struct SweepCell {
    double alpha = 0.0;
    double v = 0.0;
    double c = 0.0;
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> time_to_sla;
    double mean_cost_j = 0.0;
    double mean_satisfaction = 0.0;
    double exploration_share = 0.0;
    std::uint64_t explorations = 0;
    double queue_over_t = 0.0;
};

struct SweepReport {
    std::vector<SweepCell> cells;
};

/// Cross product of the grids; one trace per seed shared by all cells with
/// that seed. Cells run on up to `jobs` threads; output order is the grid
/// order regardless of scheduling.
SweepReport sweep(const ScenarioConfig& config, const std::vector<double>& alphas, const std::vector<double>& vs,
                  const std::vector<double>& cs, const std::vector<std::uint64_t>& seeds, unsigned jobs = 1);

void write_sweep_csv(std::ostream& out, const SweepReport& report);

}  // namespace messplus
