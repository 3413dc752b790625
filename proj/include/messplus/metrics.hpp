#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "messplus/core.hpp"

namespace messplus {

/// One row of the per-step CSV.
struct StepRecord {
    std::uint64_t t = 0;
    bool explored = false;
    std::size_t chosen = 0;
    double cost_j = 0.0;
    int sat = 0;
    double queue = 0.0;
    double run_sat = 0.0;
    double run_cost_j = 0.0;
};

struct RunSummary {
    std::uint64_t requests = 0;
    double total_cost_j = 0.0;
    double mean_cost_j = 0.0;
    double mean_satisfaction = 0.0;
    /// Non-exploration selections per model; exploration steps are counted
    /// separately because they query every model.
    std::vector<std::uint64_t> call_counts;
    std::vector<double> call_ratios;
    std::uint64_t explorations = 0;
    double exploration_cost_j = 0.0;
    double exploration_share = 0.0;
    /// Individual model invocations (an exploration step counts M).
    std::uint64_t llm_calls = 0;
    double mean_call_cost_j = 0.0;
    double final_queue = 0.0;
    double queue_over_t = 0.0;
    double mean_queue = 0.0;
    double max_queue = 0.0;
    double max_queue_minus_sqrt_t = 0.0;
};

/// Append-only record of a run with incremental aggregates.
///
/// The stream keeps its own virtual queue, driven by the realized
/// satisfaction bits, so every policy (not only the drift-plus-penalty
/// router) reports a comparable backlog.
class MetricStream {
public:
    MetricStream(std::size_t models, double alpha, bool keep_steps = true);

    /// Decisions must arrive in t order (1, 2, ...) with a realized
    /// satisfaction bit.
    void update(const RoutingDecision& decision);

    const std::vector<StepRecord>& steps() const noexcept { return steps_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(n_); }
    bool empty() const noexcept { return n_ == 0; }
    double alpha() const noexcept { return alpha_; }
    const VirtualQueue& queue() const noexcept { return queue_; }

    /// Throws ParameterError on an empty stream (aggregates are undefined).
    RunSummary summary() const;

    double running_cost_j() const;
    double running_satisfaction() const;

private:
    std::size_t models_;
    double alpha_;
    bool keep_steps_;
    std::vector<StepRecord> steps_;
    std::uint64_t n_ = 0;
    double total_cost_j_ = 0.0;
    std::uint64_t satisfied_ = 0;
    std::vector<std::uint64_t> call_counts_;
    std::uint64_t explorations_ = 0;
    double exploration_cost_j_ = 0.0;
    VirtualQueue queue_;
    double queue_sum_ = 0.0;
    double max_queue_ = 0.0;
    double max_queue_minus_sqrt_t_ = 0.0;
};

struct ComplianceReport {
    bool compliant = false;
    std::uint64_t grace_t0 = 0;
    /// max over t >= grace of (alpha - running satisfaction), floored at 0.
    double max_violation = 0.0;
    std::optional<std::uint64_t> first_violation_t;
    double final_satisfaction = 0.0;
    double shortfall = 0.0;
    double queue_over_t = 0.0;
    /// alpha - mean satisfaction <= Q_T / T.
    bool queue_bound_holds = false;
};

ComplianceReport compliance_report(const MetricStream& stream, const SlaParams& sla, std::uint64_t grace_t0);

/// First t at which running satisfaction reaches alpha and then never drops
/// below alpha - tolerance again.
std::optional<std::uint64_t> time_to_sla(const MetricStream& stream, double alpha, double tolerance = 0.005);

struct OverheadReport {
    double predictor_cost_j = 0.0;
    double mean_call_cost_j = 0.0;
    double overhead_pct = 0.0;
};

OverheadReport overhead_report(const MetricStream& stream, double predictor_cost_per_call_j);

/// Combines per-scenario (predictor J, call J) pairs two ways: the ratio of
/// the averaged costs and the average of the per-scenario ratios.
struct OverheadSummary {
    double ratio_of_averages_pct = 0.0;
    double average_of_ratios_pct = 0.0;
    std::vector<double> per_scenario_pct;
};

OverheadSummary overhead_summary(std::span<const std::pair<double, double>> predictor_and_call_j);

/// Fixed column order: t,explored,chosen,cost_j,sat,queue,run_sat,run_cost_j
void write_steps_csv(std::ostream& out, const MetricStream& stream);

}  // namespace messplus
