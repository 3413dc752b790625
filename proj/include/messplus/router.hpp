#pragma once

// The per-request control loop: Bernoulli exploration with decaying
// probability, drift-plus-penalty model selection on predicted satisfaction,
// SGD on fully labelled exploration requests and the virtual-queue update.

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "messplus/core.hpp"
#include "messplus/features.hpp"
#include "messplus/predictor.hpp"
#include "messplus/rng.hpp"

namespace messplus {

/// Raised when a request cannot be processed because labels are missing or
/// feedback violates the ordering contract.
class RoutingError : public std::runtime_error {
public:
    enum class Kind { missing_labels, unknown_decision, out_of_order, duplicate_feedback };

    RoutingError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// min(1, c / t^(1/4)); t is 1-based.
double exploration_probability(double c, std::uint64_t t);

/// argmin_m v * costs_m + queue_q * (alpha - s_hat_m); ties go to the lower
/// cost, then to the lower index. `costs` must already be in optimizer units.
ModelId solve_per_request(double v, double queue_q, double alpha, std::span<const double> costs,
                          std::span<const double> s_hat);

/// Answers "was model m's response to this request satisfactory?".
class LabelSource {
public:
    virtual ~LabelSource() = default;
    virtual std::optional<int> query(const RequestEvent& event, ModelId model) = 0;
    /// True if every model can be labelled on the same request (exploration).
    virtual bool supports_full_labels() const = 0;
};

/// Reads labels carried by the event itself (traces, simulator).
class EventLabels final : public LabelSource {
public:
    std::optional<int> query(const RequestEvent& event, ModelId model) override;
    bool supports_full_labels() const override { return true; }
};

/// Live mode: labels arrive later through apply_feedback.
class DeferredLabels final : public LabelSource {
public:
    std::optional<int> query(const RequestEvent&, ModelId) override { return std::nullopt; }
    bool supports_full_labels() const override { return false; }
};

struct ExplorationOutcome {
    std::vector<std::uint8_t> labels;
    ModelId best_by_label;
    ModelId returned;
};

/// argmax of the labels with ties broken toward the largest model; the
/// returned output is always the largest model's.
ExplorationOutcome resolve_exploration(const ZooConfig& zoo, std::vector<std::uint8_t> labels);

struct RouterConfig {
    ZooConfig zoo;
    SlaParams sla;
    FeatureExtractor extractor;
    double mu = 1e-4;
    LearningRateSchedule schedule;
    std::uint64_t seed = 42;
    /// Joules per optimizer cost unit. V is calibrated against megajoules.
    double cost_unit_j = kJoulesPerMegajoule;
    /// Allow exploration when labels are deferred (shadow exploration: the
    /// caller must later report labels for every model).
    bool shadow_exploration = false;

    void validate() const;
};

/// A decision waiting for user feedback before its queue update.
struct PendingFeedback {
    std::uint64_t t = 0;
    bool explored = false;
    ModelId chosen;
    std::vector<double> features;
};

struct RouterState {
    RouterConfig config;
    VirtualQueue queue;
    PredictorState predictor;
    SplitMix64 rng{0};
    std::uint64_t t = 1;
    std::deque<PendingFeedback> pending;

    static RouterState initial(RouterConfig config);
};

/// Single-writer state machine around RouterState.
class Router {
public:
    explicit Router(RouterConfig config);
    explicit Router(RouterState state);

    RoutingDecision step(const RequestEvent& event, LabelSource& labels);

    /// Applies the satisfaction bit of the oldest pending decision.
    double apply_feedback(std::uint64_t decision_t, int satisfaction);

    /// Shadow exploration: full labels for an explored pending decision.
    /// Runs the SGD step and updates the queue with the largest model's bit.
    double apply_exploration_feedback(std::uint64_t decision_t, std::vector<std::uint8_t> labels);

    const RouterState& state() const noexcept { return state_; }
    RouterState& mutable_state() noexcept { return state_; }

private:
    const PendingFeedback& check_pending(std::uint64_t decision_t) const;

    RouterState state_;
};

std::pair<RouterState, RoutingDecision> step(RouterState state, const RequestEvent& event,
                                             LabelSource& labels);

RouterState apply_feedback(RouterState state, std::uint64_t decision_t, int satisfaction);

}  // namespace messplus
