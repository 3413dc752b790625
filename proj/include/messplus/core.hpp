#pragma once

// Domain types shared by every module: the model zoo, request events, SLA
// parameters, the virtual queue state machine and the per-request cost model.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace messplus {

/// Raised when a caller passes a value outside an operation's domain.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a computation produces NaN/Inf where finite values are required.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when the requested satisfaction target cannot be met by any mix
/// of the available models.
class InfeasibleSlaError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Dense index of a zoo member, in [0, M).
struct ModelId {
    std::size_t index = 0;

    friend constexpr auto operator<=>(ModelId, ModelId) = default;
};

/// Simulator-side satisfaction behaviour of one model.
///
/// `fixed_rate` draws s ~ Bernoulli(rate) independently of the request.
/// `logistic` draws s ~ Bernoulli(sigmoid(<w, [x;1]>)); `rate` then holds the
/// marginal satisfaction rate the weights were calibrated to.
struct GroundTruthModel {
    enum class Kind { fixed_rate, logistic };

    Kind kind = Kind::fixed_rate;
    double rate = 0.5;
    std::vector<double> weights;  // d + 1 entries, bias last

    double probability(std::span<const double> features) const;
    void validate(std::size_t dim) const;
};

struct ModelProfile {
    ModelId id;
    std::string display_name;
    double base_cost_j = 1.0;
    double cost_per_token_j = 0.0;
    std::optional<GroundTruthModel> truth;

    void validate() const;
};

struct ZooConfig {
    std::vector<ModelProfile> models;
    ModelId largest;

    std::size_t size() const noexcept { return models.size(); }
    const ModelProfile& operator[](ModelId id) const { return models.at(id.index); }

    /// Throws ParameterError unless ids are dense, costs positive and
    /// `largest` names a member.
    void validate() const;
};

struct RequestEvent {
    std::uint64_t t = 1;
    std::uint64_t token_count = 0;
    std::vector<double> features;
    std::string text;
    std::optional<std::vector<std::uint8_t>> labels;
    /// Per-model costs recorded in a trace; when absent they are derived
    /// from the zoo profiles.
    std::optional<std::vector<double>> costs_j;
};

struct SlaParams {
    double alpha = 0.66;
    double v = 0.001;
    double c = 0.1;

    void validate() const;
};

/// Backlog of accumulated SLA shortfall.
struct VirtualQueue {
    double q = 0.0;
    std::uint64_t t = 0;

    friend bool operator==(const VirtualQueue&, const VirtualQueue&) = default;
};

/// q' = max(0, q + alpha - satisfaction).
VirtualQueue queue_update(VirtualQueue queue, double alpha, int satisfaction);

double request_cost(const ModelProfile& profile, const RequestEvent& event);

/// Costs of serving `event` on every zoo member, in joules. Trace-recorded
/// costs take precedence over the profile cost model.
std::vector<double> zoo_costs(const ZooConfig& zoo, const RequestEvent& event);

/// (E_min, E_max) over the zoo for this request.
std::pair<double, double> zoo_cost_extremes(const ZooConfig& zoo, const RequestEvent& event);

struct RoutingDecision {
    std::uint64_t t = 0;
    bool explored = false;
    ModelId chosen;
    std::vector<std::uint8_t> y;
    std::vector<double> s_hat;
    std::optional<int> realized_satisfaction;
    double cost_incurred_j = 0.0;
    double queue_before = 0.0;
    double queue_after = 0.0;
    /// Exploration only: argmax of the observed labels, ties toward the
    /// largest model.
    std::optional<ModelId> best_by_label;
};

inline constexpr double kJoulesPerMegajoule = 1e6;

}  // namespace messplus
