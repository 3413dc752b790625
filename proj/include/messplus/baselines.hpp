#pragma once

// Reference policies: fixed single model, SLA-calibrated random guessing,
// a two-model threshold router and a clairvoyant oracle.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "messplus/core.hpp"
#include "messplus/policy.hpp"
#include "messplus/predictor.hpp"
#include "messplus/rng.hpp"

namespace messplus {

struct GuessingPolicy {
    std::vector<double> probs;
    std::vector<double> source_accuracies;

    double expected_accuracy() const;
};

/// A priori model-mixing probabilities whose expected accuracy reaches alpha.
///
/// Starts from the uniform mix and for up to 5000 rounds multiplies the
/// weight of every model more accurate than the current mix by 1.01 and of
/// every other model by 0.99, renormalising each round and stopping once the
/// mix is within 1e-6 of alpha. If the rounds run out, a fallback assigns
/// each model a 1e-10 floor and hands out the remaining mass from the best
/// model down, 0.8 x remaining x (normalised accuracy) at a time, with the
/// worst model taking what is left.
///
/// Throws InfeasibleSlaError("Alpha too high") if alpha exceeds every accuracy.
GuessingPolicy calibrate_guessing(std::span<const double> accuracies, double alpha);

ModelId route_single(ModelId model) noexcept;

/// Small model iff its predicted satisfaction clears the threshold.
ModelId route_threshold(double s_hat_small, double threshold, ModelId small, ModelId large);

/// Cheapest satisfying model; the cheapest overall if none satisfies.
ModelId route_oracle(std::span<const std::uint8_t> labels, std::span<const double> costs);

/// Index of the cheapest model for this request (ties to the lower index).
ModelId cheapest_model(std::span<const double> costs);

class SingleModelPolicy final : public Policy {
public:
    SingleModelPolicy(ZooConfig zoo, ModelId model);
    std::string name() const override;
    RoutingDecision decide(const RequestEvent& event) override;

private:
    ZooConfig zoo_;
    ModelId model_;
};

class GuessingRouter final : public Policy {
public:
    GuessingRouter(ZooConfig zoo, GuessingPolicy policy, std::uint64_t seed);
    std::string name() const override { return "guessing"; }
    RoutingDecision decide(const RequestEvent& event) override;

    const GuessingPolicy& policy() const noexcept { return policy_; }

private:
    ZooConfig zoo_;
    GuessingPolicy policy_;
    SplitMix64 rng_;
};

/// Generic two-model threshold router. It learns its small-model
/// satisfaction estimate online with the same exploration schedule and
/// predictor as the drift-plus-penalty router; only the selection rule
/// differs. It is a stand-in for learned two-model routers, not a
/// reimplementation of any of them.
class ThresholdRouter final : public Policy {
public:
    struct Options {
        ModelId small;
        ModelId large;
        double threshold = 0.5;
        double c = 0.1;
        double mu = 1e-4;
        LearningRateSchedule schedule;
        FeatureExtractor extractor;
        std::uint64_t seed = 42;
    };

    ThresholdRouter(ZooConfig zoo, Options options);
    std::string name() const override { return "threshold"; }
    RoutingDecision decide(const RequestEvent& event) override;

private:
    ZooConfig zoo_;
    Options options_;
    PredictorState predictor_;
    SplitMix64 rng_;
    std::uint64_t t_ = 1;
};

class OracleRouter final : public Policy {
public:
    explicit OracleRouter(ZooConfig zoo);
    std::string name() const override { return "oracle"; }
    RoutingDecision decide(const RequestEvent& event) override;

private:
    ZooConfig zoo_;
};

}  // namespace messplus
