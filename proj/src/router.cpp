#include "messplus/router.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace messplus {

double exploration_probability(double c, std::uint64_t t) {
    if (t == 0) {
        throw ParameterError("request index t is 1-based");
    }
    if (!(c > 0.0)) {
        throw ParameterError("exploration scale c must be > 0");
    }
    return std::min(1.0, c / std::pow(static_cast<double>(t), 0.25));
}

ModelId solve_per_request(double v, double queue_q, double alpha, std::span<const double> costs,
                          std::span<const double> s_hat) {
    if (costs.empty()) {
        throw ParameterError("cannot select from an empty zoo");
    }
    if (costs.size() != s_hat.size()) {
        throw ParameterError("costs and predictions differ in length");
    }
    std::size_t best = 0;
    double best_score = v * costs[0] + queue_q * (alpha - s_hat[0]);
    for (std::size_t m = 1; m < costs.size(); ++m) {
        const double score = v * costs[m] + queue_q * (alpha - s_hat[m]);
        if (score < best_score || (score == best_score && costs[m] < costs[best])) {
            best = m;
            best_score = score;
        }
    }
    return ModelId{best};
}

std::optional<int> EventLabels::query(const RequestEvent& event, ModelId model) {
    if (!event.labels || model.index >= event.labels->size()) {
        return std::nullopt;
    }
    return static_cast<int>((*event.labels)[model.index]);
}

ExplorationOutcome resolve_exploration(const ZooConfig& zoo, std::vector<std::uint8_t> labels) {
    ExplorationOutcome out;
    out.returned = zoo.largest;
    out.best_by_label = zoo.largest;
    for (std::size_t m = 0; m < labels.size(); ++m) {
        if (labels[m] > labels[out.best_by_label.index]) {
            out.best_by_label = ModelId{m};
        }
    }
    out.labels = std::move(labels);
    return out;
}

void RouterConfig::validate() const {
    zoo.validate();
    sla.validate();
    extractor.validate();
    schedule.validate();
    if (!(mu >= 0.0)) {
        throw ParameterError("mu must be >= 0");
    }
    if (!(cost_unit_j > 0.0)) {
        throw ParameterError("cost unit must be > 0");
    }
}

RouterState RouterState::initial(RouterConfig config) {
    config.validate();
    RouterState state;
    state.predictor =
        PredictorState::zeros(config.zoo.size(), config.extractor.dim, config.mu, config.schedule);
    state.rng = SplitMix64(config.seed);
    state.config = std::move(config);
    return state;
}

Router::Router(RouterConfig config) : state_(RouterState::initial(std::move(config))) {}

Router::Router(RouterState state) : state_(std::move(state)) {}

RoutingDecision Router::step(const RequestEvent& event, LabelSource& labels) {
    auto& st = state_;
    const auto& cfg = st.config;
    const auto& zoo = cfg.zoo;
    const std::size_t models = zoo.size();
    if (event.t != st.t) {
        throw ParameterError("request index " + std::to_string(event.t) + " does not match router t = " +
                             std::to_string(st.t));
    }

    const auto costs_j = zoo_costs(zoo, event);
    auto x = featurize(cfg.extractor, event);

    // One uniform per request regardless of outcome keeps the stream aligned
    // across runs that differ only in V or alpha.
    const double p = exploration_probability(cfg.sla.c, st.t);
    const double u = st.rng.uniform();
    const bool can_explore = labels.supports_full_labels() || cfg.shadow_exploration;
    const bool explore = can_explore && (st.t == 1 || u < p);

    RoutingDecision d;
    d.t = st.t;
    d.explored = explore;
    d.s_hat = predict(st.predictor, x);
    d.queue_before = st.queue.q;

    if (explore) {
        d.y.assign(models, 1);
        d.chosen = zoo.largest;
        d.cost_incurred_j = 0.0;
        for (double c : costs_j) {
            d.cost_incurred_j += c;
        }
        if (labels.supports_full_labels()) {
            std::vector<std::uint8_t> bits(models);
            for (std::size_t m = 0; m < models; ++m) {
                const auto bit = labels.query(event, ModelId{m});
                if (!bit) {
                    throw RoutingError(RoutingError::Kind::missing_labels,
                                       "exploration at t = " + std::to_string(st.t) +
                                           " needs a label for every model");
                }
                bits[m] = static_cast<std::uint8_t>(*bit);
            }
            st.predictor = sgd_step(std::move(st.predictor), x, bits);
            const auto outcome = resolve_exploration(zoo, std::move(bits));
            d.best_by_label = outcome.best_by_label;
            const int sat = outcome.labels[outcome.returned.index];
            d.realized_satisfaction = sat;
            st.queue = queue_update(st.queue, cfg.sla.alpha, sat);
        } else {
            st.pending.push_back(PendingFeedback{st.t, true, d.chosen, std::move(x)});
        }
    } else {
        std::vector<double> costs(models);
        for (std::size_t m = 0; m < models; ++m) {
            costs[m] = costs_j[m] / cfg.cost_unit_j;
        }
        d.chosen = solve_per_request(cfg.sla.v, st.queue.q, cfg.sla.alpha, costs, d.s_hat);
        d.y.assign(models, 0);
        d.y[d.chosen.index] = 1;
        d.cost_incurred_j = costs_j[d.chosen.index];
        if (const auto bit = labels.query(event, d.chosen)) {
            d.realized_satisfaction = *bit;
            st.queue = queue_update(st.queue, cfg.sla.alpha, *bit);
        } else {
            st.pending.push_back(PendingFeedback{st.t, false, d.chosen, std::move(x)});
        }
    }

    d.queue_after = st.queue.q;
    ++st.t;
    return d;
}

const PendingFeedback& Router::check_pending(std::uint64_t decision_t) const {
    const auto& st = state_;
    if (decision_t == 0 || decision_t >= st.t) {
        throw RoutingError(RoutingError::Kind::unknown_decision,
                           "no decision with t = " + std::to_string(decision_t));
    }
    if (st.pending.empty() || decision_t < st.pending.front().t) {
        throw RoutingError(RoutingError::Kind::duplicate_feedback,
                           "decision " + std::to_string(decision_t) + " is not awaiting feedback");
    }
    if (decision_t != st.pending.front().t) {
        const bool is_pending = std::any_of(st.pending.begin(), st.pending.end(),
                                            [&](const PendingFeedback& p) { return p.t == decision_t; });
        if (!is_pending) {
            throw RoutingError(RoutingError::Kind::duplicate_feedback,
                               "decision " + std::to_string(decision_t) + " is not awaiting feedback");
        }
        throw RoutingError(RoutingError::Kind::out_of_order,
                           "feedback for " + std::to_string(decision_t) + " arrived before decision " +
                               std::to_string(st.pending.front().t));
    }
    return st.pending.front();
}

double Router::apply_feedback(std::uint64_t decision_t, int satisfaction) {
    check_pending(decision_t);
    state_.queue = queue_update(state_.queue, state_.config.sla.alpha, satisfaction);
    state_.pending.pop_front();
    return state_.queue.q;
}

double Router::apply_exploration_feedback(std::uint64_t decision_t, std::vector<std::uint8_t> labels) {
    const auto& pending = check_pending(decision_t);
    auto& st = state_;
    if (!pending.explored) {
        throw ParameterError("decision " + std::to_string(decision_t) + " was not an exploration step");
    }
    if (labels.size() != st.config.zoo.size()) {
        throw RoutingError(RoutingError::Kind::missing_labels, "exploration feedback needs one label per model");
    }
    auto predictor = sgd_step(st.predictor, pending.features, labels);
    const auto outcome = resolve_exploration(st.config.zoo, std::move(labels));
    st.queue = queue_update(st.queue, st.config.sla.alpha, outcome.labels[outcome.returned.index]);
    st.predictor = std::move(predictor);
    st.pending.pop_front();
    return st.queue.q;
}

std::pair<RouterState, RoutingDecision> step(RouterState state, const RequestEvent& event,
                                             LabelSource& labels) {
    Router router(std::move(state));
    auto decision = router.step(event, labels);
    return {std::move(router.mutable_state()), std::move(decision)};
}

RouterState apply_feedback(RouterState state, std::uint64_t decision_t, int satisfaction) {
    Router router(std::move(state));
    router.apply_feedback(decision_t, satisfaction);
    return std::move(router.mutable_state());
}

}  // namespace messplus
