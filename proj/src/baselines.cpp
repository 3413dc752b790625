#include "messplus/baselines.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "messplus/router.hpp"

namespace messplus {

namespace {

int label_of(const RequestEvent& event, ModelId model) {
    if (!event.labels || model.index >= event.labels->size()) {
        throw RoutingError(RoutingError::Kind::missing_labels,
                           "request " + std::to_string(event.t) + " carries no label for model " +
                               std::to_string(model.index));
    }
    return (*event.labels)[model.index];
}

RoutingDecision single_choice(const RequestEvent& event, const std::vector<double>& costs, ModelId chosen) {
    RoutingDecision d;
    d.t = event.t;
    d.chosen = chosen;
    d.y.assign(costs.size(), 0);
    d.y[chosen.index] = 1;
    d.cost_incurred_j = costs[chosen.index];
    d.realized_satisfaction = label_of(event, chosen);
    return d;
}

}  // namespace

double GuessingPolicy::expected_accuracy() const {
    return std::inner_product(probs.begin(), probs.end(), source_accuracies.begin(), 0.0);
}

GuessingPolicy calibrate_guessing(std::span<const double> accuracies, double alpha) {
    const std::size_t n = accuracies.size();
    if (n == 0) {
        throw ParameterError("no accuracies given");
    }
    for (double a : accuracies) {
        if (!(a >= 0.0 && a <= 1.0)) {
            throw ParameterError("accuracies must lie in [0, 1]");
        }
    }
    if (alpha > *std::max_element(accuracies.begin(), accuracies.end())) {
        throw InfeasibleSlaError("Alpha too high");
    }

    GuessingPolicy out;
    out.source_accuracies.assign(accuracies.begin(), accuracies.end());
    auto& p = out.probs;
    p.assign(n, 1.0 / static_cast<double>(n));

    for (int iter = 0; iter < 5000; ++iter) {
        const double current = std::inner_product(p.begin(), p.end(), accuracies.begin(), 0.0);
        if (current >= alpha - 1e-6) {
            return out;
        }
        for (std::size_t i = 0; i < n; ++i) {
            p[i] *= accuracies[i] > current ? 1.01 : 0.99;
        }
        const double total = std::accumulate(p.begin(), p.end(), 0.0);
        for (double& v : p) {
            v /= total;
        }
    }

    // Descending accuracy; equal accuracies keep numpy's argsort()[::-1]
    // order (higher index first).
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return accuracies[a] < accuracies[b]; });
    std::reverse(order.begin(), order.end());

    const double best_acc = accuracies[order.front()];
    const double worst_acc = accuracies[order.back()];
    constexpr double min_prob = 1e-10;
    p.assign(n, min_prob);
    double remaining = 1.0 - static_cast<double>(n) * min_prob;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t idx = order[i];
        if (i == n - 1) {
            p[idx] += remaining;
        } else {
            const double spread = best_acc - worst_acc;
            const double weight = spread > 0.0 ? (accuracies[idx] - worst_acc) / spread : 1.0;
            const double allocation = remaining * weight * 0.8;
            p[idx] += allocation;
            remaining -= allocation;
        }
    }
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& v : p) {
        v /= total;
    }
    return out;
}

ModelId route_single(ModelId model) noexcept {
    return model;
}

ModelId route_threshold(double s_hat_small, double threshold, ModelId small, ModelId large) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw ParameterError("threshold must lie in [0, 1]");
    }
    return s_hat_small >= threshold ? small : large;
}

ModelId cheapest_model(std::span<const double> costs) {
    if (costs.empty()) {
        throw ParameterError("cannot select from an empty zoo");
    }
    return ModelId{static_cast<std::size_t>(std::min_element(costs.begin(), costs.end()) - costs.begin())};
}

ModelId route_oracle(std::span<const std::uint8_t> labels, std::span<const double> costs) {
    if (labels.size() != costs.size()) {
        throw ParameterError("labels and costs differ in length");
    }
    std::optional<std::size_t> best;
    for (std::size_t m = 0; m < costs.size(); ++m) {
        if (labels[m] && (!best || costs[m] < costs[*best])) {
            best = m;
        }
    }
    return best ? ModelId{*best} : cheapest_model(costs);
}

SingleModelPolicy::SingleModelPolicy(ZooConfig zoo, ModelId model) : zoo_(std::move(zoo)), model_(model) {
    zoo_.validate();
    if (model_.index >= zoo_.size()) {
        throw ParameterError("single-model policy: model index out of range");
    }
}

std::string SingleModelPolicy::name() const {
    return "single:" + zoo_[model_].display_name;
}

RoutingDecision SingleModelPolicy::decide(const RequestEvent& event) {
    return single_choice(event, zoo_costs(zoo_, event), route_single(model_));
}

GuessingRouter::GuessingRouter(ZooConfig zoo, GuessingPolicy policy, std::uint64_t seed)
    : zoo_(std::move(zoo)), policy_(std::move(policy)), rng_(seed) {
    zoo_.validate();
    if (policy_.probs.size() != zoo_.size()) {
        throw ParameterError("guessing policy does not match zoo size");
    }
}

RoutingDecision GuessingRouter::decide(const RequestEvent& event) {
    const double u = rng_.uniform();
    std::size_t chosen = policy_.probs.size() - 1;
    double cumulative = 0.0;
    for (std::size_t m = 0; m < policy_.probs.size(); ++m) {
        cumulative += policy_.probs[m];
        if (u < cumulative) {
            chosen = m;
            break;
        }
    }
    return single_choice(event, zoo_costs(zoo_, event), ModelId{chosen});
}

ThresholdRouter::ThresholdRouter(ZooConfig zoo, Options options)
    : zoo_(std::move(zoo)), options_(std::move(options)), rng_(options_.seed) {
    zoo_.validate();
    if (options_.small.index >= zoo_.size() || options_.large.index >= zoo_.size()) {
        throw ParameterError("threshold router: model index out of range");
    }
    predictor_ = PredictorState::zeros(zoo_.size(), options_.extractor.dim, options_.mu, options_.schedule);
}

RoutingDecision ThresholdRouter::decide(const RequestEvent& event) {
    const auto costs = zoo_costs(zoo_, event);
    const auto x = featurize(options_.extractor, event);
    const double p = exploration_probability(options_.c, t_);
    const bool explore = rng_.uniform() < p || t_ == 1;
    const auto s_hat = predict(predictor_, x);
    ++t_;

    if (!explore) {
        auto d = single_choice(event, costs,
                               route_threshold(s_hat[options_.small.index], options_.threshold,
                                               options_.small, options_.large));
        d.s_hat = s_hat;
        return d;
    }
    if (!event.labels || event.labels->size() != zoo_.size()) {
        throw RoutingError(RoutingError::Kind::missing_labels, "exploration needs a label for every model");
    }
    predictor_ = sgd_step(std::move(predictor_), x, *event.labels);
    RoutingDecision d;
    d.t = event.t;
    d.explored = true;
    d.chosen = zoo_.largest;
    d.y.assign(zoo_.size(), 1);
    d.s_hat = s_hat;
    for (double c : costs) {
        d.cost_incurred_j += c;
    }
    d.realized_satisfaction = label_of(event, zoo_.largest);
    return d;
}

OracleRouter::OracleRouter(ZooConfig zoo) : zoo_(std::move(zoo)) {
    zoo_.validate();
}

RoutingDecision OracleRouter::decide(const RequestEvent& event) {
    const auto costs = zoo_costs(zoo_, event);
    if (!event.labels) {
        throw RoutingError(RoutingError::Kind::missing_labels, "oracle needs full labels");
    }
    return single_choice(event, costs, route_oracle(*event.labels, costs));
}

}  // namespace messplus
