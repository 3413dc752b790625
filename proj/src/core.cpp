#include "messplus/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace messplus {

namespace {

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

double GroundTruthModel::probability(std::span<const double> features) const {
    if (kind == Kind::fixed_rate) {
        return rate;
    }
    if (weights.size() != features.size() + 1) {
        throw ParameterError("ground truth weight dimension does not match features");
    }
    double logit = weights.back();
    for (std::size_t i = 0; i < features.size(); ++i) {
        logit += weights[i] * features[i];
    }
    return sigmoid(logit);
}

void GroundTruthModel::validate(std::size_t dim) const {
    if (!(rate >= 0.0 && rate <= 1.0)) {
        throw ParameterError("ground truth rate must lie in [0, 1]");
    }
    if (kind == Kind::logistic) {
        if (weights.size() != dim + 1) {
            throw ParameterError("logistic ground truth needs d + 1 weights");
        }
        for (double w : weights) {
            if (!std::isfinite(w)) {
                throw ParameterError("logistic ground truth weights must be finite");
            }
        }
    }
}

void ModelProfile::validate() const {
    if (!(base_cost_j > 0.0) || !std::isfinite(base_cost_j)) {
        throw ParameterError("model '" + display_name + "': base cost must be > 0");
    }
    if (!(cost_per_token_j >= 0.0) || !std::isfinite(cost_per_token_j)) {
        throw ParameterError("model '" + display_name + "': per-token cost must be >= 0");
    }
    if (truth && !(truth->rate >= 0.0 && truth->rate <= 1.0)) {
        throw ParameterError("model '" + display_name + "': truth rate must lie in [0, 1]");
    }
}

void ZooConfig::validate() const {
    if (models.empty()) {
        throw ParameterError("model zoo is empty");
    }
    for (std::size_t i = 0; i < models.size(); ++i) {
        if (models[i].id.index != i) {
            throw ParameterError("model ids must be dense and ordered");
        }
        models[i].validate();
    }
    if (largest.index >= models.size()) {
        throw ParameterError("largest model index out of range");
    }
}

void SlaParams::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ParameterError("alpha must lie in (0, 1)");
    }
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw ParameterError("V must be > 0");
    }
    if (!(c > 0.0) || !std::isfinite(c)) {
        throw ParameterError("c must be > 0");
    }
}

VirtualQueue queue_update(VirtualQueue queue, double alpha, int satisfaction) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ParameterError("alpha must lie in (0, 1)");
    }
    if (satisfaction != 0 && satisfaction != 1) {
        throw ParameterError("satisfaction must be 0 or 1");
    }
    if (!(queue.q >= 0.0)) {
        throw ParameterError("queue backlog must be nonnegative");
    }
    queue.q = std::max(0.0, queue.q + alpha - static_cast<double>(satisfaction));
    ++queue.t;
    return queue;
}

double request_cost(const ModelProfile& profile, const RequestEvent& event) {
    return profile.base_cost_j + profile.cost_per_token_j * static_cast<double>(event.token_count);
}

std::vector<double> zoo_costs(const ZooConfig& zoo, const RequestEvent& event) {
    if (event.costs_j) {
        if (event.costs_j->size() != zoo.size()) {
            throw ParameterError("recorded costs do not match zoo size");
        }
        return *event.costs_j;
    }
    std::vector<double> costs;
    costs.reserve(zoo.size());
    for (const auto& m : zoo.models) {
        costs.push_back(request_cost(m, event));
    }
    return costs;
}

std::pair<double, double> zoo_cost_extremes(const ZooConfig& zoo, const RequestEvent& event) {
    const auto costs = zoo_costs(zoo, event);
    if (costs.empty()) {
        throw ParameterError("model zoo is empty");
    }
    const auto [lo, hi] = std::minmax_element(costs.begin(), costs.end());
    return {*lo, *hi};
}

}  // namespace messplus
