#include "messplus/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "messplus/kernels.hpp"

namespace messplus {

namespace {

void check_inputs(const PredictorState& state, std::span<const double> x) {
    if (x.size() != state.dim) {
        throw ParameterError("predictor expects " + std::to_string(state.dim) + " features, got " +
                             std::to_string(x.size()));
    }
    for (double v : x) {
        if (!std::isfinite(v)) {
            throw ParameterError("predictor input contains a non-finite value");
        }
    }
}

void check_labels(const PredictorState& state, std::span<const std::uint8_t> labels) {
    if (labels.size() != state.models) {
        throw ParameterError("label vector length does not match the number of models");
    }
    for (auto s : labels) {
        if (s > 1) {
            throw ParameterError("labels must be 0 or 1");
        }
    }
}

double clamp_probability(double p) noexcept {
    return std::clamp(p, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
}

std::vector<double> predict_augmented(const PredictorState& state, std::span<const double> xa) {
    std::vector<double> s_hat(state.models);
    for (std::size_t m = 0; m < state.models; ++m) {
        s_hat[m] = clamp_probability(sigmoid(kernels::dot(state.row(m), xa)));
    }
    return s_hat;
}

}  // namespace

double LearningRateSchedule::rate(std::uint64_t k) const {
    if (k == 0) {
        throw ParameterError("learning-rate schedule is indexed from k = 1");
    }
    const double kd = static_cast<double>(k);
    switch (kind) {
        case Kind::pl_schedule:
            return std::min(2.0 / (mu * (kd + 1.0)), 1.0 / l_smooth);
        case Kind::inverse_decay:
            return eta0 / (1.0 + kd / k0);
        case Kind::constant:
            return eta0;
    }
    return eta0;
}

void LearningRateSchedule::validate() const {
    switch (kind) {
        case Kind::pl_schedule:
            if (!(mu > 0.0) || !(l_smooth > 0.0)) {
                throw ParameterError("pl_schedule needs mu > 0 and L > 0");
            }
            break;
        case Kind::inverse_decay:
            if (!(eta0 > 0.0) || !(k0 > 0.0)) {
                throw ParameterError("inverse_decay needs eta0 > 0 and k0 > 0");
            }
            break;
        case Kind::constant:
            if (!(eta0 > 0.0)) {
                throw ParameterError("constant schedule needs eta0 > 0");
            }
            break;
    }
}

LearningRateSchedule LearningRateSchedule::inverse_decay(double eta0, double k0) {
    LearningRateSchedule s;
    s.kind = Kind::inverse_decay;
    s.eta0 = eta0;
    s.k0 = k0;
    return s;
}

LearningRateSchedule LearningRateSchedule::constant(double eta) {
    LearningRateSchedule s;
    s.kind = Kind::constant;
    s.eta0 = eta;
    return s;
}

LearningRateSchedule LearningRateSchedule::pl(double mu, double l_smooth) {
    LearningRateSchedule s;
    s.kind = Kind::pl_schedule;
    s.mu = mu;
    s.l_smooth = l_smooth;
    return s;
}

std::string_view to_string(LearningRateSchedule::Kind kind) noexcept {
    switch (kind) {
        case LearningRateSchedule::Kind::pl_schedule:
            return "pl_schedule";
        case LearningRateSchedule::Kind::inverse_decay:
            return "inverse_decay";
        case LearningRateSchedule::Kind::constant:
            return "constant";
    }
    return "inverse_decay";
}

LearningRateSchedule::Kind schedule_kind_from_string(std::string_view name) {
    if (name == "pl_schedule") {
        return LearningRateSchedule::Kind::pl_schedule;
    }
    if (name == "inverse_decay") {
        return LearningRateSchedule::Kind::inverse_decay;
    }
    if (name == "constant") {
        return LearningRateSchedule::Kind::constant;
    }
    throw ParameterError("unknown learning-rate schedule: " + std::string(name));
}

PredictorState PredictorState::zeros(std::size_t models, std::size_t dim, double mu,
                                     LearningRateSchedule schedule) {
    PredictorState state;
    state.models = models;
    state.dim = dim;
    state.z.assign(models * (dim + 1), 0.0);
    state.mu = mu;
    state.schedule = schedule;
    state.validate();
    return state;
}

void PredictorState::validate() const {
    if (models == 0 || dim == 0) {
        throw ParameterError("predictor needs at least one model and one feature");
    }
    if (z.size() != models * (dim + 1)) {
        throw ParameterError("predictor parameter matrix has the wrong shape");
    }
    if (!(mu >= 0.0)) {
        throw ParameterError("regularisation weight mu must be >= 0");
    }
    for (double v : z) {
        if (!std::isfinite(v)) {
            throw NumericError("predictor parameters are not finite");
        }
    }
    schedule.validate();
}

bool operator==(const PredictorState& a, const PredictorState& b) {
    const auto& sa = a.schedule;
    const auto& sb = b.schedule;
    return a.models == b.models && a.dim == b.dim && a.z == b.z && a.k == b.k && a.mu == b.mu &&
           sa.kind == sb.kind && sa.mu == sb.mu && sa.l_smooth == sb.l_smooth && sa.eta0 == sb.eta0 &&
           sa.k0 == sb.k0;
}

double sigmoid(double logit) noexcept {
    if (logit >= 0.0) {
        return 1.0 / (1.0 + std::exp(-logit));
    }
    const double e = std::exp(logit);
    return e / (1.0 + e);
}

std::vector<double> augment(std::span<const double> x) {
    std::vector<double> xa(x.begin(), x.end());
    xa.push_back(1.0);
    return xa;
}

std::vector<double> predict(const PredictorState& state, std::span<const double> x) {
    check_inputs(state, x);
    const auto xa = augment(x);
    return predict_augmented(state, xa);
}

double loss(const PredictorState& state, std::span<const double> x,
            std::span<const std::uint8_t> labels) {
    check_inputs(state, x);
    check_labels(state, labels);
    const auto s_hat = predict_augmented(state, augment(x));
    double ce = 0.0;
    for (std::size_t m = 0; m < state.models; ++m) {
        const double p = clamp_probability(s_hat[m]);
        ce += labels[m] ? std::log(p) : std::log(1.0 - p);
    }
    ce = -ce / static_cast<double>(state.models);
    return ce + 0.5 * state.mu * kernels::dot(state.z, state.z);
}

std::vector<double> gradient(const PredictorState& state, std::span<const double> x,
                             std::span<const std::uint8_t> labels) {
    check_inputs(state, x);
    check_labels(state, labels);
    const auto xa = augment(x);
    const auto s_hat = predict_augmented(state, xa);
    const double inv_m = 1.0 / static_cast<double>(state.models);
    std::vector<double> grad(state.z.size());
    for (std::size_t m = 0; m < state.models; ++m) {
        const double coef = (s_hat[m] - static_cast<double>(labels[m])) * inv_m;
        const auto zm = state.row(m);
        for (std::size_t i = 0; i < xa.size(); ++i) {
            grad[m * xa.size() + i] = coef * xa[i] + state.mu * zm[i];
        }
    }
    return grad;
}

PredictorState sgd_step(PredictorState state, std::span<const double> x,
                        std::span<const std::uint8_t> labels) {
    check_inputs(state, x);
    check_labels(state, labels);
    const auto xa = augment(x);
    const auto s_hat = predict_augmented(state, xa);
    const double eta = state.schedule.rate(state.k + 1);
    const double inv_m = 1.0 / static_cast<double>(state.models);
    for (std::size_t m = 0; m < state.models; ++m) {
        const double coef = (s_hat[m] - static_cast<double>(labels[m])) * inv_m;
        if (!std::isfinite(coef)) {
            throw NumericError("non-finite gradient in predictor update");
        }
        kernels::sgd_row(state.row(m), xa, coef, state.mu, eta);
    }
    for (double v : state.z) {
        if (!std::isfinite(v)) {
            throw NumericError("predictor update produced non-finite parameters");
        }
    }
    ++state.k;
    return state;
}

}  // namespace messplus
