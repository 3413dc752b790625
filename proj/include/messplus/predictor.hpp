#pragma once

// Online multi-label satisfaction predictor: one logistic head per model over
// the augmented feature vector [x; 1], trained by single-sample SGD on the
// regularized cross entropy averaged over models.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "messplus/core.hpp"

namespace messplus {

/// Probabilities are kept inside [eps, 1 - eps] so the log-loss stays finite.
inline constexpr double kProbabilityEpsilon = 1e-12;

struct LearningRateSchedule {
    enum class Kind { pl_schedule, inverse_decay, constant };

    Kind kind = Kind::inverse_decay;
    double mu = 0.0;        // pl_schedule only
    double l_smooth = 1.0;  // pl_schedule only
    double eta0 = 0.05;
    double k0 = 200.0;

    /// Step size for the k-th SGD step (k >= 1).
    ///   pl_schedule:   min(2 / (mu (k + 1)), 1 / L)
    ///   inverse_decay: eta0 / (1 + k / k0)
    ///   constant:      eta0
    double rate(std::uint64_t k) const;

    void validate() const;

    static LearningRateSchedule inverse_decay(double eta0 = 0.05, double k0 = 200.0);
    static LearningRateSchedule constant(double eta);
    static LearningRateSchedule pl(double mu, double l_smooth);
};

std::string_view to_string(LearningRateSchedule::Kind kind) noexcept;
LearningRateSchedule::Kind schedule_kind_from_string(std::string_view name);

struct PredictorState {
    std::size_t models = 1;
    std::size_t dim = 1;
    /// models x (dim + 1), row-major; the last column of each row is the bias.
    std::vector<double> z;
    std::uint64_t k = 0;
    double mu = 0.0;
    LearningRateSchedule schedule;

    static PredictorState zeros(std::size_t models, std::size_t dim, double mu,
                                LearningRateSchedule schedule = {});

    std::size_t width() const noexcept { return dim + 1; }
    std::span<double> row(std::size_t m) { return {z.data() + m * width(), width()}; }
    std::span<const double> row(std::size_t m) const { return {z.data() + m * width(), width()}; }

    void validate() const;

    friend bool operator==(const PredictorState&, const PredictorState&);
};

double sigmoid(double logit) noexcept;

/// [x; 1]
std::vector<double> augment(std::span<const double> x);

/// s_hat_m = sigmoid(<z_m, [x; 1]>), clamped to [eps, 1 - eps].
std::vector<double> predict(const PredictorState& state, std::span<const double> x);

/// Cross entropy averaged over models plus (mu / 2) ||z||^2.
double loss(const PredictorState& state, std::span<const double> x,
            std::span<const std::uint8_t> labels);

/// Analytic gradient of `loss`, laid out like `z`: row m is
/// (1/M)(s_hat_m - s_m) [x; 1] + mu z_m.
std::vector<double> gradient(const PredictorState& state, std::span<const double> x,
                             std::span<const std::uint8_t> labels);

/// One step z <- z - eta_k grad, with eta_k taken from the schedule at k + 1.
/// Throws NumericError if the gradient or the updated parameters are not finite.
PredictorState sgd_step(PredictorState state, std::span<const double> x,
                        std::span<const std::uint8_t> labels);

}  // namespace messplus
