#include "messplus/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

namespace messplus {

MetricStream::MetricStream(std::size_t models, double alpha, bool keep_steps)
    : models_(models), alpha_(alpha), keep_steps_(keep_steps), call_counts_(models, 0) {
    if (models == 0) {
        throw ParameterError("metric stream needs at least one model");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ParameterError("alpha must lie in (0, 1)");
    }
}

void MetricStream::update(const RoutingDecision& d) {
    if (d.t != n_ + 1) {
        throw ParameterError("metric stream expected t = " + std::to_string(n_ + 1) + ", got " +
                             std::to_string(d.t));
    }
    if (!d.realized_satisfaction) {
        throw ParameterError("metric stream needs the realized satisfaction of request " + std::to_string(d.t));
    }
    if (d.chosen.index >= models_) {
        throw ParameterError("chosen model index out of range");
    }
    const int sat = *d.realized_satisfaction;
    ++n_;
    total_cost_j_ += d.cost_incurred_j;
    satisfied_ += static_cast<std::uint64_t>(sat);
    if (d.explored) {
        ++explorations_;
        exploration_cost_j_ += d.cost_incurred_j;
    } else {
        ++call_counts_[d.chosen.index];
    }
    queue_ = queue_update(queue_, alpha_, sat);
    queue_sum_ += queue_.q;
    max_queue_ = std::max(max_queue_, queue_.q);
    const double excess = queue_.q - std::sqrt(static_cast<double>(n_));
    max_queue_minus_sqrt_t_ = n_ == 1 ? excess : std::max(max_queue_minus_sqrt_t_, excess);

    if (keep_steps_) {
        steps_.push_back(StepRecord{d.t, d.explored, d.chosen.index, d.cost_incurred_j, sat, queue_.q,
                                    running_satisfaction(), running_cost_j()});
    }
}

double MetricStream::running_cost_j() const {
    return n_ == 0 ? std::numeric_limits<double>::quiet_NaN() : total_cost_j_ / static_cast<double>(n_);
}

double MetricStream::running_satisfaction() const {
    return n_ == 0 ? std::numeric_limits<double>::quiet_NaN()
                   : static_cast<double>(satisfied_) / static_cast<double>(n_);
}

RunSummary MetricStream::summary() const {
    if (n_ == 0) {
        throw ParameterError("summary of an empty metric stream is undefined");
    }
    RunSummary s;
    const double n = static_cast<double>(n_);
    s.requests = n_;
    s.total_cost_j = total_cost_j_;
    s.mean_cost_j = total_cost_j_ / n;
    s.mean_satisfaction = static_cast<double>(satisfied_) / n;
    s.call_counts = call_counts_;
    const std::uint64_t routed = n_ - explorations_;
    s.call_ratios.assign(models_, 0.0);
    for (std::size_t m = 0; m < models_; ++m) {
        if (routed > 0) {
            s.call_ratios[m] = static_cast<double>(call_counts_[m]) / static_cast<double>(routed);
        }
    }
    s.explorations = explorations_;
    s.exploration_cost_j = exploration_cost_j_;
    s.exploration_share = total_cost_j_ > 0.0 ? exploration_cost_j_ / total_cost_j_ : 0.0;
    s.llm_calls = routed + explorations_ * models_;
    s.mean_call_cost_j = total_cost_j_ / static_cast<double>(s.llm_calls);
    s.final_queue = queue_.q;
    s.queue_over_t = queue_.q / n;
    s.mean_queue = queue_sum_ / n;
    s.max_queue = max_queue_;
    s.max_queue_minus_sqrt_t = max_queue_minus_sqrt_t_;
    return s;
}

ComplianceReport compliance_report(const MetricStream& stream, const SlaParams& sla, std::uint64_t grace_t0) {
    const auto& steps = stream.steps();
    if (stream.size() < grace_t0) {
        throw ParameterError("stream shorter than the grace period");
    }
    if (steps.size() != stream.size()) {
        throw ParameterError("compliance report needs a stream that keeps its steps");
    }
    ComplianceReport r;
    r.grace_t0 = grace_t0;
    r.compliant = true;
    for (const auto& s : steps) {
        if (s.t < grace_t0) {
            continue;
        }
        const double gap = sla.alpha - s.run_sat;
        if (gap > 0.0) {
            if (r.compliant) {
                r.first_violation_t = s.t;
            }
            r.compliant = false;
            r.max_violation = std::max(r.max_violation, gap);
        }
    }
    if (!steps.empty()) {
        const double n = static_cast<double>(steps.size());
        r.final_satisfaction = steps.back().run_sat;
        r.shortfall = sla.alpha - r.final_satisfaction;
        r.queue_over_t = stream.queue().q / n;
        // Exact in real arithmetic; allow for rounding in the running sums.
        r.queue_bound_holds = r.shortfall <= r.queue_over_t + 1e-9;
    }
    return r;
}

std::optional<std::uint64_t> time_to_sla(const MetricStream& stream, double alpha, double tolerance) {
    const auto& steps = stream.steps();
    // Walk backwards: `candidate` is the earliest index whose suffix never
    // drops below alpha - tolerance and which itself reaches alpha.
    std::optional<std::uint64_t> candidate;
    for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
        if (it->run_sat < alpha - tolerance) {
            break;
        }
        if (it->run_sat >= alpha) {
            candidate = it->t;
        }
    }
    return candidate;
}

OverheadReport overhead_report(const MetricStream& stream, double predictor_cost_per_call_j) {
    if (!(predictor_cost_per_call_j >= 0.0)) {
        throw ParameterError("predictor cost must be >= 0");
    }
    const auto s = stream.summary();
    OverheadReport r;
    r.predictor_cost_j = predictor_cost_per_call_j;
    r.mean_call_cost_j = s.mean_call_cost_j;
    r.overhead_pct = 100.0 * predictor_cost_per_call_j / s.mean_call_cost_j;
    return r;
}

OverheadSummary overhead_summary(std::span<const std::pair<double, double>> predictor_and_call_j) {
    if (predictor_and_call_j.empty()) {
        throw ParameterError("overhead summary needs at least one scenario");
    }
    OverheadSummary out;
    double predictor_sum = 0.0;
    double call_sum = 0.0;
    double ratio_sum = 0.0;
    for (const auto& [predictor, call] : predictor_and_call_j) {
        if (!(call > 0.0)) {
            throw ParameterError("call cost must be > 0");
        }
        predictor_sum += predictor;
        call_sum += call;
        const double pct = 100.0 * predictor / call;
        out.per_scenario_pct.push_back(pct);
        ratio_sum += pct;
    }
    out.ratio_of_averages_pct = 100.0 * predictor_sum / call_sum;
    out.average_of_ratios_pct = ratio_sum / static_cast<double>(predictor_and_call_j.size());
    return out;
}

void write_steps_csv(std::ostream& out, const MetricStream& stream) {
    out << "t,explored,chosen,cost_j,sat,queue,run_sat,run_cost_j\n";
    char buf[256];
    for (const auto& s : stream.steps()) {
        std::snprintf(buf, sizeof buf, "%llu,%d,%zu,%.17g,%d,%.17g,%.17g,%.17g\n",
                      static_cast<unsigned long long>(s.t), s.explored ? 1 : 0, s.chosen, s.cost_j, s.sat,
                      s.queue, s.run_sat, s.run_cost_j);
        out << buf;
    }
}

}  // namespace messplus
