#include "edmpc/control.hpp"

#include "edmpc/edm.hpp"
#include "edmpc/error.hpp"
#include "edmpc/evaluation.hpp"
#include "edmpc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace edmpc {

void ControllerParams::validate() const {
    if (!(p_min < p_max)) throw UsageError("controller needs p_min < p_max");
    if (!(slope > 0.0)) throw UsageError("controller slope must be positive");
    if (!std::isfinite(midpoint)) throw UsageError("controller midpoint must be finite");
}

double propaganda_response(double active_forecast, const ControllerParams& params) {
    const double p =
        (params.p_max - params.p_min) / (1.0 + std::exp(-params.slope * (active_forecast - params.midpoint))) +
        params.p_min;
    // Rounding can push the sum a hair past either bound.
    return std::clamp(p, params.p_min, params.p_max);
}

double LegitimacySchedule::at(long tick) const {
    const auto it = std::upper_bound(change_times.begin(), change_times.end(), tick);
    return values[static_cast<std::size_t>(it - change_times.begin())];
}

LegitimacySchedule make_legitimacy_schedule(std::uint64_t seed, long total_ticks, const ScheduleParams& params) {
    if (params.changes < 0 || total_ticks <= params.changes) {
        throw UsageError("legitimacy schedule needs more ticks than change points");
    }
    if (!(params.low < params.high)) throw UsageError("legitimacy range is empty");
    Rng rng(seed, "legitimacy");
    LegitimacySchedule s;
    // Partial Fisher-Yates over 1 .. total_ticks - 1.
    std::vector<long> ticks(static_cast<std::size_t>(total_ticks - 1));
    for (std::size_t i = 0; i < ticks.size(); ++i) ticks[i] = static_cast<long>(i) + 1;
    for (int i = 0; i < params.changes; ++i) {
        const auto j = static_cast<std::size_t>(i) + rng.below(ticks.size() - static_cast<std::size_t>(i));
        std::swap(ticks[static_cast<std::size_t>(i)], ticks[j]);
    }
    s.change_times.assign(ticks.begin(), ticks.begin() + params.changes);
    std::sort(s.change_times.begin(), s.change_times.end());
    for (int i = 0; i <= params.changes; ++i) {
        // 1 - u lies in (0, 1], so the value lies in (low, high].
        s.values.push_back(params.low + (params.high - params.low) * (1.0 - rng.uniform()));
    }
    return s;
}

void LoopConfig::validate() const {
    spec.validate();
    if (spec.tp < 1) throw UsageError("control forecast horizon must be >= 1");
    const long minimum = spec.max_lag() + spec.tp + static_cast<long>(spec.dimension()) + 2;
    if (warmup_ticks < minimum) {
        throw UsageError("warmup_ticks must be at least " + std::to_string(minimum));
    }
    if (!(theta >= 0.0)) throw UsageError("theta must be >= 0");
}

namespace {

bool constant_states(const Embedding& lib) {
    for (Eigen::Index c = 0; c < lib.points.cols(); ++c) {
        if ((lib.points.col(c).array() != lib.points(0, c)).any()) return false;
    }
    return true;
}

} // namespace

ControlDecision closed_loop_controller(const Frame& history, const LoopConfig& config, const ControllerParams& params,
                                       double initial_propaganda, double previous_propaganda) {
    ControlDecision d;
    d.forecast = std::numeric_limits<double>::quiet_NaN();
    if (static_cast<long>(history.size()) < config.warmup_ticks) {
        d.propaganda = initial_propaganda;
        return d;
    }
    d.engaged = true;
    const Embedding library = build_generalized_embedding(history, config.spec);
    const long now = history.end_time();
    if (library.rows() < config.spec.dimension() + 2 || constant_states(library)) {
        d.degenerate = true;
        d.propaganda = previous_propaganda;
        return d;
    }
    const auto query = state_vector(history, config.spec, now);
    SMapOptions opts;
    opts.theta = config.theta;
    const auto out = smap_predict_one(library, query, opts);
    if (!std::isfinite(out.prediction) || !query.allFinite()) {
        d.degenerate = true;
        d.propaganda = previous_propaganda;
        return d;
    }
    d.forecast = out.prediction;
    d.propaganda = propaganda_response(out.prediction, params);
    return d;
}

EdmController::EdmController(LoopConfig config, ControllerParams params, double initial_propaganda)
    : config_(std::move(config)), params_(params), initial_(initial_propaganda) {
    config_.validate();
    params_.validate();
    last_.propaganda = initial_;
    last_.forecast = std::numeric_limits<double>::quiet_NaN();
}

double EdmController::update(const Frame& history, double current_propaganda) {
    last_seen_time_ = std::max(last_seen_time_, history.end_time());
    if (config_.auto_theta && !theta_tuned_ && static_cast<long>(history.size()) >= config_.warmup_ticks) {
        const auto lib = build_generalized_embedding(history, config_.spec);
        config_.theta = theta_scan(lib).best_value();
        theta_tuned_ = true;
    }
    last_ = closed_loop_controller(history, config_, params_, initial_, current_propaganda);
    if (last_.degenerate) ++degenerate_count_;
    return last_.propaganda;
}

} // namespace edmpc
