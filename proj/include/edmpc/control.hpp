#ifndef EDMPC_CONTROL_HPP
#define EDMPC_CONTROL_HPP

#include "edmpc/abm.hpp"
#include "edmpc/embedding.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace edmpc {

/// Logistic propaganda response bounds, slope and midpoint.
struct ControllerParams {
    double p_min = 0.06;
    double p_max = 0.6;
    double slope = 0.05;
    double midpoint = 50.0;

    void validate() const;
};

/// (p_max - p_min) / (1 + exp(-slope (active - midpoint))) + p_min.
double propaganda_response(double active_forecast, const ControllerParams& params);

/// Piecewise-constant legitimacy: values[0] until change_times[0], then
/// values[i + 1] from change_times[i] on.
struct LegitimacySchedule {
    std::vector<long> change_times;
    std::vector<double> values;

    double at(long tick) const;
};

struct ScheduleParams {
    int changes = 20;
    double low = 0.6;  // exclusive
    double high = 0.85; // inclusive
};

/// Change points drawn without replacement from (0, total_ticks); every
/// segment value uniform on (low, high].
LegitimacySchedule make_legitimacy_schedule(std::uint64_t seed, long total_ticks, const ScheduleParams& params = {});

struct LoopConfig {
    /// Observations recorded before the controller engages.
    long warmup_ticks = 3000;
    EmbeddingSpec spec = control_embedding_spec();
    double theta = 2.0;
    /// Pick theta once, on the warmup library, with theta_scan.
    bool auto_theta = false;

    void validate() const;
};

struct ControlDecision {
    double propaganda = 0.0;
    double forecast = 0.0; ///< NaN before warmup or when degenerate
    bool engaged = false;
    bool degenerate = false;
};

/// One controller evaluation on the history up to the tick just completed.
/// Before warmup the initial propaganda is returned. Afterwards the library is
/// every embedding row whose target is already observed and the query is the
/// state at the last tick; a degenerate library (all states identical) or a
/// non-finite forecast holds `previous_propaganda`.
ControlDecision closed_loop_controller(const Frame& history, const LoopConfig& config, const ControllerParams& params,
                                       double initial_propaganda, double previous_propaganda);

/// Stateful closed loop used by run_scenario.
class EdmController final : public PropagandaPolicy {
public:
    EdmController(LoopConfig config, ControllerParams params, double initial_propaganda);

    double update(const Frame& history, double current_propaganda) override;
    double last_forecast() const override { return last_.forecast; }

    const ControlDecision& last_decision() const noexcept { return last_; }
    double theta() const noexcept { return config_.theta; }
    std::size_t degenerate_count() const noexcept { return degenerate_count_; }
    /// Largest history end time seen by update; the loop never reads past it.
    long last_seen_time() const noexcept { return last_seen_time_; }

private:
    LoopConfig config_;
    ControllerParams params_;
    double initial_;
    bool theta_tuned_ = false;
    ControlDecision last_;
    std::size_t degenerate_count_ = 0;
    long last_seen_time_ = 0;
};

} // namespace edmpc

#endif
