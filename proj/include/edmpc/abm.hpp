#ifndef EDMPC_ABM_HPP
#define EDMPC_ABM_HPP

#include "edmpc/frame.hpp"
#include "edmpc/rng.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace edmpc {

enum class CitizenState : std::uint8_t { Quiet, Active, Jailed };

/// How the cop-to-active ratio behind a citizen's arrest estimate is counted.
enum class CopRatioMode : std::uint8_t {
    Neighborhood, ///< cops and Active citizens within the citizen's vision
    Cell,         ///< only the citizen's own cell
};

/// Civil-violence world on a torus. Population defaults split 1200 agents
/// into 1120 citizens and 80 cops on 40 x 40 cells.
struct WorldParams {
    int width = 40;
    int height = 40;
    int n_citizens = 1120;
    int n_cops = 80;
    double vision = 7.0;
    int max_jail_term = 30;
    /// ln(10): one cop per Active citizen gives a 0.9 arrest probability.
    double k_arrest = 2.302585092994046;
    /// Maximum simultaneously jailed citizens; 0 means unlimited.
    int jail_capacity = 400;
    double legitimacy = 0.85;
    double propaganda = 0.1;
    CopRatioMode cop_ratio_mode = CopRatioMode::Neighborhood;
    /// Floor the cop ratio to whole cops per Active citizen before the exponential.
    bool cop_ratio_floor = true;

    /// Throws UsageError for an inconsistent configuration.
    void validate() const;
};

struct Citizen {
    CitizenState state = CitizenState::Quiet;
    double risk_aversion = 0.0;
    double perceived_hardship = 0.0;
    int jail_remaining = 0;
    int cell = 0;

    bool operator==(const Citizen&) const = default;
};

struct Cop {
    int cell = 0;
    bool operator==(const Cop&) const = default;
};

struct GovState {
    double legitimacy = 0.85;
    double propaganda = 0.1;
    bool operator==(const GovState&) const = default;
};

struct TickObservation {
    long time = 0;
    int quiet = 0;
    int active = 0;
    int jailed = 0;
    double legitimacy = 0.0;
    double propaganda = 0.0;
};

inline double grievance(const Citizen& c, const GovState& gov) {
    return c.perceived_hardship * (1.0 - gov.legitimacy);
}

inline double arrest_probability(double cop_ratio, double k = 2.302585092994046) {
    return 1.0 - std::exp(-k * cop_ratio);
}

/// Active iff grievance - risk_aversion * arrest_probability > propaganda.
inline CitizenState citizen_behavior(const Citizen& c, double arrest_prob, const GovState& gov) {
    return grievance(c, gov) - c.risk_aversion * arrest_prob > gov.propaganda ? CitizenState::Active
                                                                                : CitizenState::Quiet;
}

class World {
public:
    /// Random placement on distinct cells, hardship and risk aversion drawn once.
    static World init(const WorldParams& params, std::uint64_t seed);

    /// Explicit placement; the population may differ from params' counts.
    World(const WorldParams& params, std::vector<Citizen> citizens, std::vector<Cop> cops, std::uint64_t seed);

    /// One tick: jail countdown and release, then every free agent in shuffled
    /// order moves and acts (citizens decide, cops enforce).
    TickObservation step();

    TickObservation observe() const;

    long time() const noexcept { return time_; }
    const WorldParams& params() const noexcept { return params_; }
    GovState& gov() noexcept { return gov_; }
    const GovState& gov() const noexcept { return gov_; }
    const std::vector<Citizen>& citizens() const noexcept { return citizens_; }
    const std::vector<Cop>& cops() const noexcept { return cops_; }

    /// Cops per Active citizen (the citizen counted as Active) seen from `cell`.
    double cop_ratio(std::size_t citizen) const;
    double arrest_probability_for(std::size_t citizen) const;

    void move_citizen(std::size_t citizen);
    void move_cop(std::size_t cop);
    void decide(std::size_t citizen);
    /// Arrests one Active citizen in the cop's vision, chosen uniformly, and
    /// returns its index.
    std::optional<std::size_t> enforce(std::size_t cop);

    int jailed_count() const noexcept { return jailed_; }

    bool operator==(const World& other) const;

private:
    int wrap(int x, int y) const noexcept;
    std::span<const int> neighborhood(int cell) const noexcept {
        return {neighborhood_.data() + static_cast<std::size_t>(cell) * hood_size_, hood_size_};
    }
    void set_state(std::size_t citizen, CitizenState state);
    void place_citizen(std::size_t citizen, int cell);
    void remove_citizen(std::size_t citizen);
    std::optional<int> random_empty_cell_near(int cell);

    WorldParams params_;
    GovState gov_;
    long time_ = 0;
    std::vector<Citizen> citizens_;
    std::vector<Cop> cops_;
    Rng rng_;

    // Per-cell bookkeeping. Free citizens are the non-jailed ones.
    std::vector<int> cops_at_;
    std::vector<int> active_at_;
    std::vector<int> free_at_;
    std::vector<std::vector<int>> citizens_at_;
    // Cells within vision of each cell, hood_size_ entries per cell.
    std::vector<int> neighborhood_;
    std::size_t hood_size_ = 0;
    std::vector<int> scratch_;
    int jailed_ = 0;
    int active_ = 0;
};

/// Sets propaganda for the next tick from the observed history.
class PropagandaPolicy {
public:
    virtual ~PropagandaPolicy() = default;
    /// `history` ends at the tick just completed.
    virtual double update(const Frame& history, double current_propaganda) = 0;
    /// Active forecast behind the last update, NaN when none was made.
    virtual double last_forecast() const = 0;
};

using LegitimacyFn = std::function<double(long tick)>;

/// Runs `steps` ticks starting from a fresh world. Columns: quiet, active,
/// jailed, legitimacy, propaganda, plus forecast_active when a policy is given.
/// Propaganda stays at params.propaganda without a policy.
Frame run_scenario(const WorldParams& params, std::uint64_t seed, long steps, const LegitimacyFn& legitimacy,
                   PropagandaPolicy* policy = nullptr);

} // namespace edmpc

#endif
