#include "edmpc/abm.hpp"

#include "edmpc/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace edmpc {

void WorldParams::validate() const {
    if (width * height != 1600 || width < 1 || height < 1) {
        throw UsageError("world grid must hold 1600 cells");
    }
    if (n_citizens < 0 || n_cops < 0 || n_citizens + n_cops != 1200) {
        throw UsageError("citizens + cops must equal 1200");
    }
    if (!(vision >= 1.0)) {
        throw UsageError("vision must be >= 1");
    }
    if (max_jail_term < 1) {
        throw UsageError("max_jail_term must be >= 1");
    }
    if (!(k_arrest > 0.0) || !std::isfinite(k_arrest)) {
        throw UsageError("k_arrest must be positive");
    }
    if (jail_capacity < 0) {
        throw UsageError("jail_capacity must be >= 0 (0 = unlimited)");
    }
    if (!(legitimacy > 0.0 && legitimacy <= 1.0)) {
        throw UsageError("legitimacy must lie in (0, 1]");
    }
    if (!(propaganda >= 0.0) || !std::isfinite(propaganda)) {
        throw UsageError("propaganda must be finite and >= 0");
    }
}

World World::init(const WorldParams& params, std::uint64_t seed) {
    params.validate();
    const int cells = params.width * params.height;
    Rng placement(seed, "placement");
    Rng traits(seed, "traits");

    std::vector<int> order(static_cast<std::size_t>(cells));
    std::iota(order.begin(), order.end(), 0);
    placement.shuffle(order);

    std::vector<Citizen> citizens(static_cast<std::size_t>(params.n_citizens));
    std::vector<Cop> cops(static_cast<std::size_t>(params.n_cops));
    std::size_t next = 0;
    for (auto& c : citizens) {
        c.cell = order[next++];
        c.risk_aversion = traits.uniform();
        c.perceived_hardship = traits.uniform();
    }
    for (auto& cop : cops) cop.cell = order[next++];
    return World(params, std::move(citizens), std::move(cops), seed);
}

World::World(const WorldParams& params, std::vector<Citizen> citizens, std::vector<Cop> cops, std::uint64_t seed)
    : params_(params),
      gov_{params.legitimacy, params.propaganda},
      citizens_(std::move(citizens)),
      cops_(std::move(cops)),
      rng_(seed, "dynamics") {
    const int cells = params_.width * params_.height;
    if (citizens_.size() + cops_.size() > static_cast<std::size_t>(cells)) {
        throw UsageError("more agents than cells");
    }
    cops_at_.assign(static_cast<std::size_t>(cells), 0);
    active_at_.assign(static_cast<std::size_t>(cells), 0);
    free_at_.assign(static_cast<std::size_t>(cells), 0);
    citizens_at_.assign(static_cast<std::size_t>(cells), {});

    for (std::size_t i = 0; i < citizens_.size(); ++i) {
        auto& c = citizens_[i];
        if (c.cell < 0 || c.cell >= cells) throw UsageError("citizen outside the grid");
        if ((c.state == CitizenState::Jailed) != (c.jail_remaining > 0)) {
            throw UsageError("jail_remaining must be positive exactly for jailed citizens");
        }
        citizens_at_[static_cast<std::size_t>(c.cell)].push_back(static_cast<int>(i));
        if (c.state == CitizenState::Jailed) {
            ++jailed_;
        } else {
            ++free_at_[static_cast<std::size_t>(c.cell)];
        }
        if (c.state == CitizenState::Active) {
            ++active_at_[static_cast<std::size_t>(c.cell)];
            ++active_;
        }
    }
    for (const auto& cop : cops_) {
        if (cop.cell < 0 || cop.cell >= cells) throw UsageError("cop outside the grid");
        ++cops_at_[static_cast<std::size_t>(cop.cell)];
    }

    const int r = static_cast<int>(std::floor(params_.vision));
    const double r2 = params_.vision * params_.vision;
    std::vector<std::pair<int, int>> offsets;
    for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
            if (dx * dx + dy * dy <= r2) offsets.emplace_back(dx, dy);
        }
    }
    // On a small torus distinct offsets can land on one cell; keep each cell once.
    std::vector<int> cells_seen;
    for (int cell = 0; cell < cells; ++cell) {
        cells_seen.clear();
        for (auto [dx, dy] : offsets) {
            const int t = wrap(cell % params_.width + dx, cell / params_.width + dy);
            if (std::find(cells_seen.begin(), cells_seen.end(), t) == cells_seen.end()) cells_seen.push_back(t);
        }
        if (cell == 0) hood_size_ = cells_seen.size();
        neighborhood_.insert(neighborhood_.end(), cells_seen.begin(), cells_seen.end());
    }
}

int World::wrap(int x, int y) const noexcept {
    x = ((x % params_.width) + params_.width) % params_.width;
    y = ((y % params_.height) + params_.height) % params_.height;
    return y * params_.width + x;
}

void World::set_state(std::size_t i, CitizenState state) {
    auto& c = citizens_[i];
    if (c.state == state) return;
    const auto cell = static_cast<std::size_t>(c.cell);
    if (c.state == CitizenState::Active) {
        --active_at_[cell];
        --active_;
    }
    if (c.state == CitizenState::Jailed) {
        --jailed_;
        ++free_at_[cell];
    }
    if (state == CitizenState::Active) {
        ++active_at_[cell];
        ++active_;
    }
    if (state == CitizenState::Jailed) {
        ++jailed_;
        --free_at_[cell];
    }
    c.state = state;
}

void World::remove_citizen(std::size_t i) {
    auto& c = citizens_[i];
    const auto cell = static_cast<std::size_t>(c.cell);
    auto& occupants = citizens_at_[cell];
    occupants.erase(std::find(occupants.begin(), occupants.end(), static_cast<int>(i)));
    if (c.state != CitizenState::Jailed) --free_at_[cell];
    if (c.state == CitizenState::Active) --active_at_[cell];
}

void World::place_citizen(std::size_t i, int cell) {
    auto& c = citizens_[i];
    c.cell = cell;
    const auto idx = static_cast<std::size_t>(cell);
    citizens_at_[idx].push_back(static_cast<int>(i));
    if (c.state != CitizenState::Jailed) ++free_at_[idx];
    if (c.state == CitizenState::Active) ++active_at_[idx];
}

std::optional<int> World::random_empty_cell_near(int cell) {
    const auto hood = neighborhood(cell);
    const auto is_empty = [&](int t) {
        return cops_at_[static_cast<std::size_t>(t)] == 0 && free_at_[static_cast<std::size_t>(t)] == 0;
    };
    // Rejection sampling is uniform over the empty cells; a full scan settles
    // crowded neighbourhoods.
    for (int attempt = 0; attempt < 16; ++attempt) {
        const int t = hood[rng_.below(hood.size())];
        if (is_empty(t)) return t;
    }
    scratch_.clear();
    for (int t : hood) {
        if (is_empty(t)) scratch_.push_back(t);
    }
    if (scratch_.empty()) return std::nullopt;
    return scratch_[rng_.below(scratch_.size())];
}

void World::move_citizen(std::size_t i) {
    if (citizens_[i].state == CitizenState::Jailed) return;
    if (auto target = random_empty_cell_near(citizens_[i].cell)) {
        remove_citizen(i);
        place_citizen(i, *target);
    }
}

void World::move_cop(std::size_t j) {
    if (auto target = random_empty_cell_near(cops_[j].cell)) {
        --cops_at_[static_cast<std::size_t>(cops_[j].cell)];
        cops_[j].cell = *target;
        ++cops_at_[static_cast<std::size_t>(*target)];
    }
}

double World::cop_ratio(std::size_t i) const {
    const auto& c = citizens_[i];
    int cops = 0;
    int actives = 0;
    if (params_.cop_ratio_mode == CopRatioMode::Cell) {
        cops = cops_at_[static_cast<std::size_t>(c.cell)];
        actives = active_at_[static_cast<std::size_t>(c.cell)];
    } else {
        for (int cell : neighborhood(c.cell)) {
            const auto t = static_cast<std::size_t>(cell);
            cops += cops_at_[t];
            actives += active_at_[t];
        }
    }
    // The deciding citizen counts itself as Active exactly once.
    if (c.state == CitizenState::Active) --actives;
    const double ratio = static_cast<double>(cops) / static_cast<double>(actives + 1);
    return params_.cop_ratio_floor ? std::floor(ratio) : ratio;
}

double World::arrest_probability_for(std::size_t i) const {
    return arrest_probability(cop_ratio(i), params_.k_arrest);
}

void World::decide(std::size_t i) {
    const auto& c = citizens_[i];
    if (c.state == CitizenState::Jailed) return;
    // Risk only lowers the net grievance, so the arrest estimate can be skipped.
    if (grievance(c, gov_) <= gov_.propaganda) {
        set_state(i, CitizenState::Quiet);
        return;
    }
    set_state(i, citizen_behavior(c, arrest_probability_for(i), gov_));
}

std::optional<std::size_t> World::enforce(std::size_t j) {
    if (params_.jail_capacity > 0 && jailed_ >= params_.jail_capacity) return std::nullopt;
    const int cell = cops_[j].cell;
    auto& suspects = scratch_;
    suspects.clear();
    for (int t : neighborhood(cell)) {
        if (active_at_[static_cast<std::size_t>(t)] == 0) continue;
        for (int id : citizens_at_[static_cast<std::size_t>(t)]) {
            if (citizens_[static_cast<std::size_t>(id)].state == CitizenState::Active) suspects.push_back(id);
        }
    }
    if (suspects.empty()) return std::nullopt;
    const auto chosen = static_cast<std::size_t>(suspects[rng_.below(suspects.size())]);
    auto& c = citizens_[chosen];
    set_state(chosen, CitizenState::Jailed);
    c.jail_remaining = static_cast<int>(rng_.uniform_int(1, params_.max_jail_term));
    --cops_at_[static_cast<std::size_t>(cell)];
    cops_[j].cell = c.cell;
    ++cops_at_[static_cast<std::size_t>(c.cell)];
    return chosen;
}

TickObservation World::step() {
    ++time_;
    for (std::size_t i = 0; i < citizens_.size(); ++i) {
        auto& c = citizens_[i];
        if (c.state != CitizenState::Jailed) continue;
        if (--c.jail_remaining == 0) set_state(i, CitizenState::Quiet);
    }
    const std::size_t nc = citizens_.size();
    std::vector<std::size_t> order(nc + cops_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng_.shuffle(order);
    for (auto id : order) {
        if (id < nc) {
            if (citizens_[id].state == CitizenState::Jailed) continue;
            move_citizen(id);
            decide(id);
        } else {
            move_cop(id - nc);
            enforce(id - nc);
        }
    }
    return observe();
}

TickObservation World::observe() const {
    TickObservation obs;
    obs.time = time_;
    obs.active = active_;
    obs.jailed = jailed_;
    obs.quiet = static_cast<int>(citizens_.size()) - active_ - jailed_;
    obs.legitimacy = gov_.legitimacy;
    obs.propaganda = gov_.propaganda;
    return obs;
}

bool World::operator==(const World& other) const {
    return time_ == other.time_ && gov_ == other.gov_ && citizens_ == other.citizens_ && cops_ == other.cops_ &&
           rng_ == other.rng_;
}

Frame run_scenario(const WorldParams& params, std::uint64_t seed, long steps, const LegitimacyFn& legitimacy,
                   PropagandaPolicy* policy) {
    World world = World::init(params, seed);
    Frame history(1);
    for (const char* name : {"quiet", "active", "jailed", "legitimacy", "propaganda"}) history.add_column(name, {});
    if (policy) history.add_column("forecast_active", {});

    double propaganda = params.propaganda;
    std::vector<double> row;
    for (long t = 1; t <= steps; ++t) {
        world.gov().legitimacy = legitimacy ? legitimacy(t) : params.legitimacy;
        world.gov().propaganda = propaganda;
        const auto obs = world.step();
        row = {static_cast<double>(obs.quiet), static_cast<double>(obs.active), static_cast<double>(obs.jailed),
               obs.legitimacy, obs.propaganda};
        if (policy) row.push_back(std::numeric_limits<double>::quiet_NaN());
        history.append_row(row);
        if (policy) {
            propaganda = policy->update(history, propaganda);
            history.set_value("forecast_active", history.size() - 1, policy->last_forecast());
        }
    }
    return history;
}

} // namespace edmpc
