#include "edmpc/config.hpp"

#include "edmpc/error.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace edmpc {

namespace {

const std::vector<std::pair<std::string, std::string>>& default_entries() {
    static const std::vector<std::pair<std::string, std::string>> entries{
        // world
        {"width", "40"},
        {"height", "40"},
        {"n_citizens", "1120"},
        {"n_cops", "80"},
        {"vision", "7"},
        {"max_jail_term", "30"},
        {"k_arrest", "2.302585092994046"},
        {"jail_capacity", "400"},
        {"legitimacy", "0.85"},
        {"propaganda", "0.1"},
        {"cop_ratio_mode", "neighborhood"},
        {"cop_ratio_floor", "true"},
        // scenario
        {"steps", "8000"},
        {"legitimacy_random_start", "3000"},
        {"legitimacy_changes", "20"},
        {"legitimacy_min", "0.6"},
        {"legitimacy_max", "0.85"},
        {"comparison_steps", "3100"},
        // controller
        {"p_min", "0.06"},
        {"p_max", "0.6"},
        {"slope", "0.05"},
        {"midpoint", "50"},
        {"warmup_ticks", "3000"},
        {"control_coords", "jailed:0,jailed:2,jailed:4,quiet:0,quiet:2,quiet:4"},
        {"control_target", "active"},
        {"control_tp", "5"},
        {"theta", "2"},
        {"auto_theta", "false"},
        // analysis
        {"active_floor", "100"},
        {"min_duration", "200"},
        {"variance_window", "100"},
        {"variance_stride", "10"},
        {"legitimacy_threshold", "0.7"},
        {"legitimacy_label", "window_mean"},
        {"jacobian_theta", "2"},
    };
    return entries;
}

std::string trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return std::string(s);
}

} // namespace

Config Config::defaults() {
    Config c;
    for (const auto& [k, v] : default_entries()) c.values_[k] = v;
    return c;
}

const std::vector<std::string>& Config::known_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& e : default_entries()) k.push_back(e.first);
        return k;
    }();
    return keys;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    Config c = defaults();
    c.merge_text(buf.str(), path.string());
    return c;
}

void Config::merge_text(std::string_view text, std::string_view origin) {
    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const auto body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw UsageError(std::string(origin) + ":" + std::to_string(lineno) + ": expected key = value");
        }
        set(trim(std::string_view(body).substr(0, eq)), trim(std::string_view(body).substr(eq + 1)));
    }
}

void Config::set(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) throw UsageError("override must look like key=value");
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void Config::set(const std::string& key, const std::string& value) {
    const auto& keys = known_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
        throw UsageError("unknown config key '" + key + "'");
    }
    values_[key] = value;
}

const std::string& Config::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw UsageError("missing config key '" + key + "'");
    return it->second;
}

double Config::get_double(const std::string& key) const {
    const auto& v = get(key);
    double out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw UsageError("config key '" + key + "' expects a number, got '" + v + "'");
    }
    return out;
}

long Config::get_long(const std::string& key) const {
    const auto& v = get(key);
    long out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw UsageError("config key '" + key + "' expects an integer, got '" + v + "'");
    }
    return out;
}

bool Config::get_bool(const std::string& key) const {
    const auto& v = get(key);
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    throw UsageError("config key '" + key + "' expects true/false, got '" + v + "'");
}

std::string Config::to_text() const {
    std::string out;
    for (const auto& key : known_keys()) {
        out += key + " = " + get(key) + "\n";
    }
    return out;
}

ScenarioConfig ScenarioConfig::from(const Config& c) {
    ScenarioConfig s;
    auto& w = s.world;
    w.width = static_cast<int>(c.get_long("width"));
    w.height = static_cast<int>(c.get_long("height"));
    w.n_citizens = static_cast<int>(c.get_long("n_citizens"));
    w.n_cops = static_cast<int>(c.get_long("n_cops"));
    w.vision = c.get_double("vision");
    w.max_jail_term = static_cast<int>(c.get_long("max_jail_term"));
    w.k_arrest = c.get_double("k_arrest");
    w.jail_capacity = static_cast<int>(c.get_long("jail_capacity"));
    w.legitimacy = c.get_double("legitimacy");
    w.propaganda = c.get_double("propaganda");
    const auto& mode = c.get("cop_ratio_mode");
    if (mode == "neighborhood") {
        w.cop_ratio_mode = CopRatioMode::Neighborhood;
    } else if (mode == "cell") {
        w.cop_ratio_mode = CopRatioMode::Cell;
    } else {
        throw UsageError("cop_ratio_mode must be neighborhood or cell");
    }
    w.cop_ratio_floor = c.get_bool("cop_ratio_floor");
    w.validate();

    s.steps = c.get_long("steps");
    s.legitimacy_random_start = c.get_long("legitimacy_random_start");
    s.comparison_steps = c.get_long("comparison_steps");
    s.schedule.changes = static_cast<int>(c.get_long("legitimacy_changes"));
    s.schedule.low = c.get_double("legitimacy_min");
    s.schedule.high = c.get_double("legitimacy_max");
    if (s.steps < 1 || s.comparison_steps < 1) throw UsageError("steps must be >= 1");
    if (s.legitimacy_random_start < 0) throw UsageError("legitimacy_random_start must be >= 0");

    s.controller.p_min = c.get_double("p_min");
    s.controller.p_max = c.get_double("p_max");
    s.controller.slope = c.get_double("slope");
    s.controller.midpoint = c.get_double("midpoint");
    s.controller.validate();

    s.loop.warmup_ticks = c.get_long("warmup_ticks");
    s.loop.spec = EmbeddingSpec::parse(c.get("control_coords"), c.get("control_target"),
                                       static_cast<int>(c.get_long("control_tp")));
    s.loop.theta = c.get_double("theta");
    s.loop.auto_theta = c.get_bool("auto_theta");
    s.loop.validate();

    s.trapped.active_floor = c.get_double("active_floor");
    s.trapped.min_duration = c.get_long("min_duration");
    const long window = c.get_long("variance_window");
    const long stride = c.get_long("variance_stride");
    if (window < 2 || stride < 1) throw UsageError("variance_window must be >= 2 and variance_stride >= 1");
    s.variance.window = static_cast<std::size_t>(window);
    s.variance.stride = static_cast<std::size_t>(stride);
    s.variance.threshold = c.get_double("legitimacy_threshold");
    const auto& label = c.get("legitimacy_label");
    if (label == "window_mean") {
        s.variance.label = LegitimacyLabel::WindowMean;
    } else if (label == "window_end") {
        s.variance.label = LegitimacyLabel::WindowEnd;
    } else {
        throw UsageError("legitimacy_label must be window_mean or window_end");
    }
    s.jacobian_theta = c.get_double("jacobian_theta");
    return s;
}

LegitimacyFn legitimacy_for(const ScenarioConfig& cfg, std::uint64_t seed, LegitimacyMode mode, long steps,
                            long random_start) {
    const double nominal = cfg.world.legitimacy;
    if (mode == LegitimacyMode::Constant) {
        return [nominal](long) { return nominal; };
    }
    const long span = steps - random_start;
    auto schedule = make_legitimacy_schedule(seed, span, cfg.schedule);
    return [nominal, random_start, schedule = std::move(schedule)](long t) {
        return t <= random_start ? nominal : schedule.at(t - random_start);
    };
}

Frame simulate_scenario(const ScenarioConfig& cfg, std::uint64_t seed, bool control, LegitimacyMode mode) {
    const auto legitimacy = legitimacy_for(cfg, seed, mode, cfg.steps, cfg.legitimacy_random_start);
    if (!control) return run_scenario(cfg.world, seed, cfg.steps, legitimacy);
    EdmController controller(cfg.loop, cfg.controller, cfg.world.propaganda);
    return run_scenario(cfg.world, seed, cfg.steps, legitimacy, &controller);
}

Frame comparison_dataset(const ScenarioConfig& cfg, std::uint64_t seed) {
    const auto legitimacy = legitimacy_for(cfg, seed, LegitimacyMode::Random, cfg.comparison_steps, 0);
    return run_scenario(cfg.world, seed, cfg.comparison_steps, legitimacy);
}

} // namespace edmpc
