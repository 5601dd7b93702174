#ifndef EDMPC_CONFIG_HPP
#define EDMPC_CONFIG_HPP

#include "edmpc/abm.hpp"
#include "edmpc/analysis.hpp"
#include "edmpc/control.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace edmpc {

/// Flat `key = value` settings. Blank lines and `#` comments are ignored.
/// Every key must be one of known_keys(); values are validated on use.
class Config {
public:
    /// All keys with their default values.
    static Config defaults();
    static const std::vector<std::string>& known_keys();

    /// Defaults overlaid with the file's entries.
    static Config load(const std::filesystem::path& path);
    void merge_text(std::string_view text, std::string_view origin = "<text>");
    /// Applies one `key=value` override.
    void set(std::string_view assignment);
    void set(const std::string& key, const std::string& value);

    const std::string& get(const std::string& key) const;
    double get_double(const std::string& key) const;
    long get_long(const std::string& key) const;
    bool get_bool(const std::string& key) const;

    const std::map<std::string, std::string>& values() const noexcept { return values_; }
    std::string to_text() const;

private:
    std::map<std::string, std::string> values_;
};

/// Environment variable naming the default config file.
inline constexpr const char* kConfigEnvVar = "EDMPC_CONFIG";

/// Every tunable of a scenario run, resolved from a Config.
struct ScenarioConfig {
    WorldParams world;
    ControllerParams controller;
    LoopConfig loop;
    ScheduleParams schedule;
    long steps = 8000;
    /// Legitimacy stays at world.legitimacy through this tick; the random
    /// schedule covers the ticks after it.
    long legitimacy_random_start = 3000;
    long comparison_steps = 3100;
    TrappedOptions trapped;
    VarianceOptions variance;
    double jacobian_theta = 2.0;

    static ScenarioConfig from(const Config& config);
};

enum class LegitimacyMode { Constant, Random };

/// Legitimacy per tick for a run of `steps` ticks with the given seed.
LegitimacyFn legitimacy_for(const ScenarioConfig& cfg, std::uint64_t seed, LegitimacyMode mode, long steps,
                            long random_start);

/// One simulated scenario, optionally under EDM propaganda control.
Frame simulate_scenario(const ScenarioConfig& cfg, std::uint64_t seed, bool control, LegitimacyMode mode);

/// Uncontrolled run with random legitimacy from the first tick, comparison_steps long.
Frame comparison_dataset(const ScenarioConfig& cfg, std::uint64_t seed);

} // namespace edmpc

#endif
