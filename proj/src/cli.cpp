#include "edmpc/cli.hpp"

#include "edmpc/analysis.hpp"
#include "edmpc/config.hpp"
#include "edmpc/error.hpp"
#include "edmpc/evaluation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>
#include <unistd.h>

namespace edmpc {

namespace fs = std::filesystem;

namespace {

/// Files are written into a staging directory next to the destination and
/// moved into place only after the whole command succeeded.
class OutputDir {
public:
    explicit OutputDir(fs::path dest) : dest_(std::move(dest)) {
        staging_ = dest_;
        staging_ += ".staging-" + std::to_string(::getpid());
        fs::remove_all(staging_);
        fs::create_directories(staging_);
    }
    OutputDir(const OutputDir&) = delete;
    OutputDir& operator=(const OutputDir&) = delete;
    ~OutputDir() {
        std::error_code ec;
        if (!committed_) fs::remove_all(staging_, ec);
    }

    fs::path file(const std::string& name) {
        std::lock_guard lock(mu_);
        files_.push_back(name);
        return staging_ / name;
    }

    std::vector<std::string> files() const {
        auto sorted = files_;
        std::sort(sorted.begin(), sorted.end());
        return sorted;
    }

    void commit() {
        fs::create_directories(dest_);
        for (const auto& name : files_) fs::rename(staging_ / name, dest_ / name);
        fs::remove_all(staging_);
        committed_ = true;
    }

private:
    fs::path dest_;
    fs::path staging_;
    std::vector<std::string> files_;
    std::mutex mu_;
    bool committed_ = false;
};

std::ofstream open_out(const fs::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write '" + path.string() + "'");
    return f;
}

struct CommonOptions {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
};

Config resolve_config(const CommonOptions& common) {
    std::string path = common.config_path;
    if (path.empty()) {
        if (const char* env = std::getenv(kConfigEnvVar); env && *env) path = env;
    }
    Config cfg = path.empty() ? Config::defaults() : Config::load(path);
    for (const auto& o : common.overrides) cfg.set(o);
    return cfg;
}

void add_common(CLI::App* cmd, CommonOptions& common, bool with_config) {
    if (with_config) {
        cmd->add_option("--config", common.config_path, "Flat key = value config file (default: $EDMPC_CONFIG)");
        cmd->add_option("--set", common.overrides, "Override one config key (key=value); repeatable");
    }
    cmd->add_option("--out", common.out_dir, "Output directory")->required();
}

void write_manifest(OutputDir& dir, const std::string& command, const std::vector<std::string>& args,
                    const Config* config, const std::vector<std::uint64_t>& seeds, double seconds) {
    nlohmann::ordered_json m;
    m["tool"] = "edmpc";
    m["version"] = kVersion;
    m["command"] = command;
    m["args"] = args;
    m["config"] = nlohmann::ordered_json::object();
    if (config) {
        for (const auto& key : Config::known_keys()) m["config"][key] = config->get(key);
    }
    m["seeds"] = seeds;
    m["outputs"] = dir.files();
    m["wall_clock_seconds"] = seconds;
    auto f = open_out(dir.file("manifest.json"));
    f << m.dump(2) << '\n';
}

Frame load_data(const std::string& path) {
    if (path.empty()) throw UsageError("--data is required");
    return read_frame_csv(fs::path(path));
}

std::vector<double> column_values(const Frame& frame, const std::string& name) {
    return frame.column(name);
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    CommonOptions common;
    std::uint64_t seed = 1;
    long steps = 0;
    std::string control = "off";
    std::string legitimacy = "constant";
    int seeds = 1;
    int jobs = 1;
};

int cmd_simulate(const SimulateArgs& a, const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    const auto start = std::chrono::steady_clock::now();
    Config config = resolve_config(a.common);
    if (a.steps > 0) config.set("steps", std::to_string(a.steps));
    const auto cfg = ScenarioConfig::from(config);
    if (a.control != "on" && a.control != "off") throw UsageError("--control must be on or off");
    if (a.legitimacy != "constant" && a.legitimacy != "random") {
        throw UsageError("--legitimacy must be constant or random");
    }
    if (a.seeds < 1 || a.jobs < 1) throw UsageError("--seeds and --jobs must be >= 1");
    const bool control = a.control == "on";
    const auto mode = a.legitimacy == "random" ? LegitimacyMode::Random : LegitimacyMode::Constant;

    OutputDir dir(a.common.out_dir);
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < a.seeds; ++i) seeds.push_back(a.seed + static_cast<std::uint64_t>(i));
    std::vector<std::vector<Interval>> trapped(seeds.size());
    std::vector<double> max_active(seeds.size(), 0.0);
    std::vector<std::string> errors(seeds.size());

    const auto run_one = [&](std::size_t i) {
        try {
            const auto frame = simulate_scenario(cfg, seeds[i], control, mode);
            trapped[i] = detect_trapped_state(frame, cfg.trapped);
            for (double v : frame.column("active")) max_active[i] = std::max(max_active[i], v);
            const auto tag = "seed" + std::to_string(seeds[i]);
            {
                auto f = open_out(dir.file("frame_" + tag + ".csv"));
                write_frame_csv(f, frame);
            }
            auto f = open_out(dir.file("trapped_" + tag + ".csv"));
            write_intervals_csv(f, trapped[i]);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    };
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(a.jobs), seeds.size());
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < seeds.size(); i = next++) run_one(i);
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
        if (!e.empty()) throw DataError(e);
    }

    {
        auto f = open_out(dir.file("summary.csv"));
        f << "seed,trapped_intervals,trapped_ticks,max_active\n";
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            long ticks = 0;
            for (const auto& iv : trapped[i]) ticks += iv.end - iv.start + 1;
            f << seeds[i] << ',' << trapped[i].size() << ',' << ticks << ',' << format_real(max_active[i]) << '\n';
        }
    }
    std::size_t runs_trapped = 0;
    for (const auto& t : trapped) runs_trapped += t.empty() ? 0 : 1;
    out << "simulated " << seeds.size() << " run(s), " << runs_trapped << " with trapped-state intervals\n";
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(dir, "simulate", args, &config, seeds, secs);
    dir.commit();
    (void)err;
    return kExitOk;
}

// -------------------------------------------------------------------- scan

struct ScanArgs {
    CommonOptions common;
    std::string mode = "E";
    std::string data;
    bool generate = false;
    std::uint64_t seed = 1;
    long steps = 5000;
    std::string column = "active";
    int e_max = 10;
    int e = 5;
    int tp = 5;
    int tp_max = 10;
    double split = 0.6;
    std::string coords;
    std::string target = "active";
};

int cmd_scan(const ScanArgs& a, const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    const auto start = std::chrono::steady_clock::now();
    Config config = resolve_config(a.common);
    Frame frame;
    std::vector<std::uint64_t> seeds;
    if (a.generate) {
        config.set("steps", std::to_string(a.steps));
        frame = simulate_scenario(ScenarioConfig::from(config), a.seed, false, LegitimacyMode::Constant);
        seeds.push_back(a.seed);
    } else {
        frame = load_data(a.data);
    }

    ScanResult scan;
    if (a.mode == "E") {
        scan = embed_dimension_scan(column_values(frame, a.column), a.e_max, a.tp, a.split);
    } else if (a.mode == "Tp") {
        scan = tp_scan(column_values(frame, a.column), a.e, a.tp_max, a.split);
    } else if (a.mode == "theta") {
        const auto spec = a.coords.empty() ? ScenarioConfig::from(config).loop.spec
                                           : EmbeddingSpec::parse(a.coords, a.target, a.tp);
        const auto emb = build_generalized_embedding(frame, spec);
        const auto n_lib = static_cast<std::size_t>(std::floor(a.split * static_cast<double>(emb.rows())));
        std::vector<std::size_t> rows(n_lib);
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        scan = theta_scan(emb.select(rows));
    } else {
        throw UsageError("--mode must be E, Tp or theta");
    }

    OutputDir dir(a.common.out_dir);
    {
        auto f = open_out(dir.file("scan.csv"));
        write_scan_csv(f, scan);
    }
    std::size_t degenerate = 0;
    for (const auto& s : scan.skill) degenerate += s.degenerate ? 1 : 0;
    if (degenerate > 0) {
        err << "warning: " << degenerate << " of " << scan.axis.size()
            << " scan points have degenerate skill (zero variance)\n";
    }
    write_scan_csv(out, scan);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(dir, "scan", args, &config, seeds, secs);
    dir.commit();
    return kExitOk;
}

// ---------------------------------------------------------------- forecast

struct ForecastArgs {
    CommonOptions common;
    std::string data;
    std::string coords = "jailed:0,jailed:2,jailed:4,quiet:0,quiet:2,quiet:4";
    std::string target = "active";
    int tp = 5;
    std::string lib = "1:1500";
    std::string pred = "1601:3100";
    std::string theta = "2";
};

int cmd_forecast(const ForecastArgs& a, const std::vector<std::string>& args, std::ostream& out, std::ostream&) {
    const auto start = std::chrono::steady_clock::now();
    const Frame frame = load_data(a.data);
    const auto spec = EmbeddingSpec::parse(a.coords, a.target, a.tp);
    const auto lib = TimeRange::parse(a.lib);
    const auto pred = TimeRange::parse(a.pred);
    if (lib.empty() || pred.empty()) throw DataError("library and prediction ranges must be non-empty");

    double theta = 0.0;
    std::string theta_note;
    if (a.theta == "auto") {
        const auto emb = build_generalized_embedding(frame, spec);
        const auto [library, unused] = split_library_prediction(emb, lib, pred);
        theta = theta_scan(library).best_value();
        theta_note = " (auto)";
    } else {
        theta = parse_real(a.theta);
        if (!std::isfinite(theta) || theta < 0) throw UsageError("--theta must be >= 0 or auto");
    }
    const auto r = evaluate_out_of_sample(frame, spec, lib, pred, theta);

    OutputDir dir(a.common.out_dir);
    {
        auto f = open_out(dir.file("predictions.csv"));
        f << "time,target_time,observed,predicted\n";
        for (std::size_t i = 0; i < r.times.size(); ++i) {
            f << r.times[i] << ',' << r.times[i] + spec.tp << ',' << format_real(r.observed[i]) << ','
              << format_real(r.predicted[i]) << '\n';
        }
    }
    {
        auto f = open_out(dir.file("skill.csv"));
        f << "rho,mae,rmse,n,theta,library_rows\n";
        f << (r.skill.degenerate ? std::string("degenerate") : format_real(r.skill.rho)) << ','
          << format_real(r.skill.mae) << ',' << format_real(r.skill.rmse) << ',' << r.skill.n << ','
          << format_real(theta) << ',' << r.library_rows << '\n';
    }
    out << "rho " << format_real(r.skill.rho) << " mae " << format_real(r.skill.mae) << " rmse "
        << format_real(r.skill.rmse) << " n " << r.skill.n << " theta " << format_real(theta) << theta_note << '\n';
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(dir, "forecast", args, nullptr, {}, secs);
    dir.commit();
    return kExitOk;
}

// ----------------------------------------------------------------- analyze

struct AnalyzeArgs {
    CommonOptions common;
    std::string data;
    bool jacobian = false;
    bool partition = false;
    bool trapped = false;
    long from = 0;
    long to = 0;
    std::size_t stride = 1;
};

int cmd_analyze(const AnalyzeArgs& a, const std::vector<std::string>& args, std::ostream& out, std::ostream&) {
    const auto start = std::chrono::steady_clock::now();
    Config config = resolve_config(a.common);
    const auto cfg = ScenarioConfig::from(config);
    Frame frame = load_data(a.data);
    if (a.from != 0 || a.to != 0) {
        frame = frame.slice(a.from == 0 ? frame.start_time() : a.from, a.to == 0 ? frame.end_time() : a.to);
        if (frame.empty()) throw DataError("--from/--to select no rows");
    }
    if (!a.jacobian && !a.partition && !a.trapped) throw UsageError("choose at least one of --jacobian --partition --trapped");

    OutputDir dir(a.common.out_dir);
    if (a.jacobian || a.partition) {
        JacobianOptions jopts;
        jopts.spec = cfg.loop.spec;
        jopts.stride = a.stride;
        const auto jac = interaction_coefficients(frame, cfg.jacobian_theta, jopts);
        out << "jacobian: " << jac.finite_count() << " of " << jac.size() << " coefficients finite\n";
        if (a.jacobian) {
            auto f = open_out(dir.file("jacobian.csv"));
            write_jacobian_csv(f, jac);
        }
        if (a.partition) {
            std::vector<double> legit;
            for (long t : jac.times) legit.push_back(frame.column("legitimacy")[frame.row_of(t)]);
            const auto part = partition_variance(jac, legit, cfg.variance);
            {
                auto f = open_out(dir.file("variance.csv"));
                write_variance_csv(f, part);
            }
            {
                auto f = open_out(dir.file("density.csv"));
                f << "legitimacy_regime,x,density,bandwidth\n";
                for (const auto& [name, d] : {std::pair{"low", &part.low_density}, std::pair{"high", &part.high_density}}) {
                    for (std::size_t i = 0; i < d->x.size(); ++i) {
                        f << name << ',' << format_real(d->x[i]) << ',' << format_real(d->density[i]) << ','
                          << format_real(d->bandwidth) << '\n';
                    }
                }
            }
            out << "partition: " << part.low.size() << " low-legitimacy windows, " << part.high.size()
                << " high-legitimacy windows (window " << cfg.variance.window << ", stride " << cfg.variance.stride
                << ")\n";
        }
    }
    if (a.trapped) {
        const auto intervals = detect_trapped_state(frame, cfg.trapped);
        auto f = open_out(dir.file("intervals.csv"));
        write_intervals_csv(f, intervals);
        out << "trapped: " << intervals.size() << " interval(s)\n";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(dir, "analyze", args, &config, {}, secs);
    dir.commit();
    return kExitOk;
}

// ------------------------------------------------------- export-comparison

struct ExportArgs {
    CommonOptions common;
    std::uint64_t seed = 1;
};

void write_embedding_csv(std::ostream& f, const Embedding& emb, const EmbeddingSpec& spec) {
    f << "time";
    for (const auto& c : spec.coordinates) f << ',' << c.column << "_lag" << c.lag;
    f << ',' << spec.target << "_tp" << spec.tp << '\n';
    for (std::size_t r = 0; r < emb.rows(); ++r) {
        f << emb.times[r];
        for (Eigen::Index c = 0; c < emb.points.cols(); ++c) {
            f << ',' << format_real(emb.points(static_cast<Eigen::Index>(r), c));
        }
        f << ',' << format_real(emb.targets(static_cast<Eigen::Index>(r))) << '\n';
    }
}

int cmd_export(const ExportArgs& a, const std::vector<std::string>& args, std::ostream& out, std::ostream&) {
    const auto start = std::chrono::steady_clock::now();
    Config config = resolve_config(a.common);
    const auto cfg = ScenarioConfig::from(config);
    const Frame frame = comparison_dataset(cfg, a.seed);
    const auto& spec = cfg.loop.spec;
    const auto emb = build_generalized_embedding(frame, spec);
    const auto [train, test] = split_library_prediction(emb, {1, 1500}, {1601, frame.end_time()});

    OutputDir dir(a.common.out_dir);
    {
        auto f = open_out(dir.file("data.csv"));
        write_frame_csv(f, frame);
    }
    {
        auto f = open_out(dir.file("train.csv"));
        write_embedding_csv(f, train, spec);
    }
    {
        auto f = open_out(dir.file("test.csv"));
        write_embedding_csv(f, test, spec);
    }
    out << "train rows " << train.rows() << ", test rows " << test.rows() << '\n';
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(dir, "export-comparison", args, &config, {a.seed}, secs);
    dir.commit();
    return kExitOk;
}

// ------------------------------------------------------------------ replay

std::vector<std::string> replay_args(const fs::path& manifest_path, const std::string& out_dir) {
    std::ifstream in(manifest_path);
    if (!in) throw UsageError("cannot read manifest '" + manifest_path.string() + "'");
    nlohmann::json m;
    try {
        m = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("bad manifest: ") + e.what());
    }
    const auto original = m.at("args").get<std::vector<std::string>>();
    if (original.empty()) throw DataError("manifest has no recorded arguments");
    std::vector<std::string> replay{original.front()};
    // Drop --out, --config and --set; the recorded config snapshot replaces them.
    for (std::size_t i = 1; i < original.size(); ++i) {
        const auto& arg = original[i];
        if (arg == "--out" || arg == "--config" || arg == "--set") {
            ++i;
            continue;
        }
        if (arg.rfind("--out=", 0) == 0 || arg.rfind("--config=", 0) == 0 || arg.rfind("--set=", 0) == 0) continue;
        replay.push_back(arg);
    }
    for (const auto& [key, value] : m.at("config").items()) {
        replay.push_back("--set");
        replay.push_back(key + "=" + value.get<std::string>());
    }
    replay.push_back("--out");
    replay.push_back(out_dir);
    return replay;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Empirical dynamic modeling as the process model of a propaganda controller"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Run the civil-violence model and write its time series");
    add_common(simulate, sim.common, true);
    simulate->add_option("--seed", sim.seed, "Root RNG seed (first seed of a sweep)");
    simulate->add_option("--steps", sim.steps, "Ticks to simulate (overrides config key steps)");
    simulate->add_option("--control", sim.control, "on|off")->check(CLI::IsMember({"on", "off"}));
    simulate->add_option("--legitimacy", sim.legitimacy, "constant|random")->check(CLI::IsMember({"constant", "random"}));
    simulate->add_option("--seeds", sim.seeds, "Number of consecutive seeds to run");
    simulate->add_option("--jobs", sim.jobs, "Scenarios run concurrently");

    ScanArgs scan;
    auto* scan_cmd = app.add_subcommand("scan", "Skill scans over E, Tp or theta");
    add_common(scan_cmd, scan.common, true);
    scan_cmd->add_option("--mode", scan.mode, "E|Tp|theta")->check(CLI::IsMember({"E", "Tp", "theta"}));
    scan_cmd->add_option("--data", scan.data, "Input frame CSV");
    scan_cmd->add_flag("--generate", scan.generate, "Scan a freshly simulated nominal run");
    scan_cmd->add_option("--seed", scan.seed, "Seed for --generate");
    scan_cmd->add_option("--steps", scan.steps, "Ticks for --generate");
    scan_cmd->add_option("--column", scan.column, "Series scanned in E and Tp modes");
    scan_cmd->add_option("--E-max", scan.e_max, "Largest E (mode E)");
    scan_cmd->add_option("--E", scan.e, "Fixed E (mode Tp)");
    scan_cmd->add_option("--tp", scan.tp, "Fixed Tp (modes E and theta)");
    scan_cmd->add_option("--tp-max", scan.tp_max, "Largest Tp (mode Tp)");
    scan_cmd->add_option("--split", scan.split, "Library fraction");
    scan_cmd->add_option("--coords", scan.coords, "Generalized coordinates col:lag,... (mode theta)");
    scan_cmd->add_option("--target", scan.target, "Target column (mode theta)");

    ForecastArgs fc;
    auto* forecast = app.add_subcommand("forecast", "Out-of-sample S-map cross-map forecast");
    add_common(forecast, fc.common, false);
    forecast->add_option("--data", fc.data, "Input frame CSV")->required();
    forecast->add_option("--coords", fc.coords, "Generalized coordinates col:lag,...");
    forecast->add_option("--target", fc.target, "Target column");
    forecast->add_option("--tp", fc.tp, "Prediction horizon");
    forecast->add_option("--lib", fc.lib, "Library origin range a:b");
    forecast->add_option("--pred", fc.pred, "Prediction origin range c:d");
    forecast->add_option("--theta", fc.theta, "S-map kernel width, or auto");

    AnalyzeArgs an;
    auto* analyze = app.add_subcommand("analyze", "Jacobian, variance-partition and trapped-state analyses");
    add_common(analyze, an.common, true);
    analyze->add_option("--data", an.data, "Input frame CSV")->required();
    analyze->add_flag("--jacobian", an.jacobian, "Write dActive/dpropaganda coefficients");
    analyze->add_flag("--partition", an.partition, "Write windowed coefficient variance by legitimacy regime");
    analyze->add_flag("--trapped", an.trapped, "Write trapped-state intervals");
    analyze->add_option("--from", an.from, "First tick analysed");
    analyze->add_option("--to", an.to, "Last tick analysed");
    analyze->add_option("--stride", an.stride, "Evaluate every n-th Jacobian query");

    ExportArgs ex;
    auto* exp = app.add_subcommand("export-comparison", "Write the embedded train/test matrices for external models");
    add_common(exp, ex.common, true);
    exp->add_option("--seed", ex.seed, "RNG seed");

    std::string manifest_path;
    std::string replay_out;
    auto* replay = app.add_subcommand("replay", "Re-run a command from its manifest");
    replay->add_option("manifest", manifest_path, "manifest.json of an earlier run")->required();
    replay->add_option("--out", replay_out, "Output directory")->required();

    std::vector<std::string> argv_storage{"edmpc"};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& s : argv_storage) argv.push_back(s.c_str());

    try {
        try {
            app.parse(static_cast<int>(argv.size()), argv.data());
        } catch (const CLI::ParseError& e) {
            const int code = app.exit(e, out, err);
            return code == 0 ? kExitOk : kExitUsage;
        }
        if (*simulate) return cmd_simulate(sim, args, out, err);
        if (*scan_cmd) {
            if (scan.generate == !scan.data.empty()) throw UsageError("scan needs exactly one of --data or --generate");
            return cmd_scan(scan, args, out, err);
        }
        if (*forecast) return cmd_forecast(fc, args, out, err);
        if (*analyze) return cmd_analyze(an, args, out, err);
        if (*exp) return cmd_export(ex, args, out, err);
        if (*replay) return run_cli(replay_args(manifest_path, replay_out), out, err);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DataError& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}

} // namespace edmpc
