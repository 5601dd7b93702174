#include "edmpc/analysis.hpp"
#include "edmpc/cli.hpp"
#include "edmpc/config.hpp"
#include "edmpc/control.hpp"
#include "edmpc/error.hpp"
#include "edmpc/evaluation.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace edmpc;

namespace {

py::dict frame_to_dict(const Frame& f) {
    py::dict d;
    std::vector<long> times(f.size());
    for (std::size_t r = 0; r < f.size(); ++r) times[r] = f.time_at(r);
    d["time"] = py::array_t<long>(static_cast<py::ssize_t>(times.size()), times.data());
    for (const auto& name : f.names()) {
        const auto& col = f.column(name);
        d[py::str(name)] = py::array_t<double>(static_cast<py::ssize_t>(col.size()), col.data());
    }
    return d;
}

Frame dict_to_frame(const py::dict& d, long start_time) {
    Frame f(start_time);
    for (const auto& [key, value] : d) {
        const auto name = py::cast<std::string>(key);
        if (name == "time") continue;
        f.add_column(name, py::cast<std::vector<double>>(value));
    }
    return f;
}

Embedding make_embedding(const Eigen::MatrixXd& points, const std::vector<double>& targets,
                         std::optional<std::vector<long>> times) {
    if (static_cast<std::size_t>(points.rows()) != targets.size()) {
        throw DataError("points and targets have different row counts");
    }
    Embedding e;
    e.points = points;
    e.targets = Eigen::Map<const Eigen::VectorXd>(targets.data(), static_cast<Eigen::Index>(targets.size()));
    if (times) {
        if (times->size() != targets.size()) throw DataError("times and targets have different lengths");
        e.times = *times;
    } else {
        for (std::size_t i = 0; i < targets.size(); ++i) e.times.push_back(static_cast<long>(i));
    }
    return e;
}

ScenarioConfig scenario_config(const std::map<std::string, std::string>& overrides) {
    Config cfg = Config::defaults();
    for (const auto& [k, v] : overrides) cfg.set(k, v);
    return ScenarioConfig::from(cfg);
}

} // namespace

PYBIND11_MODULE(_edmpc, m) {
    m.doc() = "Empirical dynamic modeling and the civil-violence control loop.";
    m.attr("__version__") = kVersion;

    py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    py::class_<Embedding>(m, "Embedding")
        .def(py::init(&make_embedding), py::arg("points"), py::arg("targets"), py::arg("times") = py::none())
        .def_readonly("points", &Embedding::points)
        .def_readonly("targets", &Embedding::targets)
        .def_readonly("times", &Embedding::times)
        .def_readonly("labels", &Embedding::labels)
        .def_readonly("tp", &Embedding::tp)
        .def_readonly("dropped_nonfinite", &Embedding::dropped_nonfinite)
        .def_property_readonly("rows", &Embedding::rows)
        .def_property_readonly("dimension", &Embedding::dimension)
        .def("__len__", &Embedding::rows);

    m.def(
        "delay_embedding",
        [](const std::vector<double>& series, int E, int tau, int tp, long start_time) {
            return build_delay_embedding(series, E, tau, tp, start_time);
        },
        py::arg("series"), py::arg("E"), py::arg("tau") = 1,
          py::arg("tp") = 1, py::arg("start_time") = 0, "Delay-coordinate embedding, most recent value first.");

    m.def(
        "generalized_embedding",
        [](const py::dict& frame, const std::string& coords, const std::string& target, int tp, long start_time) {
            return build_generalized_embedding(dict_to_frame(frame, start_time), EmbeddingSpec::parse(coords, target, tp));
        },
        py::arg("frame"), py::arg("coords"), py::arg("target"), py::arg("tp"), py::arg("start_time") = 1,
        "Embedding from named columns; coords is 'col:lag,col:lag,...'.");

    m.def(
        "knn",
        [](const Embedding& lib, const Eigen::RowVectorXd& query, std::size_t k) {
            const auto n = knn(lib, query, k);
            return py::make_tuple(n.indices, n.distances);
        },
        py::arg("library"), py::arg("query"), py::arg("k"), "Exact k nearest neighbours: (indices, distances).");

    m.def(
        "simplex_predict",
        [](const Embedding& lib, const Embedding& queries, std::size_t k) {
            SimplexOptions o;
            o.k = k;
            return simplex_predict(lib, queries, o);
        },
        py::arg("library"), py::arg("queries"), py::arg("k") = 0);

    m.def(
        "smap_predict",
        [](const Embedding& lib, const Embedding& queries, double theta) {
            SMapOptions o;
            o.theta = theta;
            const auto out = smap_predict(lib, queries, o);
            Eigen::VectorXd pred(static_cast<Eigen::Index>(out.size()));
            Eigen::MatrixXd coef(static_cast<Eigen::Index>(out.size()), static_cast<Eigen::Index>(lib.dimension() + 1));
            for (std::size_t i = 0; i < out.size(); ++i) {
                pred(static_cast<Eigen::Index>(i)) = out[i].prediction;
                coef.row(static_cast<Eigen::Index>(i)) = out[i].coefficients.transpose();
            }
            return py::make_tuple(pred, coef);
        },
        py::arg("library"), py::arg("queries"), py::arg("theta"),
        "S-map forecasts: (predictions, coefficients with the intercept first).");

    m.def(
        "pearson_rho",
        [](const std::vector<double>& pred, const std::vector<double>& obs) {
            const auto r = pearson_rho(pred, obs);
            py::dict d;
            d["rho"] = r.rho;
            d["mae"] = r.mae;
            d["rmse"] = r.rmse;
            d["n"] = r.n;
            d["degenerate"] = r.degenerate;
            return d;
        },
        py::arg("predictions"), py::arg("observations"));

    m.def(
        "propaganda_response",
        [](double a, double p_min, double p_max, double slope, double midpoint) {
            ControllerParams p{p_min, p_max, slope, midpoint};
            p.validate();
            return propaganda_response(a, p);
        },
        py::arg("active_forecast"), py::arg("p_min") = 0.06, py::arg("p_max") = 0.6, py::arg("slope") = 0.05,
        py::arg("midpoint") = 50.0);

    m.def(
        "legitimacy_schedule",
        [](std::uint64_t seed, long total, int changes, double low, double high) {
            const auto s = make_legitimacy_schedule(seed, total, {changes, low, high});
            return py::make_tuple(s.change_times, s.values);
        },
        py::arg("seed"), py::arg("total_ticks"), py::arg("changes") = 20, py::arg("low") = 0.6,
        py::arg("high") = 0.85, "Random piecewise-constant legitimacy: (change_times, values).");

    m.def(
        "simulate",
        [](std::uint64_t seed, std::optional<long> steps, bool control, const std::string& legitimacy,
           const std::map<std::string, std::string>& config) {
            auto cfg = scenario_config(config);
            if (steps) cfg.steps = *steps;
            if (legitimacy != "constant" && legitimacy != "random") {
                throw UsageError("legitimacy must be 'constant' or 'random'");
            }
            Frame f;
            {
                py::gil_scoped_release release;
                f = simulate_scenario(cfg, seed, control,
                                      legitimacy == "random" ? LegitimacyMode::Random : LegitimacyMode::Constant);
            }
            return frame_to_dict(f);
        },
        py::arg("seed"), py::arg("steps") = py::none(), py::arg("control") = false,
        py::arg("legitimacy") = "constant", py::arg("config") = std::map<std::string, std::string>{},
        "Run one scenario and return its columns as numpy arrays.");

    m.def(
        "detect_trapped_state",
        [](const std::vector<double>& active, double floor, long min_duration, long start_time) {
            Frame f(start_time);
            f.add_column("active", active);
            std::vector<std::pair<long, long>> out;
            for (const auto& iv : detect_trapped_state(f, {floor, min_duration})) out.emplace_back(iv.start, iv.end);
            return out;
        },
        py::arg("active"), py::arg("active_floor") = 100.0, py::arg("min_duration") = 200, py::arg("start_time") = 1);

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = run_cli(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Run a command line in-process: (exit code, stdout, stderr).");
}
