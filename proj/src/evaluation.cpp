#include "edmpc/evaluation.hpp"

#include "edmpc/error.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

namespace edmpc {

std::vector<double> ScanResult::rho() const {
    std::vector<double> out;
    for (const auto& s : skill) out.push_back(s.rho);
    return out;
}

double ScanResult::best_value() const {
    double best = std::numeric_limits<double>::quiet_NaN();
    double best_rho = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < axis.size(); ++i) {
        if (skill[i].degenerate) continue;
        if (skill[i].rho > best_rho) {
            best_rho = skill[i].rho;
            best = axis[i];
        }
    }
    if (std::isnan(best)) {
        throw NumericalError("scan produced no non-degenerate skill");
    }
    return best;
}

double ScanResult::rho_at(double value) const {
    for (std::size_t i = 0; i < axis.size(); ++i) {
        if (axis[i] == value) return skill[i].rho;
    }
    throw UsageError("scan has no point at " + std::to_string(value));
}

namespace {

// Library/prediction row ids over a common set of origins. Disjointness is
// checked on every call, not assumed.
struct AlignedSplit {
    std::vector<std::size_t> library;
    std::vector<std::size_t> prediction;
};

AlignedSplit split_rows(const Embedding& emb, long first_origin, long last_origin, double split) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < emb.rows(); ++i) {
        if (emb.times[i] >= first_origin && emb.times[i] <= last_origin) rows.push_back(i);
    }
    const auto n_lib = static_cast<std::size_t>(std::floor(split * static_cast<double>(rows.size())));
    if (n_lib == 0 || n_lib >= rows.size()) {
        throw InsufficientDataError("scan split", 1, rows.size());
    }
    AlignedSplit out;
    out.library.assign(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_lib));
    out.prediction.assign(rows.begin() + static_cast<std::ptrdiff_t>(n_lib), rows.end());
    if (emb.times[out.library.back()] >= emb.times[out.prediction.front()]) {
        throw NumericalError("scan library overlaps its prediction rows");
    }
    return out;
}

SkillReport simplex_skill(const Embedding& emb, const AlignedSplit& split) {
    const auto lib = emb.select(split.library);
    const auto pred = emb.select(split.prediction);
    const auto yhat = simplex_predict(lib, pred);
    return pearson_rho(yhat, std::span<const double>(pred.targets.data(), pred.rows()));
}

void check_split(double split) {
    if (!(split > 0.0 && split < 1.0)) throw UsageError("split fraction must lie in (0, 1)");
}

} // namespace

ScanResult embed_dimension_scan(std::span<const double> series, int E_max, int tp, double split, int E_min) {
    check_split(split);
    if (E_min < 1 || E_max < E_min || tp < 0) throw UsageError("embedding scan needs 1 <= E_min <= E_max, Tp >= 0");
    const std::size_t margin = static_cast<std::size_t>(E_max - 1 + tp);
    if (series.size() <= margin) {
        throw InsufficientDataError("embedding scan at E=" + std::to_string(E_max), margin, series.size());
    }
    const long first = E_max - 1;
    const long last = static_cast<long>(series.size()) - 1 - tp;
    ScanResult out;
    out.parameter = "E";
    out.fixed = {{"Tp", std::to_string(tp)}, {"tau", "1"}, {"split", std::to_string(split)}};
    for (int E = E_min; E <= E_max; ++E) {
        const auto emb = build_delay_embedding(series, E, 1, tp);
        out.axis.push_back(E);
        out.skill.push_back(simplex_skill(emb, split_rows(emb, first, last, split)));
    }
    return out;
}

ScanResult tp_scan(std::span<const double> series, int E, int tp_max, double split) {
    check_split(split);
    if (E < 1 || tp_max < 1) throw UsageError("Tp scan needs E >= 1 and Tp_max >= 1");
    const std::size_t margin = static_cast<std::size_t>(E - 1 + tp_max);
    if (series.size() <= margin) {
        throw InsufficientDataError("Tp scan at Tp=" + std::to_string(tp_max), margin, series.size());
    }
    const long first = E - 1;
    const long last = static_cast<long>(series.size()) - 1 - tp_max;
    ScanResult out;
    out.parameter = "Tp";
    out.fixed = {{"E", std::to_string(E)}, {"tau", "1"}, {"split", std::to_string(split)}};
    for (int tp = 1; tp <= tp_max; ++tp) {
        const auto emb = build_delay_embedding(series, E, 1, tp);
        out.axis.push_back(tp);
        out.skill.push_back(simplex_skill(emb, split_rows(emb, first, last, split)));
    }
    return out;
}

ScanResult theta_scan(const Embedding& library, std::span<const double> grid, double validation_fraction) {
    check_split(1.0 - validation_fraction);
    if (grid.empty()) throw UsageError("theta grid is empty");
    const auto n_fit = static_cast<std::size_t>(std::floor((1.0 - validation_fraction) * static_cast<double>(library.rows())));
    if (n_fit < library.dimension() + 2 || n_fit + 2 > library.rows()) {
        throw InsufficientDataError("theta scan library", library.dimension() + 3, library.rows());
    }
    std::vector<std::size_t> fit(n_fit), val(library.rows() - n_fit);
    std::iota(fit.begin(), fit.end(), std::size_t{0});
    std::iota(val.begin(), val.end(), n_fit);
    const auto fit_lib = library.select(fit);
    const auto val_rows = library.select(val);

    ScanResult out;
    out.parameter = "theta";
    out.fixed = {{"E", std::to_string(library.dimension())},
                 {"Tp", std::to_string(library.tp)},
                 {"validation_fraction", std::to_string(validation_fraction)}};
    for (double theta : grid) {
        if (!(theta >= 0.0)) throw UsageError("theta grid values must be >= 0");
        SMapOptions opts;
        opts.theta = theta;
        const auto outputs = smap_predict(fit_lib, val_rows, opts);
        std::vector<double> yhat;
        for (const auto& o : outputs) yhat.push_back(o.prediction);
        out.axis.push_back(theta);
        out.skill.push_back(pearson_rho(yhat, std::span<const double>(val_rows.targets.data(), val_rows.rows())));
    }
    return out;
}

OutOfSampleResult evaluate_out_of_sample(const Frame& frame, const EmbeddingSpec& spec, TimeRange library,
                                         TimeRange prediction, double theta) {
    const auto emb = build_generalized_embedding(frame, spec);
    const auto [lib, pred] = split_library_prediction(emb, library, prediction);
    SMapOptions opts;
    opts.theta = theta;
    const auto outputs = smap_predict(lib, pred, opts);
    OutOfSampleResult r;
    r.library_rows = lib.rows();
    r.times = pred.times;
    r.observed.assign(pred.targets.data(), pred.targets.data() + pred.rows());
    for (const auto& o : outputs) r.predicted.push_back(o.prediction);
    r.skill = pearson_rho(r.predicted, r.observed);
    return r;
}

void write_scan_csv(std::ostream& out, const ScanResult& scan) {
    out << "param,rho,mae,rmse,n\n";
    for (std::size_t i = 0; i < scan.axis.size(); ++i) {
        const auto& s = scan.skill[i];
        out << format_real(scan.axis[i]) << ',' << (s.degenerate ? std::string("degenerate") : format_real(s.rho))
            << ',' << format_real(s.mae) << ',' << format_real(s.rmse) << ',' << s.n << '\n';
    }
}

} // namespace edmpc
