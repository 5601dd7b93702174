#include "edmpc/embedding.hpp"

#include "edmpc/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace edmpc {

int EmbeddingSpec::max_lag() const noexcept {
    int m = 0;
    for (const auto& c : coordinates) m = std::max(m, c.lag);
    return m;
}

void EmbeddingSpec::validate() const {
    if (coordinates.empty()) {
        throw UsageError("embedding needs at least one coordinate");
    }
    if (tp < 0) {
        throw UsageError("prediction horizon must be >= 0");
    }
    if (target.empty()) {
        throw UsageError("embedding target column is empty");
    }
    for (std::size_t i = 0; i < coordinates.size(); ++i) {
        if (coordinates[i].lag < 0) {
            throw UsageError("negative lag for column '" + coordinates[i].column + "'");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (coordinates[i] == coordinates[j]) {
                throw UsageError("duplicate coordinate " + coordinates[i].column + ":" +
                                 std::to_string(coordinates[i].lag));
            }
        }
    }
}

EmbeddingSpec EmbeddingSpec::parse(std::string_view text, std::string target, int tp) {
    EmbeddingSpec spec;
    spec.target = std::move(target);
    spec.tp = tp;
    for (const auto& item : split_csv_line(text)) {
        if (item.empty()) continue;
        Coordinate c;
        auto colon = item.find(':');
        c.column = item.substr(0, colon);
        if (colon != std::string::npos) {
            auto lag = std::string_view(item).substr(colon + 1);
            auto [ptr, ec] = std::from_chars(lag.data(), lag.data() + lag.size(), c.lag);
            if (ec != std::errc() || ptr != lag.data() + lag.size()) {
                throw UsageError("bad lag in coordinate '" + item + "'");
            }
        }
        spec.coordinates.push_back(std::move(c));
    }
    spec.validate();
    return spec;
}

std::string EmbeddingSpec::coordinates_string() const {
    std::string out;
    for (const auto& c : coordinates) {
        if (!out.empty()) out += ',';
        out += c.column + ':' + std::to_string(c.lag);
    }
    return out;
}

EmbeddingSpec control_embedding_spec() {
    EmbeddingSpec spec;
    for (const char* col : {"jailed", "quiet"}) {
        for (int lag : {0, 2, 4}) spec.coordinates.push_back({col, lag});
    }
    spec.target = "active";
    spec.tp = 5;
    return spec;
}

Embedding Embedding::select(std::span<const std::size_t> rows) const {
    Embedding out;
    out.labels = labels;
    out.tp = tp;
    out.points.resize(static_cast<Eigen::Index>(rows.size()), points.cols());
    out.targets.resize(static_cast<Eigen::Index>(rows.size()));
    out.times.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(rows[i]);
        out.points.row(static_cast<Eigen::Index>(i)) = points.row(r);
        out.targets(static_cast<Eigen::Index>(i)) = targets(r);
        out.times.push_back(times[rows[i]]);
    }
    return out;
}

namespace {

// Shared row builder: `value(c, row)` reads coordinate c at series row `row`.
template <class Value, class Target>
Embedding assemble(std::size_t length, std::span<const int> lags, int tp, long start_time, Value value, Target target,
                   std::vector<std::string> labels) {
    const int max_lag = lags.empty() ? 0 : *std::max_element(lags.begin(), lags.end());
    const std::size_t margin = static_cast<std::size_t>(max_lag) + static_cast<std::size_t>(tp);
    if (length <= margin) {
        throw InsufficientDataError("embedding with max lag " + std::to_string(max_lag) + " and Tp " +
                                        std::to_string(tp),
                                    margin, length);
    }
    const std::size_t candidates = length - margin;
    const auto E = static_cast<Eigen::Index>(lags.size());

    Embedding out;
    out.labels = std::move(labels);
    out.tp = tp;
    out.points.resize(static_cast<Eigen::Index>(candidates), E);
    out.targets.resize(static_cast<Eigen::Index>(candidates));
    out.times.reserve(candidates);

    Eigen::Index n = 0;
    for (std::size_t i = 0; i < candidates; ++i) {
        const std::size_t origin = i + static_cast<std::size_t>(max_lag);
        bool finite = true;
        for (Eigen::Index c = 0; c < E; ++c) {
            const double v = value(static_cast<std::size_t>(c), origin - static_cast<std::size_t>(lags[c]));
            finite = finite && std::isfinite(v);
            out.points(n, c) = v;
        }
        const double y = target(origin + static_cast<std::size_t>(tp));
        if (!finite || !std::isfinite(y)) {
            ++out.dropped_nonfinite;
            continue;
        }
        out.targets(n) = y;
        out.times.push_back(start_time + static_cast<long>(origin));
        ++n;
    }
    out.points.conservativeResize(n, E);
    out.targets.conservativeResize(n);
    return out;
}

std::string lag_label(const std::string& column, int lag) {
    return lag == 0 ? column + "(t)" : column + "(t-" + std::to_string(lag) + ")";
}

} // namespace

Embedding build_delay_embedding(std::span<const double> series, int E, int tau, int tp, long start_time) {
    if (E < 1 || tau < 1 || tp < 0) {
        throw UsageError("delay embedding needs E >= 1, tau >= 1, Tp >= 0");
    }
    std::vector<int> lags(static_cast<std::size_t>(E));
    std::vector<std::string> labels;
    for (int i = 0; i < E; ++i) {
        lags[static_cast<std::size_t>(i)] = i * tau;
        labels.push_back(lag_label("x", i * tau));
    }
    return assemble(
        series.size(), lags, tp, start_time, [&](std::size_t, std::size_t row) { return series[row]; },
        [&](std::size_t row) { return series[row]; }, std::move(labels));
}

Embedding build_generalized_embedding(const Frame& frame, const EmbeddingSpec& spec) {
    spec.validate();
    std::vector<const std::vector<double>*> cols;
    std::vector<int> lags;
    std::vector<std::string> labels;
    for (const auto& c : spec.coordinates) {
        cols.push_back(&frame.column(c.column));
        lags.push_back(c.lag);
        labels.push_back(lag_label(c.column, c.lag));
    }
    const auto& target = frame.column(spec.target);
    return assemble(
        frame.size(), lags, spec.tp, frame.start_time(),
        [&](std::size_t c, std::size_t row) { return (*cols[c])[row]; }, [&](std::size_t row) { return target[row]; },
        std::move(labels));
}

Eigen::RowVectorXd state_vector(const Frame& frame, const EmbeddingSpec& spec, long time) {
    spec.validate();
    Eigen::RowVectorXd v(static_cast<Eigen::Index>(spec.dimension()));
    for (std::size_t i = 0; i < spec.coordinates.size(); ++i) {
        const auto& c = spec.coordinates[i];
        v(static_cast<Eigen::Index>(i)) = frame.column(c.column)[frame.row_of(time - c.lag)];
    }
    return v;
}

TimeRange TimeRange::parse(std::string_view text) {
    auto colon = text.find(':');
    if (colon == std::string_view::npos) {
        throw UsageError("range must look like a:b, got '" + std::string(text) + "'");
    }
    TimeRange r;
    auto a = text.substr(0, colon);
    auto b = text.substr(colon + 1);
    auto [pa, ea] = std::from_chars(a.data(), a.data() + a.size(), r.first);
    auto [pb, eb] = std::from_chars(b.data(), b.data() + b.size(), r.last);
    if (ea != std::errc() || eb != std::errc() || pa != a.data() + a.size() || pb != b.data() + b.size()) {
        throw UsageError("range must look like a:b, got '" + std::string(text) + "'");
    }
    return r;
}

std::pair<Embedding, Embedding> split_library_prediction(const Embedding& embedding, TimeRange library,
                                                         TimeRange prediction, bool allow_overlap) {
    if (!allow_overlap && library.overlaps(prediction)) {
        throw UsageError("overlapping ranges: library [" + std::to_string(library.first) + ", " +
                         std::to_string(library.last) + "] and prediction [" + std::to_string(prediction.first) +
                         ", " + std::to_string(prediction.last) + "]");
    }
    std::vector<std::size_t> lib_rows;
    std::vector<std::size_t> pred_rows;
    for (std::size_t i = 0; i < embedding.rows(); ++i) {
        if (library.contains(embedding.times[i])) lib_rows.push_back(i);
        if (prediction.contains(embedding.times[i])) pred_rows.push_back(i);
    }
    if (lib_rows.empty()) {
        throw DataError("library partition is empty");
    }
    if (pred_rows.empty()) {
        throw DataError("prediction partition is empty");
    }
    return {embedding.select(lib_rows), embedding.select(pred_rows)};
}

} // namespace edmpc
