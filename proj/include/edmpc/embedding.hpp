#ifndef EDMPC_EMBEDDING_HPP
#define EDMPC_EMBEDDING_HPP

#include "edmpc/frame.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace edmpc {

using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// One state-space coordinate: a column observed `lag` ticks before the origin.
struct Coordinate {
    std::string column;
    int lag = 0;

    bool operator==(const Coordinate&) const = default;
};

struct EmbeddingSpec {
    std::vector<Coordinate> coordinates;
    std::string target;
    int tp = 1;

    std::size_t dimension() const noexcept { return coordinates.size(); }
    int max_lag() const noexcept;

    /// Throws UsageError when E < 1, tp < 0, a lag is negative or a coordinate repeats.
    void validate() const;

    /// Parses "col:lag,col:lag,..." (a bare "col" means lag 0).
    static EmbeddingSpec parse(std::string_view coordinates, std::string target, int tp);
    std::string coordinates_string() const;
};

/// Jailed and Quiet at lags 0, 2, 4 cross-mapped onto Active five ticks ahead.
EmbeddingSpec control_embedding_spec();

/// State-space rows aligned with their targets. Row i originates at times[i];
/// targets[i] is the target column at times[i] + tp.
struct Embedding {
    PointMatrix points;
    Eigen::VectorXd targets;
    std::vector<long> times;
    std::vector<std::string> labels;
    int tp = 1;
    /// Rows skipped because a coordinate or target was not finite.
    std::size_t dropped_nonfinite = 0;

    std::size_t rows() const noexcept { return static_cast<std::size_t>(points.rows()); }
    std::size_t dimension() const noexcept { return static_cast<std::size_t>(points.cols()); }

    Embedding select(std::span<const std::size_t> rows) const;
};

/// Univariate delay rows (x(t), x(t-tau), ..., x(t-(E-1)tau)) with target x(t+tp).
/// Row i has origin time start_time + (E-1)*tau + i.
Embedding build_delay_embedding(std::span<const double> series, int E, int tau, int tp, long start_time = 0);

Embedding build_generalized_embedding(const Frame& frame, const EmbeddingSpec& spec);

/// Coordinates of the state observed at `time`; needs no target, so it can sit
/// at the live edge of the record.
Eigen::RowVectorXd state_vector(const Frame& frame, const EmbeddingSpec& spec, long time);

/// Inclusive tick interval.
struct TimeRange {
    long first = 0;
    long last = -1;

    bool contains(long t) const noexcept { return t >= first && t <= last; }
    bool overlaps(const TimeRange& o) const noexcept { return first <= o.last && o.first <= last; }
    bool empty() const noexcept { return last < first; }

    /// Parses "a:b".
    static TimeRange parse(std::string_view text);
};

/// Partitions rows by origin time. Overlapping ranges are rejected unless allow_overlap.
std::pair<Embedding, Embedding> split_library_prediction(const Embedding& embedding, TimeRange library,
                                                         TimeRange prediction, bool allow_overlap = false);

} // namespace edmpc

#endif
