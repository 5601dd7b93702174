#ifndef EDMPC_ANALYSIS_HPP
#define EDMPC_ANALYSIS_HPP

#include "edmpc/embedding.hpp"
#include "edmpc/frame.hpp"

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace edmpc {

/// S-map coefficient on one embedding coordinate, per prediction time.
struct JacobianSeries {
    std::string coordinate;
    std::vector<long> times;
    std::vector<double> coefficients; ///< NaN where flagged
    std::vector<bool> flagged;        ///< coefficient not identifiable (rank deficient) or non-finite

    std::size_t size() const noexcept { return times.size(); }
    std::size_t finite_count() const noexcept;
};

struct JacobianOptions {
    /// Base embedding; the analysis coordinate is appended to it.
    EmbeddingSpec spec = control_embedding_spec();
    Coordinate coordinate{"propaganda", 0};
    /// Leave-one-out radius; unset means Tp + max lag.
    std::optional<long> exclusion_radius;
    /// Evaluate every n-th row only.
    std::size_t stride = 1;
};

/// Fits S-map over the whole record with each row as a query and returns the
/// coefficient aligned to the analysis coordinate (dActive/dpropaganda by default).
JacobianSeries interaction_coefficients(const Frame& frame, double theta, const JacobianOptions& opts = {});

enum class LegitimacyLabel {
    WindowMean, ///< mean legitimacy over the window
    WindowEnd,  ///< instantaneous legitimacy at the window's last tick
};

struct VarianceOptions {
    double threshold = 0.7;
    std::size_t window = 100;
    std::size_t stride = 10;
    LegitimacyLabel label = LegitimacyLabel::WindowMean;
    std::size_t density_points = 128;
};

struct VarianceWindow {
    long start = 0;
    bool low_legitimacy = false;
    double variance = 0.0;
};

/// Gaussian kernel density on an evenly spaced grid.
struct DensityEstimate {
    std::vector<double> x;
    std::vector<double> density;
    double bandwidth = 0.0;
};

struct VariancePartition {
    std::vector<VarianceWindow> windows;
    std::vector<double> low;
    std::vector<double> high;
    DensityEstimate low_density;
    DensityEstimate high_density;
    VarianceOptions options;
};

/// Sliding-window sample variance of the finite coefficients, each window
/// labelled low (< threshold) or high (>= threshold) legitimacy. `legitimacy`
/// is aligned with `jacobians.times`.
VariancePartition partition_variance(const JacobianSeries& jacobians, std::span<const double> legitimacy,
                                     const VarianceOptions& opts = {});

/// Silverman rule: 0.9 min(sd, IQR / 1.34) n^(-1/5).
double silverman_bandwidth(std::span<const double> sample);
DensityEstimate gaussian_kde(std::span<const double> sample, std::size_t points);

struct Interval {
    long start = 0;
    long end = 0;
    bool operator==(const Interval&) const = default;
};

struct TrappedOptions {
    double active_floor = 100.0;
    long min_duration = 200;
};

/// Maximal runs with active >= active_floor lasting at least min_duration ticks.
std::vector<Interval> detect_trapped_state(const Frame& frame, const TrappedOptions& opts = {});

/// Quiet spells between outbursts: from the tick active drops below `threshold`
/// to the next tick it reaches it again. Spells cut off by the record's edges
/// are not counted.
std::vector<double> outburst_waiting_times(const Frame& frame, double threshold);

void write_jacobian_csv(std::ostream& out, const JacobianSeries& series);
void write_variance_csv(std::ostream& out, const VariancePartition& partition);
void write_intervals_csv(std::ostream& out, const std::vector<Interval>& intervals);

namespace stats {

struct RankTest {
    double u = 0.0;
    double z = 0.0;
    double p_value = 1.0;
};

/// One-sided Mann-Whitney test of H1: x tends to exceed y. Normal
/// approximation with tie correction.
RankTest mann_whitney_greater(std::span<const double> x, std::span<const double> y);

struct ExponentialFit {
    double mean = 0.0;
    double d = 0.0;
    /// Stephens' modified statistic for the exponential with estimated mean.
    double modified = 0.0;
    bool reject_at_1pct = false;
    std::size_t n = 0;
};

/// Kolmogorov-Smirnov fit to an exponential whose mean is estimated from the
/// sample, judged against Stephens' critical value 1.308 at the 1% level.
ExponentialFit exponential_fit_test(std::span<const double> sample);

struct ChiSquareTest {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t bins = 0;
};

/// Pearson chi-square test of uniformity on (low, high] with equal-width bins.
ChiSquareTest uniformity_test(std::span<const double> sample, double low, double high, std::size_t bins);

} // namespace stats

} // namespace edmpc

#endif
