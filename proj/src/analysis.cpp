#include "edmpc/analysis.hpp"

#include "edmpc/edm.hpp"
#include "edmpc/error.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

namespace edmpc {

std::size_t JacobianSeries::finite_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(coefficients.begin(), coefficients.end(), [](double c) { return std::isfinite(c); }));
}

JacobianSeries interaction_coefficients(const Frame& frame, double theta, const JacobianOptions& opts) {
    if (opts.stride == 0) throw UsageError("jacobian stride must be >= 1");
    EmbeddingSpec spec = opts.spec;
    spec.coordinates.push_back(opts.coordinate);
    spec.validate();
    const auto emb = build_generalized_embedding(frame, spec);
    const auto col = static_cast<Eigen::Index>(spec.dimension()); // +1 for the intercept, -1 for zero-based

    SMapOptions smap;
    smap.theta = theta;
    smap.exclusion_radius = opts.exclusion_radius.value_or(static_cast<long>(spec.tp) + spec.max_lag());

    JacobianSeries out;
    out.coordinate = opts.coordinate.column + ":" + std::to_string(opts.coordinate.lag);
    for (std::size_t q = 0; q < emb.rows(); q += opts.stride) {
        const auto r = smap_predict_one(emb, emb.points.row(static_cast<Eigen::Index>(q)), smap, emb.times[q]);
        const double c = r.coefficients(col);
        const bool bad = r.rank_deficient || !std::isfinite(c);
        out.times.push_back(emb.times[q]);
        out.flagged.push_back(bad);
        out.coefficients.push_back(bad ? std::numeric_limits<double>::quiet_NaN() : c);
    }
    return out;
}

double silverman_bandwidth(std::span<const double> sample) {
    const std::size_t n = sample.size();
    if (n < 2) return 0.0;
    const double mean = std::accumulate(sample.begin(), sample.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : sample) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    const auto quantile = [&](double p) {
        const double h = p * static_cast<double>(n - 1);
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const auto hi = std::min(lo + 1, n - 1);
        return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
    };
    const double iqr = quantile(0.75) - quantile(0.25);
    double spread = sd;
    if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
    return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

DensityEstimate gaussian_kde(std::span<const double> sample, std::size_t points) {
    DensityEstimate out;
    if (sample.empty() || points < 2) return out;
    const auto [lo_it, hi_it] = std::minmax_element(sample.begin(), sample.end());
    double h = silverman_bandwidth(sample);
    if (!(h > 0.0)) {
        // Point mass: give it a width relative to its location.
        h = std::max(1e-12, 1e-6 * std::abs(*lo_it));
    }
    out.bandwidth = h;
    const double lo = *lo_it - 3.0 * h;
    const double hi = *hi_it + 3.0 * h;
    const double norm = 1.0 / (static_cast<double>(sample.size()) * h * std::sqrt(2.0 * M_PI));
    for (std::size_t i = 0; i < points; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
        double acc = 0.0;
        for (double v : sample) {
            const double z = (x - v) / h;
            acc += std::exp(-0.5 * z * z);
        }
        out.x.push_back(x);
        out.density.push_back(acc * norm);
    }
    return out;
}

VariancePartition partition_variance(const JacobianSeries& jacobians, std::span<const double> legitimacy,
                                     const VarianceOptions& opts) {
    if (legitimacy.size() != jacobians.size()) {
        throw DataError("legitimacy series is not aligned with the jacobian series");
    }
    if (opts.window < 2 || opts.stride < 1) throw UsageError("variance window must be >= 2 and stride >= 1");
    if (opts.window > jacobians.size()) {
        throw InsufficientDataError("variance window of " + std::to_string(opts.window), opts.window - 1,
                                    jacobians.size());
    }
    VariancePartition out;
    out.options = opts;
    for (std::size_t start = 0; start + opts.window <= jacobians.size(); start += opts.stride) {
        double sum = 0.0, sum_l = 0.0;
        std::size_t n = 0;
        for (std::size_t i = start; i < start + opts.window; ++i) {
            sum_l += legitimacy[i];
            if (std::isfinite(jacobians.coefficients[i])) {
                sum += jacobians.coefficients[i];
                ++n;
            }
        }
        if (n < 2) continue;
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t i = start; i < start + opts.window; ++i) {
            const double c = jacobians.coefficients[i];
            if (std::isfinite(c)) ss += (c - mean) * (c - mean);
        }
        const double label_value = opts.label == LegitimacyLabel::WindowMean
                                       ? sum_l / static_cast<double>(opts.window)
                                       : legitimacy[start + opts.window - 1];
        VarianceWindow w;
        w.start = jacobians.times[start];
        w.low_legitimacy = label_value < opts.threshold;
        w.variance = ss / static_cast<double>(n - 1);
        out.windows.push_back(w);
        (w.low_legitimacy ? out.low : out.high).push_back(w.variance);
    }
    out.low_density = gaussian_kde(out.low, opts.density_points);
    out.high_density = gaussian_kde(out.high, opts.density_points);
    return out;
}

std::vector<Interval> detect_trapped_state(const Frame& frame, const TrappedOptions& opts) {
    const auto& active = frame.column("active");
    std::vector<Interval> out;
    std::size_t i = 0;
    while (i < active.size()) {
        if (!(active[i] >= opts.active_floor)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < active.size() && active[j + 1] >= opts.active_floor) ++j;
        if (static_cast<long>(j - i + 1) >= opts.min_duration) {
            out.push_back({frame.time_at(i), frame.time_at(j)});
        }
        i = j + 1;
    }
    return out;
}

std::vector<double> outburst_waiting_times(const Frame& frame, double threshold) {
    const auto& active = frame.column("active");
    std::vector<double> out;
    long quiet_since = -1;
    for (std::size_t i = 1; i < active.size(); ++i) {
        const bool was_on = active[i - 1] >= threshold;
        const bool on = active[i] >= threshold;
        if (was_on && !on) quiet_since = static_cast<long>(i);
        if (!was_on && on && quiet_since >= 0) {
            out.push_back(static_cast<double>(static_cast<long>(i) - quiet_since));
            quiet_since = -1;
        }
    }
    return out;
}

void write_jacobian_csv(std::ostream& out, const JacobianSeries& series) {
    out << "time,coef\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        out << series.times[i] << ',' << format_real(series.coefficients[i]) << '\n';
    }
}

void write_variance_csv(std::ostream& out, const VariancePartition& partition) {
    out << "window_start,legitimacy_regime,variance\n";
    for (const auto& w : partition.windows) {
        out << w.start << ',' << (w.low_legitimacy ? "low" : "high") << ',' << format_real(w.variance) << '\n';
    }
}

void write_intervals_csv(std::ostream& out, const std::vector<Interval>& intervals) {
    out << "start,end\n";
    for (const auto& iv : intervals) out << iv.start << ',' << iv.end << '\n';
}

namespace stats {

RankTest mann_whitney_greater(std::span<const double> x, std::span<const double> y) {
    if (x.empty() || y.empty()) throw DataError("rank test needs two non-empty samples");
    struct Item {
        double v;
        bool from_x;
    };
    std::vector<Item> all;
    for (double v : x) all.push_back({v, true});
    for (double v : y) all.push_back({v, false});
    std::sort(all.begin(), all.end(), [](const Item& a, const Item& b) { return a.v < b.v; });
    const double n1 = static_cast<double>(x.size());
    const double n2 = static_cast<double>(y.size());
    const double n = n1 + n2;
    double rank_sum_x = 0.0;
    double tie_term = 0.0;
    for (std::size_t i = 0; i < all.size();) {
        std::size_t j = i;
        while (j < all.size() && all[j].v == all[i].v) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        for (std::size_t k = i; k < j; ++k) {
            if (all[k].from_x) rank_sum_x += avg_rank;
        }
        i = j;
    }
    RankTest r;
    r.u = rank_sum_x - n1 * (n1 + 1.0) / 2.0;
    const double mean_u = n1 * n2 / 2.0;
    const double var_u = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if (var_u <= 0.0) {
        r.z = 0.0;
        r.p_value = 1.0;
        return r;
    }
    // Continuity correction toward the null.
    r.z = (r.u - mean_u - 0.5) / std::sqrt(var_u);
    r.p_value = boost::math::cdf(boost::math::complement(boost::math::normal_distribution<>(), r.z));
    return r;
}

ExponentialFit exponential_fit_test(std::span<const double> sample) {
    if (sample.size() < 3) throw DataError("exponential fit needs at least 3 observations");
    ExponentialFit f;
    f.n = sample.size();
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    f.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(f.n);
    if (!(f.mean > 0.0)) throw DataError("exponential fit needs a positive mean");
    const double n = static_cast<double>(f.n);
    for (std::size_t i = 0; i < f.n; ++i) {
        const double cdf = 1.0 - std::exp(-sorted[i] / f.mean);
        f.d = std::max({f.d, static_cast<double>(i + 1) / n - cdf, cdf - static_cast<double>(i) / n});
    }
    f.modified = (f.d - 0.2 / n) * (std::sqrt(n) + 0.26 + 0.5 / std::sqrt(n));
    f.reject_at_1pct = f.modified > 1.308;
    return f;
}

ChiSquareTest uniformity_test(std::span<const double> sample, double low, double high, std::size_t bins) {
    if (bins < 2 || sample.empty() || !(low < high)) throw UsageError("uniformity test needs bins >= 2 and data");
    std::vector<double> counts(bins, 0.0);
    for (double v : sample) {
        if (!(v > low && v <= high)) throw DataError("value outside the tested interval");
        auto b = static_cast<std::size_t>(std::ceil((v - low) / (high - low) * static_cast<double>(bins))) - 1;
        counts[std::min(b, bins - 1)] += 1.0;
    }
    const double expected = static_cast<double>(sample.size()) / static_cast<double>(bins);
    ChiSquareTest t;
    t.bins = bins;
    for (double c : counts) t.statistic += (c - expected) * (c - expected) / expected;
    t.p_value = boost::math::cdf(
        boost::math::complement(boost::math::chi_squared_distribution<>(static_cast<double>(bins - 1)), t.statistic));
    return t;
}

} // namespace stats

} // namespace edmpc
