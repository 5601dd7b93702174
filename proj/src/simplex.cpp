#include "edmpc/edm.hpp"

#include "edmpc/error.hpp"

#include <cmath>

namespace edmpc {

std::vector<double> simplex_weights(std::span<const double> distances) {
    std::vector<double> w(distances.size(), 0.0);
    if (distances.empty()) return w;
    const double d_min = distances.front();
    double total = 0.0;
    if (d_min == 0.0) {
        for (std::size_t i = 0; i < distances.size() && distances[i] == 0.0; ++i) {
            w[i] = 1.0;
            total += 1.0;
        }
    } else {
        for (std::size_t i = 0; i < distances.size(); ++i) {
            w[i] = std::exp(-distances[i] / d_min);
            total += w[i];
        }
    }
    for (auto& x : w) x /= total;
    return w;
}

std::vector<double> simplex_predict(const Embedding& library, const Embedding& queries, const SimplexOptions& opts) {
    if (queries.dimension() != library.dimension()) {
        throw DataError("simplex: query dimension does not match library");
    }
    const std::size_t k = opts.k == 0 ? library.dimension() + 1 : opts.k;
    std::vector<double> out;
    out.reserve(queries.rows());
    for (std::size_t q = 0; q < queries.rows(); ++q) {
        std::optional<Exclusion> excl;
        if (opts.exclusion_radius) excl = Exclusion{queries.times[q], *opts.exclusion_radius};
        const auto nbrs = knn(library, queries.points.row(static_cast<Eigen::Index>(q)), k, excl);
        const auto w = simplex_weights(nbrs.distances);
        double y = 0.0;
        for (std::size_t i = 0; i < nbrs.size(); ++i) {
            y += w[i] * library.targets(static_cast<Eigen::Index>(nbrs.indices[i]));
        }
        out.push_back(y);
    }
    return out;
}

} // namespace edmpc
