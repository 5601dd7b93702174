#include "edmpc/edm.hpp"

#include "edmpc/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace edmpc {

NeighborSet knn(const Embedding& library, const Eigen::Ref<const Eigen::RowVectorXd>& query, std::size_t k,
                std::optional<Exclusion> exclusion) {
    if (k == 0) {
        throw UsageError("knn needs k >= 1");
    }
    if (library.rows() == 0) {
        throw DataError("knn on an empty library");
    }
    if (static_cast<std::size_t>(query.size()) != library.dimension()) {
        throw DataError("query dimension " + std::to_string(query.size()) + " does not match library dimension " +
                        std::to_string(library.dimension()));
    }

    struct Candidate {
        double d2;
        std::size_t id;
    };
    std::vector<Candidate> candidates;
    candidates.reserve(library.rows());
    for (std::size_t i = 0; i < library.rows(); ++i) {
        if (exclusion && std::labs(library.times[i] - exclusion->query_time) <= exclusion->radius) {
            continue;
        }
        const double d2 = (library.points.row(static_cast<Eigen::Index>(i)) - query).squaredNorm();
        candidates.push_back({d2, i});
    }
    if (candidates.empty()) {
        throw DataError("knn: exclusion radius removed every library row");
    }

    const auto closer = [](const Candidate& a, const Candidate& b) {
        return a.d2 < b.d2 || (a.d2 == b.d2 && a.id < b.id);
    };
    NeighborSet out;
    std::size_t take = k;
    if (k >= candidates.size()) {
        out.truncated = k > candidates.size();
        take = candidates.size();
        std::sort(candidates.begin(), candidates.end(), closer);
    } else {
        std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take), candidates.end(),
                          closer);
    }
    out.indices.reserve(take);
    out.distances.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        out.indices.push_back(candidates[i].id);
        out.distances.push_back(std::sqrt(candidates[i].d2));
    }
    return out;
}

} // namespace edmpc
