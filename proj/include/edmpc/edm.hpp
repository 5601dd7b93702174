#ifndef EDMPC_EDM_HPP
#define EDMPC_EDM_HPP

#include "edmpc/embedding.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace edmpc {

/// Removes library rows whose origin lies within `radius` ticks of the query
/// origin (|t_lib - t_query| <= radius). Radius 0 drops only the query's own row.
struct Exclusion {
    long query_time = 0;
    long radius = 0;
};

/// Library row ids ordered by Euclidean distance, ties broken by ascending id.
struct NeighborSet {
    std::vector<std::size_t> indices;
    std::vector<double> distances;
    /// Set when k exceeded the eligible library rows and every row was returned.
    bool truncated = false;

    std::size_t size() const noexcept { return indices.size(); }
};

/// Exact k nearest neighbours by brute-force scan.
NeighborSet knn(const Embedding& library, const Eigen::Ref<const Eigen::RowVectorXd>& query, std::size_t k,
                std::optional<Exclusion> exclusion = std::nullopt);

struct SimplexOptions {
    /// Neighbour count; 0 selects E + 1.
    std::size_t k = 0;
    std::optional<long> exclusion_radius;
};

/// Normalized simplex weights for distances sorted ascending: exp(-d / d_min)
/// with d_min the nearest distance, or uniform weight over the zero-distance
/// neighbours when the nearest distance is zero.
std::vector<double> simplex_weights(std::span<const double> distances);

/// Distance-weighted average of the neighbours' targets for every query row.
std::vector<double> simplex_predict(const Embedding& library, const Embedding& queries, const SimplexOptions& opts = {});

struct SMapOptions {
    double theta = 0.0;
    /// Neighbour count; 0 uses every library row.
    std::size_t k = 0;
    std::optional<long> exclusion_radius;
};

struct SMapOutput {
    double prediction = 0.0;
    /// Intercept followed by one coefficient per embedding coordinate.
    Eigen::VectorXd coefficients;
    double theta = 0.0;
    double mean_distance = 0.0;
    long rank = 0;
    /// The weighted design matrix was rank deficient; coefficients are the minimum-norm solution.
    bool rank_deficient = false;
};

struct LeastSquaresSolution {
    Eigen::VectorXd x;
    long rank = 0;
    bool rank_deficient = false;
};

/// Minimum-norm solution of min ||Ax - b||_2. Column-pivoted QR reduces A to a
/// square triangle whose SVD fixes the numerical rank: singular values at or
/// below eps * max(rows, cols) * sigma_max are treated as zero.
LeastSquaresSolution solve_least_squares(const Eigen::Ref<const Eigen::MatrixXd>& A,
                                         const Eigen::Ref<const Eigen::VectorXd>& b);

/// S-map for one query state: kernel weights exp(-theta d / D) around the query,
/// D the mean neighbour distance, then a weighted linear fit with intercept.
SMapOutput smap_predict_one(const Embedding& library, const Eigen::Ref<const Eigen::RowVectorXd>& query,
                            const SMapOptions& opts, std::optional<long> query_time = std::nullopt);

std::vector<SMapOutput> smap_predict(const Embedding& library, const Embedding& queries, const SMapOptions& opts);

struct SkillReport {
    double rho = 0.0;
    double mae = 0.0;
    double rmse = 0.0;
    std::size_t n = 0;
    /// Either sequence had zero variance; rho is NaN rather than a number.
    bool degenerate = false;
};

/// Pearson correlation, MAE and RMSE over the pairs where both values are finite.
SkillReport pearson_rho(std::span<const double> predictions, std::span<const double> observations);

} // namespace edmpc

#endif
