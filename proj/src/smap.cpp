#include "edmpc/edm.hpp"

#include "edmpc/error.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace edmpc {

namespace {

LeastSquaresSolution pseudo_inverse_solve(const Eigen::Ref<const Eigen::MatrixXd>& M,
                                          const Eigen::Ref<const Eigen::VectorXd>& rhs, double tolerance_scale) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    const double cutoff = s.size() > 0 ? tolerance_scale * s(0) : 0.0;
    Eigen::VectorXd utb = svd.matrixU().transpose() * rhs;
    long rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > cutoff) {
            utb(i) /= s(i);
            ++rank;
        } else {
            utb(i) = 0.0;
        }
    }
    LeastSquaresSolution out;
    out.x = svd.matrixV() * utb;
    out.rank = rank;
    out.rank_deficient = rank < M.cols();
    return out;
}

} // namespace

LeastSquaresSolution solve_least_squares(const Eigen::Ref<const Eigen::MatrixXd>& A,
                                         const Eigen::Ref<const Eigen::VectorXd>& b) {
    if (A.rows() != b.size()) {
        throw DataError("least squares: row count mismatch");
    }
    const Eigen::Index m = A.rows();
    const Eigen::Index p = A.cols();
    const double scale = std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(m, p));
    if (m < p) {
        auto out = pseudo_inverse_solve(A, b, scale);
        out.rank_deficient = true;
        return out;
    }
    // A P = Q R; the singular values of R equal those of A.
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    Eigen::VectorXd qtb = qr.householderQ().adjoint() * b;
    Eigen::MatrixXd R = qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
    auto z = pseudo_inverse_solve(R, qtb.head(p), scale);
    LeastSquaresSolution out;
    out.x = qr.colsPermutation() * z.x;
    out.rank = z.rank;
    out.rank_deficient = z.rank_deficient;
    return out;
}

SMapOutput smap_predict_one(const Embedding& library, const Eigen::Ref<const Eigen::RowVectorXd>& query,
                            const SMapOptions& opts, std::optional<long> query_time) {
    if (!(opts.theta >= 0.0) || !std::isfinite(opts.theta)) {
        throw UsageError("S-map theta must be finite and >= 0");
    }
    const std::size_t E = library.dimension();
    if (library.rows() < E + 2) {
        throw InsufficientDataError("S-map library of dimension " + std::to_string(E), E + 1, library.rows());
    }
    std::optional<Exclusion> excl;
    if (opts.exclusion_radius && query_time) excl = Exclusion{*query_time, *opts.exclusion_radius};
    const std::size_t k = opts.k == 0 ? library.rows() : opts.k;
    const auto nbrs = knn(library, query, k, excl);
    const auto m = static_cast<Eigen::Index>(nbrs.size());

    SMapOutput out;
    out.theta = opts.theta;
    out.coefficients = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(E) + 1);

    double D = 0.0;
    for (double d : nbrs.distances) D += d;
    D /= static_cast<double>(m);
    out.mean_distance = D;

    if (D == 0.0) {
        // Every neighbour coincides with the query: no slope is identifiable.
        double mean = 0.0;
        for (auto i : nbrs.indices) mean += library.targets(static_cast<Eigen::Index>(i));
        mean /= static_cast<double>(m);
        out.prediction = mean;
        out.coefficients(0) = mean;
        out.rank = 1;
        out.rank_deficient = true;
        return out;
    }

    Eigen::MatrixXd A(m, static_cast<Eigen::Index>(E) + 1);
    Eigen::VectorXd b(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto row = static_cast<Eigen::Index>(nbrs.indices[static_cast<std::size_t>(i)]);
        const double w = std::exp(-opts.theta * nbrs.distances[static_cast<std::size_t>(i)] / D);
        A(i, 0) = w;
        A.row(i).tail(static_cast<Eigen::Index>(E)) = w * library.points.row(row);
        b(i) = w * library.targets(row);
    }
    const auto sol = solve_least_squares(A, b);
    out.coefficients = sol.x;
    out.rank = sol.rank;
    out.rank_deficient = sol.rank_deficient;
    out.prediction = sol.x(0) + query.dot(sol.x.tail(static_cast<Eigen::Index>(E)));
    return out;
}

std::vector<SMapOutput> smap_predict(const Embedding& library, const Embedding& queries, const SMapOptions& opts) {
    if (queries.dimension() != library.dimension()) {
        throw DataError("S-map: query dimension does not match library");
    }
    std::vector<SMapOutput> out;
    out.reserve(queries.rows());
    for (std::size_t q = 0; q < queries.rows(); ++q) {
        std::optional<long> t;
        if (!queries.times.empty()) t = queries.times[q];
        out.push_back(smap_predict_one(library, queries.points.row(static_cast<Eigen::Index>(q)), opts, t));
    }
    return out;
}

} // namespace edmpc
