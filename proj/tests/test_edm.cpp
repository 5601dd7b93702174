#include "edmpc/edm.hpp"
#include "edmpc/error.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace edmpc;

namespace {

Embedding random_library(std::mt19937_64& gen, std::size_t n, std::size_t dim, bool integer_grid = false) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> g(0, 3);
    oracle::Rows x(n, std::vector<double>(dim));
    std::vector<double> y(n);
    for (std::size_t r = 0; r < n; ++r) {
        for (auto& v : x[r]) v = integer_grid ? g(gen) : u(gen);
        y[r] = u(gen);
    }
    return oracle::make_embedding(x, y);
}

std::vector<std::size_t> permuted(std::size_t n, std::mt19937_64& gen) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    std::shuffle(p.begin(), p.end(), gen);
    return p;
}

} // namespace

TEST_CASE("knn small examples") {
    const auto lib = oracle::make_embedding({{0}, {1}, {2}}, {0, 1, 2});
    Eigen::RowVectorXd q(1);
    q << 0.9;
    auto n = knn(lib, q, 1);
    REQUIRE(n.size() == 1);
    CHECK(n.indices[0] == 1);
    CHECK(n.distances[0] == doctest::Approx(0.1).epsilon(1e-12));

    q << 2.0;
    n = knn(lib, q, 2);
    CHECK(n.indices[0] == 2);
    CHECK(n.distances[0] == 0.0);

    n = knn(lib, q, 5);
    CHECK(n.truncated);
    CHECK(n.size() == 3);
    CHECK_THROWS_AS(knn(lib, q, 0), UsageError);
}

TEST_CASE("knn equals exhaustive oracle, ties broken by row id") {
    std::mt19937_64 gen(11);
    for (int rep = 0; rep < 50; ++rep) {
        const bool grid = rep % 2 == 1;
        const auto lib = random_library(gen, 50, 3, grid);
        const auto qlib = random_library(gen, 1, 3, grid);
        const std::vector<double> q(qlib.points.row(0).begin(), qlib.points.row(0).end());
        const auto got = knn(lib, qlib.points.row(0), 7);
        CHECK(got.indices == oracle::knn(lib, q, 7));
        const auto excl = knn(lib, qlib.points.row(0), 7, Exclusion{20, 5});
        CHECK(excl.indices == oracle::knn(lib, q, 7, std::pair<long, long>{20, 5}));
    }
}

TEST_CASE("exclusion radius removes temporal neighbours") {
    const auto lib = oracle::make_embedding({{0}, {0.1}, {0.2}, {5}}, {0, 1, 2, 3});
    Eigen::RowVectorXd q(1);
    q << 0.1;
    const auto n = knn(lib, q, 1, Exclusion{1, 1});
    CHECK(n.indices == std::vector<std::size_t>{3});
    CHECK_THROWS_AS(knn(lib, q, 1, Exclusion{1, 10}), DataError);
}

TEST_CASE("simplex weights") {
    const std::vector<double> d{1, 2, 3};
    const auto w = simplex_weights(d);
    const double e1 = std::exp(-1.0), e2 = std::exp(-2.0), e3 = std::exp(-3.0);
    const double s = e1 + e2 + e3;
    CHECK(w[0] == doctest::Approx(e1 / s).epsilon(1e-15));
    CHECK(w[1] == doctest::Approx(e2 / s).epsilon(1e-15));
    CHECK(w[2] == doctest::Approx(e3 / s).epsilon(1e-15));

    const std::vector<double> z{0, 0, 1};
    CHECK(simplex_weights(z) == std::vector<double>{0.5, 0.5, 0.0});
}

TEST_CASE("simplex predictions") {
    // Hand arithmetic: neighbours at distance 1, 2, 3 with targets 1, 2, 3.
    const auto lib = oracle::make_embedding({{1}, {2}, {3}}, {1, 2, 3});
    const auto q = oracle::make_embedding({{0}}, {0});
    SimplexOptions opts;
    opts.k = 3;
    const double w1 = 0.36787944117144233, w2 = 0.1353352832366127, w3 = 0.049787068367863944;
    CHECK(simplex_predict(lib, q, opts)[0] ==
          doctest::Approx((w1 * 1 + w2 * 2 + w3 * 3) / (w1 + w2 + w3)).epsilon(1e-14));

    const auto sym = oracle::make_embedding({{-1}, {1}, {7}}, {4, 6, 100});
    opts.k = 2;
    CHECK(simplex_predict(sym, q, opts)[0] == doctest::Approx(5.0).epsilon(1e-15));

    const auto hit = oracle::make_embedding({{2}}, {0});
    opts.k = 2;
    CHECK(simplex_predict(lib, hit, opts)[0] == 2.0);
}

TEST_CASE("s-map matches weighted normal-equations oracle") {
    std::mt19937_64 gen(5);
    for (int rep = 0; rep < 20; ++rep) {
        const auto lib = random_library(gen, 40, 2);
        const auto q = random_library(gen, 1, 2);
        const auto rows = oracle::rows_of(lib);
        const std::vector<double> y(lib.targets.begin(), lib.targets.end());
        const std::vector<double> qv(q.points.row(0).begin(), q.points.row(0).end());
        for (double theta : {0.0, 2.0, 8.0}) {
            const auto fit = oracle::smap(rows, y, qv, theta);
            const auto out = smap_predict_one(lib, q.points.row(0), {.theta = theta});
            CHECK(out.prediction == doctest::Approx(fit.prediction).epsilon(1e-10));
            for (int c = 0; c < 3; ++c) {
                CHECK(std::abs(out.coefficients(c) - fit.coefficients[static_cast<std::size_t>(c)]) < 1e-8);
            }
            CHECK_FALSE(out.rank_deficient);
        }
    }
}

TEST_CASE("s-map recovers an exact linear rule at any theta") {
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> u(-3, 3);
    oracle::Rows x(30, std::vector<double>(2));
    std::vector<double> y(30);
    for (std::size_t r = 0; r < 30; ++r) {
        x[r] = {u(gen), u(gen)};
        y[r] = 2 + 3 * x[r][0] - x[r][1];
    }
    const auto lib = oracle::make_embedding(x, y);
    Eigen::RowVectorXd q(2);
    q << 0.5, -1.5;
    for (double theta : {0.0, 0.5, 3.0, 10.0}) {
        const auto out = smap_predict_one(lib, q, {.theta = theta});
        CHECK(std::abs(out.coefficients(0) - 2) < 1e-8);
        CHECK(std::abs(out.coefficients(1) - 3) < 1e-8);
        CHECK(std::abs(out.coefficients(2) + 1) < 1e-8);
        CHECK(std::abs(out.prediction - (2 + 1.5 + 1.5)) < 1e-8);
    }
}

TEST_CASE("s-map is invariant to library row order") {
    std::mt19937_64 gen(21);
    const auto lib = random_library(gen, 35, 3);
    const auto q = random_library(gen, 1, 3);
    const auto shuffled = lib.select(permuted(lib.rows(), gen));
    const auto a = smap_predict_one(lib, q.points.row(0), {.theta = 3});
    const auto b = smap_predict_one(shuffled, q.points.row(0), {.theta = 3});
    CHECK(a.prediction == doctest::Approx(b.prediction).epsilon(1e-12));
}

TEST_CASE("s-map shifts with the target") {
    std::mt19937_64 gen(22);
    auto lib = random_library(gen, 35, 2);
    const auto q = random_library(gen, 1, 2);
    const auto a = smap_predict_one(lib, q.points.row(0), {.theta = 1});
    lib.targets.array() += 7.0;
    const auto b = smap_predict_one(lib, q.points.row(0), {.theta = 1});
    CHECK(b.prediction - a.prediction == doctest::Approx(7.0).epsilon(1e-10));
}

TEST_CASE("s-map degenerate libraries") {
    // Library points all coincide: D > 0 but the slopes are unidentifiable.
    const auto same = oracle::make_embedding({{1, 1}, {1, 1}, {1, 1}, {1, 1}}, {2, 4, 6, 8});
    Eigen::RowVectorXd q(2);
    q << 0, 0;
    auto out = smap_predict_one(same, q, {.theta = 2});
    CHECK(out.rank_deficient);
    CHECK(std::isfinite(out.prediction));

    // Query on top of the identical points: D = 0.
    q << 1, 1;
    out = smap_predict_one(same, q, {.theta = 2});
    CHECK(out.rank_deficient);
    CHECK(out.prediction == doctest::Approx(5.0));
    CHECK(out.coefficients(0) == doctest::Approx(5.0));
    CHECK(out.coefficients(1) == 0.0);
    CHECK(out.coefficients(2) == 0.0);

    const auto tiny = oracle::make_embedding({{1, 1}, {2, 2}, {3, 1}}, {1, 2, 3});
    CHECK_THROWS_AS(smap_predict_one(tiny, q, {.theta = 2}), InsufficientDataError);
}

TEST_CASE("minimum-norm least squares on a rank-deficient system") {
    Eigen::MatrixXd A(3, 2);
    A << 1, 1, 2, 2, 3, 3;
    Eigen::VectorXd b(3);
    b << 2, 4, 6;
    const auto s = solve_least_squares(A, b);
    CHECK(s.rank == 1);
    CHECK(s.rank_deficient);
    CHECK(s.x(0) == doctest::Approx(1.0));
    CHECK(s.x(1) == doctest::Approx(1.0));
}

TEST_CASE("pearson skill") {
    const std::vector<double> a{1, 2, 3, 4};
    const std::vector<double> b{1.1, 1.9, 3.2, 3.8};
    const auto r = pearson_rho(a, b);
    // Textbook formula: sxy = 4.7, sxx = 5, syy = 4.5.
    CHECK(r.rho == doctest::Approx(4.7 / std::sqrt(5.0 * 4.5)).epsilon(1e-14));
    CHECK(r.rho == doctest::Approx(oracle::pearson(a, b)).epsilon(1e-14));
    CHECK(r.mae == doctest::Approx(0.15));
    CHECK(r.rmse == doctest::Approx(std::sqrt(0.025)));

    CHECK(pearson_rho(a, a).rho == 1.0);
    const std::vector<double> neg{-1, -2, -3, -4};
    CHECK(pearson_rho(a, neg).rho == -1.0);

    const std::vector<double> flat{2, 2, 2, 2};
    const auto d = pearson_rho(a, flat);
    CHECK(d.degenerate);
    CHECK(std::isnan(d.rho));
    CHECK_THROWS_AS(pearson_rho(std::vector<double>{1}, std::vector<double>{1}), DataError);
}
