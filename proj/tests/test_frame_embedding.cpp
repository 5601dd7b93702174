#include "edmpc/embedding.hpp"
#include "edmpc/error.hpp"
#include "edmpc/frame.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

using namespace edmpc;

namespace {

std::vector<std::vector<double>> points_of(const Embedding& e) {
    std::vector<std::vector<double>> out;
    for (Eigen::Index r = 0; r < e.points.rows(); ++r) {
        out.emplace_back(e.points.row(r).begin(), e.points.row(r).end());
    }
    return out;
}

std::vector<double> targets_of(const Embedding& e) { return {e.targets.begin(), e.targets.end()}; }

Frame ramp_frame(long n, long start = 1) {
    Frame f(start);
    std::vector<double> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
    std::iota(a.begin(), a.end(), 1.0);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = 10.0 * a[i];
    f.add_column("A", a);
    f.add_column("B", b);
    return f;
}

} // namespace

TEST_CASE("frame csv round trip is exact") {
    Frame f(5);
    f.add_column("x", {0.1, 1.0 / 3.0, -2.5e-300});
    f.add_column("y", {1, std::nan(""), 3});
    std::ostringstream out;
    write_frame_csv(out, f);
    CHECK(out.str().rfind("time,x,y\n5,0.1,", 0) == 0);
    std::istringstream in(out.str());
    const Frame g = read_frame_csv(in);
    CHECK(g.start_time() == 5);
    CHECK(g.column("x") == f.column("x"));
    CHECK(std::isnan(g.column("y")[1]));
    std::ostringstream again;
    write_frame_csv(again, g);
    CHECK(again.str() == out.str());
}

TEST_CASE("frame csv rejects gaps and bad headers") {
    std::istringstream gap("time,x\n1,1\n3,2\n");
    CHECK_THROWS_AS(read_frame_csv(gap), DataError);
    std::istringstream header("t,x\n1,1\n");
    CHECK_THROWS_AS(read_frame_csv(header), DataError);
    CHECK_THROWS_AS(ramp_frame(3).column("nope"), DataError);
}

TEST_CASE("frame slice keeps absolute time") {
    const auto f = ramp_frame(10);
    const auto s = f.slice(4, 6);
    CHECK(s.start_time() == 4);
    CHECK(s.column("A") == std::vector<double>{4, 5, 6});
}

TEST_CASE("delay embedding examples") {
    const std::vector<double> s5{1, 2, 3, 4, 5};
    auto e = build_delay_embedding(s5, 1, 1, 1);
    CHECK(points_of(e) == std::vector<std::vector<double>>{{1}, {2}, {3}, {4}});
    CHECK(targets_of(e) == std::vector<double>{2, 3, 4, 5});

    e = build_delay_embedding(s5, 2, 1, 1);
    CHECK(points_of(e) == std::vector<std::vector<double>>{{2, 1}, {3, 2}, {4, 3}});
    CHECK(targets_of(e) == std::vector<double>{3, 4, 5});

    const std::vector<double> s7{1, 2, 3, 4, 5, 6, 7};
    e = build_delay_embedding(s7, 2, 2, 2);
    CHECK(points_of(e) == std::vector<std::vector<double>>{{3, 1}, {4, 2}, {5, 3}});
    CHECK(targets_of(e) == std::vector<double>{5, 6, 7});
    CHECK(e.times == std::vector<long>{2, 3, 4});
}

TEST_CASE("delay embedding too short names the required length") {
    const std::vector<double> s{1, 2, 3};
    try {
        build_delay_embedding(s, 3, 1, 1);
        FAIL("expected InsufficientDataError");
    } catch (const InsufficientDataError& e) {
        CHECK(e.required() == 3);
        CHECK(std::string(e.what()).find("insufficient data") != std::string::npos);
    }
}

TEST_CASE("generalized embedding examples") {
    Frame f;
    f.add_column("A", {1, 2, 3});
    f.add_column("B", {10, 20, 30});
    const auto e = build_generalized_embedding(f, EmbeddingSpec::parse("A:0,B:0", "A", 1));
    CHECK(points_of(e) == std::vector<std::vector<double>>{{1, 10}, {2, 20}});
    CHECK(targets_of(e) == std::vector<double>{2, 3});

    const auto spec = control_embedding_spec();
    CHECK(spec.dimension() == 6);
    CHECK(spec.coordinates_string() == "jailed:0,jailed:2,jailed:4,quiet:0,quiet:2,quiet:4");

    Frame g;
    g.add_column("x", std::vector<double>(10, 1.0));
    const auto one = build_generalized_embedding(g, EmbeddingSpec::parse("x:0,x:4", "x", 5));
    CHECK(one.rows() == 1);
}

TEST_CASE("generalized embedding drops non-finite rows") {
    auto f = ramp_frame(8);
    f.set_value("B", 3, std::nan(""));
    const auto e = build_generalized_embedding(f, EmbeddingSpec::parse("A:0,B:1", "A", 1));
    // Only origin t = 5 reads B at t = 4.
    CHECK(e.dropped_nonfinite == 1);
    CHECK(e.rows() == 5);
}

TEST_CASE("state vector matches the embedding row at the same time") {
    const auto f = ramp_frame(20, 7);
    const auto spec = EmbeddingSpec::parse("A:0,B:3,A:2", "B", 2);
    const auto e = build_generalized_embedding(f, spec);
    for (std::size_t r = 0; r < e.rows(); ++r) {
        CHECK(state_vector(f, spec, e.times[r]) == e.points.row(static_cast<Eigen::Index>(r)));
    }
}

TEST_CASE("spec parsing errors") {
    CHECK_THROWS_AS(EmbeddingSpec::parse("A:x", "A", 1), UsageError);
    CHECK_THROWS_AS(EmbeddingSpec::parse("A:0,A:0", "A", 1), UsageError);
    CHECK_THROWS_AS(EmbeddingSpec::parse("", "A", 1), UsageError);
    CHECK_THROWS_AS(TimeRange::parse("5"), UsageError);
}

TEST_CASE("library and prediction split") {
    Frame f(1);
    std::vector<double> v(101);
    std::iota(v.begin(), v.end(), 0.0);
    f.add_column("x", v);
    const auto e = build_generalized_embedding(f, EmbeddingSpec::parse("x:0", "x", 1));
    REQUIRE(e.times.front() == 1);
    REQUIRE(e.times.back() == 100);
    const auto [lib, pred] = split_library_prediction(e, {1, 50}, {51, 100});
    CHECK(lib.rows() == 50);
    CHECK(pred.rows() == 50);
    try {
        split_library_prediction(e, {1, 50}, {40, 60});
        FAIL("expected overlap error");
    } catch (const UsageError& err) {
        CHECK(std::string(err.what()).find("overlapping ranges") != std::string::npos);
    }
    CHECK_NOTHROW(split_library_prediction(e, {1, 50}, {40, 60}, true));
    CHECK_THROWS_AS(split_library_prediction(e, {1, 50}, {500, 600}), DataError);
}
