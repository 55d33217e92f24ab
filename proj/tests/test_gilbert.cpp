#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>

#include <pclt/gilbert.hpp>
#include <pclt/rng.hpp>

using namespace pclt;

namespace {

Points random_points(Rng& rng, int d, std::size_t n, double scale = 1.0) {
    Points pts;
    pts.dim = d;
    double x[3];
    for (std::size_t i = 0; i < n; ++i) {
        for (int k = 0; k < d; ++k) x[k] = scale * rng.uniform();
        pts.push_back(x);
    }
    return pts;
}

std::set<std::pair<std::uint32_t, std::uint32_t>> edge_set(const std::vector<Edge>& edges) {
    std::set<std::pair<std::uint32_t, std::uint32_t>> s;
    for (const auto& e : edges) s.insert({e.i, e.j});
    return s;
}

}  // namespace

TEST_CASE("grid neighbor query matches brute force on 500 configurations") {
    Rng rng(1001);
    for (int it = 0; it < 500; ++it) {
        int d = 1 + int(rng.uniform() * 3);
        std::size_t n = std::size_t(rng.uniform() * 60);
        double eps = 0.05 + 0.45 * rng.uniform();
        Points pts = random_points(rng, d, n);
        double x[3];
        for (int k = 0; k < d; ++k) x[k] = rng.uniform();

        GridIndex grid(pts, eps);
        auto got = grid.neighbors(x);
        std::sort(got.begin(), got.end());

        std::vector<std::uint32_t> want;
        for (std::size_t j = 0; j < n; ++j) {
            double d2 = sq_dist(x, pts[j], d);
            if (d2 > 0 && d2 < eps * eps) want.push_back(std::uint32_t(j));
        }
        REQUIRE(got == want);
    }
}

TEST_CASE("grid edges equal brute-force edges") {
    Rng rng(1002);
    for (int it = 0; it < 200; ++it) {
        int d = 1 + int(rng.uniform() * 3);
        std::size_t n = std::size_t(rng.uniform() * 80);
        double eps = 0.05 + 0.45 * rng.uniform();
        Points pts = random_points(rng, d, n);
        auto fast = build_edges(pts, eps);
        auto slow = build_edges_bruteforce(pts, eps);
        REQUIRE(edge_set(fast) == edge_set(slow));
        // same pair order after sort, and bitwise equal lengths
        auto key = [](const Edge& a, const Edge& b) {
            return std::make_pair(a.i, a.j) < std::make_pair(b.i, b.j);
        };
        std::sort(fast.begin(), fast.end(), key);
        std::sort(slow.begin(), slow.end(), key);
        for (std::size_t i = 0; i < fast.size(); ++i)
            REQUIRE(fast[i].length == slow[i].length);
    }
}

TEST_CASE("edge power sum basics") {
    auto window = ConvexBody::box({0, 0}, {1, 1});

    Points empty;
    empty.dim = 2;
    CHECK(edge_power_sum(empty, {2.0, 0.5, window}) == 0.0);

    Points pair;
    pair.dim = 2;
    double a[2] = {0.1, 0.1}, b[2] = {0.6, 0.1};
    pair.push_back(a);
    pair.push_back(b);
    CHECK(edge_power_sum(pair, {2.0, 1.0, window}) == Catch::Approx(0.25).epsilon(1e-14));
    CHECK(edge_power_sum(pair, {0.0, 1.0, window}) == 1.0);  // alpha 0 counts edges

    // distance exactly eps is excluded, the relation is strict
    CHECK(edge_power_sum(pair, {2.0, 0.5, window}) == 0.0);

    // coincident points never form an edge
    Points twin;
    twin.dim = 2;
    twin.push_back(a);
    twin.push_back(a);
    CHECK(edge_power_sum(twin, {2.0, 1.0, window}) == 0.0);

    // both endpoints must lie in the window
    auto left = ConvexBody::box({0, 0}, {0.5, 1});
    CHECK(edge_power_sum(pair, {2.0, 1.0, left}) == 0.0);
    auto wide = ConvexBody::box({0, 0}, {2, 2});
    CHECK(edge_power_sum(pair, {2.0, 1.0, wide}) == Catch::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("edge power sum agrees with the long-double oracle") {
    Rng rng(1003);
    auto window = ConvexBody::box({0, 0, 0}, {1, 1, 1});
    for (int it = 0; it < 50; ++it) {
        int d = 1 + int(rng.uniform() * 3);
        std::vector<double> lo(d, 0.0), hi(d, 1.0);
        EdgeFunctionalSpec spec{-0.9 + 3.9 * rng.uniform(), 0.05 + 0.4 * rng.uniform(),
                                ConvexBody::box(lo, hi)};
        Points pts = random_points(rng, d, 150);
        double fast = edge_power_sum(pts, spec);
        long double slow = edge_power_sum_bruteforce(pts, spec);
        REQUIRE(std::abs(fast - double(slow)) <= 1e-12 * std::max(1.0, std::abs(double(slow))));
    }
}

TEST_CASE("add-one cost matches re-evaluation") {
    Rng rng(1004);
    for (int it = 0; it < 100; ++it) {
        int d = 1 + int(rng.uniform() * 3);
        std::vector<double> lo(d, 0.0), hi(d, 1.0);
        EdgeFunctionalSpec spec{-0.9 + 3.9 * rng.uniform(), 0.05 + 0.4 * rng.uniform(),
                                ConvexBody::box(lo, hi)};
        Points pts = random_points(rng, d, 120);
        double x[3];
        for (int k = 0; k < d; ++k) x[k] = rng.uniform();

        double incremental = add_one_cost(pts, spec, x);
        double before = edge_power_sum(pts, spec);
        pts.push_back(x);
        double after = edge_power_sum(pts, spec);
        pts.pop_back();
        REQUIRE(std::abs(incremental - (after - before)) <=
                1e-12 * std::max(1.0, std::abs(incremental)));
    }
}

TEST_CASE("add-one cost edge cases") {
    auto window = ConvexBody::box({0, 0}, {1, 1});
    EdgeFunctionalSpec spec{1.0, 0.3, window};
    Points empty;
    empty.dim = 2;
    double x[2] = {0.5, 0.5};
    CHECK(add_one_cost(empty, spec, x) == 0.0);

    double outside[2] = {1.5, 0.5};
    CHECK_THROWS_AS(add_one_cost(empty, spec, outside), validation_error);
}

TEST_CASE("second difference is configuration-free and symmetric") {
    Rng rng(1005);
    for (int it = 0; it < 200; ++it) {
        int d = 1 + int(rng.uniform() * 3);
        std::vector<double> lo(d, 0.0), hi(d, 1.0);
        EdgeFunctionalSpec spec{-0.9 + 3.9 * rng.uniform(), 0.05 + 0.4 * rng.uniform(),
                                ConvexBody::box(lo, hi)};
        double x[3], y[3];
        for (int k = 0; k < d; ++k) {
            x[k] = rng.uniform();
            y[k] = rng.uniform();
        }
        double base = second_difference(spec, x, y);
        REQUIRE(base == second_difference(spec, y, x));

        // same value whatever configuration it is evaluated against
        Points pts = random_points(rng, d, 80);
        long double oracle = second_difference_bruteforce(pts, spec, x, y);
        REQUIRE(std::abs(base - double(oracle)) <= 1e-12 * std::max(1.0, std::abs(base)));
    }
}

TEST_CASE("second difference closed form") {
    auto window = ConvexBody::box({0, 0}, {1, 1});
    EdgeFunctionalSpec spec{2.0, 0.5, window};
    double x[2] = {0.2, 0.2}, y[2] = {0.5, 0.2};
    CHECK(second_difference(spec, x, y) == Catch::Approx(0.09).epsilon(1e-14));

    double far[2] = {0.9, 0.9};
    CHECK(second_difference(spec, x, far) == 0.0);
    double outside[2] = {1.2, 0.2};
    CHECK(second_difference(spec, x, outside) == 0.0);  // no error, just zero
    CHECK(second_difference(spec, x, x) == 0.0);
}

TEST_CASE("vector sums equal per-component scalar sums") {
    Rng rng(1006);
    auto w1 = ConvexBody::box({0, 0}, {1, 1});
    auto w2 = ConvexBody::box({0.5, 0}, {1.5, 1});
    Points pts = random_points(rng, 2, 200, 1.5);
    const double eps = 0.2;
    std::vector<double> alphas = {1.0, 2.5};
    std::vector<std::uint32_t> masks(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        masks[i] = 0;
        if (w1.contains(pts[i])) masks[i] |= 1u;
        if (w2.contains(pts[i])) masks[i] |= 2u;
    }
    auto sums = vector_edge_power_sums(pts, eps, alphas, masks);
    REQUIRE(sums.size() == 2);
    CHECK(sums[0] ==
          Catch::Approx(edge_power_sum(pts, {alphas[0], eps, w1})).epsilon(1e-12));
    CHECK(sums[1] ==
          Catch::Approx(edge_power_sum(pts, {alphas[1], eps, w2})).epsilon(1e-12));
}
