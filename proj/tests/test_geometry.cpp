#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <pclt/geometry.hpp>
#include <pclt/rng.hpp>

using namespace pclt;

TEST_CASE("unit ball volumes in low dimensions") {
    CHECK(unit_ball_volume(1) == Catch::Approx(2.0).epsilon(1e-14));
    CHECK(unit_ball_volume(2) == Catch::Approx(pi).epsilon(1e-14));
    CHECK(unit_ball_volume(3) == Catch::Approx(4.0 * pi / 3.0).epsilon(1e-14));
    CHECK_THROWS_AS(unit_ball_volume(0), validation_error);
}

TEST_CASE("box and ball volumes are exact") {
    auto box = ConvexBody::box({0, 0}, {2, 0.5});
    auto v = volume(box);
    CHECK(v.value == 1.0);
    CHECK(v.std_err == 0.0);

    auto ball = ConvexBody::ball({1, 1, 1}, 0.5);
    CHECK(volume(ball).value == Catch::Approx(4.0 * pi / 3.0 * 0.125).epsilon(1e-14));
}

TEST_CASE("intersection of boxes stays exact") {
    auto a = ConvexBody::box({0, 0}, {1, 1});
    auto b = ConvexBody::box({0.5, 0}, {1.5, 1});
    auto v = volume(intersect(a, b));
    CHECK(v.value == Catch::Approx(0.5).epsilon(1e-14));
    CHECK(v.std_err == 0.0);

    auto far = ConvexBody::box({2, 2}, {3, 3});
    CHECK(volume(intersect(a, far)).value == 0.0);
}

TEST_CASE("lens volume from Monte Carlo matches the closed form") {
    // two unit disks with centers one apart: 2 pi / 3 - sqrt(3) / 2
    auto lens = intersect(ConvexBody::ball({0, 0}, 1), ConvexBody::ball({1, 0}, 1));
    auto v = volume(lens, 400'000);
    const double exact = 2.0 * pi / 3.0 - std::sqrt(3.0) / 2.0;
    CHECK(v.std_err > 0.0);
    CHECK(std::abs(v.value - exact) < 4.0 * v.std_err);
}

TEST_CASE("quarter disk via box-ball intersection") {
    auto quarter = intersect(ConvexBody::ball({0, 0}, 1), ConvexBody::box({0, 0}, {1, 1}));
    auto v = volume(quarter, 400'000);
    CHECK(std::abs(v.value - pi / 4.0) < 4.0 * v.std_err);
}

TEST_CASE("volume demands a budget for Monte Carlo bodies") {
    auto lens = intersect(ConvexBody::ball({0, 0}, 1), ConvexBody::ball({1, 0}, 1));
    CHECK_THROWS_AS(volume(lens, 0), budget_error);
    CHECK_NOTHROW(volume(ConvexBody::box({0}, {1}), 0));  // exact path ignores the budget
}

TEST_CASE("containment and boundary distance") {
    auto box = ConvexBody::box({0, 0}, {1, 1});
    double inside[2] = {0.5, 0.25};
    double edge[2] = {0.0, 0.5};
    double outside[2] = {1.5, 0.5};
    CHECK(box.contains(inside));
    CHECK(box.contains(edge));
    CHECK_FALSE(box.contains(outside));
    CHECK(box.boundary_dist(inside) == Catch::Approx(0.25));
    CHECK(box.boundary_dist(outside) < 0.0);

    auto ball = ConvexBody::ball({0, 0}, 2);
    double p[2] = {1.0, 0.0};
    CHECK(ball.boundary_dist(p) == Catch::Approx(1.0));

    auto lens = intersect(ConvexBody::ball({0, 0}, 1), ConvexBody::ball({1, 0}, 1));
    double mid[2] = {0.5, 0.0};
    // distance to the lens boundary is governed by the nearer sphere
    CHECK(lens.boundary_dist(mid) == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("bounding boxes tighten through intersections") {
    auto lens = intersect(ConvexBody::ball({0, 0}, 1), ConvexBody::ball({1, 0}, 1));
    std::vector<double> lo, hi;
    lens.bounding_box(lo, hi);
    CHECK(lo[0] == Catch::Approx(0.0));
    CHECK(hi[0] == Catch::Approx(1.0));
    CHECK(lo[1] == Catch::Approx(-1.0));
    CHECK(hi[1] == Catch::Approx(1.0));
}

TEST_CASE("inner deficit closed forms") {
    auto box = ConvexBody::box({0, 0}, {1, 1});
    auto d = inner_deficit(box, 0.1);
    CHECK(d.value == Catch::Approx(1.0 - 0.8 * 0.8).epsilon(1e-13));
    CHECK(d.std_err == 0.0);
    CHECK(d.value <= d.linear_bound);

    auto ball = ConvexBody::ball({0, 0}, 1);
    auto db = inner_deficit(ball, 0.1);
    CHECK(db.value == Catch::Approx(pi * (1.0 - 0.81)).epsilon(1e-13));
    CHECK(db.linear_bound == Catch::Approx(2.0 * pi * 0.1).epsilon(1e-13));

    // eps at least the inradius consumes the whole body
    CHECK(inner_deficit(box, 0.5).value == Catch::Approx(1.0));
}

TEST_CASE("inner deficit is monotone in eps and below the surface bound") {
    auto body = intersect(ConvexBody::box({0, 0}, {1, 1}), ConvexBody::box({0.25, 0}, {2, 1}));
    double prev = 0;
    for (double eps : {0.02, 0.05, 0.1, 0.2}) {
        auto d = inner_deficit(body, eps);
        CHECK(d.value >= prev - 1e-12);
        CHECK(d.value <= d.linear_bound + 1e-12);
        prev = d.value;
    }
}

TEST_CASE("surface measure of standard bodies") {
    CHECK(surface_gamma(ConvexBody::box({0, 0}, {1, 1})) == Catch::Approx(4.0));
    CHECK(surface_gamma(ConvexBody::box({0, 0, 0}, {1, 2, 3})) == Catch::Approx(22.0));
    CHECK(surface_gamma(ConvexBody::ball({0, 0}, 1)) == Catch::Approx(2.0 * pi));
    CHECK(surface_gamma(ConvexBody::ball({0, 0, 0}, 1)) == Catch::Approx(4.0 * pi));
}

TEST_CASE("body construction rejects malformed input") {
    CHECK_THROWS_AS(ConvexBody::box({0, 0}, {1}), validation_error);
    CHECK_THROWS_AS(ConvexBody::box({1, 0}, {0, 1}), validation_error);
    CHECK_THROWS_AS(ConvexBody::ball({0, 0}, -1), validation_error);
    CHECK_THROWS_AS(ConvexBody::intersection({}), validation_error);
    CHECK_THROWS_AS(
        ConvexBody::intersection({ConvexBody::box({0}, {1}), ConvexBody::box({0, 0}, {1, 1})}),
        validation_error);
}
