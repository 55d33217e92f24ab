#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include <pclt/verify.hpp>

using namespace pclt;

namespace {

VaryingDomainSpec two_rect_spec() {
    VaryingDomainSpec spec;
    spec.d = 2;
    spec.windows = {ConvexBody::box({0, 0}, {1, 1}), ConvexBody::box({0.5, 0}, {1.5, 1})};
    spec.alpha = 1.0;
    spec.rule = EpsilonRule::power(1, 0.5);
    return spec;
}

}  // namespace

TEST_CASE("replica batches are independent of the thread count") {
    auto spec = two_rect_spec();
    auto one = run_replicas(spec, 50.0, 12, 999, 1);
    auto three = run_replicas(spec, 50.0, 12, 999, 3);
    REQUIRE(one.rows.size() == three.rows.size());
    for (std::size_t r = 0; r < one.rows.size(); ++r) {
        REQUIRE(one.raw[r] == three.raw[r]);  // bitwise
        REQUIRE(one.rows[r] == three.rows[r]);
    }
    CHECK_THROWS_AS(run_replicas(spec, 50.0, 1, 999), validation_error);
}

TEST_CASE("centering modes differ only in the subtracted mean") {
    VaryingExponentSpec spec;
    spec.d = 2;
    spec.window = ConvexBody::box({0, 0}, {1, 1});
    spec.alphas = {1.0, 2.0};
    spec.rule = EpsilonRule::power(1, 0.5);

    auto sample = run_replicas(spec, 60.0, 20, 5, 1, ReplicaBatch::Centering::sample_mean);
    auto exact = run_replicas(spec, 60.0, 20, 5, 1, ReplicaBatch::Centering::exact_interval);
    REQUIRE(sample.raw == exact.raw);
    for (int i = 0; i < sample.m; ++i) {
        auto mc = exact_mean_and_cov(spec, i, i, 60.0);
        CHECK(exact.means[i] == Catch::Approx(0.5 * (mc.mean.lo + mc.mean.hi)));
        double col = 0;
        for (const auto& row : sample.raw) col += row[i] / 20.0;
        CHECK(sample.means[i] == Catch::Approx(col));
        CHECK(sample.rows[3][i] ==
              Catch::Approx((sample.raw[3][i] - sample.means[i]) / sample.scales[i]));
    }
}

TEST_CASE("empirical covariance on a worked example") {
    std::vector<std::vector<double>> rows = {{1, 2}, {3, 4}, {5, 12}};
    auto emp = empirical_covariance(rows);
    CHECK(emp.cov(0, 0) == Catch::Approx(4.0));
    CHECK(emp.cov(0, 1) == Catch::Approx(10.0));
    CHECK(emp.cov(1, 1) == Catch::Approx(28.0));
    CHECK(emp.std_err(0, 0) > 0.0);

    CHECK_THROWS_AS(empirical_covariance(std::vector<std::vector<double>>{{1.0}}),
                    validation_error);
}

TEST_CASE("empirical covariance equivariance") {
    Rng rng(556);
    std::vector<std::vector<double>> rows(40, std::vector<double>(3));
    for (auto& r : rows)
        for (auto& v : r) v = rng.normal();
    auto base = empirical_covariance(rows);

    // swap components 0 and 2
    auto swapped = rows;
    for (auto& r : swapped) std::swap(r[0], r[2]);
    auto se = empirical_covariance(swapped);
    CHECK(se.cov(0, 0) == Catch::Approx(base.cov(2, 2)));
    CHECK(se.cov(0, 1) == Catch::Approx(base.cov(2, 1)));
    CHECK(se.std_err(0, 2) == Catch::Approx(base.std_err(2, 0)));

    // flip the sign of component 1
    auto flipped = rows;
    for (auto& r : flipped) r[1] = -r[1];
    auto fe = empirical_covariance(flipped);
    CHECK(fe.cov(0, 1) == Catch::Approx(-base.cov(0, 1)));
    CHECK(fe.cov(1, 1) == Catch::Approx(base.cov(1, 1)));
}

TEST_CASE("gaussian sampling hits the requested covariance") {
    SymMat C(2);
    C(0, 0) = 2;
    C(0, 1) = C(1, 0) = 0.5;
    C(1, 1) = 1;
    auto rows = gaussian_sample(C, 20'000, 2024);
    auto emp = empirical_covariance(rows);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            CHECK(std::abs(emp.cov(i, j) - C(i, j)) < 4.0 * emp.std_err(i, j));

    SymMat degenerate(2);
    degenerate(0, 0) = degenerate(0, 1) = degenerate(1, 0) = degenerate(1, 1) = 1;
    for (const auto& row : gaussian_sample(degenerate, 50, 3))
        REQUIRE(row[0] == Catch::Approx(row[1]).margin(1e-12));

    SymMat indefinite(2);
    indefinite(0, 0) = indefinite(1, 1) = 1;
    indefinite(0, 1) = indefinite(1, 0) = 2;
    CHECK_THROWS_AS(gaussian_sample(indefinite, 10, 1), validation_error);
}

TEST_CASE("test panel enumeration and gaussian means") {
    auto p2 = TestFunctionPanel::build(2);
    CHECK(p2.members.size() == 16);  // 2 phases x (3^2 - 1) directions
    CHECK(TestFunctionPanel::build(4).members.size() == 160);
    CHECK(TestFunctionPanel::build(5).members.size() == 160);  // capped

    SymMat I2 = SymMat::identity(2);
    TestFunctionPanel::Member e1{{1, 0}, 0.0};
    CHECK(TestFunctionPanel::gaussian_mean(e1, I2) == Catch::Approx(std::exp(-0.5)));
    TestFunctionPanel::Member e1q{{1, 0}, 0.5 * pi};
    CHECK(TestFunctionPanel::gaussian_mean(e1q, I2) == Catch::Approx(0.0).margin(1e-15));
    TestFunctionPanel::Member diag{{1, -1}, 0.0};
    SymMat C(2);
    C(0, 0) = C(1, 1) = 1;
    C(0, 1) = C(1, 0) = 0.5;
    // u^T C u = 2 - 2 * 0.5 = 1
    CHECK(TestFunctionPanel::gaussian_mean(diag, C) == Catch::Approx(std::exp(-0.5)));

    std::vector<double> x = {0.3, -0.2};
    CHECK(TestFunctionPanel::eval(e1, x) == Catch::Approx(std::cos(0.3)));
    CHECK(TestFunctionPanel::eval(diag, x) == Catch::Approx(std::cos(0.5)));
}

TEST_CASE("panel distance vanishes on matching gaussians and flags shifts") {
    SymMat C(2);
    C(0, 0) = C(1, 1) = 1;
    C(0, 1) = C(1, 0) = 0.5;
    auto panel = TestFunctionPanel::build(2);
    auto rows = gaussian_sample(C, 4000, 909);

    auto est = d3_panel_estimate(rows, C, panel);
    REQUIRE(est.table.size() == 16);
    CHECK(est.lower_bound <= 3.0 * est.std_err);

    for (auto& r : rows) r[0] += 1.0;
    auto shifted = d3_panel_estimate(rows, C, panel);
    CHECK(shifted.lower_bound > 5.0 * shifted.std_err);
    CHECK(shifted.lower_bound > est.lower_bound);

    CHECK_THROWS_AS(d3_panel_estimate(rows, C, panel, 100), budget_error);
    CHECK_THROWS_AS(d3_panel_estimate({}, C, panel), validation_error);
}

TEST_CASE("poincare inequality is tight for the counting functional at p = 2") {
    auto box = ConvexBody::box({0, 0}, {1, 1});
    PoincareBudget budget{2000, 8};
    auto res = poincare_check(counting_functional(box), box, 9.0, 2.0, budget, SeedPolicy{31});
    CHECK(res.pass);
    CHECK(res.rhs == Catch::Approx(9.0));  // D_x N = 1 identically
    CHECK(res.rhs_se == Catch::Approx(0.0).margin(1e-12));
    double pooled = std::sqrt(res.lhs_se * res.lhs_se + res.rhs_se * res.rhs_se);
    CHECK(std::abs(res.lhs - res.rhs) <= 3.0 * pooled);
}

TEST_CASE("poincare inequality for an edge functional with negative exponent") {
    auto box = ConvexBody::box({0, 0}, {1, 1});
    EdgeFunctionalSpec fspec{-0.5, 0.3, box};
    PoincareBudget budget{500, 16};
    auto res =
        poincare_check(edge_power_functional(fspec), box, 30.0, 1.5, budget, SeedPolicy{32});
    CHECK(res.pass);
    CHECK(res.lhs < res.rhs);  // slack, not equality

    CHECK_THROWS_AS(poincare_check(counting_functional(box), box, 1.0, 2.5, budget,
                                   SeedPolicy{1}),
                    validation_error);
    CHECK_THROWS_AS(poincare_check(counting_functional(box), box, 1.0, 2.0,
                                   PoincareBudget{2, 8}, SeedPolicy{1}),
                    budget_error);
}

TEST_CASE("rate regression recovers exact power laws") {
    std::vector<double> ts = {10, 100, 1000, 10000};
    std::vector<double> errs;
    for (double t : ts) errs.push_back(3.5 * std::pow(t, -0.75));
    auto fit = rate_regression(ts, errs);
    CHECK(fit.slope == Catch::Approx(-0.75).epsilon(1e-12));
    CHECK(fit.intercept == Catch::Approx(std::log(3.5)).epsilon(1e-10));
    CHECK(fit.r_squared == Catch::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(rate_regression({1, 2, 3}, {1, 1, 1}), validation_error);
    CHECK_THROWS_AS(rate_regression(ts, {1, 1, 0, 1}), validation_error);
}

TEST_CASE("covariance reports carry targets and empirics together") {
    auto spec = two_rect_spec();
    auto batch = run_replicas(spec, 100.0, 60, 77, 2);
    auto rep = covariance_report(spec, 100.0, batch);
    CHECK(rep.t == 100.0);
    CHECK(rep.R == 60);
    CHECK(rep.C(0, 1) == Catch::Approx(0.5));
    CHECK(rep.sigma1_scalar == Catch::Approx(pi / 2));
    CHECK(rep.empirical(0, 1) == rep.empirical(1, 0));
    CHECK(rep.empirical(0, 0) > 0.0);
    CHECK(rep.regime.tag == Regime::Tag::thermodynamic);
}
