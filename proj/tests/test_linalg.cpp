#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <pclt/linalg.hpp>
#include <pclt/rng.hpp>

using namespace pclt;

TEST_CASE("two by two eigenvalues in closed form") {
    SymMat a(2);
    a(0, 0) = 2;
    a(1, 1) = 2;
    a(0, 1) = a(1, 0) = 1;
    auto s = spectral(a);
    CHECK(s.eigenvalues[0] == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(s.eigenvalues[1] == Catch::Approx(3.0).epsilon(1e-12));
    CHECK(s.op_norm == Catch::Approx(3.0));
    CHECK(s.inv_op_norm == Catch::Approx(1.0));
    CHECK(s.pd);
}

TEST_CASE("jacobi reconstructs random symmetric matrices") {
    Rng rng(2001);
    for (int it = 0; it < 20; ++it) {
        int n = 2 + int(rng.uniform() * 5);
        SymMat a(n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) a(i, j) = a(j, i) = 2.0 * rng.uniform() - 1.0;
        auto eig = jacobi_eigendecomposition(a);

        // ascending order
        for (int i = 1; i < n; ++i) REQUIRE(eig.values[i] >= eig.values[i - 1]);

        // V diag(values) V^T = A entrywise
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double s = 0;
                for (int k = 0; k < n; ++k)
                    s += eig.vectors(i, k) * eig.values[k] * eig.vectors(j, k);
                REQUIRE(std::abs(s - a(i, j)) < 1e-10);
            }

        // orthonormal columns
        for (int k = 0; k < n; ++k)
            for (int l = k; l < n; ++l) {
                double dot = 0;
                for (int i = 0; i < n; ++i) dot += eig.vectors(i, k) * eig.vectors(i, l);
                REQUIRE(std::abs(dot - (k == l ? 1.0 : 0.0)) < 1e-10);
            }
    }
}

TEST_CASE("singular matrices are flagged") {
    SymMat a(2);
    a(0, 0) = a(0, 1) = a(1, 0) = a(1, 1) = 1;
    auto s = spectral(a);
    CHECK_FALSE(s.pd);
    CHECK(std::abs(s.eigenvalues[0]) < 1e-12);
    CHECK(s.eigenvalues[1] == Catch::Approx(2.0));
}

TEST_CASE("psd factor squares back to the matrix") {
    Rng rng(2002);
    for (int it = 0; it < 20; ++it) {
        int n = 2 + int(rng.uniform() * 4);
        // random Gram matrix, PSD by construction
        std::vector<std::vector<double>> g(n, std::vector<double>(n));
        for (auto& row : g)
            for (auto& v : row) v = 2.0 * rng.uniform() - 1.0;
        SymMat c(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double s = 0;
                for (int k = 0; k < n; ++k) s += g[i][k] * g[j][k];
                c(i, j) = s;
            }
        SymMat a = psd_factor(c);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double s = 0;
                for (int k = 0; k < n; ++k) s += a(i, k) * a(j, k);
                REQUIRE(std::abs(s - c(i, j)) < 1e-9);
            }
    }
}

TEST_CASE("psd factor accepts singular, rejects indefinite") {
    SymMat rank1(2);
    rank1(0, 0) = rank1(0, 1) = rank1(1, 0) = rank1(1, 1) = 1;
    CHECK_NOTHROW(psd_factor(rank1));

    SymMat indefinite(2);
    indefinite(0, 0) = indefinite(1, 1) = 1;
    indefinite(0, 1) = indefinite(1, 0) = 2;  // eigenvalues -1 and 3
    CHECK_THROWS_AS(psd_factor(indefinite), validation_error);
}

TEST_CASE("max abs entry") {
    SymMat a(2);
    a(0, 0) = -3;
    a(0, 1) = a(1, 0) = 2;
    a(1, 1) = 1;
    CHECK(a.max_abs() == 3.0);
    CHECK(SymMat::identity(3).max_abs() == 1.0);
}
