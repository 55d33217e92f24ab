#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "core.hpp"

namespace pclt {

// Dense symmetric matrix, row major, small orders (m is the number of
// functional components, typically 2..4).
struct SymMat {
    int n = 0;
    std::vector<double> a;

    SymMat() = default;
    explicit SymMat(int order) : n(order), a(std::size_t(order) * order, 0.0) {}

    double& operator()(int i, int j) { return a[std::size_t(i) * n + j]; }
    double operator()(int i, int j) const { return a[std::size_t(i) * n + j]; }

    static SymMat identity(int order) {
        SymMat m(order);
        for (int i = 0; i < order; ++i) m(i, i) = 1;
        return m;
    }

    double max_abs() const {
        double v = 0;
        for (double x : a) v = std::max(v, std::abs(x));
        return v;
    }
};

struct EigenDecomposition {
    std::vector<double> values;  // ascending
    SymMat vectors;              // column k pairs with values[k]
};

// Cyclic Jacobi. Orders here are tiny, so simplicity beats anything clever;
// rotations are applied until the off-diagonal mass is at round-off level.
inline EigenDecomposition jacobi_eigendecomposition(SymMat m) {
    const int n = m.n;
    SymMat v = SymMat::identity(n);
    auto off_norm = [&m, n]() {
        double s = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) s += m(i, j) * m(i, j);
        return std::sqrt(2 * s);
    };
    double scale = std::max(m.max_abs(), 1e-300);
    for (int sweep = 0; sweep < 100 && off_norm() > 1e-15 * scale * n; ++sweep) {
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double apq = m(p, q);
                if (std::abs(apq) <= 1e-18 * scale) continue;
                double theta = (m(q, q) - m(p, p)) / (2 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(1 + theta * theta));
                double c = 1 / std::sqrt(1 + t * t), s = t * c;
                for (int k = 0; k < n; ++k) {
                    double mkp = m(k, p), mkq = m(k, q);
                    m(k, p) = c * mkp - s * mkq;
                    m(k, q) = s * mkp + c * mkq;
                }
                for (int k = 0; k < n; ++k) {
                    double mpk = m(p, k), mqk = m(q, k);
                    m(p, k) = c * mpk - s * mqk;
                    m(q, k) = s * mpk + c * mqk;
                }
                for (int k = 0; k < n; ++k) {
                    double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    // sort ascending, permuting the vector columns alongside
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&m](int i, int j) { return m(i, i) < m(j, j); });
    EigenDecomposition out;
    out.values.resize(n);
    out.vectors = SymMat(n);
    for (int k = 0; k < n; ++k) {
        out.values[k] = m(order[k], order[k]);
        for (int r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
    }
    return out;
}

inline constexpr double pd_rel_tol = 1e-9;  // min eigenvalue > tol * op_norm declares PD

struct Spectral {
    std::vector<double> eigenvalues;  // ascending
    SymMat eigenvectors;
    double op_norm = 0;
    double inv_op_norm = 0;  // 1 / min eigenvalue, only meaningful when pd
    bool pd = false;
};

inline Spectral spectral(const SymMat& c) {
    auto eig = jacobi_eigendecomposition(c);
    Spectral s;
    s.eigenvalues = eig.values;
    s.eigenvectors = eig.vectors;
    for (double l : eig.values) s.op_norm = std::max(s.op_norm, std::abs(l));
    double min_l = eig.values.empty() ? 0.0 : eig.values.front();
    s.pd = s.op_norm > 0 && min_l > pd_rel_tol * s.op_norm;
    if (s.pd) s.inv_op_norm = 1.0 / min_l;
    return s;
}

// Factor A with A A^T = C for Gaussian sampling; eigenvalues below tolerance
// are clamped to zero so the singular dense-regime target is accepted.
inline SymMat psd_factor(const SymMat& c) {
    auto eig = jacobi_eigendecomposition(c);
    double top = 0;
    for (double l : eig.values) top = std::max(top, std::abs(l));
    SymMat f(c.n);
    for (int k = 0; k < c.n; ++k) {
        double l = eig.values[k];
        if (l < -1e-8 * std::max(top, 1.0))
            throw validation_error("psd_factor: matrix has a significantly negative eigenvalue");
        double s = std::sqrt(std::max(0.0, l));
        for (int r = 0; r < c.n; ++r) f(r, k) = eig.vectors(r, k) * s;
    }
    return f;
}

}  // namespace pclt
