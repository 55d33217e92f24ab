#pragma once

#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "core.hpp"
#include "geometry.hpp"

namespace pclt {

struct EdgeFunctionalSpec {
    double alpha = 1;
    double eps = 0;      // connection radius, pairs require 0 < dist < eps
    ConvexBody window;
};

// Uniform hash grid with cell size exactly eps, so one ring of neighbor cells
// covers every candidate. Buckets keep insertion (= index) order and the ring
// is scanned in a fixed lexicographic order, which makes every downstream sum
// bitwise reproducible.
class GridIndex {
  public:
    GridIndex(const Points& pts, double cell_size) : pts_(&pts), cell_(cell_size), dim_(pts.dim) {
        if (!(cell_size > 0)) throw validation_error("GridIndex: cell size must be positive");
        cells_.reserve(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i)
            cells_[key_of(pts[i])].push_back(std::uint32_t(i));
    }

    double cell_size() const { return cell_; }

    // Visits every j with 0 < |x - p_j| < eps, where eps = cell size.
    template <typename F>
    void for_each_neighbor(const double* x, F&& f) const {
        long base[3] = {0, 0, 0};
        for (int k = 0; k < dim_; ++k) base[k] = cell_coord(x[k]);
        long off[3] = {0, 0, 0};
        scan(x, base, off, 0, f);
    }

    std::vector<std::uint32_t> neighbors(const double* x) const {
        std::vector<std::uint32_t> out;
        for_each_neighbor(x, [&out](std::uint32_t j, double) { out.push_back(j); });
        return out;
    }

  private:
    const Points* pts_;
    double cell_;
    int dim_;
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;

    long cell_coord(double v) const { return long(std::floor(v / cell_)); }

    std::uint64_t pack(const long* c) const {
        // 21 bits per axis, biased; windows are bounded so coords stay small
        std::uint64_t k = 0;
        for (int i = 0; i < dim_; ++i)
            k = (k << 21) | (std::uint64_t(c[i] + (1L << 20)) & 0x1FFFFF);
        return k;
    }

    std::uint64_t key_of(const double* x) const {
        long c[3] = {0, 0, 0};
        for (int k = 0; k < dim_; ++k) c[k] = cell_coord(x[k]);
        return pack(c);
    }

    template <typename F>
    void scan(const double* x, const long* base, long* off, int axis, F&& f) const {
        if (axis == dim_) {
            long c[3];
            for (int k = 0; k < dim_; ++k) c[k] = base[k] + off[k];
            auto it = cells_.find(pack(c));
            if (it == cells_.end()) return;
            double eps2 = cell_ * cell_;
            for (std::uint32_t j : it->second) {
                double d2 = sq_dist(x, (*pts_)[j], dim_);
                if (d2 > 0 && d2 < eps2) f(j, d2);
            }
            return;
        }
        for (off[axis] = -1; off[axis] <= 1; ++off[axis]) scan(x, base, off, axis + 1, f);
    }
};

struct Edge {
    std::uint32_t i, j;
    double length;
};

// All unordered pairs with 0 < dist < eps, each listed once with i < j.
inline std::vector<Edge> build_edges(const Points& pts, double eps) {
    GridIndex grid(pts, eps);
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        grid.for_each_neighbor(pts[i], [&](std::uint32_t j, double d2) {
            if (j > i) edges.push_back({std::uint32_t(i), j, std::sqrt(d2)});
        });
    }
    return edges;
}

inline std::vector<Edge> build_edges_bruteforce(const Points& pts, double eps) {
    std::vector<Edge> edges;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            double d2 = sq_dist(pts[i], pts[j], pts.dim);
            if (d2 > 0 && d2 < eps * eps)
                edges.push_back({std::uint32_t(i), std::uint32_t(j), std::sqrt(d2)});
        }
    return edges;
}

// L = sum over unordered pairs in the window of |x-y|^alpha; the 1/2 in the
// defining double sum cancels the ordered double count.
inline double edge_power_sum(const Points& pts, const EdgeFunctionalSpec& spec) {
    GridIndex grid(pts, spec.eps);
    CompensatedSum<double> sum;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!spec.window.contains(pts[i])) continue;
        grid.for_each_neighbor(pts[i], [&](std::uint32_t j, double d2) {
            if (j > i && spec.window.contains(pts[j]))
                sum.add(std::pow(std::sqrt(d2), spec.alpha));
        });
    }
    return sum.value();
}

// Long-double O(n^2) reference; the brute-force difference oracles cancel
// nearly equal sums, so this path is kept deliberately high precision.
inline long double edge_power_sum_bruteforce(const Points& pts, const EdgeFunctionalSpec& spec) {
    CompensatedSum<long double> sum;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        if (!spec.window.contains(pts[i])) continue;
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            if (!spec.window.contains(pts[j])) continue;
            long double d2 = 0;
            for (int k = 0; k < pts.dim; ++k) {
                long double diff = (long double)pts[i][k] - pts[j][k];
                d2 += diff * diff;
            }
            if (d2 > 0 && d2 < (long double)spec.eps * spec.eps)
                sum.add(powl(sqrtl(d2), (long double)spec.alpha));
        }
    }
    return sum.value();
}

// D_x L for x not in the configuration: the sum of |x-y|^alpha over window
// points within the radius. Equals the two-evaluation difference.
inline double add_one_cost(const Points& pts, const GridIndex& grid,
                           const EdgeFunctionalSpec& spec, const double* x) {
    if (!spec.window.contains(x))
        throw validation_error("add_one_cost: x must lie in the window");
    CompensatedSum<double> sum;
    grid.for_each_neighbor(x, [&](std::uint32_t j, double d2) {
        if (spec.window.contains(pts[j])) sum.add(std::pow(std::sqrt(d2), spec.alpha));
    });
    return sum.value();
}

inline double add_one_cost(const Points& pts, const EdgeFunctionalSpec& spec, const double* x) {
    GridIndex grid(pts, spec.eps);
    return add_one_cost(pts, grid, spec, x);
}

// Closed form of the second difference: adding x then y only creates the one
// potential edge between them, so D2 is configuration-free.
inline double second_difference(const EdgeFunctionalSpec& spec, const double* x, const double* y) {
    if (!spec.window.contains(x) || !spec.window.contains(y)) return 0;
    double d2 = sq_dist(x, y, spec.window.dim);
    if (d2 <= 0 || d2 >= spec.eps * spec.eps) return 0;
    return std::pow(std::sqrt(d2), spec.alpha);
}

// Four-evaluation reference F(eta+x+y) - F(eta+x) - F(eta+y) + F(eta).
inline long double second_difference_bruteforce(Points pts, const EdgeFunctionalSpec& spec,
                                                const double* x, const double* y) {
    long double f0 = edge_power_sum_bruteforce(pts, spec);
    pts.push_back(x);
    long double fx = edge_power_sum_bruteforce(pts, spec);
    pts.pop_back();
    pts.push_back(y);
    long double fy = edge_power_sum_bruteforce(pts, spec);
    pts.push_back(x);
    long double fxy = edge_power_sum_bruteforce(pts, spec);
    return (fxy - fx) - (fy - f0);
}

// Vector functional for the multivariate specs: component c sums |x-y|^alpha_c
// over pairs with both endpoints in window c. All components share one radius,
// so a single grid pass serves every component. Window membership per point is
// passed as a bitmask.
inline std::vector<double> vector_edge_power_sums(const Points& pts, double eps,
                                                  const std::vector<double>& alphas,
                                                  const std::vector<std::uint32_t>& masks) {
    const int m = int(alphas.size());
    std::vector<CompensatedSum<double>> sums(m);
    GridIndex grid(pts, eps);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (masks[i] == 0) continue;
        grid.for_each_neighbor(pts[i], [&](std::uint32_t j, double d2) {
            if (j <= i) return;
            std::uint32_t both = masks[i] & masks[j];
            if (both == 0) return;
            double len = std::sqrt(d2);
            for (int c = 0; c < m; ++c)
                if (both & (1u << c)) sums[c].add(std::pow(len, alphas[c]));
        });
    }
    std::vector<double> out(m);
    for (int c = 0; c < m; ++c) out[c] = sums[c].value();
    return out;
}

}  // namespace pclt
