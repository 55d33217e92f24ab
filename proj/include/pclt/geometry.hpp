#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "core.hpp"
#include "rng.hpp"

namespace pclt {

// Axis-aligned box, closed ball, or finite intersection. Intersection
// membership is evaluated lazily over the parts; no polytope algebra.
struct ConvexBody {
    enum class Kind { box, ball, intersection };

    Kind kind = Kind::box;
    int dim = 0;
    std::vector<double> lo, hi;      // box
    std::vector<double> center;      // ball
    double radius = 0;               // ball
    std::vector<ConvexBody> parts;   // intersection

    static ConvexBody box(std::vector<double> lo, std::vector<double> hi) {
        if (lo.empty() || lo.size() != hi.size())
            throw validation_error("box: bounds must be non-empty and of equal length");
        for (std::size_t i = 0; i < lo.size(); ++i)
            if (!(lo[i] < hi[i])) throw validation_error("box: need lo < hi on every axis");
        ConvexBody b;
        b.kind = Kind::box;
        b.dim = int(lo.size());
        b.lo = std::move(lo);
        b.hi = std::move(hi);
        return b;
    }

    static ConvexBody ball(std::vector<double> center, double radius) {
        if (center.empty()) throw validation_error("ball: center must be non-empty");
        if (!(radius > 0)) throw validation_error("ball: radius must be positive");
        ConvexBody b;
        b.kind = Kind::ball;
        b.dim = int(center.size());
        b.center = std::move(center);
        b.radius = radius;
        return b;
    }

    static ConvexBody intersection(std::vector<ConvexBody> parts) {
        if (parts.empty()) throw validation_error("intersection: needs at least one part");
        int d = parts.front().dim;
        for (const auto& p : parts)
            if (p.dim != d) throw validation_error("intersection: parts must share dimension");
        ConvexBody b;
        b.kind = Kind::intersection;
        b.dim = d;
        b.parts = std::move(parts);
        return b;
    }

    bool contains(const double* x) const {
        switch (kind) {
            case Kind::box:
                for (int k = 0; k < dim; ++k)
                    if (x[k] < lo[k] || x[k] > hi[k]) return false;
                return true;
            case Kind::ball:
                return sq_dist(x, center.data(), dim) <= radius * radius;
            case Kind::intersection:
                for (const auto& p : parts)
                    if (!p.contains(x)) return false;
                return true;
        }
        return false;
    }

    // Signed distance to the boundary, positive inside. For an intersection
    // the interior distance is the min over parts, so the inner parallel set
    // of the intersection is exactly the intersection of the parts' inner
    // parallel sets.
    double boundary_dist(const double* x) const {
        switch (kind) {
            case Kind::box: {
                double m = hi[0] - lo[0];
                for (int k = 0; k < dim; ++k)
                    m = std::min(m, std::min(x[k] - lo[k], hi[k] - x[k]));
                return m;
            }
            case Kind::ball:
                return radius - dist(x, center.data(), dim);
            case Kind::intersection: {
                double m = parts.front().boundary_dist(x);
                for (std::size_t i = 1; i < parts.size(); ++i)
                    m = std::min(m, parts[i].boundary_dist(x));
                return m;
            }
        }
        return 0;
    }

    // Tightest axis-aligned bounding box; may be empty (lo >= hi on some axis)
    // for an intersection of disjoint parts.
    void bounding_box(std::vector<double>& blo, std::vector<double>& bhi) const {
        switch (kind) {
            case Kind::box:
                blo = lo;
                bhi = hi;
                return;
            case Kind::ball:
                blo.resize(dim);
                bhi.resize(dim);
                for (int k = 0; k < dim; ++k) {
                    blo[k] = center[k] - radius;
                    bhi[k] = center[k] + radius;
                }
                return;
            case Kind::intersection: {
                parts.front().bounding_box(blo, bhi);
                std::vector<double> plo, phi;
                for (std::size_t i = 1; i < parts.size(); ++i) {
                    parts[i].bounding_box(plo, phi);
                    for (int k = 0; k < dim; ++k) {
                        blo[k] = std::max(blo[k], plo[k]);
                        bhi[k] = std::min(bhi[k], phi[k]);
                    }
                }
                return;
            }
        }
    }

    void flatten_into(std::vector<const ConvexBody*>& leaves) const {
        if (kind == Kind::intersection)
            for (const auto& p : parts) p.flatten_into(leaves);
        else
            leaves.push_back(this);
    }
};

inline double box_volume(const std::vector<double>& lo, const std::vector<double>& hi) {
    double v = 1;
    for (std::size_t k = 0; k < lo.size(); ++k) v *= std::max(0.0, hi[k] - lo[k]);
    return v;
}

// Exact volume when the body reduces to a box or a ball (an intersection of
// boxes is a box); nullopt when Monte Carlo is required.
inline std::optional<double> exact_volume(const ConvexBody& body) {
    if (body.kind == ConvexBody::Kind::box) return box_volume(body.lo, body.hi);
    if (body.kind == ConvexBody::Kind::ball)
        return unit_ball_volume(body.dim) * std::pow(body.radius, body.dim);
    std::vector<const ConvexBody*> leaves;
    body.flatten_into(leaves);
    if (leaves.size() == 1) return exact_volume(*leaves.front());
    for (const ConvexBody* l : leaves)
        if (l->kind != ConvexBody::Kind::box) return std::nullopt;
    std::vector<double> lo, hi;
    body.bounding_box(lo, hi);
    return box_volume(lo, hi);
}

struct VolumeEstimate {
    double value = 0;
    double std_err = 0;
};

inline constexpr std::size_t default_mc_budget = 1'000'000;

// Exact for boxes and balls (std_err 0); otherwise unbiased hit-or-miss over
// the tightest bounding box.
inline VolumeEstimate volume(const ConvexBody& body, std::size_t mc_budget = default_mc_budget,
                             std::uint64_t seed = 0x9E3779B97F4A7C15ULL) {
    if (body.kind == ConvexBody::Kind::intersection && mc_budget == 0)
        throw budget_error("volume: mc_budget must be positive for intersection bodies");
    if (auto v = exact_volume(body)) return {*v, 0.0};

    std::vector<double> lo, hi;
    body.bounding_box(lo, hi);
    double vbox = box_volume(lo, hi);
    if (vbox == 0) return {0.0, 0.0};

    Rng rng(seed);
    std::vector<double> x(body.dim);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < mc_budget; ++i) {
        for (int k = 0; k < body.dim; ++k) x[k] = rng.uniform(lo[k], hi[k]);
        if (body.contains(x.data())) ++hits;
    }
    double phat = double(hits) / double(mc_budget);
    double se = vbox * std::sqrt(std::max(0.0, phat * (1 - phat) / double(mc_budget)));
    return {vbox * phat, se};
}

// Steiner-type linear coefficient gamma_W with |W \ W_eps| <= gamma_W * eps.
// Box: its surface area. Ball: the sphere area d kappa_d r^{d-1}. Intersection:
// the bounding box's surface area (a valid majorant because surface area is
// monotone under inclusion of convex bodies).
inline double surface_gamma(const ConvexBody& body) {
    auto box_surface = [](const std::vector<double>& lo, const std::vector<double>& hi) {
        double s = 0;
        for (std::size_t i = 0; i < lo.size(); ++i) {
            double face = 2;
            for (std::size_t j = 0; j < lo.size(); ++j)
                if (j != i) face *= std::max(0.0, hi[j] - lo[j]);
            s += face;
        }
        return s;
    };
    switch (body.kind) {
        case ConvexBody::Kind::box:
            return box_surface(body.lo, body.hi);
        case ConvexBody::Kind::ball:
            return body.dim * unit_ball_volume(body.dim) * std::pow(body.radius, body.dim - 1);
        case ConvexBody::Kind::intersection: {
            std::vector<double> lo, hi;
            body.bounding_box(lo, hi);
            return box_surface(lo, hi);
        }
    }
    return 0;
}

struct InnerDeficit {
    double value = 0;        // |W \ W_eps|, exact or MC estimate
    double linear_bound = 0; // gamma_W * eps
    double std_err = 0;      // 0 when exact
};

// |W \ W_eps| where W_eps = { x : dist(x, boundary) > eps }. Exact for boxes,
// balls and box intersections; hit-or-miss otherwise.
inline InnerDeficit inner_deficit(const ConvexBody& body, double eps,
                                  std::size_t mc_budget = default_mc_budget,
                                  std::uint64_t seed = 0xD1B54A32D192ED03ULL) {
    if (!(eps > 0)) throw validation_error("inner_deficit: eps must be positive");
    double bound = surface_gamma(body) * eps;

    auto box_deficit = [eps](const std::vector<double>& lo, const std::vector<double>& hi) {
        double v = box_volume(lo, hi), inner = 1;
        for (std::size_t k = 0; k < lo.size(); ++k)
            inner *= std::max(0.0, hi[k] - lo[k] - 2 * eps);
        return v - inner;
    };

    if (body.kind == ConvexBody::Kind::box) return {box_deficit(body.lo, body.hi), bound, 0.0};
    if (body.kind == ConvexBody::Kind::ball) {
        double r = body.radius, ri = std::max(0.0, r - eps);
        double kd = unit_ball_volume(body.dim);
        return {kd * (std::pow(r, body.dim) - std::pow(ri, body.dim)), bound, 0.0};
    }

    std::vector<const ConvexBody*> leaves;
    body.flatten_into(leaves);
    bool all_boxes = true;
    for (const ConvexBody* l : leaves)
        if (l->kind != ConvexBody::Kind::box) all_boxes = false;
    std::vector<double> lo, hi;
    body.bounding_box(lo, hi);
    if (all_boxes) return {box_deficit(lo, hi), bound, 0.0};

    if (mc_budget == 0) throw budget_error("inner_deficit: mc_budget must be positive here");
    double vbox = box_volume(lo, hi);
    if (vbox == 0) return {0.0, bound, 0.0};
    Rng rng(seed);
    std::vector<double> x(body.dim);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < mc_budget; ++i) {
        for (int k = 0; k < body.dim; ++k) x[k] = rng.uniform(lo[k], hi[k]);
        if (body.contains(x.data()) && body.boundary_dist(x.data()) <= eps) ++hits;
    }
    double phat = double(hits) / double(mc_budget);
    double se = vbox * std::sqrt(std::max(0.0, phat * (1 - phat) / double(mc_budget)));
    return {vbox * phat, bound, se};
}

// |W_i n W_j| as a body; volumes of these drive the varying-domain target
// matrix and the PD certificate Gram matrix.
inline ConvexBody intersect(const ConvexBody& a, const ConvexBody& b) {
    return ConvexBody::intersection({a, b});
}

}  // namespace pclt
