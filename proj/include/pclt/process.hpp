#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "geometry.hpp"
#include "rng.hpp"

namespace pclt {

inline constexpr std::size_t rejection_cap = 10'000;  // consecutive misses per point

struct PointConfiguration {
    Points points;
    ConvexBody domain;
    double intensity = 0;
    std::uint64_t master_seed = 0;
    std::uint64_t replica_index = 0;
};

// One uniform point on the body. Boxes and balls are sampled directly, general
// intersections by rejection from the bounding box with a hard cap so a
// pathological (near-empty) intersection fails loudly instead of spinning.
inline void sample_uniform(const ConvexBody& body, Rng& rng, double* x) {
    switch (body.kind) {
        case ConvexBody::Kind::box:
            for (int k = 0; k < body.dim; ++k) x[k] = rng.uniform(body.lo[k], body.hi[k]);
            return;
        case ConvexBody::Kind::ball: {
            // isotropic direction from normals, radius with density r^{d-1}
            double norm2 = 0;
            do {
                norm2 = 0;
                for (int k = 0; k < body.dim; ++k) {
                    x[k] = rng.normal();
                    norm2 += x[k] * x[k];
                }
            } while (norm2 == 0);
            double r = body.radius * std::pow(rng.uniform(), 1.0 / body.dim) / std::sqrt(norm2);
            for (int k = 0; k < body.dim; ++k) x[k] = body.center[k] + r * x[k];
            return;
        }
        case ConvexBody::Kind::intersection: {
            std::vector<double> lo, hi;
            body.bounding_box(lo, hi);
            for (int k = 0; k < body.dim; ++k)
                if (!(lo[k] < hi[k])) throw budget_error("sample_uniform: empty intersection");
            for (std::size_t tries = 0; tries < rejection_cap; ++tries) {
                for (int k = 0; k < body.dim; ++k) x[k] = rng.uniform(lo[k], hi[k]);
                if (body.contains(x)) return;
            }
            throw budget_error("sample_uniform: rejection cap exhausted");
        }
    }
}

// Poisson process of intensity t dx restricted to the body. For intersections
// this thins a Poisson process on the bounding box, which restricts to exactly
// the right law on the body; no volume estimate is needed.
inline PointConfiguration sample_poisson(const ConvexBody& body, double t,
                                         const SeedPolicy& seeds, std::uint64_t replica_index) {
    if (t < 0) throw validation_error("sample_poisson: intensity must be >= 0");
    Rng rng(seeds.derive("poisson", replica_index));
    PointConfiguration cfg;
    cfg.points = Points(body.dim);
    cfg.domain = body;
    cfg.intensity = t;
    cfg.master_seed = seeds.master_seed;
    cfg.replica_index = replica_index;
    if (t == 0) return cfg;

    std::vector<double> x(body.dim);
    if (body.kind == ConvexBody::Kind::intersection) {
        std::vector<double> lo, hi;
        body.bounding_box(lo, hi);
        double vbox = box_volume(lo, hi);
        if (vbox == 0) return cfg;
        std::uint64_t n = rng.poisson(t * vbox);
        for (std::uint64_t i = 0; i < n; ++i) {
            for (int k = 0; k < body.dim; ++k) x[k] = rng.uniform(lo[k], hi[k]);
            if (body.contains(x.data())) cfg.points.push_back(x.data());
        }
        return cfg;
    }

    double vol = exact_volume(body).value();
    std::uint64_t n = rng.poisson(t * vol);
    for (std::uint64_t i = 0; i < n; ++i) {
        sample_uniform(body, rng, x.data());
        cfg.points.push_back(x.data());
    }
    return cfg;
}

struct MeckeResult {
    double lhs = 0;
    double rhs = 0;
    double pooled_std_err = 0;
};

// Compares E sum_{x in eta} h(x, eta) with t |W| E h(x, eta + delta_x) for
// x uniform on W. The function sees the configuration including x on both
// sides, which is the Mecke convention.
using MarkedFunction = std::function<double(const double* x, const Points& config)>;

inline MeckeResult mecke_check(const MarkedFunction& h, const ConvexBody& body, double t,
                               std::size_t replicas, const SeedPolicy& seeds) {
    if (replicas == 0) throw budget_error("mecke_check: needs at least one replica");
    double vol = volume(body).value;
    MeanVar lhs_acc, rhs_acc;
    std::vector<double> x(body.dim);
    for (std::size_t r = 0; r < replicas; ++r) {
        PointConfiguration cfg = sample_poisson(body, t, seeds, r);
        double lhs = 0;
        for (std::size_t i = 0; i < cfg.points.size(); ++i) lhs += h(cfg.points[i], cfg.points);
        lhs_acc.add(lhs);

        double rhs = 0;
        if (t > 0 && vol > 0) {
            Rng xr(seeds.derive("mecke-x", r));
            sample_uniform(body, xr, x.data());
            cfg.points.push_back(x.data());
            rhs = t * vol * h(cfg.points[cfg.points.size() - 1], cfg.points);
            cfg.points.pop_back();
        }
        rhs_acc.add(rhs);
    }
    double se = std::sqrt(lhs_acc.std_err() * lhs_acc.std_err() +
                          rhs_acc.std_err() * rhs_acc.std_err());
    return {lhs_acc.mean, rhs_acc.mean, se};
}

}  // namespace pclt
