#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "core.hpp"
#include "geometry.hpp"
#include "linalg.hpp"
#include "process.hpp"

namespace pclt {

// Radius rule eps_t = a t^{-b}. A custom evaluator may override the power law,
// in which case the limit of t eps_t^d cannot be inferred and must be declared
// (infinity is allowed). Power rules classify symbolically from (a, b, d).
struct EpsilonRule {
    double a = 1, b = 0;
    std::function<double(double)> custom;
    double declared_limit = std::numeric_limits<double>::quiet_NaN();

    static EpsilonRule power(double a, double b) {
        if (!(a > 0) || !(b > 0)) throw validation_error("epsilon rule: need a > 0, b > 0");
        EpsilonRule r;
        r.a = a;
        r.b = b;
        return r;
    }

    static EpsilonRule explicit_rule(std::function<double(double)> f, double limit_te_d) {
        EpsilonRule r;
        r.custom = std::move(f);
        r.declared_limit = limit_te_d;
        return r;
    }

    double eps(double t) const { return custom ? custom(t) : a * std::pow(t, -b); }

    double te_d(double t, int d) const { return t * std::pow(eps(t), d); }

    // limit of t eps_t^d: 0, a finite theta, or +infinity
    double limit_te_d(int d) const {
        if (custom) {
            if (std::isnan(declared_limit))
                throw validation_error("epsilon rule: custom rule needs a declared limit");
            return declared_limit;
        }
        double bd = b * d;
        if (bd > 1) return 0.0;
        if (bd < 1) return std::numeric_limits<double>::infinity();
        return std::pow(a, d);
    }

    // expected edge count scales with t^2 eps_t^d; all limits need it to diverge
    bool t2e_d_diverges(int d) const {
        if (custom) return true;  // declared rules are taken at their word
        return b * d < 2;
    }
};

struct Regime {
    enum class Tag { sparse, thermodynamic, dense };
    Tag tag = Tag::thermodynamic;
    double theta = 0;  // limit of t eps_t^d: 0, theta, or +inf

    std::string name() const {
        switch (tag) {
            case Tag::sparse: return "sparse";
            case Tag::thermodynamic: return "thermodynamic";
            case Tag::dense: return "dense";
        }
        return {};
    }
};

inline Regime classify_regime(const EpsilonRule& rule, int d) {
    double lim = rule.limit_te_d(d);
    Regime r;
    r.theta = lim;
    if (lim == 0)
        r.tag = Regime::Tag::sparse;
    else if (std::isinf(lim))
        r.tag = Regime::Tag::dense;
    else
        r.tag = Regime::Tag::thermodynamic;
    return r;
}

// One window, several exponents alpha_i.
struct VaryingExponentSpec {
    int d = 2;
    ConvexBody window;
    std::vector<double> alphas;
    EpsilonRule rule;
    double c0 = 1;  // the existential moment constant, exposed as configuration

    int m() const { return int(alphas.size()); }

    void validate() const {
        if (window.dim != d) throw validation_error("exponent spec: window dimension mismatch");
        if (alphas.empty()) throw validation_error("exponent spec: needs at least one exponent");
        for (double ai : alphas)
            for (double aj : alphas)
                if (!(ai + aj > -double(d)))
                    throw validation_error("exponent spec: needs alpha_i + alpha_j > -d");
        if (!rule.t2e_d_diverges(d))
            throw validation_error("exponent spec: rule must have t^2 eps_t^d -> infinity");
        if (!(c0 > 0)) throw validation_error("exponent spec: c0 must be positive");
    }
};

// Several windows, one exponent alpha.
struct VaryingDomainSpec {
    int d = 2;
    std::vector<ConvexBody> windows;
    double alpha = 1;
    EpsilonRule rule;
    double c0 = 1;

    int m() const { return int(windows.size()); }

    void validate() const {
        if (windows.empty()) throw validation_error("domain spec: needs at least one window");
        for (const auto& w : windows)
            if (w.dim != d) throw validation_error("domain spec: window dimension mismatch");
        if (!(alpha > -0.5 * d)) throw validation_error("domain spec: needs alpha > -d/2");
        if (!rule.t2e_d_diverges(d))
            throw validation_error("domain spec: rule must have t^2 eps_t^d -> infinity");
        if (!(c0 > 0)) throw validation_error("domain spec: c0 must be positive");
    }
};

// sigma1_ij = d kappa_d / (2 |alpha_i + alpha_j + d|),
// sigma2_ij = d^2 kappa_d^2 / ((alpha_i + d)(alpha_j + d))
inline std::pair<SymMat, SymMat> sigma_matrices(const VaryingExponentSpec& spec) {
    spec.validate();
    const int m = spec.m();
    double dk = spec.d * unit_ball_volume(spec.d);
    SymMat s1(m), s2(m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            s1(i, j) = dk / (2 * std::abs(spec.alphas[i] + spec.alphas[j] + spec.d));
            s2(i, j) = dk * dk / ((spec.alphas[i] + spec.d) * (spec.alphas[j] + spec.d));
        }
    return {s1, s2};
}

// scalar constants of the varying-domain normalization
inline double sigma1_scalar(int d, double alpha) {
    return d * unit_ball_volume(d) / (d + 2 * alpha);
}
inline double sigma2_scalar(int d, double alpha) {
    double v = d * unit_ball_volume(d) / (alpha + d);
    return v * v;
}

struct BetaLimit {
    SymMat beta;
    SymMat c;
    Regime regime;
};

// beta_ij^(t) = (sigma1_ij + sigma2_ij t eps^d) / (1 v t eps^d) and its limit c
// per the four regime cases.
inline BetaLimit beta_and_limit(const VaryingExponentSpec& spec, double t) {
    auto [s1, s2] = sigma_matrices(spec);
    Regime reg = classify_regime(spec.rule, spec.d);
    const int m = spec.m();
    double u = spec.rule.te_d(t, spec.d);
    BetaLimit out;
    out.beta = SymMat(m);
    out.c = SymMat(m);
    out.regime = reg;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            out.beta(i, j) = (s1(i, j) + s2(i, j) * u) / std::max(1.0, u);
            switch (reg.tag) {
                case Regime::Tag::sparse:
                    out.c(i, j) = s1(i, j);
                    break;
                case Regime::Tag::thermodynamic:
                    out.c(i, j) = reg.theta <= 1
                                      ? s1(i, j) + reg.theta * s2(i, j)
                                      : s1(i, j) / reg.theta + s2(i, j);
                    break;
                case Regime::Tag::dense:
                    out.c(i, j) = s2(i, j);
                    break;
            }
        }
    return out;
}

struct TargetMatrix {
    SymMat C;
    SymMat std_err;  // zero where exact
};

inline TargetMatrix target_matrix_C(const VaryingExponentSpec& spec,
                                    std::size_t mc_budget = default_mc_budget) {
    auto bl = beta_and_limit(spec, 2.0);  // any t, only the limit matrix is used
    auto vol = volume(spec.window, mc_budget);
    const int m = spec.m();
    TargetMatrix out{SymMat(m), SymMat(m)};
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            out.C(i, j) = vol.value * bl.c(i, j);
            out.std_err(i, j) = vol.std_err * bl.c(i, j);
        }
    return out;
}

inline TargetMatrix target_matrix_C(const VaryingDomainSpec& spec,
                                    std::size_t mc_budget = default_mc_budget) {
    spec.validate();
    const int m = spec.m();
    TargetMatrix out{SymMat(m), SymMat(m)};
    for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j) {
            auto vol = volume(intersect(spec.windows[i], spec.windows[j]), mc_budget,
                              0xA5A5A5A5ULL + 131 * std::uint64_t(i) + std::uint64_t(j));
            out.C(i, j) = out.C(j, i) = vol.value;
            out.std_err(i, j) = out.std_err(j, i) = vol.std_err;
        }
    return out;
}

// per-component scale (t eps^{alpha_i + d/2}) v (t^{3/2} eps^{alpha_i + d})
inline std::vector<double> normalization_scales(const VaryingExponentSpec& spec, double t) {
    double e = spec.rule.eps(t);
    std::vector<double> s(spec.alphas.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        double v = std::max(t * std::pow(e, spec.alphas[i] + 0.5 * spec.d),
                            std::pow(t, 1.5) * std::pow(e, spec.alphas[i] + spec.d));
        if (!(v > 0)) throw validation_error("normalize: degenerate scale");
        s[i] = v;
    }
    return s;
}

// common scale t eps^{alpha + d/2} (sigma1/2 + sigma2 t eps^d)^{1/2}
inline double normalization_scale(const VaryingDomainSpec& spec, double t) {
    double e = spec.rule.eps(t);
    double u = spec.rule.te_d(t, spec.d);
    double s1 = sigma1_scalar(spec.d, spec.alpha), s2 = sigma2_scalar(spec.d, spec.alpha);
    double v = t * std::pow(e, spec.alpha + 0.5 * spec.d) * std::sqrt(0.5 * s1 + s2 * u);
    if (!(v > 0)) throw validation_error("normalize: degenerate scale");
    return v;
}

inline std::vector<double> normalize(const std::vector<double>& raw,
                                     const std::vector<double>& means,
                                     const std::vector<double>& scales) {
    if (raw.size() != means.size() || raw.size() != scales.size())
        throw validation_error("normalize: size mismatch");
    std::vector<double> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - means[i]) / scales[i];
    return out;
}

struct MomentInterval {
    double leading = 0;  // full-ball leading term
    double lo = 0, hi = 0;  // certified enclosure including the boundary remainder
};

struct MeanCov {
    MomentInterval mean;   // of component i
    MomentInterval cov;    // of the (i, j) pair
    double remainder_rel = 0;  // relative boundary correction for the covariance
};

// Mecke moments of the edge power sums. With psi(y) the local integral of
// |x-y|^alpha over the window cap of B(y, eps):
//   E L       = 1/2 t^2 int psi,
//   cov(i, j) = t^3 int psi_i psi_j + 1/2 t^2 int psi_{alpha_i + alpha_j},
// all integrals over the (intersected) window. psi equals its full-ball value
// on the inner parallel set and never exceeds it, so the leading terms bracket
// the truth once the boundary layer volume is subtracted.
inline MeanCov exact_mean_and_cov(int d, double alpha_i, double alpha_j, const ConvexBody& wi,
                                  const ConvexBody& wj, double t, double eps) {
    double dk = d * unit_ball_volume(d);
    auto deficit_of = [eps](const ConvexBody& b) {
        auto def = inner_deficit(b, eps);
        // MC deficits are not certified; fall back to the linear majorant
        return def.std_err == 0 ? def.value : def.linear_bound;
    };

    MeanCov out;
    double vol_i = volume(wi).value;
    double psi_full_i = std::pow(eps, d + alpha_i) * dk / (d + alpha_i);
    out.mean.leading = 0.5 * t * t * psi_full_i * vol_i;
    double mean_deficit = std::min(vol_i, deficit_of(wi));
    out.mean.lo = 0.5 * t * t * psi_full_i * (vol_i - mean_deficit);
    out.mean.hi = out.mean.leading;

    ConvexBody inter = intersect(wi, wj);
    double vol_ij = volume(inter).value;
    if (vol_ij <= 0) {
        out.cov = {0, 0, 0};
        out.remainder_rel = 0;
        return out;
    }
    double psi_full_j = std::pow(eps, d + alpha_j) * dk / (d + alpha_j);
    double pair_full = std::pow(eps, d + alpha_i + alpha_j) * dk / (d + alpha_i + alpha_j);
    double density = t * t * t * psi_full_i * psi_full_j + 0.5 * t * t * pair_full;
    out.cov.leading = density * vol_ij;
    double cov_deficit = std::min(vol_ij, deficit_of(inter));
    out.cov.lo = density * (vol_ij - cov_deficit);
    out.cov.hi = out.cov.leading;
    out.remainder_rel = cov_deficit / vol_ij;
    return out;
}

inline MeanCov exact_mean_and_cov(const VaryingExponentSpec& spec, int i, int j, double t) {
    spec.validate();
    return exact_mean_and_cov(spec.d, spec.alphas[i], spec.alphas[j], spec.window, spec.window,
                              t, spec.rule.eps(t));
}

inline MeanCov exact_mean_and_cov(const VaryingDomainSpec& spec, int i, int j, double t) {
    spec.validate();
    return exact_mean_and_cov(spec.d, spec.alpha, spec.alpha, spec.windows[i], spec.windows[j],
                              t, spec.rule.eps(t));
}

// Positive-definiteness certificate for a family of windows. Route one samples
// witness points to build an ordering in which every window owns a point
// outside all later windows; a greedy peel is complete for this property, so a
// fruitless full round at any stage means no ordering exists (up to sampling).
// Route two takes the spectrum of the intersection-volume Gram matrix.
struct PdCertificate {
    enum class Verdict { pd, singular, inconclusive };
    Verdict verdict = Verdict::inconclusive;
    bool ordering_found = false;
    std::vector<int> ordering;      // window indices, first to last
    Points witnesses;               // one per ordered window
    double min_eigenvalue = 0;
    double op_norm = 0;
    bool gram_exact = false;        // all pairwise volumes exact
    std::string detail;
};

inline PdCertificate pd_certificate(const std::vector<ConvexBody>& windows,
                                    std::uint64_t seed = 0xC0FFEE, std::size_t tries_per_window = 4000) {
    if (windows.empty()) throw validation_error("pd_certificate: needs at least one window");
    const int m = int(windows.size());
    const int d = windows.front().dim;
    PdCertificate cert;
    cert.witnesses = Points(d);

    // route one: greedy ordering with sampled witnesses
    Rng rng(seed);
    std::vector<int> remaining(m);
    for (int i = 0; i < m; ++i) remaining[i] = i;
    std::vector<double> x(d);
    while (!remaining.empty()) {
        bool peeled = false;
        for (std::size_t r = 0; r < remaining.size() && !peeled; ++r) {
            int w = remaining[r];
            for (std::size_t tr = 0; tr < tries_per_window; ++tr) {
                sample_uniform(windows[w], rng, x.data());
                bool covered = false;
                for (int o : remaining)
                    if (o != w && windows[o].contains(x.data())) {
                        covered = true;
                        break;
                    }
                if (!covered) {
                    cert.ordering.push_back(w);
                    cert.witnesses.push_back(x.data());
                    remaining.erase(remaining.begin() + r);
                    peeled = true;
                    break;
                }
            }
        }
        if (!peeled) break;
    }
    cert.ordering_found = remaining.empty();

    // route two: spectrum of the Gram matrix C_ij = |W_i n W_j|
    SymMat gram(m);
    cert.gram_exact = true;
    for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j) {
            auto vol = volume(intersect(windows[i], windows[j]), default_mc_budget,
                              seed ^ (0x51ED5EEDULL + 131 * std::uint64_t(i) + std::uint64_t(j)));
            gram(i, j) = gram(j, i) = vol.value;
            if (vol.std_err != 0) cert.gram_exact = false;
        }
    auto spec = spectral(gram);
    cert.min_eigenvalue = spec.eigenvalues.front();
    cert.op_norm = spec.op_norm;

    if (cert.ordering_found) {
        cert.verdict = PdCertificate::Verdict::pd;
        cert.detail = "ordering witness found";
    } else if (spec.pd) {
        cert.verdict = PdCertificate::Verdict::pd;
        cert.detail = "ordering search failed; Gram matrix spectrum is positive";
    } else if (cert.gram_exact) {
        cert.verdict = PdCertificate::Verdict::singular;
        cert.detail = "Gram matrix has a (numerically) zero eigenvalue";
    } else {
        cert.verdict = PdCertificate::Verdict::inconclusive;
        cert.detail = "no ordering found and the Monte Carlo Gram spectrum is not conclusive";
    }
    return cert;
}

}  // namespace pclt
