#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "geometry.hpp"
#include "gilbert.hpp"
#include "linalg.hpp"
#include "model.hpp"
#include "process.hpp"

namespace pclt {

struct ZetaBreakdown {
    double zeta1 = 0, zeta2 = 0, zeta3 = 0, zeta4 = 0;
    double p = 2, q = 2;
    enum class Mode { closed_form, monte_carlo } mode = Mode::closed_form;
    double c0 = 1;                              // closed-form mode
    std::array<double, 4> std_errs{};           // Monte Carlo mode
    double zeta1_lo = 0, zeta1_hi = 0;          // covariance-interval enclosure of zeta1
    double plugin_bias_order = 0;               // MC nested-power bias scale, informational
    double d3_bound = 0;                        // 1/2 (z1 + z2 + z3) + z4

    double zeta_sum() const { return zeta1 + zeta2 + zeta3 + zeta4; }
};

inline double clamp_p(double p) {
    if (!(p > 1)) throw validation_error("zeta: p must exceed 1");
    return std::min(p, 2.0);
}

inline double resolve_q(double p, double q /* NaN means auto */) {
    if (std::isnan(q)) return 3.0 - 2.0 / p;  // the choice made in the proofs
    if (q < 1 || q > 2) throw validation_error("zeta: q must lie in [1, 2]");
    return q;
}

inline void check_moment_conditions(int d, double alpha_min, double p, double q) {
    if (!(d + 2 * p * alpha_min > 0))
        throw validation_error("zeta: moment condition d + 2 p alpha > 0 fails");
    if (!(d + (q + 1) * alpha_min > 0))
        throw validation_error("zeta: moment condition d + (q+1) alpha > 0 fails");
}

// Closed-form upper bounds for the one-window several-exponent spec:
//   z1 <= sum_ij (beta_ij gamma_W eps + | |W| beta_ij - C_ij |)
//   z2 <= 2^{2/p-1} |W|^{1/p} (sum_ij d k_d/(d+a_i+a_j)) t^{-1+1/p} (1 v u)^{-1}
//   z3 <= 2^{2/p} c0 m |W|^{1/p} (sum_i d k_d/(d+a_i)) t^{-1+1/p} (1 ^ u)^{1/(2p)}
//   z4 <= m^q c0^2 |W| t^{(1-q)/2} (1 ^ u)^{(1-q)/2}
// with u = t eps^d. All are up to the existential moment constant c0.
inline ZetaBreakdown zeta_closed_form(const VaryingExponentSpec& spec, double t, double p,
                                      double q = std::numeric_limits<double>::quiet_NaN(),
                                      std::optional<double> c0_override = {}) {
    spec.validate();
    p = clamp_p(p);
    q = resolve_q(p, q);
    double alpha_min = spec.alphas.front();
    for (double a : spec.alphas) alpha_min = std::min(alpha_min, a);
    check_moment_conditions(spec.d, alpha_min, p, q);

    const int m = spec.m();
    const double c0 = c0_override.value_or(spec.c0);
    const double eps = spec.rule.eps(t);
    const double u = spec.rule.te_d(t, spec.d);
    const double dk = spec.d * unit_ball_volume(spec.d);
    const double vol = volume(spec.window).value;
    const double gam = surface_gamma(spec.window);

    auto bl = beta_and_limit(spec, t);
    auto target = target_matrix_C(spec);

    ZetaBreakdown z;
    z.p = p;
    z.q = q;
    z.mode = ZetaBreakdown::Mode::closed_form;
    z.c0 = c0;

    // z1 majorant plus the tighter two-sided enclosure from the covariance
    // interval cov_ij in [beta (|W| - deficit), beta |W|]
    double deficit = std::min(vol, surface_gamma(spec.window) * eps);
    {
        auto di = inner_deficit(spec.window, eps);
        if (di.std_err == 0) deficit = std::min(vol, di.value);
    }
    double sum_pin = 0, sum_lo = 0, sum_hi = 0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            double beta = bl.beta(i, j), C = target.C(i, j);
            sum_pin += beta * gam * eps + std::abs(vol * beta - C);
            double lo_end = beta * (vol - deficit), hi_end = beta * vol;
            double dist_lo = (C >= lo_end && C <= hi_end)
                                 ? 0.0
                                 : std::min(std::abs(C - lo_end), std::abs(C - hi_end));
            sum_lo += dist_lo;
            sum_hi += std::max(std::abs(C - lo_end), std::abs(C - hi_end));
        }
    z.zeta1 = sum_pin;
    z.zeta1_lo = sum_lo;
    z.zeta1_hi = sum_hi;

    double pair_sum = 0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) pair_sum += dk / (spec.d + spec.alphas[i] + spec.alphas[j]);
    double single_sum = 0;
    for (int i = 0; i < m; ++i) single_sum += dk / (spec.d + spec.alphas[i]);

    double tp = std::pow(t, -1.0 + 1.0 / p);
    z.zeta2 = std::pow(2.0, 2.0 / p - 1.0) * std::pow(vol, 1.0 / p) * pair_sum * tp /
              std::max(1.0, u);
    z.zeta3 = std::pow(2.0, 2.0 / p) * c0 * m * std::pow(vol, 1.0 / p) * single_sum * tp *
              std::pow(std::min(1.0, u), 1.0 / (2.0 * p));
    z.zeta4 = std::pow(double(m), q) * c0 * c0 * vol *
              std::pow(t * std::min(1.0, u), 0.5 * (1.0 - q));
    z.d3_bound = 0.5 * (z.zeta1 + z.zeta2 + z.zeta3) + z.zeta4;
    return z;
}

// Closed-form bounds for the several-window one-exponent spec. Writing
// D(u) = sigma1/2 + sigma2 u for the normalization denominator:
//   z1 <= sum_ij deficit(W_i n W_j, eps)              (cov interval width)
//   z2 <= 2^{2/p-1} sigma1 sum_ij |W_i n W_j|^{1/p} t^{-1+1/p} / D(u)
//   z3 <= 2^{2/p} c0 m (d k_d/(d+a)) sum_j |W_j|^{1/p} t^{-1+1/p}
//         (1 ^ u)^{1/(2p)} (1 v u) / D(u)
//   z4 <= m^{q-1} c0^2 sum_ij |W_i n W_j| (t (1 ^ u))^{(1-q)/2}
//         ((1 v u) / D(u))^{(q+1)/2}
inline ZetaBreakdown zeta_closed_form(const VaryingDomainSpec& spec, double t, double p,
                                      double q = std::numeric_limits<double>::quiet_NaN(),
                                      std::optional<double> c0_override = {}) {
    spec.validate();
    p = clamp_p(p);
    q = resolve_q(p, q);
    check_moment_conditions(spec.d, spec.alpha, p, q);

    const int m = spec.m();
    const double c0 = c0_override.value_or(spec.c0);
    const double eps = spec.rule.eps(t);
    const double u = spec.rule.te_d(t, spec.d);
    const double dk = spec.d * unit_ball_volume(spec.d);
    const double s1 = sigma1_scalar(spec.d, spec.alpha);
    const double s2 = sigma2_scalar(spec.d, spec.alpha);
    const double denom = 0.5 * s1 + s2 * u;

    ZetaBreakdown z;
    z.p = p;
    z.q = q;
    z.mode = ZetaBreakdown::Mode::closed_form;
    z.c0 = c0;

    double sum_deficit = 0, sum_inter_p = 0, sum_inter = 0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            ConvexBody inter = intersect(spec.windows[i], spec.windows[j]);
            double vij = volume(inter).value;
            if (vij <= 0) continue;
            auto di = inner_deficit(inter, eps);
            double def = di.std_err == 0 ? di.value : di.linear_bound;
            sum_deficit += std::min(vij, def);
            sum_inter_p += std::pow(vij, 1.0 / p);
            sum_inter += vij;
        }
    z.zeta1 = sum_deficit;
    z.zeta1_lo = 0;  // the covariance may sit anywhere in its certified interval
    z.zeta1_hi = sum_deficit;

    double tp = std::pow(t, -1.0 + 1.0 / p);
    double sum_vol_p = 0;
    for (int j = 0; j < m; ++j) sum_vol_p += std::pow(volume(spec.windows[j]).value, 1.0 / p);

    z.zeta2 = std::pow(2.0, 2.0 / p - 1.0) * s1 * sum_inter_p * tp / denom;
    z.zeta3 = std::pow(2.0, 2.0 / p) * c0 * m * (dk / (spec.d + spec.alpha)) * sum_vol_p * tp *
              std::pow(std::min(1.0, u), 1.0 / (2.0 * p)) * std::max(1.0, u) / denom;
    z.zeta4 = std::pow(double(m), q - 1.0) * c0 * c0 * sum_inter *
              std::pow(t * std::min(1.0, u), 0.5 * (1.0 - q)) *
              std::pow(std::max(1.0, u) / denom, 0.5 * (q + 1.0));
    z.d3_bound = 0.5 * (z.zeta1 + z.zeta2 + z.zeta3) + z.zeta4;
    return z;
}

struct AssembledBounds {
    double d3 = 0;
    std::optional<double> d2;
};

// d3 <= 1/2 (z1 + z2 + z3) + z4 always; the d2 line needs PD C and uses
//   |C^{-1}| |C|^{1/2} (z1 + z2 + z3)
//   + max(2 |C^{-1}| |C|^{1/2}, sqrt(2 pi)/8 |C^{-1}|^{3/2} |C|) z4
// with operator norms.
inline AssembledBounds assemble_bounds(const ZetaBreakdown& z, const Spectral& c_spectral,
                                       bool require_d2 = false) {
    AssembledBounds out;
    out.d3 = 0.5 * (z.zeta1 + z.zeta2 + z.zeta3) + z.zeta4;
    if (c_spectral.pd) {
        double inv = c_spectral.inv_op_norm, op = c_spectral.op_norm;
        double lead = inv * std::sqrt(op);
        double tail = std::max(2.0 * lead, std::sqrt(2.0 * pi) / 8.0 * std::pow(inv, 1.5) * op);
        out.d2 = lead * (z.zeta1 + z.zeta2 + z.zeta3) + tail * z.zeta4;
    } else if (require_d2) {
        throw singular_matrix_error("assemble_bounds: d2 requires a positive-definite C");
    }
    return out;
}

struct RatePrediction {
    Regime regime;
    double exponent = 0;  // predicted log-log slope of the bound in t
    bool d2_applies = true;
    std::string description;
    std::function<double(double)> expression;  // the Table row evaluated at t
};

// Table row for the several-exponent application. Exponent predictions assume
// a pure power rule; the expression itself works for any rule.
inline RatePrediction rate_prediction(const VaryingExponentSpec& spec, double p) {
    spec.validate();
    p = clamp_p(p);
    auto [s1m, s2m] = sigma_matrices(spec);
    double s1s = 0, s2s = 0;
    for (double v : s1m.a) s1s = std::max(s1s, v);
    for (double v : s2m.a) s2s = std::max(s2s, v);
    Regime reg = classify_regime(spec.rule, spec.d);
    EpsilonRule rule = spec.rule;
    int d = spec.d;
    double pw = -1.0 + 1.0 / p;

    RatePrediction out;
    out.regime = reg;
    bool power = !rule.custom;
    double b = rule.b;
    switch (reg.tag) {
        case Regime::Tag::sparse:
            out.expression = [rule, d, s2s, pw](double t) {
                double u = rule.te_d(t, d);
                return rule.eps(t) + s2s * u + std::pow(t * t * std::pow(rule.eps(t), d), pw);
            };
            out.exponent = power ? std::max({-b, 1.0 - b * d, (2.0 - b * d) * pw})
                                 : std::numeric_limits<double>::quiet_NaN();
            out.d2_applies = true;
            out.description = "eps + sigma2* t eps^d + (t^2 eps^d)^{-1+1/p}";
            break;
        case Regime::Tag::thermodynamic: {
            double theta = reg.theta;
            double sstar = theta <= 1 ? s2s : s1s;
            out.expression = [rule, d, theta, sstar, pw](double t) {
                double u = rule.te_d(t, d);
                double mid = theta <= 1 ? sstar * std::abs(theta - u)
                                        : sstar * std::abs(1.0 / theta - 1.0 / u);
                return rule.eps(t) + mid + std::pow(t, pw);
            };
            // an exact power rule makes the middle term vanish identically
            out.exponent = power ? std::max(-b, pw) : pw;
            out.d2_applies = true;
            out.description = "eps + sigma* |theta - t eps^d| + t^{-1+1/p}";
            break;
        }
        case Regime::Tag::dense:
            out.expression = [rule, d, s1s, pw](double t) {
                return rule.eps(t) + s1s / rule.te_d(t, d) + std::pow(t, pw);
            };
            out.exponent = power ? std::max({-b, b * d - 1.0, pw})
                                 : std::numeric_limits<double>::quiet_NaN();
            out.d2_applies = false;  // the target matrix is singular here
            out.description = "eps + sigma1* / (t eps^d) + t^{-1+1/p}";
            break;
    }
    return out;
}

// Rate for the several-window application: eps + (t^{-1+1/p} v (t^2 eps^d)^{-1+1/p}).
inline RatePrediction rate_prediction(const VaryingDomainSpec& spec, double p) {
    spec.validate();
    p = clamp_p(p);
    Regime reg = classify_regime(spec.rule, spec.d);
    EpsilonRule rule = spec.rule;
    int d = spec.d;
    double pw = -1.0 + 1.0 / p;

    RatePrediction out;
    out.regime = reg;
    out.expression = [rule, d, pw](double t) {
        double slow = std::max(std::pow(t, pw), std::pow(t * t * std::pow(rule.eps(t), d), pw));
        return rule.eps(t) + slow;
    };
    bool power = !rule.custom;
    double b = rule.b;
    if (reg.tag == Regime::Tag::sparse)
        out.exponent = power ? std::max(-b, (2.0 - b * d) * pw)
                             : std::numeric_limits<double>::quiet_NaN();
    else
        out.exponent = power ? std::max(-b, pw) : pw;
    out.d2_applies = reg.tag != Regime::Tag::dense;
    out.description = "eps + (t^{-1+1/p} v (t^2 eps^d)^{-1+1/p})";
    return out;
}

// Generic Monte Carlo evaluation of the four zeta terms for a user-supplied
// vector functional. f must evaluate the NORMALIZED vector whose limit
// covariance is C; feeding raw sums makes zeta1 meaningless. Add-one costs
// come from re-evaluation, so this is slow but assumption-free; it is the
// cross-check path, not the production path.
struct VectorFunctional {
    int m = 1;
    std::function<std::vector<double>(const Points&)> eval;
};

struct ZetaMcBudget {
    std::size_t replicas = 32;
    std::size_t x_samples = 32;  // per y
    std::size_t y_samples = 8;
};

inline ZetaBreakdown zeta_monte_carlo(const VectorFunctional& f, const ConvexBody& body,
                                      double t, const SymMat& C, double p, double q,
                                      const ZetaMcBudget& budget, const SeedPolicy& seeds) {
    p = clamp_p(p);
    q = resolve_q(p, q);
    if (budget.x_samples < 16)
        throw budget_error("zeta_monte_carlo: needs at least 16 x-samples per y");
    if (budget.replicas < 2) throw budget_error("zeta_monte_carlo: needs at least 2 replicas");
    const int m = f.m;
    const std::size_t R = budget.replicas, J = budget.x_samples, K = budget.y_samples;
    const double lam_vol = t * volume(body).value;

    // base configurations and their functional values
    std::vector<Points> etas;
    std::vector<std::vector<double>> f0(R);
    etas.reserve(R);
    for (std::size_t r = 0; r < R; ++r) {
        etas.push_back(sample_poisson(body, t, seeds, r).points);
        f0[r] = f.eval(etas[r]);
    }

    ZetaBreakdown z;
    z.p = p;
    z.q = q;
    z.mode = ZetaBreakdown::Mode::monte_carlo;

    // zeta1 from the empirical covariance of the replica values
    {
        std::vector<double> mean(m, 0.0);
        for (auto& v : f0)
            for (int i = 0; i < m; ++i) mean[i] += v[i] / double(R);
        SymMat cov(m);
        for (auto& v : f0)
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j)
                    cov(i, j) += (v[i] - mean[i]) * (v[j] - mean[j]) / double(R - 1);
        double s = 0;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) s += std::abs(C(i, j) - cov(i, j));
        z.zeta1 = s;
        // rough jackknife scale for the absolute-deviation sum
        double se = 0;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                MeanVar prod;
                for (auto& v : f0) prod.add((v[i] - mean[i]) * (v[j] - mean[j]));
                se += prod.std_err();
            }
        z.std_errs[0] = se;
    }

    auto add_point_eval = [&](std::size_t r, const double* x) {
        etas[r].push_back(x);
        std::vector<double> v = f.eval(etas[r]);
        etas[r].pop_back();
        return v;
    };
    auto add_two_eval = [&](std::size_t r, const double* x, const double* y) {
        etas[r].push_back(x);
        etas[r].push_back(y);
        std::vector<double> v = f.eval(etas[r]);
        etas[r].pop_back();
        etas[r].pop_back();
        return v;
    };

    // nested structure for zeta2 and zeta3: for each y, an inner x-integral of
    // products of 2p-th moment roots, then an outer p-power integral over y
    Rng yr(seeds.derive("zeta-y", 0));
    std::vector<double> x(body.dim), y(body.dim);
    std::vector<double> inner2(K, 0.0), inner3(K, 0.0);
    for (std::size_t ky = 0; ky < K; ++ky) {
        sample_uniform(body, yr, y.data());
        // D_y F per replica, shared across the x loop
        std::vector<std::vector<double>> fy(R);
        for (std::size_t r = 0; r < R; ++r) fy[r] = add_point_eval(r, y.data());

        Rng xr(seeds.derive("zeta-x", ky));
        double acc2 = 0, acc3 = 0;
        for (std::size_t jx = 0; jx < J; ++jx) {
            sample_uniform(body, xr, x.data());
            std::vector<double> mom_d2(m, 0.0), mom_d1(m, 0.0);
            for (std::size_t r = 0; r < R; ++r) {
                std::vector<double> fx = add_point_eval(r, x.data());
                std::vector<double> fxy = add_two_eval(r, x.data(), y.data());
                for (int i = 0; i < m; ++i) {
                    double d2v = (fxy[i] - fx[i]) - (fy[r][i] - f0[r][i]);
                    double d1v = fx[i] - f0[r][i];
                    mom_d2[i] += std::pow(std::abs(d2v), 2 * p) / double(R);
                    mom_d1[i] += std::pow(std::abs(d1v), 2 * p) / double(R);
                }
            }
            double t2 = 0, t3 = 0;
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) {
                    double ai = std::pow(mom_d2[i], 1.0 / (2 * p));
                    double aj = std::pow(mom_d2[j], 1.0 / (2 * p));
                    double bi = std::pow(mom_d1[i], 1.0 / (2 * p));
                    t2 += ai * aj;
                    t3 += bi * aj;
                }
            acc2 += t2 / double(J);
            acc3 += t3 / double(J);
        }
        inner2[ky] = lam_vol * acc2;
        inner3[ky] = lam_vol * acc3;
    }
    MeanVar o2, o3;
    for (std::size_t ky = 0; ky < K; ++ky) {
        o2.add(std::pow(inner2[ky], p));
        o3.add(std::pow(inner3[ky], p));
    }
    z.zeta2 = std::pow(2.0, 2.0 / p - 1.0) * std::pow(lam_vol * o2.mean, 1.0 / p);
    z.zeta3 = std::pow(2.0, 2.0 / p) * std::pow(lam_vol * o3.mean, 1.0 / p);
    // delta-method SE for the outer 1/p power, plug-in bias reported alongside
    auto outer_se = [&](const MeanVar& o, double zv) {
        return o.mean > 0 ? zv / p * o.std_err() / o.mean : 0.0;
    };
    z.std_errs[1] = outer_se(o2, z.zeta2);
    z.std_errs[2] = outer_se(o3, z.zeta3);
    z.plugin_bias_order = (p - 1) * (o2.variance() + o3.variance()) / double(K ? K : 1);

    // zeta4: a single x-integral of (q+1)-th moment roots
    {
        Rng xr(seeds.derive("zeta4-x", 0));
        MeanVar acc;
        for (std::size_t jx = 0; jx < J; ++jx) {
            sample_uniform(body, xr, x.data());
            std::vector<double> mom(m, 0.0);
            for (std::size_t r = 0; r < R; ++r) {
                std::vector<double> fx = add_point_eval(r, x.data());
                for (int i = 0; i < m; ++i)
                    mom[i] += std::pow(std::abs(fx[i] - f0[r][i]), q + 1) / double(R);
            }
            double s = 0;
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j)
                    s += std::pow(mom[i], 1.0 / (q + 1)) * std::pow(mom[j], q / (q + 1));
            acc.add(lam_vol * s);
        }
        z.zeta4 = std::pow(double(m), q - 1.0) * acc.mean;
        z.std_errs[3] = std::pow(double(m), q - 1.0) * acc.std_err();
    }
    z.d3_bound = 0.5 * (z.zeta1 + z.zeta2 + z.zeta3) + z.zeta4;
    return z;
}

}  // namespace pclt
