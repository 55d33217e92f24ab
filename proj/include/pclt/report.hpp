#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bounds.hpp"
#include "core.hpp"
#include "geometry.hpp"
#include "model.hpp"
#include "rng.hpp"
#include "verify.hpp"

namespace pclt {

// ordered_json keeps insertion order, which is the canonical field order of
// every artifact; dump() emits shortest round-trip decimals, so identical
// inputs give byte-identical files.
using json = nlohmann::ordered_json;

inline json body_to_json(const ConvexBody& b) {
    json j;
    switch (b.kind) {
        case ConvexBody::Kind::box: {
            j["kind"] = "box";
            json bounds = json::array();
            for (int k = 0; k < b.dim; ++k) bounds.push_back({b.lo[k], b.hi[k]});
            j["bounds"] = bounds;
            break;
        }
        case ConvexBody::Kind::ball:
            j["kind"] = "ball";
            j["center"] = b.center;
            j["radius"] = b.radius;
            break;
        case ConvexBody::Kind::intersection: {
            j["kind"] = "intersection";
            json parts = json::array();
            for (const auto& part : b.parts) parts.push_back(body_to_json(part));
            j["parts"] = parts;
            break;
        }
    }
    return j;
}

inline ConvexBody body_from_json(const json& j) {
    if (!j.is_object() || !j.contains("kind"))
        throw validation_error("body: expected an object with a \"kind\" field");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "box") {
        if (!j.contains("bounds")) throw validation_error("body: box needs \"bounds\"");
        std::vector<double> lo, hi;
        for (const auto& pair : j.at("bounds")) {
            if (!pair.is_array() || pair.size() != 2)
                throw validation_error("body: each bound must be [lo, hi]");
            lo.push_back(pair[0].get<double>());
            hi.push_back(pair[1].get<double>());
        }
        return ConvexBody::box(lo, hi);
    }
    if (kind == "ball") {
        if (!j.contains("center") || !j.contains("radius"))
            throw validation_error("body: ball needs \"center\" and \"radius\"");
        return ConvexBody::ball(j.at("center").get<std::vector<double>>(),
                                j.at("radius").get<double>());
    }
    if (kind == "intersection") {
        if (!j.contains("parts")) throw validation_error("body: intersection needs \"parts\"");
        std::vector<ConvexBody> parts;
        for (const auto& part : j.at("parts")) parts.push_back(body_from_json(part));
        return ConvexBody::intersection(std::move(parts));
    }
    throw validation_error("body: unknown kind \"" + kind + "\"");
}

inline json symmat_to_json(const SymMat& a) {
    json rows = json::array();
    for (int i = 0; i < a.n; ++i) {
        json row = json::array();
        for (int j = 0; j < a.n; ++j) row.push_back(a(i, j));
        rows.push_back(row);
    }
    return rows;
}

inline json regime_to_json(const Regime& r) {
    json j;
    j["tag"] = r.name();
    if (r.tag == Regime::Tag::thermodynamic) j["theta"] = r.theta;
    return j;
}

inline json zeta_to_json(const ZetaBreakdown& z) {
    json j;
    j["mode"] = z.mode == ZetaBreakdown::Mode::closed_form ? "closed_form" : "monte_carlo";
    j["zeta1"] = z.zeta1;
    j["zeta1_lo"] = z.zeta1_lo;
    j["zeta1_hi"] = z.zeta1_hi;
    j["zeta2"] = z.zeta2;
    j["zeta3"] = z.zeta3;
    j["zeta4"] = z.zeta4;
    j["p"] = z.p;
    j["q"] = z.q;
    j["c0"] = z.c0;
    j["d3_bound"] = z.d3_bound;
    if (z.mode == ZetaBreakdown::Mode::monte_carlo) {
        j["std_errs"] = z.std_errs;
        j["plugin_bias_order"] = z.plugin_bias_order;
    }
    return j;
}

inline json assembled_to_json(const AssembledBounds& b) {
    json j;
    j["d3"] = b.d3;
    if (b.d2)
        j["d2"] = *b.d2;
    else
        j["d2"] = nullptr;
    return j;
}

inline json rate_prediction_to_json(const RatePrediction& r) {
    json j;
    j["regime"] = regime_to_json(r.regime);
    j["exponent"] = r.exponent;
    j["d2_applies"] = r.d2_applies;
    j["description"] = r.description;
    return j;
}

inline json covariance_report_to_json(const CovarianceReport& rep) {
    json j;
    j["t"] = rep.t;
    j["replicas"] = rep.R;
    j["regime"] = regime_to_json(rep.regime);
    if (rep.sigma1.n > 0) {
        j["sigma1"] = symmat_to_json(rep.sigma1);
        j["sigma2"] = symmat_to_json(rep.sigma2);
        j["beta_t"] = symmat_to_json(rep.beta_t);
        j["c_limit"] = symmat_to_json(rep.c_limit);
    } else {
        j["sigma1"] = rep.sigma1_scalar;
        j["sigma2"] = rep.sigma2_scalar;
    }
    j["target"] = symmat_to_json(rep.C);
    j["target_std_err"] = symmat_to_json(rep.C_std_err);
    j["empirical"] = symmat_to_json(rep.empirical);
    j["empirical_std_err"] = symmat_to_json(rep.empirical_std_err);
    return j;
}

inline json panel_to_json(const PanelEstimate& est) {
    json j;
    j["lower_bound"] = est.lower_bound;
    j["std_err"] = est.std_err;
    j["argmax"] = est.argmax;
    json table = json::array();
    for (const auto& e : est.table) {
        json row;
        row["u"] = e.member.u;
        row["phase"] = e.member.phase;
        row["sample_mean"] = e.sample_mean;
        row["sample_se"] = e.sample_se;
        row["gaussian_mean"] = e.gaussian_mean;
        row["abs_diff"] = e.abs_diff;
        table.push_back(row);
    }
    j["table"] = table;
    return j;
}

inline json rate_fit_to_json(const RateFit& fit) {
    json j;
    j["slope"] = fit.slope;
    j["intercept"] = fit.intercept;
    j["r_squared"] = fit.r_squared;
    return j;
}

inline json pd_certificate_to_json(const PdCertificate& cert) {
    json j;
    switch (cert.verdict) {
        case PdCertificate::Verdict::pd: j["verdict"] = "pd"; break;
        case PdCertificate::Verdict::singular: j["verdict"] = "singular"; break;
        case PdCertificate::Verdict::inconclusive: j["verdict"] = "inconclusive"; break;
    }
    j["ordering_found"] = cert.ordering_found;
    if (cert.ordering_found) {
        j["ordering"] = cert.ordering;
        json wits = json::array();
        for (std::size_t i = 0; i < cert.witnesses.size(); ++i) {
            const double* w = cert.witnesses[i];
            wits.push_back(std::vector<double>(w, w + cert.witnesses.dim));
        }
        j["witnesses"] = wits;
    }
    j["min_eigenvalue"] = cert.min_eigenvalue;
    j["op_norm"] = cert.op_norm;
    j["gram_exact"] = cert.gram_exact;
    j["detail"] = cert.detail;
    return j;
}

// ---------------------------------------------------------------------------
// Experiment configuration

struct ExperimentConfig {
    enum class Application { exponents, domains };
    Application application = Application::exponents;
    int d = 0;
    std::vector<ConvexBody> windows;  // one window for exponents, one per component for domains
    std::vector<double> alphas;       // per component for exponents, single value for domains
    double a = 1, b = 0;              // eps rule a * t^{-b}
    std::vector<double> t_grid;
    std::size_t replicas = 0;
    double p = 2;
    double q = std::numeric_limits<double>::quiet_NaN();  // NaN = auto
    double c0 = 1;
    std::uint64_t master_seed = 0;
    std::string out_dir = ".";  // artifact location only, not part of the experiment identity
    ReplicaBatch::Centering centering = ReplicaBatch::Centering::sample_mean;

    EpsilonRule rule() const { return EpsilonRule::power(a, b); }

    VaryingExponentSpec exponent_spec() const {
        VaryingExponentSpec spec;
        spec.d = d;
        spec.window = windows.front();
        spec.alphas = alphas;
        spec.rule = rule();
        spec.c0 = c0;
        return spec;
    }

    VaryingDomainSpec domain_spec() const {
        VaryingDomainSpec spec;
        spec.d = d;
        spec.windows = windows;
        spec.alpha = alphas.front();
        spec.rule = rule();
        spec.c0 = c0;
        return spec;
    }

    void validate() const {
        if (d < 1) throw validation_error("config: d must be >= 1");
        if (windows.empty()) throw validation_error("config: no window given");
        for (const auto& w : windows)
            if (w.dim != d) throw validation_error("config: window dimension != d");
        if (alphas.empty()) throw validation_error("config: no exponent given");
        if (!(a > 0) || !(b > 0))
            throw validation_error("config: epsilon rule needs a > 0 and b > 0");
        if (b * d >= 2)
            throw validation_error(
                "config: epsilon rule with b >= 2/d makes t^2 eps_t^d bounded");
        if (t_grid.empty()) throw validation_error("config: t_grid is empty");
        for (double t : t_grid)
            if (!(t > 0)) throw validation_error("config: t_grid values must be positive");
        if (replicas < 2) throw validation_error("config: replicas must be >= 2");
        if (!(p > 1) || p > 2) throw validation_error("config: p must lie in (1, 2]");
        if (!std::isnan(q) && (q < 1 || q > 2))
            throw validation_error("config: q must lie in [1, 2] or be auto");
        if (!(c0 > 0)) throw validation_error("config: c0 must be positive");
        if (application == Application::exponents) {
            if (windows.size() != 1)
                throw validation_error("config: application=exponents takes exactly one window");
            exponent_spec().validate();
        } else {
            if (alphas.size() != 1)
                throw validation_error("config: application=domains takes exactly one alpha");
            domain_spec().validate();
        }
    }
};

inline json config_to_json(const ExperimentConfig& c) {
    json j;
    j["application"] =
        c.application == ExperimentConfig::Application::exponents ? "exponents" : "domains";
    j["d"] = c.d;
    if (c.application == ExperimentConfig::Application::exponents) {
        j["window"] = body_to_json(c.windows.front());
        j["alphas"] = c.alphas;
    } else {
        json ws = json::array();
        for (const auto& w : c.windows) ws.push_back(body_to_json(w));
        j["windows"] = ws;
        j["alpha"] = c.alphas.front();
    }
    j["epsilon"] = {{"a", c.a}, {"b", c.b}};
    j["t_grid"] = c.t_grid;
    j["replicas"] = c.replicas;
    j["p"] = c.p;
    if (std::isnan(c.q))
        j["q"] = nullptr;
    else
        j["q"] = c.q;
    j["c0"] = c.c0;
    j["master_seed"] = c.master_seed;
    j["centering"] = c.centering == ReplicaBatch::Centering::sample_mean ? "sample_mean"
                                                                         : "exact_interval";
    return j;
}

inline ExperimentConfig config_from_json(const json& j) {
    auto need = [&j](const char* field) -> const json& {
        if (!j.contains(field))
            throw validation_error(std::string("config: missing field \"") + field + "\"");
        return j.at(field);
    };
    ExperimentConfig c;
    const std::string app = need("application").get<std::string>();
    if (app == "exponents")
        c.application = ExperimentConfig::Application::exponents;
    else if (app == "domains")
        c.application = ExperimentConfig::Application::domains;
    else
        throw validation_error("config: application must be \"exponents\" or \"domains\"");
    c.d = need("d").get<int>();
    if (c.application == ExperimentConfig::Application::exponents) {
        c.windows = {body_from_json(need("window"))};
        c.alphas = need("alphas").get<std::vector<double>>();
    } else {
        for (const auto& w : need("windows")) c.windows.push_back(body_from_json(w));
        c.alphas = {need("alpha").get<double>()};
    }
    const json& eps = need("epsilon");
    if (!eps.contains("a") || !eps.contains("b"))
        throw validation_error("config: missing field \"epsilon.a\" or \"epsilon.b\"");
    c.a = eps.at("a").get<double>();
    c.b = eps.at("b").get<double>();
    c.t_grid = need("t_grid").get<std::vector<double>>();
    c.replicas = need("replicas").get<std::size_t>();
    c.p = need("p").get<double>();
    if (j.contains("q") && !j.at("q").is_null()) c.q = j.at("q").get<double>();
    if (j.contains("c0")) c.c0 = j.at("c0").get<double>();
    if (j.contains("master_seed")) c.master_seed = j.at("master_seed").get<std::uint64_t>();
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("centering")) {
        const std::string cen = j.at("centering").get<std::string>();
        if (cen == "sample_mean")
            c.centering = ReplicaBatch::Centering::sample_mean;
        else if (cen == "exact_interval")
            c.centering = ReplicaBatch::Centering::exact_interval;
        else
            throw validation_error("config: unknown centering \"" + cen + "\"");
    }
    return c;
}

inline std::string config_hash(const ExperimentConfig& c) {
    std::uint64_t h = fnv1a64(config_to_json(c).dump());
    char buf[19];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Flat-file exports. Every header line carries the seed policy.

inline std::string format_double(double v) { return json(v).dump(); }

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << content;
}

inline std::string points_to_csv(const PointConfiguration& cfg) {
    std::ostringstream out;
    out << "# seed=" << cfg.master_seed << " replica=" << cfg.replica_index
        << " t=" << format_double(cfg.intensity) << " dim=" << cfg.points.dim << "\n";
    for (int k = 0; k < cfg.points.dim; ++k) out << (k ? "," : "") << "x" << (k + 1);
    out << "\n";
    for (std::size_t i = 0; i < cfg.points.size(); ++i) {
        const double* p = cfg.points[i];
        for (int k = 0; k < cfg.points.dim; ++k) out << (k ? "," : "") << format_double(p[k]);
        out << "\n";
    }
    return out.str();
}

// replay dump: magic, dim, count, seed, replica, then raw little-endian doubles
inline void write_points_binary(const std::filesystem::path& path,
                                const PointConfiguration& cfg) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    const char magic[8] = {'P', 'C', 'L', 'T', 'P', 'T', 'S', '1'};
    out.write(magic, 8);
    std::uint64_t dim = std::uint64_t(cfg.points.dim), count = cfg.points.size();
    std::uint64_t seed = cfg.master_seed, replica = cfg.replica_index;
    out.write(reinterpret_cast<const char*>(&dim), 8);
    out.write(reinterpret_cast<const char*>(&count), 8);
    out.write(reinterpret_cast<const char*>(&seed), 8);
    out.write(reinterpret_cast<const char*>(&replica), 8);
    out.write(reinterpret_cast<const char*>(cfg.points.coords.data()),
              std::streamsize(cfg.points.coords.size() * sizeof(double)));
}

inline PointConfiguration read_points_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (std::string(magic, 8) != "PCLTPTS1")
        throw validation_error("points dump: bad magic");
    std::uint64_t dim = 0, count = 0, seed = 0, replica = 0;
    in.read(reinterpret_cast<char*>(&dim), 8);
    in.read(reinterpret_cast<char*>(&count), 8);
    in.read(reinterpret_cast<char*>(&seed), 8);
    in.read(reinterpret_cast<char*>(&replica), 8);
    PointConfiguration cfg;
    cfg.points.dim = int(dim);
    cfg.points.coords.resize(count * dim);
    cfg.master_seed = seed;
    cfg.replica_index = replica;
    in.read(reinterpret_cast<char*>(cfg.points.coords.data()),
            std::streamsize(cfg.points.coords.size() * sizeof(double)));
    if (!in) throw validation_error("points dump: truncated file");
    return cfg;
}

inline std::string edges_to_csv(const std::vector<Edge>& edges, std::uint64_t master_seed) {
    std::ostringstream out;
    out << "# seed=" << master_seed << "\n";
    out << "i,j,length\n";
    for (const auto& e : edges)
        out << e.i << "," << e.j << "," << format_double(e.length) << "\n";
    return out.str();
}

}  // namespace pclt
