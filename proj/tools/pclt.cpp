#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <pclt/pclt.hpp>

namespace fs = std::filesystem;
using namespace pclt;

namespace {

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    std::optional<std::string> out_dir;
};

void add_common_flags(CLI::App* cmd, Options& opt) {
    cmd->add_option("--config", opt.config_path, "experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", opt.seed, "override master_seed");
    cmd->add_option("--threads", opt.threads, "worker threads");
    cmd->add_option("--out", opt.out_dir, "output directory");
}

ExperimentConfig load_config(const Options& opt) {
    std::ifstream in(opt.config_path);
    json j = json::parse(in);
    ExperimentConfig cfg = config_from_json(j);
    if (opt.seed) cfg.master_seed = *opt.seed;
    if (opt.out_dir) cfg.out_dir = *opt.out_dir;
    cfg.validate();
    return cfg;
}

std::string csv_header(const ExperimentConfig& cfg) {
    return "# config=" + config_hash(cfg) + " seed=" + std::to_string(cfg.master_seed) + "\n";
}

fs::path out_path(const ExperimentConfig& cfg, const std::string& name) {
    fs::create_directories(cfg.out_dir);
    return fs::path(cfg.out_dir) / name;
}

json report_head(const ExperimentConfig& cfg) {
    json j;
    j["config"] = config_to_json(cfg);
    j["config_hash"] = config_hash(cfg);
    j["master_seed"] = cfg.master_seed;
    return j;
}

ReplicaBatch make_batch(const ExperimentConfig& cfg, double t, unsigned threads) {
    if (cfg.application == ExperimentConfig::Application::exponents)
        return run_replicas(cfg.exponent_spec(), t, cfg.replicas, cfg.master_seed, threads,
                            cfg.centering);
    return run_replicas(cfg.domain_spec(), t, cfg.replicas, cfg.master_seed, threads,
                        cfg.centering);
}

CovarianceReport make_cov_report(const ExperimentConfig& cfg, double t,
                                 const ReplicaBatch& batch) {
    if (cfg.application == ExperimentConfig::Application::exponents)
        return covariance_report(cfg.exponent_spec(), t, batch);
    return covariance_report(cfg.domain_spec(), t, batch);
}

ZetaBreakdown make_zeta(const ExperimentConfig& cfg, double t) {
    if (cfg.application == ExperimentConfig::Application::exponents)
        return zeta_closed_form(cfg.exponent_spec(), t, cfg.p, cfg.q);
    return zeta_closed_form(cfg.domain_spec(), t, cfg.p, cfg.q);
}

RatePrediction make_rate_prediction(const ExperimentConfig& cfg) {
    if (cfg.application == ExperimentConfig::Application::exponents)
        return rate_prediction(cfg.exponent_spec(), cfg.p);
    return rate_prediction(cfg.domain_spec(), cfg.p);
}

void append_cov_rows(std::ostringstream& csv, const CovarianceReport& rep) {
    for (int i = 0; i < rep.C.n; ++i)
        for (int j = i; j < rep.C.n; ++j)
            csv << format_double(rep.t) << "," << i << "," << j << ","
                << format_double(rep.C(i, j)) << "," << format_double(rep.C_std_err(i, j))
                << "," << format_double(rep.empirical(i, j)) << ","
                << format_double(rep.empirical_std_err(i, j)) << ","
                << format_double(std::abs(rep.empirical(i, j) - rep.C(i, j))) << "\n";
}

int cmd_simulate(const Options& opt) {
    ExperimentConfig cfg = load_config(opt);
    const double t = cfg.t_grid.front();
    ReplicaBatch batch = make_batch(cfg, t, opt.threads);

    // redo the sampling per replica for the dumps; cheap relative to the batch
    const ConvexBody body = cfg.application == ExperimentConfig::Application::exponents
                                ? cfg.windows.front()
                                : detail::sampling_plan(cfg.domain_spec(), t).body;
    const std::size_t dump_count = std::min<std::size_t>(cfg.replicas, 16);
    for (std::size_t r = 0; r < dump_count; ++r) {
        PointConfiguration rep = sample_poisson(body, t, batch.seeds, r);
        char name[64];
        std::snprintf(name, sizeof name, "points_r%04zu", r);
        write_text_file(out_path(cfg, std::string(name) + ".csv"), points_to_csv(rep));
        write_points_binary(out_path(cfg, std::string(name) + ".bin"), rep);
    }
    json j = report_head(cfg);
    j["t"] = t;
    j["dumped_replicas"] = dump_count;
    j["raw"] = batch.raw;
    j["means"] = batch.means;
    j["scales"] = batch.scales;
    j["normalized"] = batch.rows;
    write_text_file(out_path(cfg, "simulate.json"), j.dump(2) + "\n");
    return 0;
}

int cmd_covariance(const Options& opt) {
    ExperimentConfig cfg = load_config(opt);
    json results = json::array();
    std::ostringstream csv;
    csv << csv_header(cfg) << "t,i,j,target,target_se,empirical,empirical_se,abs_err\n";
    for (double t : cfg.t_grid) {
        ReplicaBatch batch = make_batch(cfg, t, opt.threads);
        CovarianceReport rep = make_cov_report(cfg, t, batch);
        results.push_back(covariance_report_to_json(rep));
        append_cov_rows(csv, rep);
    }
    json j = report_head(cfg);
    j["results"] = results;
    write_text_file(out_path(cfg, "covariance.json"), j.dump(2) + "\n");
    write_text_file(out_path(cfg, "cov.csv"), csv.str());
    return 0;
}

int cmd_bounds(const Options& opt) {
    ExperimentConfig cfg = load_config(opt);
    json results = json::array();
    std::ostringstream csv;
    csv << csv_header(cfg) << "t,eps,zeta1,zeta2,zeta3,zeta4,d3_bound\n";
    for (double t : cfg.t_grid) {
        ZetaBreakdown z = make_zeta(cfg, t);
        json row = zeta_to_json(z);
        row["t"] = t;
        row["eps"] = cfg.rule().eps(t);
        results.push_back(row);
        csv << format_double(t) << "," << format_double(cfg.rule().eps(t)) << ","
            << format_double(z.zeta1) << "," << format_double(z.zeta2) << ","
            << format_double(z.zeta3) << "," << format_double(z.zeta4) << ","
            << format_double(z.d3_bound) << "\n";
    }
    json j = report_head(cfg);
    j["rate_prediction"] = rate_prediction_to_json(make_rate_prediction(cfg));
    j["results"] = results;
    write_text_file(out_path(cfg, "bounds.json"), j.dump(2) + "\n");
    write_text_file(out_path(cfg, "bounds.csv"), csv.str());
    return 0;
}

int cmd_clt(const Options& opt) {
    ExperimentConfig cfg = load_config(opt);
    json results = json::array();
    std::ostringstream cov_csv, rates_csv;
    cov_csv << csv_header(cfg) << "t,i,j,target,target_se,empirical,empirical_se,abs_err\n";
    rates_csv << csv_header(cfg)
              << "t,eps,zeta1,zeta2,zeta3,zeta4,d3_bound,panel_lower_bound\n";
    std::vector<double> ts, d3s;
    for (double t : cfg.t_grid) {
        ReplicaBatch batch = make_batch(cfg, t, opt.threads);
        CovarianceReport rep = make_cov_report(cfg, t, batch);
        ZetaBreakdown z = make_zeta(cfg, t);
        AssembledBounds bounds = assemble_bounds(z, spectral(rep.C));
        TestFunctionPanel panel = TestFunctionPanel::build(batch.m);
        PanelEstimate est = d3_panel_estimate(batch.rows, rep.C, panel);

        json row;
        row["t"] = t;
        row["eps"] = cfg.rule().eps(t);
        row["u"] = cfg.rule().te_d(t, cfg.d);
        row["covariance"] = covariance_report_to_json(rep);
        row["zeta"] = zeta_to_json(z);
        row["bounds"] = assembled_to_json(bounds);
        row["panel"] = panel_to_json(est);
        results.push_back(row);

        append_cov_rows(cov_csv, rep);
        rates_csv << format_double(t) << "," << format_double(cfg.rule().eps(t)) << ","
                  << format_double(z.zeta1) << "," << format_double(z.zeta2) << ","
                  << format_double(z.zeta3) << "," << format_double(z.zeta4) << ","
                  << format_double(z.d3_bound) << "," << format_double(est.lower_bound)
                  << "\n";
        ts.push_back(t);
        d3s.push_back(z.d3_bound);
    }
    json j = report_head(cfg);
    j["rate_prediction"] = rate_prediction_to_json(make_rate_prediction(cfg));
    j["results"] = results;
    if (ts.size() >= 4) j["rate_fit"] = rate_fit_to_json(rate_regression(ts, d3s));
    write_text_file(out_path(cfg, "report.json"), j.dump(2) + "\n");
    write_text_file(out_path(cfg, "cov.csv"), cov_csv.str());
    write_text_file(out_path(cfg, "rates.csv"), rates_csv.str());
    return 0;
}

int cmd_pdcheck(const Options& opt) {
    ExperimentConfig cfg = load_config(opt);
    PdCertificate cert = pd_certificate(cfg.windows, cfg.master_seed ? cfg.master_seed : 1);
    json j = report_head(cfg);
    j["certificate"] = pd_certificate_to_json(cert);
    write_text_file(out_path(cfg, "pdcheck.json"), j.dump(2) + "\n");
    std::cout << "verdict: " << j["certificate"]["verdict"].get<std::string>() << "\n";
    return 0;
}

int cmd_poincare(const Options& opt) {
    ExperimentConfig cfg = load_config(opt);
    const double t = cfg.t_grid.front();
    const ConvexBody& body = cfg.windows.front();
    EdgeFunctionalSpec fspec{cfg.alphas.front(), cfg.rule().eps(t), body};
    PoincareBudget budget;
    budget.replicas = cfg.replicas;
    PoincareResult res = poincare_check(edge_power_functional(fspec), body, t, cfg.p, budget,
                                        SeedPolicy{cfg.master_seed});
    json j = report_head(cfg);
    j["t"] = t;
    j["p"] = cfg.p;
    j["lhs"] = res.lhs;
    j["lhs_se"] = res.lhs_se;
    j["rhs"] = res.rhs;
    j["rhs_se"] = res.rhs_se;
    j["margin"] = res.margin;
    j["pass"] = res.pass;
    write_text_file(out_path(cfg, "poincare.json"), j.dump(2) + "\n");
    std::cout << (res.pass ? "inequality holds" : "inequality violated") << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Poisson functional CLT toolkit"};
    app.require_subcommand(1);
    Options opt;
    int (*handler)(const Options&) = nullptr;

    auto reg = [&](const char* name, const char* desc, int (*fn)(const Options&)) {
        CLI::App* cmd = app.add_subcommand(name, desc);
        add_common_flags(cmd, opt);
        cmd->callback([&handler, fn]() { handler = fn; });
    };
    reg("simulate", "sample one batch, dump configurations and functional values",
        cmd_simulate);
    reg("covariance", "target vs empirical covariance over the t grid", cmd_covariance);
    reg("bounds", "closed-form zeta breakdown over the t grid", cmd_bounds);
    reg("clt", "full pipeline: replicas, covariance, bounds, panel, rate fit", cmd_clt);
    reg("pdcheck", "positive definiteness certificate for the windows", cmd_pdcheck);
    reg("poincare", "p-Poincare inequality check", cmd_poincare);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    try {
        return handler(opt);
    } catch (const validation_error& e) {
        std::cerr << json{{"error", "validation"}, {"message", e.what()}}.dump() << "\n";
        return 2;
    } catch (const budget_error& e) {
        std::cerr << json{{"error", "budget"}, {"message", e.what()}}.dump() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", "runtime"}, {"message", e.what()}}.dump() << "\n";
        return 3;
    }
}
