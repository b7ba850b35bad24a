// gwc: exact and Monte Carlo analysis of branching systems with an
// alternating (circular) offspring mechanism.
#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "gwc/deviation.hpp"
#include "gwc/montecarlo.hpp"

namespace {

using json = nlohmann::ordered_json;

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

struct Report {
    json defaults = json::object();
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

void emit(const Report& rep, const std::string& format, std::ostream& out) {
    if (format == "json") {
        json doc;
        doc["defaults"] = rep.defaults;
        doc["columns"] = rep.columns;
        auto rows = json::array();
        for (const auto& r : rep.rows) rows.push_back(r);
        doc["rows"] = rows;
        out << doc.dump(2) << "\n";
        return;
    }
    for (const auto& [key, val] : rep.defaults.items()) {
        out << "# " << key << "=";
        if (val.is_number_float())
            out << fmt(val.get<double>());
        else if (val.is_string())
            out << val.get<std::string>();
        else
            out << val.dump();
        out << "\n";
    }
    for (std::size_t i = 0; i < rep.columns.size(); ++i)
        out << (i ? "," : "") << rep.columns[i];
    out << "\n";
    for (const auto& r : rep.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << fmt(r[i]);
        out << "\n";
    }
}

struct Common {
    std::string config_path;
    std::string schedule_inline;
    std::string format = "csv";
    std::string out_path;
    double tol = 1e-12;
    int max_iter = 100000;
    Eigen::Index degree = gwc::kDefaultDegreeCap;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_path, "JSON schedule file {\"mechanisms\": [...]}");
    cmd->add_option("--schedule", c.schedule_inline, "Inline JSON schedule document");
    cmd->add_option("--format", c.format, "Output format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    cmd->add_option("--out", c.out_path, "Output file (default stdout)");
    cmd->add_option("--tol", c.tol, "Convergence tolerance")->capture_default_str();
    cmd->add_option("--max-iter", c.max_iter, "Iteration cap")->capture_default_str();
    cmd->add_option("--degree", c.degree, "Series degree cap")->capture_default_str();
}

gwc::MechanismSchedule load_schedule(const Common& c) {
    if (!c.config_path.empty() && !c.schedule_inline.empty())
        throw gwc::ValidationError("--config and --schedule are mutually exclusive");
    if (!c.config_path.empty()) {
        std::ifstream in(c.config_path);
        if (!in) throw gwc::ValidationError("cannot open config file: " + c.config_path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return gwc::MechanismSchedule::from_json_text(ss.str());
    }
    if (!c.schedule_inline.empty())
        return gwc::MechanismSchedule::from_json_text(c.schedule_inline);
    // Shipped default test pair: a = b = {p_1 = 0.5, p_2 = 0.5}.
    return gwc::MechanismSchedule(
        {gwc::OffspringDistribution{0.0, 0.5, 0.5}, gwc::OffspringDistribution{0.0, 0.5, 0.5}});
}

gwc::IterationContext make_ctx(const Common& c) {
    return {load_schedule(c), c.tol, c.max_iter};
}

void write_report(const Report& rep, const Common& c) {
    if (c.out_path.empty()) {
        emit(rep, c.format, std::cout);
    } else {
        std::ofstream out(c.out_path);
        if (!out) throw gwc::ValidationError("cannot open output file: " + c.out_path);
        emit(rep, c.format, out);
    }
}

json common_header(const Common& c) {
    json h;
    h["tol"] = c.tol;
    h["max_iter"] = c.max_iter;
    h["degree_cap"] = static_cast<long>(c.degree);
    return h;
}

// ---------------------------------------------------------------- extinction
int run_extinction(const Common& c) {
    const auto ctx = make_ctx(c);
    const auto ext = gwc::extinction(ctx);
    Report rep;
    rep.defaults = common_header(c);
    rep.defaults["regime"] = gwc::to_string(ext.regime);
    rep.columns = {"rho_a", "rho_b", "rho_ab", "rho_ba"};
    rep.rows = {{ext.rho_a, ext.rho_b, ext.rho_ab, ext.rho_ba}};
    write_report(rep, c);
    return 0;
}

// ------------------------------------------------------------------- moments
int run_moments(const Common& c, long n) {
    const auto sched = load_schedule(c);
    gwc::NormalizerTable table(sched);
    Report rep;
    rep.defaults = common_header(c);
    rep.defaults["m"] = table.m();
    rep.defaults["sigma_sq"] = table.sigma_sq();
    if (table.m() > 1.0) rep.defaults["var_w"] = gwc::var_w(table);
    rep.columns = {"n", "mean", "variance"};
    for (long k = 0; k <= n; ++k)
        rep.rows.push_back({static_cast<double>(k), gwc::mean_zn(table, k), gwc::var_zn(table, k)});
    write_report(rep, c);
    return 0;
}

// ------------------------------------------------------------------- iterate
int run_iterate(const Common& c, long n, double s0) {
    const auto ctx = make_ctx(c);
    const bool invertible =
        ctx.pair.a().prob(0) == 0.0 && ctx.pair.b().prob(0) == 0.0 &&
        ctx.pair.a().prob(1) > 0.0 && ctx.pair.b().prob(1) > 0.0;
    Report rep;
    rep.defaults = common_header(c);
    rep.defaults["s0"] = s0;
    rep.columns = invertible ? std::vector<std::string>{"n", "f_n_ab", "g_n_ab", "g_n_ba"}
                             : std::vector<std::string>{"n", "f_n_ab"};
    for (long k = 0; k <= n; ++k) {
        std::vector<double> row{static_cast<double>(k), gwc::f_n_eval(ctx, k, s0)};
        if (invertible) {
            row.push_back(gwc::g_n_eval(ctx, gwc::IterOrder::ab, k, s0));
            row.push_back(gwc::g_n_eval(ctx, gwc::IterOrder::ba, k, s0));
        }
        rep.rows.push_back(std::move(row));
    }
    write_report(rep, c);
    return 0;
}

// ---------------------------------------------------------------------- dist
int run_dist(const Common& c, long n) {
    const auto ctx = make_ctx(c);
    const auto series = gwc::zn_distribution(ctx, n, c.degree);
    Report rep;
    rep.defaults = common_header(c);
    rep.defaults["n"] = n;
    rep.defaults["exact"] = series.exact();
    rep.defaults["tail_bound"] = series.tail_bound();
    rep.columns = {"j", "p"};
    for (Eigen::Index j = 0; j <= series.degree(); ++j)
        rep.rows.push_back({static_cast<double>(j), series.coefficient(j)});
    write_report(rep, c);
    return 0;
}

// --------------------------------------------------------------------- qfunc
int run_qfunc(const Common& c, bool coefficients) {
    const auto ctx = make_ctx(c);
    Report rep;
    rep.defaults = common_header(c);
    if (coefficients) {
        const auto qc = gwc::q_coefficients(ctx, c.degree == gwc::kDefaultDegreeCap ? 64 : c.degree,
                                            std::max(c.tol, 1e-12));
        rep.defaults["horizon"] = qc.horizon;
        rep.columns = {"j", "q_j", "q_tilde_j"};
        for (Eigen::Index j = 0; j <= qc.q.degree(); ++j)
            rep.rows.push_back({static_cast<double>(j), qc.q.coefficient(j),
                                j <= qc.q_tilde.degree() ? qc.q_tilde.coefficient(j) : 0.0});
        write_report(rep, c);
        return 0;
    }
    const auto probes = gwc::chebyshev_probes(0.0, 0.95);
    const double q_tol = std::max(c.tol, 1e-12);
    const auto ql = gwc::q_limit(ctx, probes, q_tol);
    const auto qtl = gwc::q_tilde_limit(ctx, probes, q_tol);
    const auto ext = gwc::extinction(ctx);
    const gwc::QNormalizer norm(ctx, ext);
    rep.defaults["fa_prime"] = norm.fa_prime();
    rep.defaults["fb_prime"] = norm.fb_prime();
    rep.defaults["horizon_q"] = ql.horizon;
    rep.defaults["horizon_q_tilde"] = qtl.horizon;
    rep.defaults["functional_residual"] = gwc::functional_residual_q(ctx, ql, qtl, probes);
    rep.columns = {"s", "q", "q_tilde"};
    for (Eigen::Index i = 0; i < probes.size(); ++i)
        rep.rows.push_back({probes[i], ql.values[i], qtl.values[i]});
    write_report(rep, c);
    return 0;
}

// --------------------------------------------------------------------- rfunc
int run_rfunc(const Common& c, double s_hi) {
    const auto ctx = make_ctx(c);
    const auto probes = gwc::chebyshev_probes(1.0 + (s_hi - 1.0) / 32.0, s_hi);
    const double r_tol = std::max(c.tol, 1e-9);
    const auto rl = gwc::r_limit(ctx, gwc::LimitKind::R, probes, r_tol);
    const auto rtl = gwc::r_limit(ctx, gwc::LimitKind::RTilde, probes, r_tol);
    Report rep;
    rep.defaults = common_header(c);
    const double h = 1e-5;
    rep.defaults["r_prime_at_1"] = gwc::r_value(ctx, gwc::LimitKind::R, 1.0 + h, r_tol) / h;
    rep.defaults["r_tilde_prime_at_1"] =
        gwc::r_value(ctx, gwc::LimitKind::RTilde, 1.0 + h, r_tol) / h;
    rep.defaults["horizon_r"] = rl.horizon;
    rep.columns = {"s", "r", "r_tilde"};
    for (Eigen::Index i = 0; i < probes.size(); ++i)
        rep.rows.push_back({probes[i], rl.values[i], rtl.values[i]});
    write_report(rep, c);
    return 0;
}

// ------------------------------------------------------------------ chernoff
int run_chernoff(const Common& c, double epsilon) {
    const auto sched = load_schedule(c);
    Report rep;
    rep.defaults = common_header(c);
    rep.defaults["epsilon"] = epsilon;
    rep.columns = {"mechanism", "mean",       "lambda",      "alpha_star",
                   "beta_star", "upper_value", "lower_value"};
    double lam = 0.0;
    for (std::size_t i = 0; i < sched.size(); ++i) {
        const auto rate = gwc::chernoff_rate(sched.mechanism(i), epsilon);
        lam = std::max(lam, rate.lambda);
        rep.rows.push_back({static_cast<double>(i), sched.mechanism(i).mean(), rate.lambda,
                            rate.alpha_star, rate.beta_star, rate.upper_value, rate.lower_value});
    }
    rep.defaults["lambda_max"] = lam;
    write_report(rep, c);
    return 0;
}

// ----------------------------------------------------------------------- ldp
int run_ldp(const Common& c, double epsilon, long n_max) {
    const auto ctx = make_ctx(c);
    const auto reports = gwc::ratio_deviation_scan(ctx, n_max, epsilon, c.degree);
    const auto ls_a = gwc::limit_sum(ctx, epsilon, gwc::Side::a, 64, 1e-10);
    const auto ls_b = gwc::limit_sum(ctx, epsilon, gwc::Side::b, 64, 1e-10);
    Report rep;
    rep.defaults = common_header(c);
    rep.defaults["epsilon"] = epsilon;
    rep.defaults["limit_sum_a"] = ls_a.value;
    rep.defaults["limit_sum_b"] = ls_b.value;
    rep.defaults["limit_tail_a"] = ls_a.tail_certificate;
    rep.defaults["limit_tail_b"] = ls_b.tail_certificate;
    rep.defaults["limit_certificate_geometric"] =
        ls_a.certificate_geometric && ls_b.certificate_geometric;
    rep.columns = {"n", "exact", "normalized", "chernoff_bound", "limit_sum"};
    for (const auto& r : reports)
        rep.rows.push_back({static_cast<double>(r.n), r.exact, r.normalized, r.chernoff_bound,
                            (r.n % 2 == 0) ? ls_a.value : ls_b.value});
    write_report(rep, c);
    return 0;
}

// ------------------------------------------------------------------ simulate
int run_simulate(const Common& c, long paths, long n_max, std::uint64_t seed, long z0,
                 bool summary) {
    const gwc::SimConfig config(load_schedule(c), n_max, paths, seed, z0);
    const auto ensemble = gwc::simulate(config);
    Report rep;
    rep.defaults = common_header(c);
    rep.defaults["paths"] = paths;
    rep.defaults["n_max"] = n_max;
    rep.defaults["seed"] = seed;
    rep.defaults["z0"] = z0;
    if (summary) {
        rep.columns = {"n", "gamma", "mean_w", "var_w", "extinct_freq"};
        for (long n = 0; n <= n_max; ++n) {
            const auto wm = gwc::empirical_w_moments(ensemble, n);
            const auto ef = gwc::extinction_frequency(ensemble, n);
            rep.rows.push_back(
                {static_cast<double>(n), ensemble.gammas[n], wm.mean, wm.variance, ef.value});
        }
    } else {
        rep.columns = {"path", "n", "z"};
        for (long p = 0; p < paths; ++p)
            for (long n = 0; n <= n_max; ++n)
                rep.rows.push_back({static_cast<double>(p), static_cast<double>(n),
                                    ensemble.trajectories(p, n)});
    }
    write_report(rep, c);
    return 0;
}

// -------------------------------------------------------------------- verify
json check(const std::string& name, bool pass, json details) {
    json c;
    c["name"] = name;
    c["pass"] = pass;
    c["details"] = std::move(details);
    return c;
}

int run_verify(const Common& c, std::uint64_t seed) {
    json doc;
    doc["seed"] = seed;
    auto checks = json::array();

    // 1. Quadratic extinction fixed point.
    {
        const gwc::OffspringDistribution mech{0.25, 0.0, 0.75};
        const gwc::IterationContext ctx(gwc::MechanismSchedule({mech, mech}));
        const auto ext = gwc::extinction(ctx);
        const double err = std::abs(ext.rho_ab - 1.0 / 3.0);
        checks.push_back(check("extinction_quadratic", err < 1e-9,
                               {{"rho_ab", ext.rho_ab}, {"error", err}}));
    }
    // 2. Subcritical pairs go extinct surely.
    {
        const gwc::OffspringDistribution mech{0.5, 0.5};
        const gwc::IterationContext ctx(gwc::MechanismSchedule({mech, mech}));
        const auto ext = gwc::extinction(ctx);
        checks.push_back(check("subcritical_extinction",
                               ext.rho_ab == 1.0 && ext.rho_ba == 1.0,
                               {{"rho_ab", ext.rho_ab}}));
    }
    const gwc::IterationContext ctx = make_ctx(Common{});  // default test pair
    const gwc::NormalizerTable table(ctx.pair);
    // 3. Exact distribution matches the closed-form moments.
    {
        bool pass = true;
        double worst = 0.0;
        for (long n = 1; n <= 8; ++n) {
            const auto series = gwc::zn_distribution(ctx, n);
            const double dm = std::abs(series.distribution_mean() / gwc::mean_zn(table, n) - 1.0);
            const double dv =
                std::abs(series.distribution_variance() / gwc::var_zn(table, n) - 1.0);
            worst = std::max({worst, dm, dv});
            pass = pass && dm < 1e-9 && dv < 1e-9;
        }
        checks.push_back(check("moment_closed_form", pass, {{"worst_rel_err", worst}}));
    }
    // 4/5. Monte Carlo against the martingale and the exact deviations.
    {
        const gwc::SimConfig config(ctx.pair, 12, 20000, seed);
        const auto ensemble = gwc::simulate(config);
        bool pass_w = true;
        json wdet = json::array();
        for (long n : {4L, 8L, 12L}) {
            const auto wm = gwc::empirical_w_moments(ensemble, n);
            const double g = ensemble.gammas[n];
            const double vtheory = gwc::var_zn(table, n) / (g * g);
            const bool ok = std::abs(wm.mean - 1.0) <= 4.0 * wm.mean_se &&
                            std::abs(wm.variance - vtheory) <= 4.0 * wm.variance_se;
            pass_w = pass_w && ok;
            wdet.push_back({{"n", n},
                            {"mean", wm.mean},
                            {"mean_se", wm.mean_se},
                            {"variance", wm.variance},
                            {"variance_theory", vtheory},
                            {"variance_se", wm.variance_se}});
        }
        checks.push_back(check("mc_w_moments", pass_w, wdet));

        bool pass_r = true;
        json rdet = json::array();
        for (long n = 0; n <= 4; ++n) {
            const auto est = gwc::estimate_ratio_deviation(ensemble, n, 0.25);
            const auto exact = gwc::ratio_deviation_exact(ctx, n, 0.25);
            const double band = 4.0 * std::max(est.standard_error, 1e-4);
            const bool ok = std::abs(est.value - exact.exact) <= band;
            pass_r = pass_r && ok;
            rdet.push_back({{"n", n}, {"estimate", est.value}, {"exact", exact.exact},
                            {"se", est.standard_error}});
        }
        checks.push_back(check("mc_ratio_deviation", pass_r, rdet));
    }
    // 6. Extinction frequency on a pair with deaths.
    {
        const gwc::OffspringDistribution mech{0.25, 0.0, 0.75};
        const gwc::IterationContext ectx(gwc::MechanismSchedule({mech, mech}));
        const double rho = gwc::extinction(ectx).rho_ab;
        const gwc::SimConfig config(gwc::MechanismSchedule({mech, mech}), 20, 20000, seed + 1);
        const auto ensemble = gwc::simulate(config);
        const auto ef = gwc::extinction_frequency(ensemble, 20);
        const bool ok = std::abs(ef.value - rho) <= 4.0 * std::max(ef.standard_error, 1e-4);
        checks.push_back(check("mc_extinction_frequency", ok,
                               {{"frequency", ef.value}, {"rho_ab", rho},
                                {"se", ef.standard_error}}));
    }

    bool all = true;
    for (const auto& ch : checks) all = all && ch["pass"].get<bool>();
    doc["checks"] = std::move(checks);
    doc["pass"] = all;
    if (c.out_path.empty()) {
        std::cout << doc.dump(2) << "\n";
    } else {
        std::ofstream out(c.out_path);
        if (!out) throw gwc::ValidationError("cannot open output file: " + c.out_path);
        out << doc.dump(2) << "\n";
    }
    return all ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact and Monte Carlo analysis of alternating-mechanism branching systems"};
    app.require_subcommand(1);

    Common c;
    long n = 8;
    long n_max = 12;
    long paths = 10000;
    long z0 = 1;
    std::uint64_t seed = 42;
    double epsilon = 0.25;
    double delta = 0.5;
    double s0 = 0.5;
    double r = 1.0;
    bool coefficients = false;
    bool summary = false;

    auto* ext = app.add_subcommand("extinction", "Extinction probabilities and regime");
    add_common(ext, c);

    auto* mom = app.add_subcommand("moments", "Closed-form mean and variance of Z_0..Z_n");
    add_common(mom, c);
    mom->add_option("--n", n, "Largest generation")->capture_default_str();

    auto* itc = app.add_subcommand("iterate", "Forward and inverse iterates at a point");
    add_common(itc, c);
    itc->add_option("--n", n, "Largest iterate")->capture_default_str();
    itc->add_option("--s0", s0, "Evaluation point")->capture_default_str();

    auto* dst = app.add_subcommand("dist", "Exact distribution of Z_n");
    add_common(dst, c);
    dst->add_option("--n", n, "Generation")->capture_default_str();

    auto* qf = app.add_subcommand("qfunc", "Extinction-rate limit functions Q, Q-tilde");
    add_common(qf, c);
    qf->add_flag("--coefficients", coefficients, "Emit series coefficients instead of values");

    auto* rf = app.add_subcommand("rfunc", "Inverse-iterate limit functions R, R-tilde");
    add_common(rf, c);
    rf->add_option("--s0", s0, "Upper end of the probe interval (s > 1)")->default_val(2.0);

    auto* ch = app.add_subcommand("chernoff", "Optimized deviation rates per mechanism");
    add_common(ch, c);
    ch->add_option("--epsilon", epsilon, "Deviation threshold")->capture_default_str();

    auto* ld = app.add_subcommand("ldp", "Exact ratio deviations and their limits");
    add_common(ld, c);
    ld->add_option("--epsilon", epsilon, "Deviation threshold")->capture_default_str();
    ld->add_option("--n-max", n_max, "Largest generation")->capture_default_str();

    auto* sim = app.add_subcommand("simulate", "Seeded trajectory simulation");
    add_common(sim, c);
    sim->add_option("--paths", paths, "Number of paths")->capture_default_str();
    sim->add_option("--n-max", n_max, "Horizon")->capture_default_str();
    sim->add_option("--seed", seed, "RNG seed")->capture_default_str();
    sim->add_option("--z0", z0, "Initial population")->capture_default_str();
    sim->add_flag("--summary", summary, "Per-generation summary instead of raw paths");

    auto* ver = app.add_subcommand("verify", "Hermetic Monte-Carlo-vs-exact check suite");
    add_common(ver, c);
    ver->add_option("--seed", seed, "RNG seed")->capture_default_str();

    // Unused-by-some-subcommands flags kept uniform for scripting.
    ld->add_option("--delta", delta, "Conditioning threshold")->capture_default_str();
    qf->add_option("--r", r, "Moment order")->capture_default_str();

    try {
        app.parse(argc, argv);
        if (ext->parsed()) return run_extinction(c);
        if (mom->parsed()) return run_moments(c, n);
        if (itc->parsed()) return run_iterate(c, n, s0);
        if (dst->parsed()) return run_dist(c, n);
        if (qf->parsed()) return run_qfunc(c, coefficients);
        if (rf->parsed()) return run_rfunc(c, s0);
        if (ch->parsed()) return run_chernoff(c, epsilon);
        if (ld->parsed()) return run_ldp(c, epsilon, n_max);
        if (sim->parsed()) return run_simulate(c, paths, n_max, seed, z0, summary);
        if (ver->parsed()) return run_verify(c, seed);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const gwc::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const gwc::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    }
}
