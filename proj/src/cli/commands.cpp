#include "onelap/cli/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "onelap/exact.hpp"
#include "onelap/solver.hpp"
#include "onelap/verify.hpp"

namespace onelap::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string num(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class Stopwatch {
public:
    double lap()
    {
        const auto now = std::chrono::steady_clock::now();
        const double s = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        return s;
    }

private:
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

// Everything a command produces, kept in memory until the end of the run.
struct Run {
    Run(const RunOptions& o, std::string h) : options(o), hash(std::move(h)) {}

    const RunOptions& options;
    std::string hash;
    json verdicts = json::array();
    json results = json::object();
    json timings = json::object();
    std::map<std::string, std::string> files;
    std::vector<std::string> order;
    bool failed = false;
    Stopwatch watch;

    void verdict(const std::string& check, bool pass, json detail)
    {
        verdicts.push_back({{"check", check}, {"verdict", pass ? "PASS" : "FAIL"}, {"detail", std::move(detail)}});
        failed = failed || !pass;
    }
    void info(const std::string& check, json detail)
    {
        verdicts.push_back({{"check", check}, {"verdict", "INFO"}, {"detail", std::move(detail)}});
    }
    void file(const std::string& name, std::string content)
    {
        if (!files.count(name))
            order.push_back(name);
        files[name] = std::move(content);
    }
    void time(const std::string& section) { timings[section] = watch.lap(); }

    std::string csv_preamble(const std::string& units) const
    {
        return "# config_hash=" + hash + "; units: " + units + "\n";
    }
};

// ---------------------------------------------------------------- planning

struct Geometry {
    bool radial;
    int N;
    double R;
    long n;
    double grading;
    MeshPtr mesh;
};

Geometry make_geometry(const Config& c, std::optional<long> n_override = std::nullopt)
{
    Geometry g{};
    const auto& kind = c.text("geometry.kind");
    g.R = c.number("geometry.R");
    g.n = n_override ? *n_override : c.integer("geometry.n");
    g.grading = c.number("geometry.grading");
    if (kind == "radial") {
        g.radial = true;
        g.N = int(c.integer("geometry.N"));
        if (g.n > 50'000'000)
            throw ConfigError("geometry.n is too large");
        g.mesh = share(RadialMesh::build(g.N, g.R, int(g.n), g.grading));
    } else if (kind == "disk") {
        g.radial = false;
        g.N = 2;
        if (g.n < 4 || g.n > 4096)
            throw ConfigError("geometry.n for a disk must lie in [4, 4096]");
        g.mesh = share(CartesianGrid::disk(g.R, std::size_t(g.n)));
    } else {
        throw ConfigError("geometry.kind must be 'radial' or 'disk'");
    }
    return g;
}

DatumSpec make_datum(const Config& c, int N)
{
    const auto& kind = c.text("datum.kind");
    DatumSpec d;
    if (kind == "powerlaw")
        d = PowerLaw{c.number("datum.lambda"), c.number("datum.q")};
    else if (kind == "constant")
        d = Constant{c.number("datum.c")};
    else
        throw ConfigError("datum.kind must be 'powerlaw' or 'constant'");
    validate_datum(d, N);
    return d;
}

SolverConfig make_solver(const Config& c, double R)
{
    SolverConfig s = SolverConfig::for_radius(R);
    if (c.text("solver.eps_start") != "auto")
        s.eps_start = c.number("solver.eps_start");
    if (c.text("solver.eps_min") != "auto")
        s.eps_min = c.number("solver.eps_min");
    if (s.eps_min > s.eps_start && c.text("solver.eps_start") == "auto")
        s.eps_start = s.eps_min;
    s.shrink = c.number("solver.shrink");
    s.tol_fp = c.number("solver.tol_fp");
    s.tol_res = c.number("solver.tol_res");
    s.max_iterations = int(c.integer("solver.max_iterations"));
    s.linear_tol = c.number("solver.linear_tol");
    s.clip_negative = c.flag("solver.clip");
    s.validate();
    return s;
}

std::optional<ExactRadialSolution> oracle_for(const Geometry& g, const DatumSpec& d)
{
    const auto* p = std::get_if<PowerLaw>(&d);
    if (!p || p->q == 1.0)
        return std::nullopt;
    return build_exact(g.N, g.R, p->lambda, p->q);
}

ExactRadialSolution require_oracle(const Geometry& g, const DatumSpec& d)
{
    auto o = oracle_for(g, d);
    if (!o)
        throw ConfigError("this command needs a power-law datum with q != 1");
    return *o;
}

// Largest error against the closed form on r >= R/100 (radial) or on the
// cells with r >= R/100 (disk).
double oracle_error(const ScalarField& u, const ExactRadialSolution& sol)
{
    double err = 0.0;
    if (const auto* rm = std::get_if<RadialMesh>(&u.mesh())) {
        for (std::size_t i = 0; i < rm->size(); ++i)
            if (rm->node(i) >= 0.01 * sol.R)
                err = std::max(err, std::abs(u[i] - *exact_u(sol, rm->node(i))));
    } else {
        const auto& g = std::get<CartesianGrid>(u.mesh());
        for (std::size_t k = 0; k < g.size(); ++k) {
            const double r = g.radius_at(k);
            if (g.inside(k) && r >= 0.01 * sol.R && r <= sol.R)
                err = std::max(err, std::abs(u[k] - *exact_u(sol, r)));
        }
    }
    return err;
}

json level_json(const SolutionReport& rep)
{
    json levels = json::array();
    for (const auto& l : rep.levels)
        levels.push_back({{"eps", l.eps},
                          {"iterations", l.iterations},
                          {"update", l.update},
                          {"residual", l.residual},
                          {"converged", l.converged}});
    return levels;
}

// ---------------------------------------------------------------- commands

int run_exact(Run& run)
{
    const auto& c = run.options.config;
    const Geometry g = make_geometry(c);
    if (!g.radial)
        throw ConfigError("exact: radial geometry required");
    const DatumSpec d = make_datum(c, g.N);
    const ExactRadialSolution sol = require_oracle(g, d);
    run.time("plan");

    const auto& mesh = std::get<RadialMesh>(*g.mesh);
    std::string csv = run.csv_preamble("r=length, u=dimensionless, z_radial=dimensionless");
    csv += "r,u,z_radial,region\n";
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        const double r = mesh.node(i);
        const auto u = exact_u(sol, r);
        double z;
        if (r > 0.0)
            z = exact_z(sol, r);
        else
            z = sol.regime == Regime::Singular ? -1.0 : 0.0;
        const bool flat = r > 0.0 ? exact_du(sol, r) == 0.0 : sol.regime != Regime::Singular;
        csv += num(r) + "," + (u ? num(*u) : std::string("inf")) + "," + num(z) + "," + (flat ? "plateau" : "core")
               + "\n";
    }
    run.file("profile.csv", std::move(csv));

    run.results["regime"] = regime_name(sol.regime);
    run.results["threshold"] = sol.threshold;
    run.results["plateau_value"] = sol.plateau_value;
    run.results["field_constant"] = sol.field_constant;
    run.results["plateau_free"] = sol.plateau_free;
    if (sol.regime == Regime::Trivial) {
        run.verdict("trivial datum", true,
                    {{"reason", "threshold radius r_lambda >= R: the solution vanishes identically"},
                     {"threshold", sol.threshold},
                     {"R", sol.R}});
    } else {
        const auto res = exact_residual(sol, mesh);
        run.verdict("exact_residual", res.core <= 1e-10 && res.plateau <= 1e-10,
                    {{"core", res.core}, {"plateau", res.plateau}, {"bound", 1e-10}});
    }
    run.time("exact");
    return kSuccess;
}

int run_solve(Run& run)
{
    const auto& c = run.options.config;
    const Geometry g = make_geometry(c);
    const DatumSpec d = make_datum(c, g.N);
    const SolverConfig sc = make_solver(c, g.R);
    const auto sol = oracle_for(g, d);
    run.time("plan");

    const SolutionReport rep = solve(g.mesh, d, sc);
    run.time("solve");

    std::string csv;
    if (g.radial) {
        const auto& mesh = std::get<RadialMesh>(*g.mesh);
        csv = run.csv_preamble("r=length, u=dimensionless, z_radial=dimensionless, error=dimensionless");
        csv += sol ? "r,u,z_radial,region,error\n" : "r,u,z_radial,region\n";
        for (std::size_t i = 0; i < mesh.size(); ++i) {
            const std::size_t lo = i == 0 ? 0 : i - 1, hi = std::min(i, mesh.cells() - 1);
            const double z = 0.5 * (rep.z[lo] + rep.z[hi]);
            const bool flat = std::abs(rep.u[i]) <= 10.0 * sc.tol_res;
            csv += num(mesh.node(i)) + "," + num(rep.u[i]) + "," + num(z) + "," + (flat ? "plateau" : "core");
            if (sol) {
                const auto ue = exact_u(*sol, mesh.node(i));
                csv += "," + (ue ? num(std::abs(rep.u[i] - *ue)) : std::string("inf"));
            }
            csv += "\n";
        }
    } else {
        const auto& grid = std::get<CartesianGrid>(*g.mesh);
        csv = run.csv_preamble("x=length, y=length, r=length, u=dimensionless, error=dimensionless");
        csv += sol ? "i,j,x,y,r,inside,u,error\n" : "i,j,x,y,r,inside,u\n";
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const double r = grid.radius_at(k);
            csv += std::to_string(grid.column(k)) + "," + std::to_string(grid.row(k)) + "," + num(grid.x(k)) + ","
                   + num(grid.y(k)) + "," + num(r) + "," + (grid.inside(k) ? "1" : "0") + "," + num(rep.u[k]);
            if (sol)
                csv += "," + (grid.inside(k) && r <= g.R ? num(std::abs(rep.u[k] - *exact_u(*sol, r))) : "0");
            csv += "\n";
        }
    }
    run.file("profile.csv", std::move(csv));

    json conv = {{"config_hash", run.hash},
                 {"levels", level_json(rep)},
                 {"eps", rep.eps},
                 {"residual", rep.residual},
                 {"converged", rep.converged},
                 {"min_value", rep.min_value},
                 {"undershoot", rep.undershoot},
                 {"sup_z", rep.z.sup_norm()}};
    run.file("convergence.json", conv.dump(2) + "\n");

    run.results["max_abs_u"] = rep.u.max_abs();
    run.results["residual"] = rep.residual;
    run.results["eps"] = rep.eps;
    run.verdict("converged", rep.converged, {{"levels", rep.levels.size()}, {"residual", rep.residual}});
    run.info("undershoot", {{"min_value", rep.min_value}, {"flagged", rep.undershoot}});
    if (sol)
        run.info("oracle_error", {{"max_error_outside_inner_percent", oracle_error(rep.u, *sol)}});
    run.time("emit");
    return rep.converged ? kSuccess : kNonconvergence;
}

// ---------------------------------------------------------------- verify

struct VerifyPlan {
    Geometry g;
    DatumSpec d;
    SolverConfig sc;
    std::vector<std::string> suites;
};

bool wants(const VerifyPlan& p, const std::string& s)
{
    return std::find(p.suites.begin(), p.suites.end(), s) != p.suites.end();
}

VerifyPlan plan_verify(const Config& c)
{
    VerifyPlan p{make_geometry(c), {}, {}, c.words("verify.suites")};
    p.d = make_datum(c, p.g.N);
    p.sc = make_solver(c, p.g.R);
    static const std::vector<std::string> known = {"ladder", "regularity", "power",      "bound",
                                                   "plateau", "accuracy",  "transformed", "comparison"};
    if (p.suites.empty())
        throw ConfigError("verify.suites is empty");
    for (const auto& s : p.suites)
        if (std::find(known.begin(), known.end(), s) == known.end())
            throw ConfigError("verify.suites: unknown suite '" + s + "'");

    const int N = p.g.N;
    const double R = p.g.R;
    const auto lambda = [&] {
        const auto* pl = std::get_if<PowerLaw>(&p.d);
        if (!pl)
            throw ConfigError("the selected suites need a power-law datum");
        return pl->lambda;
    };
    const auto probe_mesh = RadialMesh::build(N, R, 8, 3.0);
    if (wants(p, "ladder"))
        exponent_ladder(N, c.number("verify.ladder_p"), int(c.integer("verify.ladder_j")));
    if (wants(p, "regularity")) {
        if (c.numbers("verify.levels").empty())
            throw ConfigError("verify.levels is empty");
        for (double n : c.numbers("verify.levels"))
            RadialMesh::build(N, R, int(n), 3.0);
        regularity_probe(N, lambda(), c.number("datum.q"), R, {8}, {1.0});
    }
    if (wants(p, "power") || wants(p, "bound"))
        RadialMesh::build(N, R, int(c.integer("verify.quadrature_n")), 3.0);
    if (wants(p, "power"))
        power_identity_check(build_exact(N, R, lambda(), c.number("verify.power_q")), c.number("verify.power_m"),
                             probe_mesh);
    if (wants(p, "bound"))
        gradient_power_bound_check(build_exact(N, R, lambda(), c.number("verify.bound_q")),
                                   c.number("verify.bound_m"), c.number("verify.bound_p"), probe_mesh);
    if (wants(p, "plateau") || wants(p, "accuracy") || wants(p, "transformed")) {
        if (!p.g.radial)
            throw ConfigError("plateau, accuracy and transformed suites need radial geometry");
        const auto sol = require_oracle(p.g, p.d);
        if (wants(p, "plateau") && sol.regime == Regime::Mild)
            throw ConfigError("plateau suite: the mild regime has no zero plateau");
        if (wants(p, "transformed") && p.g.n < 8)
            throw ConfigError("transformed suite needs geometry.n >= 8");
    }
    if (wants(p, "comparison")) {
        const auto& fam = c.text("verify.family");
        if (fam != "lambda" && fam != "bump" && fam != "mixed")
            throw ConfigError("verify.family must be lambda, bump or mixed");
        if (c.integer("verify.pairs") < 1)
            throw ConfigError("verify.pairs must be >= 1");
    }
    return p;
}

void suite_ladder(Run& run, const VerifyPlan& p)
{
    const auto& c = run.options.config;
    const auto L = exponent_ladder(p.g.N, c.number("verify.ladder_p"), int(c.integer("verify.ladder_j")));
    std::string csv = run.csv_preamble("all columns dimensionless");
    csv += "j,s_j,limit\n";
    bool ok = true;
    for (std::size_t j = 0; j < L.s.size(); ++j) {
        csv += std::to_string(j) + "," + num(L.s[j]) + "," + num(L.limit) + "\n";
        ok = ok && L.s[j] < L.limit && (j == 0 || L.s[j] > L.s[j - 1]);
    }
    run.file("ladder.csv", std::move(csv));
    const double series = L.n_prime / (1.0 - L.n_prime / L.p_prime);
    const double rel = std::abs(series - L.limit) / L.limit;
    run.verdict("ladder", ok && rel <= 1e-12,
                {{"N", L.N}, {"p", L.p}, {"limit", L.limit}, {"series_limit", series}, {"s_last", L.s.back()}});
}

void suite_regularity(Run& run, const VerifyPlan& p)
{
    const auto& c = run.options.config;
    const auto& pl = std::get<PowerLaw>(p.d);
    std::vector<int> levels;
    for (double n : c.numbers("verify.levels"))
        levels.push_back(int(n));
    const double s_star = p.g.N / (pl.q - 1.0);
    const auto rep = regularity_probe(p.g.N, pl.lambda, pl.q, p.g.R, levels, {0.8 * s_star, 1.2 * s_star});
    std::string csv = run.csv_preamble("cutoff=length, norm=L^s norm over r > cutoff");
    csv += "s,cutoff,norm\n";
    for (const auto& row : rep.table)
        for (std::size_t k = 0; k < rep.cutoffs.size(); ++k)
            csv += num(row.s) + "," + num(rep.cutoffs[k]) + "," + num(row.norms[k]) + "\n";
    run.file("regularity.csv", std::move(csv));
    const bool alpha_ok = std::abs(rep.alpha - rep.predicted_alpha) <= 0.05 * rep.predicted_alpha;
    const bool verdicts_ok = !rep.table[0].grows && rep.table[1].grows;
    run.verdict("regularity", alpha_ok && verdicts_ok,
                {{"alpha", rep.alpha},
                 {"alpha_levels", rep.alpha_levels},
                 {"predicted_alpha", rep.predicted_alpha},
                 {"s_star", rep.critical},
                 {"below_s_star", rep.table[0].grows ? "grows" : "stabilizes"},
                 {"above_s_star", rep.table[1].grows ? "grows" : "stabilizes"}});
}

void suite_power(Run& run, const VerifyPlan& p)
{
    const auto& c = run.options.config;
    const auto& pl = std::get<PowerLaw>(p.d);
    const auto mesh = RadialMesh::build(p.g.N, p.g.R, int(c.integer("verify.quadrature_n")), 3.0);
    const auto sol = build_exact(p.g.N, p.g.R, pl.lambda, c.number("verify.power_q"));
    const auto res = power_identity_check(sol, c.number("verify.power_m"), mesh);
    run.verdict("power_identity", res.gap <= 5e-3,
                {{"q", sol.q}, {"m", c.number("verify.power_m")}, {"lhs", res.lhs}, {"rhs", res.rhs}, {"gap", res.gap}});
}

void suite_bound(Run& run, const VerifyPlan& p)
{
    const auto& c = run.options.config;
    const auto& pl = std::get<PowerLaw>(p.d);
    const auto mesh = RadialMesh::build(p.g.N, p.g.R, int(c.integer("verify.quadrature_n")), 3.0);
    const auto sol = build_exact(p.g.N, p.g.R, pl.lambda, c.number("verify.bound_q"));
    const auto res = gradient_power_bound_check(sol, c.number("verify.bound_m"), c.number("verify.bound_p"), mesh);
    run.verdict("gradient_power_bound", res.pass, {{"lhs", res.lhs}, {"rhs", res.rhs}});
}

void suite_comparison(Run& run, const VerifyPlan& p, std::uint64_t seed)
{
    const auto& c = run.options.config;
    const auto& fam = c.text("verify.family");
    const PairFamily family =
        fam == "lambda" ? PairFamily::PowerLawLambda : (fam == "bump" ? PairFamily::Bump : PairFamily::Mixed);
    const auto rep =
        comparison_suite(seed, std::size_t(c.integer("verify.pairs")), family, p.g.mesh, p.sc, run.options.workers);
    std::string csv = run.csv_preamble("violation and tolerance dimensionless");
    csv += "index,violation,tolerance,converged,verdict\n";
    for (const auto& pr : rep.pairs)
        csv += std::to_string(pr.index) + "," + num(pr.violation) + "," + num(pr.tolerance) + ","
               + (pr.converged ? "1" : "0") + "," + (pr.pass ? "PASS" : "FAIL") + "\n";
    run.file("comparison.csv", std::move(csv));
    run.verdict("comparison", rep.pass, {{"pairs", rep.pairs.size()}, {"worst_violation", rep.worst_violation}});
    if (p.g.radial) {
        const double oracle = oracle_comparison(seed, std::size_t(c.integer("verify.pairs")), p.g.N, p.g.R);
        run.verdict("comparison_oracle", oracle <= 0.0, {{"worst_violation", oracle}});
    }
}

int run_verify(Run& run, std::uint64_t seed)
{
    const VerifyPlan p = plan_verify(run.options.config);
    run.time("plan");

    if (wants(p, "ladder")) {
        suite_ladder(run, p);
        run.time("ladder");
    }
    if (wants(p, "regularity")) {
        suite_regularity(run, p);
        run.time("regularity");
    }
    if (wants(p, "power")) {
        suite_power(run, p);
        run.time("power");
    }
    if (wants(p, "bound")) {
        suite_bound(run, p);
        run.time("bound");
    }
    if (wants(p, "plateau") || wants(p, "accuracy") || wants(p, "transformed")) {
        const auto sol = require_oracle(p.g, p.d);
        const auto rep = solve(p.g.mesh, p.d, p.sc);
        run.time("solve");
        if (wants(p, "plateau")) {
            const double tol = 10.0 * p.sc.tol_res;
            const auto probe = plateau_probe(rep.u, sol, tol, rep.eps);
            run.verdict("plateau", probe.pass && probe.max_plateau <= tol,
                        {{"detected", probe.detected},
                         {"threshold", probe.threshold},
                         {"tolerance", probe.tolerance},
                         {"max_plateau", probe.max_plateau},
                         {"plateau_bound", tol}});
        }
        if (wants(p, "accuracy")) {
            const double err = oracle_error(rep.u, sol);
            const double bound = run.options.config.number("verify.accuracy_tol");
            run.verdict("accuracy", err <= bound, {{"max_error", err}, {"bound", bound}});
        }
        if (wants(p, "transformed")) {
            const Geometry coarse = make_geometry(run.options.config, p.g.n / 2);
            SolverConfig sc2 = p.sc;
            sc2.eps_min = 2.0 * p.sc.eps_min;
            sc2.eps_start = std::max(sc2.eps_start, sc2.eps_min);
            const auto rep2 = solve(coarse.mesh, p.d, sc2);
            const TransformedOptions opt{0.01 * p.g.R, 0.0, -1.0};
            const auto fine = transformed_equation_check(rep.u, rep.z, evaluate_datum(p.d, p.g.mesh), opt);
            const auto crude = transformed_equation_check(rep2.u, rep2.z, evaluate_datum(p.d, coarse.mesh), opt);
            const double ratio = crude.l2 / fine.l2;
            run.verdict("transformed_equation", ratio >= 2.0 / 1.5,
                        {{"coarse", crude.l2}, {"fine", fine.l2}, {"ratio", ratio}});
        }
        run.time("solved_checks");
    }
    if (wants(p, "comparison")) {
        suite_comparison(run, p, seed);
        run.time("comparison");
    }
    return run.failed ? kVerificationFailure : kSuccess;
}

// ---------------------------------------------------------------- sweep

struct SweepRow {
    int N = 0;
    double q = 0.0, lambda = 0.0;
    long n = 0;
    double eps = 0.0;
    double max_error = NAN;
    double residual = NAN;
    bool converged = false;
    std::string verdict;
};

int run_sweep(Run& run)
{
    const auto& c = run.options.config;
    if (c.text("geometry.kind") != "radial")
        throw ConfigError("sweep: radial geometry required");
    const Geometry base = make_geometry(c);
    const DatumSpec bd = make_datum(c, base.N);
    const auto* bpl = std::get_if<PowerLaw>(&bd);
    if (!bpl)
        throw ConfigError("sweep: power-law datum required");
    const SolverConfig bsc = make_solver(c, base.R);

    auto list = [&](const std::string& key, double fallback) {
        if (c.text(key) == "base")
            return std::vector<double>{fallback};
        auto v = c.numbers(key);
        if (v.empty())
            throw ConfigError("sweep: '" + key + "' is empty");
        return v;
    };
    const auto Ns = list("sweep.N", base.N);
    const auto qs = list("sweep.q", bpl->q);
    const auto lambdas = list("sweep.lambda", bpl->lambda);
    const auto ns = list("sweep.n", double(base.n));
    const auto epss = list("sweep.eps", bsc.eps_min);

    std::vector<SweepRow> rows;
    for (double N : Ns)
        for (double q : qs)
            for (double lam : lambdas)
                for (double n : ns)
                    for (double eps : epss) {
                        if (N != std::floor(N) || n != std::floor(n))
                            throw ConfigError("sweep: N and n must be integers");
                        RadialMesh::build(int(N), base.R, int(n), base.grading);
                        validate_datum(PowerLaw{lam, q}, int(N));
                        SolverConfig sc = bsc;
                        sc.eps_min = eps;
                        sc.eps_start = std::max(sc.eps_start, eps);
                        sc.validate();
                        SweepRow row;
                        row.N = int(N);
                        row.q = q;
                        row.lambda = lam;
                        row.n = long(n);
                        row.eps = eps;
                        rows.push_back(row);
                    }
    run.time("plan");

    parallel_for(rows.size(), run.options.workers, [&](std::size_t i) {
        auto& row = rows[i];
        try {
            const auto mesh = share(RadialMesh::build(row.N, base.R, int(row.n), base.grading));
            SolverConfig sc = bsc;
            sc.eps_min = row.eps;
            sc.eps_start = std::max(sc.eps_start, row.eps);
            const auto rep = solve(mesh, PowerLaw{row.lambda, row.q}, sc);
            row.residual = rep.residual;
            row.converged = rep.converged;
            if (row.q != 1.0)
                row.max_error = oracle_error(rep.u, build_exact(row.N, base.R, row.lambda, row.q));
            row.verdict = rep.converged ? "ok" : "nonconverged";
        } catch (const std::exception& e) {
            row.verdict = std::string("error: ") + e.what();
        }
    });
    run.time("rows");

    std::string csv = run.csv_preamble("eps=length, max_error=dimensionless, residual=dimensionless");
    csv += "index,N,q,lambda,n,eps,max_error,residual,converged,verdict\n";
    std::size_t failures = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        std::string verdict = r.verdict;
        for (auto& ch : verdict)
            if (ch == ',' || ch == '\n')
                ch = ';';
        csv += std::to_string(i) + "," + std::to_string(r.N) + "," + num(r.q) + "," + num(r.lambda) + ","
               + std::to_string(r.n) + "," + num(r.eps) + "," + num(r.max_error) + "," + num(r.residual) + ","
               + (r.converged ? "1" : "0") + "," + verdict + "\n";
        if (r.verdict != "ok")
            ++failures;
    }
    run.file("sweep.csv", std::move(csv));
    run.results["rows"] = rows.size();
    run.results["failures"] = failures;
    run.verdict("sweep", failures < rows.size(), {{"rows", rows.size()}, {"failures", failures}});
    return failures == rows.size() ? kVerificationFailure : kSuccess;
}

std::vector<std::string> planned_outputs(const RunOptions& o)
{
    std::vector<std::string> out = {"report.json", "timings.json"};
    if (o.command == "exact")
        out.push_back("profile.csv");
    else if (o.command == "solve") {
        out.push_back("profile.csv");
        out.push_back("convergence.json");
    } else if (o.command == "sweep") {
        out.push_back("sweep.csv");
    } else if (o.command == "verify") {
        const auto suites = o.config.words("verify.suites");
        auto has = [&](const char* s) { return std::find(suites.begin(), suites.end(), s) != suites.end(); };
        if (has("ladder"))
            out.push_back("ladder.csv");
        if (has("regularity"))
            out.push_back("regularity.csv");
        if (has("comparison"))
            out.push_back("comparison.csv");
    }
    return out;
}

void write_file(const fs::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << content;
}

}  // namespace

int execute(const RunOptions& options)
{
    static const std::vector<std::string> commands = {"exact", "solve", "verify", "sweep"};
    if (std::find(commands.begin(), commands.end(), options.command) == commands.end()) {
        std::cerr << "onelap: unknown command '" << options.command << "'\n";
        return kInvalidConfig;
    }

    Run run(options, options.config.hash());
    const fs::path dir(options.out_dir);
    int code = kSuccess;
    std::uint64_t seed = 0;
    try {
        seed = std::uint64_t(options.config.integer("seed"));
        if (!options.force)
            for (const auto& name : planned_outputs(options))
                if (fs::exists(dir / name))
                    throw ConfigError("output '" + (dir / name).string() + "' exists; pass --force to overwrite");
        if (options.command == "exact")
            code = run_exact(run);
        else if (options.command == "solve")
            code = run_solve(run);
        else if (options.command == "verify")
            code = run_verify(run, seed);
        else
            code = run_sweep(run);
    } catch (const ConfigError& e) {
        std::cerr << "onelap: invalid configuration: " << e.what() << "\n";
        return kInvalidConfig;
    } catch (const DataError& e) {
        std::cerr << "onelap: invalid configuration: " << e.what() << "\n";
        return kInvalidConfig;
    } catch (const DomainError& e) {
        std::cerr << "onelap: invalid configuration: " << e.what() << "\n";
        return kInvalidConfig;
    } catch (const PreconditionError& e) {
        std::cerr << "onelap: invalid configuration: " << e.what() << "\n";
        return kInvalidConfig;
    } catch (const SolverError& e) {
        std::cerr << "onelap: solver failure: " << e.what() << "\n";
        return kNonconvergence;
    }

    json report = {{"config_hash", run.hash},
                   {"command", options.command},
                   {"seed", seed},
                   {"config", options.config.entries()},
                   {"verdicts", run.verdicts},
                   {"results", run.results},
                   {"timings", {{"file", "timings.json"}}}};
    json outputs = json::array();
    for (const auto& name : run.order)
        outputs.push_back(name);
    outputs.push_back("report.json");
    outputs.push_back("timings.json");
    report["outputs"] = outputs;

    json timings = {{"config_hash", run.hash}, {"command", options.command}, {"sections", run.timings}};
    try {
        fs::create_directories(dir);
        for (const auto& name : run.order)
            write_file(dir / name, run.files[name]);
        write_file(dir / "report.json", report.dump(2) + "\n");
        write_file(dir / "timings.json", timings.dump(2) + "\n");
    } catch (const std::exception& e) {
        std::cerr << "onelap: " << e.what() << "\n";
        return kInvalidConfig;
    }
    for (const auto& v : run.verdicts)
        std::cout << v["verdict"].get<std::string>() << "  " << v["check"].get<std::string>() << "\n";
    return code;
}

int run(int argc, char** argv)
{
    CLI::App app{"Solver and verification harness for -div(Du/|Du|) + |Du| = f"};
    app.require_subcommand(1);
    RunOptions options;
    std::string config_path;
    std::vector<std::string> overrides;
    long seed = -1;

    for (const char* name : {"exact", "solve", "verify", "sweep"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "configuration file");
        sub->add_option("--out", options.out_dir, "output directory");
        sub->add_option("--seed", seed, "random seed");
        sub->add_flag("--force", options.force, "overwrite existing outputs");
        sub->add_option("overrides", overrides, "key=value overrides");
        sub->callback([&options, name] { options.command = name; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kInvalidConfig;
    }

    try {
        if (!config_path.empty())
            options.config.merge_file(config_path);
        for (const auto& o : overrides)
            options.config.merge_override(o);
        if (seed >= 0)
            options.config.set("seed", std::to_string(seed));
    } catch (const ConfigError& e) {
        std::cerr << "onelap: invalid configuration: " << e.what() << "\n";
        return kInvalidConfig;
    }
    options.workers = default_workers();
    return execute(options);
}

}  // namespace onelap::cli
