// Acceptance run: one PASS/FAIL line per criterion, each timed against its
// budget. Exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "onelap/core.hpp"
#include "onelap/exact.hpp"
#include "onelap/pairing.hpp"
#include "onelap/solver.hpp"
#include "onelap/verify.hpp"

using namespace onelap;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double budget, const std::function<Outcome()>& body)
{
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < budget;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::printf("%s  %2d %-28s %8.2f s (limit %g s)  %s%s\n", pass ? "PASS" : "FAIL", id, name, secs, budget,
                o.detail.c_str(), in_time ? "" : "  [over time budget]");
    std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

double max_error(const ScalarField& u, const ExactRadialSolution& sol, double r_min)
{
    const auto& mesh = std::get<RadialMesh>(u.mesh());
    double err = 0.0;
    for (std::size_t i = 0; i < mesh.size(); ++i)
        if (mesh.node(i) >= r_min)
            err = std::max(err, std::abs(u[i] - *exact_u(sol, mesh.node(i))));
    return err;
}

// ---------------------------------------------------------------- 1

Outcome exact_consistency()
{
    double worst = 0.0;
    // singular benchmark and a mild case with an interior threshold
    for (const auto& sol : {build_exact(3, 3.0, 2.0, 2.0), build_exact(2, 1.0, 2.0, 0.5)}) {
        const auto res = exact_residual(sol, RadialMesh::build(sol.N, sol.R, 10000, 1.0));
        if (res.core_nodes == 0 || res.plateau_nodes == 0)
            return {false, "a region has no nodes"};
        worst = std::max({worst, res.core, res.plateau});
    }
    return {worst <= 1e-10, fmt("max residual %.2e", worst)};
}

// ---------------------------------------------------------------- 2

Outcome thresholds()
{
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double rel = 0.0, cont = 0.0;
    for (int t = 0; t < 100; ++t) {
        const int N = 2 + int(3 * unit(rng));
        const double lambda = 0.3 + 5.0 * unit(rng);
        const bool singular = t % 2 == 0;
        const double q = singular ? 1.05 + (N - 1.1) * unit(rng) : 0.05 + 0.9 * unit(rng);
        const double base = singular ? (N - 1.0) / lambda : (N - q) / lambda;
        const double expected = std::exp(std::log(base) / (1.0 - q));
        const double got = threshold_radius(N, lambda, q);
        rel = std::max(rel, std::abs(got - expected) / expected);
        const auto sol = build_exact(N, 2.0 * expected, lambda, q);
        cont = std::max(cont, std::abs(std::abs(exact_z(sol, sol.threshold)) - 1.0));
    }
    return {rel <= 1e-12 && cont <= 1e-12, fmt("threshold rel %.1e, |z|-1 %.1e", rel, cont)};
}

// ---------------------------------------------------------------- 3

Outcome solver_convergence()
{
    const auto sol = build_exact(3, 3.0, 2.0, 2.0);
    const int ns[] = {1024, 2048, 4096};
    const double eps[] = {4e-6 * 3.0, 2e-6 * 3.0, 1e-6 * 3.0};
    std::vector<double> errs;
    bool ok = true;
    for (int l = 0; l < 3; ++l) {
        auto cfg = SolverConfig::for_radius(3.0);
        cfg.eps_min = eps[l];
        const auto rep = solve(share(RadialMesh::build(3, 3.0, ns[l], 2.0)), PowerLaw{2.0, 2.0}, cfg);
        errs.push_back(max_error(rep.u, sol, 0.03));
        ok = ok && rep.converged && (l == 0 || errs[l] < errs[l - 1]);
    }
    ok = ok && errs.back() <= 1e-2;
    return {ok, fmt("errors %.2e %.2e %.2e", errs[0], errs[1], errs[2])};
}

// ---------------------------------------------------------------- 4

Outcome plateau_structure()
{
    auto cfg = SolverConfig::for_radius(3.0);
    const auto rep = solve(share(RadialMesh::build(3, 3.0, 4096, 2.0)), PowerLaw{2.0, 2.0}, cfg);
    const double tol = 10.0 * cfg.tol_res;
    const auto probe = plateau_probe(rep.u, build_exact(3, 3.0, 2.0, 2.0), tol, rep.eps);
    return {probe.pass && probe.max_plateau <= tol,
            fmt("detected %.4f vs %.4f, max plateau %.1e", probe.detected, probe.threshold, probe.max_plateau)};
}

// ---------------------------------------------------------------- 5

Outcome comparison()
{
    const std::size_t workers = default_workers();
    std::ostringstream detail;
    bool ok = true;
    for (int N : {2, 3}) {
        const auto rep = comparison_suite(500 + N, 20, PairFamily::Mixed, share(RadialMesh::build(N, 1.0, 1024, 2.0)),
                                          SolverConfig::for_radius(1.0), workers);
        ok = ok && rep.pass && rep.pairs.size() == 20;
        detail << "N=" << N << " worst " << rep.worst_violation << "; ";
        const double oracle = oracle_comparison(600 + N, 20, N, 1.0);
        ok = ok && oracle <= 0.0;
    }
    auto grid_cfg = SolverConfig::for_radius(1.0);
    grid_cfg.eps_min = 1e-3;
    grid_cfg.max_iterations = 2000;
    const auto disk = comparison_suite(700, 20, PairFamily::Mixed, share(CartesianGrid::disk(1.0, 32)), grid_cfg, workers);
    ok = ok && disk.pass && disk.pairs.size() == 20;
    detail << "disk worst " << disk.worst_violation;
    return {ok, detail.str()};
}

// ---------------------------------------------------------------- 6

Outcome regularity()
{
    std::ostringstream detail;
    bool ok = true;
    for (const auto& [N, q] : {std::pair{3, 2.0}, std::pair{2, 1.5}}) {
        const double s_star = N / (q - 1.0);
        const auto rep = regularity_probe(N, 2.0, q, 3.0, {100, 1000, 10000}, {0.8 * s_star, 1.2 * s_star});
        const bool alpha_ok = std::abs(rep.alpha - (q - 1.0)) <= 0.05 * (q - 1.0);
        ok = ok && alpha_ok && !rep.table[0].grows && rep.table[1].grows && rep.critical == s_star;
        detail << "(" << N << "," << q << ") alpha " << rep.alpha << "; ";
    }
    return {ok, detail.str()};
}

// ---------------------------------------------------------------- 7

Outcome power_identity()
{
    struct Case {
        int N;
        double q, m;
    };
    double worst = 0.0;
    bool ok = true;
    for (const Case c : {Case{3, 1.5, 2.0}, Case{3, 1.2, 4.0}, Case{3, 1.5, 1.5}, Case{3, 1.8, 1.2}, Case{4, 2.0, 1.5}}) {
        const auto sol = build_exact(c.N, 3.0, 2.0, c.q);
        double prev = INFINITY;
        for (int n : {1000, 10000, 100000}) {
            const double gap = power_identity_check(sol, c.m, RadialMesh::build(c.N, 3.0, n, 3.0)).gap;
            ok = ok && gap < prev;
            prev = gap;
        }
        worst = std::max(worst, prev);
    }
    return {ok && worst <= 5e-3, fmt("worst gap %.2e at n = 1e5", worst)};
}

// ---------------------------------------------------------------- 8

Outcome gradient_bound()
{
    std::mt19937_64 rng(808);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto mesh = RadialMesh::build(3, 3.0, 20000, 3.0);
    double worst = 0.0;
    bool ok = true;
    for (int t = 0; t < 10; ++t) {
        const double q = 1.05 + 0.9 * unit(rng);
        const double lambda = 0.5 + 3.0 * unit(rng);
        const double p = 1.05 + (3.0 / q - 1.1) * unit(rng);
        const double pp = p / (p - 1.0);
        const double m = 0.1 + (3.0 / ((q - 1.0) * pp) - 0.2) * unit(rng);
        const auto b = gradient_power_bound_check(build_exact(3, 3.0, lambda, q), m, p, mesh);
        ok = ok && b.lhs <= 1.01 * b.rhs;
        worst = std::max(worst, b.lhs / b.rhs);
    }
    return {ok, fmt("max lhs/rhs %.4f", worst)};
}

// ---------------------------------------------------------------- 9

Outcome discrete_identities()
{
    std::mt19937_64 rng(909);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double coarea = 0.0, slicing = 0.0, green = 0.0, theta = 0.0;
    for (int t = 0; t < 100; ++t) {
        EdgeGraph g;
        if (t % 2 == 0) {
            const std::size_t n = 2 + std::size_t(9998 * unit(rng));
            std::vector<double> w(n - 1);
            for (auto& x : w)
                x = 0.1 + 2.0 * unit(rng);
            g = path_graph(w);
        } else {
            const std::size_t nx = 2 + std::size_t(98 * unit(rng)), ny = 2 + std::size_t(98 * unit(rng));
            g = lattice_graph(nx, ny);
        }
        // coarse levels force ties between nodes
        const double levels = t % 3 == 0 ? 8.0 : 1e6;
        std::vector<double> u(g.nodes), w(g.nodes);
        for (std::size_t k = 0; k < g.nodes; ++k) {
            u[k] = std::round(levels * (2.0 * unit(rng) - 1.0)) / levels * 5.0;
            w[k] = 4.0 * unit(rng) - 2.0;
        }
        std::vector<double> z(g.edges());
        for (auto& x : z)
            x = 2.0 * unit(rng) - 1.0;
        EdgeVectorField field{z, std::vector<double>(g.nodes, 0.0)};
        for (std::size_t k = 0; k < g.nodes; k += 7)
            field.boundary_flux[k] = 2.0 * unit(rng) - 1.0;

        coarea = std::max(coarea, coarea_check(g, u).relative_gap());
        slicing = std::max(slicing, slicing_check(g, z, u).relative_gap());
        green = std::max(green, green_check(g, field, w).relative_defect());

        std::vector<double> xs = {-6.0}, ys = {-3.0 * unit(rng)};
        for (int b = 0; b < 4; ++b) {
            xs.push_back(xs.back() + 0.5 + 2.0 * unit(rng));
            ys.push_back(ys.back() + (b == 1 ? 0.0 : unit(rng)));
        }
        theta = std::max(theta, theta_invariance_check(g, z, u, PiecewiseLinearMap(xs, ys)));
    }
    const bool ok = coarea <= 1e-12 && slicing <= 1e-12 && green <= 1e-12 && theta == 0.0;
    return {ok, fmt("coarea %.1e slicing %.1e green %.1e", coarea, slicing, green) + fmt(" theta %g", theta)};
}

// ---------------------------------------------------------------- 10

Outcome ladder()
{
    std::mt19937_64 rng(1010);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double rel = 0.0;
    for (int t = 0; t < 100; ++t) {
        const int N = 2 + int(6 * unit(rng));
        const double p = 1.01 + (N - 1.02) * unit(rng);
        const auto L = exponent_ladder(N, p, 10);
        const double expected = N * p / (N - p);
        rel = std::max(rel, std::abs(L.limit - expected) / expected);
    }
    const auto L = exponent_ladder(3, 2.0, 80);
    const bool inst = L.limit == 6.0 && std::abs(L.s.back() - 6.0) <= 1e-8;
    return {rel <= 1e-12 && inst, fmt("max rel %.1e, (3,2) limit %g", rel, L.limit)};
}

// ---------------------------------------------------------------- 11

Outcome trivial_datum()
{
    const auto sol = build_exact(2, 0.5, 2.0, 0.5);
    if (sol.regime != Regime::Trivial)
        return {false, "oracle regime is not trivial"};
    const auto mesh = share(RadialMesh::build(2, 0.5, 1024, 1.0));
    const double oracle = sample_exact(sol, mesh).max_abs();
    const auto cfg = SolverConfig::for_radius(0.5);
    const auto rep = solve(mesh, PowerLaw{2.0, 0.5}, cfg);
    const double solver = rep.u.max_abs();
    return {oracle == 0.0 && solver <= 10.0 * cfg.tol_res, fmt("oracle max %g, solver max %.1e", oracle, solver)};
}

}  // namespace

int main()
{
    criterion(1, "exact oracle consistency", 1.0, exact_consistency);
    criterion(2, "threshold radii", 1.0, thresholds);
    criterion(3, "solver vs oracle", 60.0, solver_convergence);
    criterion(4, "plateau structure", 60.0, plateau_structure);
    criterion(5, "comparison principle", 300.0, comparison);
    criterion(6, "regularity sharpness", 120.0, regularity);
    criterion(7, "power identity", 60.0, power_identity);
    criterion(8, "gradient power bound", 60.0, gradient_bound);
    criterion(9, "discrete identities", 10.0, discrete_identities);
    criterion(10, "exponent ladder", 1.0, ladder);
    criterion(11, "trivial datum", 10.0, trivial_datum);
    std::printf("%s: %d of 11 criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
