#include "onelap/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

namespace onelap {

namespace {

int dimension_of(const Mesh& mesh)
{
    if (const auto* rm = std::get_if<RadialMesh>(&mesh))
        return rm->dimension();
    return 2;
}

double spacing_of(const Mesh& mesh)
{
    if (const auto* rm = std::get_if<RadialMesh>(&mesh))
        return rm->max_spacing();
    return std::get<CartesianGrid>(mesh).spacing();
}

double radius_of_node(const Mesh& mesh, std::size_t k)
{
    if (const auto* rm = std::get_if<RadialMesh>(&mesh))
        return rm->node(k);
    return std::get<CartesianGrid>(mesh).radius_at(k);
}

bool counts(const Mesh& mesh, std::size_t k)
{
    if (const auto* g = std::get_if<CartesianGrid>(&mesh))
        return g->inside(k);
    return true;
}

// Datum exponent away from the excluded value 1.
double draw_exponent(std::mt19937_64& rng, int N)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng) < 0.5)
        return 0.2 + 0.7 * unit(rng);
    return 1.1 + (std::min(N - 0.2, 2.5) - 1.1) * unit(rng);
}

void require_radius(const ExactRadialSolution& exact, const RadialMesh& mesh)
{
    if (std::abs(mesh.radius() - exact.R) > 1e-12 * exact.R || mesh.dimension() != exact.N)
        throw PreconditionError("mesh does not match the closed-form solution (N or R differ)");
}

struct MidpointSample {
    double w;   // r^{N-1} dr
    double u;
    double du;  // |h'|
    double f;
};

std::vector<MidpointSample> midpoint_samples(const ExactRadialSolution& exact, const RadialMesh& mesh)
{
    std::vector<MidpointSample> out(mesh.cells());
    for (std::size_t i = 0; i < mesh.cells(); ++i) {
        const double r = mesh.midpoint(i);
        out[i] = {std::pow(r, exact.N - 1) * mesh.spacing(i), *exact_u(exact, r), std::abs(exact_du(exact, r)),
                  exact.lambda * std::pow(r, -exact.q)};
    }
    return out;
}

std::string fmt_bound(double v)
{
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

}  // namespace

ExponentLadder exponent_ladder(int N, double p, int j)
{
    if (N < 2)
        throw DomainError("exponent_ladder: dimension must be >= 2");
    if (!(p > 1.0) || !(p < N))
        throw DomainError("exponent_ladder: p must lie in (1, N)");
    if (j < 0)
        throw DomainError("exponent_ladder: j must be >= 0");
    ExponentLadder L{N, p, double(N) / (N - 1), p / (p - 1.0), {}, N * p / (N - p)};
    const double ratio = L.n_prime / L.p_prime;
    double term = 1.0, sum = 0.0;
    for (int k = 0; k <= j; ++k) {
        sum += term;
        term *= ratio;
        L.s.push_back(L.n_prime * sum);
    }
    return L;
}

ComparisonReport comparison_suite(std::uint64_t seed, std::size_t count, PairFamily family, const MeshPtr& mesh,
                                  const SolverConfig& config, std::size_t workers)
{
    config.validate();
    const int N = dimension_of(*mesh);
    const std::size_t nodes = node_count(*mesh);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<ComparisonPair> pairs(count);
    for (std::size_t i = 0; i < count; ++i) {
        const bool bump = family == PairFamily::Bump || (family == PairFamily::Mixed && i % 2 == 1);
        const double q = draw_exponent(rng, N);
        const double lambda1 = 0.5 + 2.5 * unit(rng);
        if (!bump) {
            const double lambda2 = lambda1 * (1.0 + unit(rng));
            pairs[i] = {i, PowerLaw{lambda1, q}, PowerLaw{lambda2, q}, 0.0, 0.0, false, false};
            continue;
        }
        const double amp = 0.5 + 2.0 * unit(rng);
        const double centre = unit(rng);
        const double width = 0.1 + 0.3 * unit(rng);
        const auto base = evaluate_datum(PowerLaw{lambda1, q}, mesh).values();
        std::vector<double> raised(base);
        double R = std::holds_alternative<RadialMesh>(*mesh) ? std::get<RadialMesh>(*mesh).radius() : 0.0;
        if (R == 0.0)
            for (std::size_t k = 0; k < nodes; ++k)
                if (counts(*mesh, k))
                    R = std::max(R, radius_of_node(*mesh, k));
        for (std::size_t k = 0; k < nodes; ++k) {
            const double x = (radius_of_node(*mesh, k) / R - centre) / width;
            raised[k] += amp * std::exp(-x * x);
        }
        pairs[i] = {i, Tabulated{base}, Tabulated{raised}, 0.0, 0.0, false, false};
    }

    const double h = spacing_of(*mesh);
    parallel_for(count, workers, [&](std::size_t i) {
        auto& pr = pairs[i];
        const auto a = solve(mesh, pr.f1, config);
        const auto b = solve(mesh, pr.f2, config);
        double v = -INFINITY;
        for (std::size_t k = 0; k < nodes; ++k)
            if (counts(*mesh, k))
                v = std::max(v, a.u[k] - b.u[k]);
        const double l1 = lp_norm(evaluate_datum(pr.f2, mesh), 1.0);
        pr.violation = v;
        pr.tolerance = (h + config.eps_min) * 10.0 * std::max(1.0, l1);
        pr.pass = v <= pr.tolerance;
        pr.converged = a.converged && b.converged;
    });

    ComparisonReport rep{std::move(pairs), -INFINITY, true};
    for (const auto& pr : rep.pairs) {
        rep.worst_violation = std::max(rep.worst_violation, pr.violation);
        rep.pass = rep.pass && pr.pass;
    }
    return rep;
}

double oracle_comparison(std::uint64_t seed, std::size_t count, int N, double R, std::size_t samples)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = -INFINITY;
    for (std::size_t i = 0; i < count; ++i) {
        const double q = draw_exponent(rng, N);
        const double lambda1 = 0.2 + 4.8 * unit(rng);
        const double lambda2 = lambda1 * (1.01 + unit(rng));
        const auto s1 = build_exact(N, R, lambda1, q);
        const auto s2 = build_exact(N, R, lambda2, q);
        for (std::size_t k = 1; k <= samples; ++k) {
            const double r = R * double(k) / double(samples);
            worst = std::max(worst, *exact_u(s1, r) - *exact_u(s2, r));
        }
    }
    return worst;
}

PlateauProbe plateau_probe(const ScalarField& u, const ExactRadialSolution& exact, double tol, double eps)
{
    if (exact.regime == Regime::Mild)
        throw PreconditionError("plateau_probe: the mild regime has no zero plateau");
    const auto* rm = std::get_if<RadialMesh>(&u.mesh());
    if (!rm)
        throw PreconditionError("plateau_probe: radial mesh required");
    require_radius(exact, *rm);

    double threshold = 0.0;
    if (exact.regime == Regime::Singular)
        threshold = exact.plateau_free ? exact.R : exact.threshold;

    double detected = 0.0;
    for (std::size_t i = rm->size(); i-- > 0;)
        if (std::abs(u[i]) > tol) {
            detected = rm->node(std::min(i + 1, rm->cells()));
            break;
        }
    double max_plateau = 0.0;
    for (std::size_t i = 0; i < rm->size(); ++i)
        if (rm->node(i) >= threshold)
            max_plateau = std::max(max_plateau, std::abs(u[i]));
    const double tolerance = 5.0 * rm->max_spacing() + std::sqrt(std::max(eps, 0.0)) * exact.R;
    return {detected, threshold, max_plateau, tolerance, std::abs(detected - threshold) <= tolerance};
}

RegularityReport regularity_probe(int N, double lambda, double q, double R, const std::vector<int>& levels,
                                  const std::vector<double>& s_list)
{
    const auto exact = build_exact(N, R, lambda, q);
    if (exact.regime != Regime::Singular)
        throw PreconditionError("regularity_probe: singular regime (1 < q < N) required");
    if (levels.empty())
        throw PreconditionError("regularity_probe: at least one mesh level required");
    RegularityReport rep{N, lambda, q, levels, {}, 0.0, q - 1.0, N / (q - 1.0), {}, {}};

    constexpr int kFitPoints = 16;
    for (int n : levels) {
        const auto mesh = RadialMesh::build(N, R, n, 3.0);
        const double r1 = mesh.node(1);
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (int k = 0; k < kFitPoints; ++k) {
            const double x = std::log(r1) + std::log(10.0) * k / (kFitPoints - 1);
            const double y = std::log(*exact_u(exact, std::exp(x)));
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double slope = (kFitPoints * sxy - sx * sy) / (kFitPoints * sxx - sx * sx);
        rep.alpha_levels.push_back(-slope);
    }
    rep.alpha = rep.alpha_levels.back();

    const double top = exact.plateau_free ? R : exact.threshold;
    for (int k = 2; k <= 5; ++k)
        rep.cutoffs.push_back(R * std::pow(10.0, -k));
    const double sigma = sphere_area(N);
    for (double s : s_list) {
        if (!(s >= 1.0))
            throw DomainError("regularity_probe: exponents must be >= 1");
        auto integrand = [&](double x) {
            const double r = std::exp(x);
            return std::pow(*exact_u(exact, r), s) * std::pow(r, N);
        };
        // Integral over [c, top] in log r, panels of a tenth of a decade.
        auto integral = [&](double c) {
            if (c >= top)
                return 0.0;
            const double a = std::log(c), b = std::log(top);
            const int panels = std::max(1, int(std::ceil((b - a) / (0.1 * std::log(10.0)))));
            double sum = 0.0;
            for (int p = 0; p < panels; ++p)
                sum += boost::math::quadrature::gauss<double, 15>::integrate(integrand, a + (b - a) * p / panels,
                                                                              a + (b - a) * (p + 1) / panels);
            return sigma * sum;
        };
        NormRow row{s, {}, {}, false};
        std::vector<double> I;
        for (double c : rep.cutoffs) {
            I.push_back(integral(c));
            row.norms.push_back(std::pow(I.back(), 1.0 / s));
        }
        for (std::size_t k = 2; k < I.size(); ++k)
            row.ratios.push_back((I[k] - I[k - 1]) / (I[k - 1] - I[k - 2]));
        row.grows = !row.ratios.empty() && row.ratios.back() >= 1.0;
        rep.table.push_back(std::move(row));
    }
    return rep;
}

PowerIdentity power_identity_check(const ExactRadialSolution& exact, double m, const RadialMesh& mesh)
{
    if (exact.regime != Regime::Singular)
        throw PreconditionError("power_identity_check: singular regime required");
    if (!(m > 1.0))
        throw PreconditionError("power_identity_check: power m must exceed 1");
    const double bound = (exact.N - exact.q) / (exact.q - 1.0);
    if (!(m * (exact.q - 1.0) < exact.N - exact.q))
        throw PreconditionError("power_identity_check: integrability needs m(q-1) < N-q, i.e. m < "
                                + fmt_bound(bound));
    require_radius(exact, mesh);

    double grad = 0.0, mixed = 0.0, rhs = 0.0;
    for (const auto& p : midpoint_samples(exact, mesh)) {
        if (p.u <= 0.0)
            continue;
        const double um = std::pow(p.u, m);
        grad += p.w * m * std::pow(p.u, m - 1.0) * p.du;
        mixed += p.w * um * p.du;
        rhs += p.w * um * p.f;
    }
    const double sigma = sphere_area(exact.N);
    const double lhs = sigma * (grad + mixed);
    rhs *= sigma;
    return {lhs, rhs, std::abs(lhs - rhs) / rhs};
}

PowerBound gradient_power_bound_check(const ExactRadialSolution& exact, double m, double p, const RadialMesh& mesh)
{
    if (!(m > 0.0))
        throw PreconditionError("gradient_power_bound_check: m must be positive");
    if (!(p > 1.0) || !(p < exact.N / exact.q - 1e-9))
        throw PreconditionError("gradient_power_bound_check: need 1 < p < N/q so that f lies in L^p (N/q = "
                                + fmt_bound(exact.N / exact.q) + ")");
    const double pp = p / (p - 1.0);
    if (exact.q > 1.0 && !(m * (exact.q - 1.0) * pp < exact.N))
        throw PreconditionError("gradient_power_bound_check: u^m lies in L^p' only if m(q-1)p' < N (m < "
                                + fmt_bound(exact.N / ((exact.q - 1.0) * pp)) + ")");
    require_radius(exact, mesh);

    double lhs = 0.0, um = 0.0, fp = 0.0;
    for (const auto& s : midpoint_samples(exact, mesh)) {
        lhs += s.w * (m + 1.0) * std::pow(s.u, m) * s.du;
        um += s.w * std::pow(s.u, m * pp);
        fp += s.w * std::pow(s.f, p);
    }
    const double sigma = sphere_area(exact.N);
    lhs *= sigma;
    const double rhs = (m + 1.0) * std::pow(sigma * um, 1.0 / pp) * std::pow(sigma * fp, 1.0 / p);
    return {lhs, rhs, lhs <= 1.01 * rhs};
}

PowerBound gradient_power_bound_check(const ScalarField& u, const ScalarField& f, double m, double p)
{
    const auto* rm = std::get_if<RadialMesh>(&u.mesh());
    if (!rm || !std::holds_alternative<RadialMesh>(f.mesh()))
        throw PreconditionError("gradient_power_bound_check: radial fields required");
    if (u.size() != f.size())
        throw DataError("gradient_power_bound_check: field sizes differ");
    if (!(m > 0.0) || !(p > 1.0))
        throw PreconditionError("gradient_power_bound_check: need m > 0 and p > 1");
    const double pp = p / (p - 1.0);
    double lhs = 0.0, um = 0.0, fp = 0.0;
    for (std::size_t i = 0; i < rm->cells(); ++i) {
        const double w = std::pow(rm->midpoint(i), rm->dimension() - 1) * rm->spacing(i);
        const double uc = 0.5 * std::abs(u[i] + u[i + 1]);
        const double fc = 0.5 * std::abs(f[i] + f[i + 1]);
        const double du = std::abs(u[i + 1] - u[i]) / rm->spacing(i);
        lhs += w * (m + 1.0) * std::pow(uc, m) * du;
        um += w * std::pow(uc, m * pp);
        fp += w * std::pow(fc, p);
    }
    const double sigma = sphere_area(rm->dimension());
    lhs *= sigma;
    const double rhs = (m + 1.0) * std::pow(sigma * um, 1.0 / pp) * std::pow(sigma * fp, 1.0 / p);
    return {lhs, rhs, lhs <= 1.01 * rhs};
}

TransformedResidual transformed_equation_check(const ScalarField& u, const VectorField& z, const ScalarField& f,
                                               const TransformedOptions& options)
{
    const auto* rm = std::get_if<RadialMesh>(&u.mesh());
    if (!rm)
        throw PreconditionError("transformed_equation_check: radial mesh required");
    if (z.size() != rm->cells() || f.size() != u.size())
        throw DataError("transformed_equation_check: field sizes do not match the mesh");
    const int N = rm->dimension();
    auto flux = [&](std::size_t e) {
        return std::pow(rm->midpoint(e), N - 1) * std::exp(-0.5 * (u[e] + u[e + 1])) * z[e];
    };

    TransformedResidual out{0.0, 0.0, 0};
    double sum = 0.0;
    double prev_m = 0.0;
    for (std::size_t i = 0; i < rm->cells(); ++i) {
        const double mi = rm->midpoint(i);
        const double vol = (std::pow(mi, N) - std::pow(prev_m, N)) / N;
        const double r = rm->node(i);
        const bool skip = r < options.r_min || (r >= options.band_lo && r <= options.band_hi);
        if (!skip) {
            const double div = (flux(i) - (i > 0 ? flux(i - 1) : 0.0)) / vol;
            const double res = -div - std::exp(-u[i]) * f[i];
            sum += vol * res * res;
            out.max = std::max(out.max, std::abs(res));
            ++out.nodes;
        }
        prev_m = mi;
    }
    out.l2 = std::sqrt(sphere_area(N) * sum);
    return out;
}

}  // namespace onelap
