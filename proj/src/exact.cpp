#include "onelap/exact.hpp"

#include <algorithm>
#include <cmath>

namespace onelap {

const char* regime_name(Regime regime)
{
    switch (regime) {
    case Regime::Singular: return "singular";
    case Regime::Mild: return "mild";
    case Regime::Trivial: return "trivial";
    }
    return "unknown";
}

double threshold_radius(int N, double lambda, double q)
{
    if (N < 2)
        throw DomainError("threshold_radius: dimension must be >= 2");
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw DomainError("threshold_radius: lambda must be positive");
    if (q == 1.0)
        throw UnsupportedExponentError("threshold_radius: q = 1 is not covered by the closed forms");
    if (!(q > 0.0) || !(q <= N))
        throw DomainError("threshold_radius: q must lie in (0,1) or (1,N]");
    const double base = q > 1.0 ? (N - 1) / lambda : (N - q) / lambda;
    return std::pow(base, 1.0 / (1.0 - q));
}

ExactRadialSolution build_exact(int N, double R, double lambda, double q)
{
    if (!(R > 0.0) || !std::isfinite(R))
        throw DomainError("build_exact: radius must be positive");
    const double rho = threshold_radius(N, lambda, q);
    ExactRadialSolution s{Regime::Singular, N, R, lambda, q, rho, 0.0, 0.0, false};
    if (q > 1.0) {
        if (q < N)
            s.field_constant = std::pow(rho, N - 1) * (1.0 - q) / (N - q);
        s.plateau_free = rho >= R;
        return s;
    }
    if (rho >= R) {
        s.regime = Regime::Trivial;
        return s;
    }
    s.regime = Regime::Mild;
    s.plateau_value = (N - 1) * std::log(rho / R)
                      + lambda / (1.0 - q) * (std::pow(R, 1.0 - q) - std::pow(rho, 1.0 - q));
    return s;
}

namespace {

void check_radius(const ExactRadialSolution& sol, double r, bool allow_origin)
{
    if (!(r >= 0.0) || r > sol.R)
        throw DomainError("exact: radius outside [0, R]");
    if (!allow_origin && r == 0.0)
        throw DomainError("exact: direction undefined at the origin");
}

// The field formulas divide by N - q.
void check_field_exponent(const ExactRadialSolution& sol)
{
    if (sol.q == sol.N)
        throw DomainError("exact: calibration field undefined for q = N");
}

// Radius where the singular profile reaches zero.
double singular_pivot(const ExactRadialSolution& sol)
{
    return sol.plateau_free ? sol.R : sol.threshold;
}

// (N-1) log(r/a) + lambda/(1-q) (a^(1-q) - r^(1-q)), the profile with h(a) = 0.
double log_profile(const ExactRadialSolution& sol, double r, double a)
{
    const double e = 1.0 - sol.q;
    return (sol.N - 1) * std::log(r / a) + sol.lambda / e * (std::pow(a, e) - std::pow(r, e));
}

bool flat_at(const ExactRadialSolution& sol, double r)
{
    switch (sol.regime) {
    case Regime::Singular: return !sol.plateau_free && r >= sol.threshold;
    case Regime::Mild: return r <= sol.threshold;
    case Regime::Trivial: return true;
    }
    return false;
}

double xi_prime(const ExactRadialSolution& sol, double r)
{
    const double d = sol.lambda * sol.q / (sol.N - sol.q) * std::pow(r, -sol.q - 1.0);
    if (sol.regime == Regime::Singular)
        return d + sol.N * sol.field_constant * std::pow(r, -sol.N - 1.0);
    return d;
}

}  // namespace

std::optional<double> exact_u(const ExactRadialSolution& sol, double r)
{
    check_radius(sol, r, true);
    switch (sol.regime) {
    case Regime::Singular: {
        if (r == 0.0)
            return std::nullopt;
        const double a = singular_pivot(sol);
        if (r >= a)
            return 0.0;
        return std::max(0.0, log_profile(sol, r, a));
    }
    case Regime::Mild:
        if (r <= sol.threshold)
            return sol.plateau_value;
        return std::max(0.0, log_profile(sol, r, sol.R));
    case Regime::Trivial:
        return 0.0;
    }
    return 0.0;
}

double exact_du(const ExactRadialSolution& sol, double r)
{
    check_radius(sol, r, false);
    if (flat_at(sol, r))
        return 0.0;
    return (sol.N - 1) / r - sol.lambda * std::pow(r, -sol.q);
}

double exact_z(const ExactRadialSolution& sol, double r)
{
    check_radius(sol, r, false);
    check_field_exponent(sol);
    if (!flat_at(sol, r))
        return -1.0;
    if (sol.regime == Regime::Singular) {
        const double rho = sol.threshold;
        const int N = sol.N;
        const double q = sol.q;
        return -(r / (N - q))
               * ((N - 1) * std::pow(rho, q - 1.0) * std::pow(r, -q)
                  + (1.0 - q) * std::pow(rho, N - 1) * std::pow(r, -N));
    }
    return -sol.lambda / (sol.N - sol.q) * std::pow(r, 1.0 - sol.q);
}

double exact_xi(const ExactRadialSolution& sol, double r)
{
    check_radius(sol, r, false);
    check_field_exponent(sol);
    if (!flat_at(sol, r))
        return -1.0 / r;
    const double base = -sol.lambda / (sol.N - sol.q) * std::pow(r, -sol.q);
    if (sol.regime == Regime::Singular)
        return base - sol.field_constant * std::pow(r, -sol.N);
    return base;
}

ScalarField sample_exact(const ExactRadialSolution& sol, const MeshPtr& mesh)
{
    const auto* rm = std::get_if<RadialMesh>(mesh.get());
    if (!rm)
        throw PreconditionError("sample_exact: radial mesh required");
    if (rm->radius() != sol.R)
        throw PreconditionError("sample_exact: mesh radius differs from the solution radius");
    std::vector<double> u(rm->size());
    for (std::size_t i = 1; i < rm->size(); ++i)
        u[i] = *exact_u(sol, rm->node(i));
    const auto origin = exact_u(sol, 0.0);
    u[0] = origin ? *origin : u[1];
    return ScalarField(mesh, std::move(u));
}

VectorField sample_exact_z(const ExactRadialSolution& sol, const MeshPtr& mesh)
{
    const auto* rm = std::get_if<RadialMesh>(mesh.get());
    if (!rm)
        throw PreconditionError("sample_exact_z: radial mesh required");
    std::vector<double> z(rm->cells());
    for (std::size_t i = 0; i < rm->cells(); ++i)
        z[i] = exact_z(sol, rm->midpoint(i));
    return VectorField(mesh, std::move(z));
}

ExactResidual exact_residual(const ExactRadialSolution& sol, const RadialMesh& mesh)
{
    ExactResidual rep;
    if (sol.regime == Regime::Trivial)
        return rep;
    rep.empty = false;
    const int N = sol.N;
    for (std::size_t i = 1; i < mesh.size(); ++i) {
        const double r = std::min(mesh.node(i), sol.R);
        const double f = sol.lambda * std::pow(r, -sol.q);
        if (flat_at(sol, r)) {
            const double xi = exact_xi(sol, r);
            const double dxi = xi_prime(sol, r);
            const double res = -(N * xi + r * dxi) - f;
            const double scale = std::max(1.0, std::abs(N * xi) + std::abs(r * dxi) + f);
            rep.plateau = std::max(rep.plateau, std::abs(res) / scale);
            ++rep.plateau_nodes;
        } else {
            const double dh = exact_du(sol, r);
            const double res = (N - 1) / r - dh - f;
            const double scale = std::max(1.0, (N - 1) / r + std::abs(dh) + f);
            rep.core = std::max(rep.core, std::abs(res) / scale);
            ++rep.core_nodes;
        }
    }
    return rep;
}

}  // namespace onelap
