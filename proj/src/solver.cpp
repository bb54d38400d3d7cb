#include "onelap/solver.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <boost/math/tools/toms748_solve.hpp>

namespace onelap {

namespace {

// Exponential weights e^{-(u - u_i)} inside a cell are evaluated with the
// jump clamped to this magnitude.
constexpr double kJumpCap = 2.0;

constexpr std::array<double, 6> kGaussX = {-0.9324695142031521, -0.6612093864662645, -0.2386191860831969,
                                           0.2386191860831969,  0.6612093864662645,  0.9324695142031521};
constexpr std::array<double, 6> kGaussW = {0.1713244923791704, 0.3607615730481386, 0.4679139345726910,
                                           0.4679139345726910, 0.3607615730481386, 0.1713244923791704};

double capped(double d) { return std::clamp(d, -kJumpCap, kJumpCap); }

double log_sum_exp(double a, double b)
{
    const double m = std::max(a, b);
    if (m == -std::numeric_limits<double>::infinity())
        return m;
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// log of B(d) = (d/2) / sinh(d/2).
double log_bernoulli(double d)
{
    const double ad = std::abs(d);
    if (ad < 1e-8)
        return 0.0;
    return std::log(ad) - 0.5 * ad - std::log(-std::expm1(-ad));
}

double bernoulli(double d) { return std::exp(log_bernoulli(d)); }

// Linear interpolation of node values on a radial mesh.
double interpolate(const RadialMesh& mesh, const std::vector<double>& v, double r)
{
    const auto& x = mesh.nodes();
    if (r <= x.front())
        return v.front();
    if (r >= x.back())
        return v.back();
    const std::size_t i = std::size_t(std::upper_bound(x.begin(), x.end(), r) - x.begin()) - 1;
    const double t = (r - x[i]) / (x[i + 1] - x[i]);
    return v[i] + t * (v[i + 1] - v[i]);
}

// Per-cell quadrature of r^{N-1} f and r^{N-1} on the half cells around
// each free node.
class RadialSystem {
public:
    RadialSystem(const RadialMesh& mesh, const DatumSpec& datum) : mesh_(mesh), n_(mesh.cells())
    {
        validate_datum(datum, mesh.dimension());
        const auto* tab = std::get_if<Tabulated>(&datum);
        if (tab && tab->values.size() != mesh.size())
            throw DataError("tabulated datum: value count does not match the mesh");
        auto f = [&](double r) { return tab ? interpolate(mesh, tab->values, r) : datum_value(datum, r); };

        const int N = mesh.dimension();
        a_.resize(n_);
        h_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            h_[i] = mesh.spacing(i);
            a_[i] = std::pow(mesh.midpoint(i), N - 1);
        }
        for (std::size_t j = 0; j < 6; ++j) {
            t_[j] = 0.25 * (kGaussX[j] + 1.0);
            w_[j] = 0.25 * kGaussW[j];
        }
        right_f_.assign(n_ * 6, 0.0);
        right_m_.assign(n_ * 6, 0.0);
        left_f_.assign(n_ * 6, 0.0);
        left_m_.assign(n_ * 6, 0.0);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < 6; ++j) {
                const double rr = mesh.node(i) + h_[i] * t_[j];
                right_m_[i * 6 + j] = w_[j] * h_[i] * std::pow(rr, N - 1);
                right_f_[i * 6 + j] = right_m_[i * 6 + j] * f(rr);
                if (i > 0) {
                    const double rl = mesh.node(i) - h_[i - 1] * t_[j];
                    left_m_[i * 6 + j] = w_[j] * h_[i - 1] * std::pow(rl, N - 1);
                    left_f_[i * 6 + j] = left_m_[i * 6 + j] * f(rl);
                }
            }
        volume_.resize(n_);
        double prev = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            const double next = std::pow(mesh.midpoint(i), N) / N;
            volume_[i] = next - prev;
            prev = next;
        }
    }

    std::size_t cells() const { return n_; }
    double a(std::size_t i) const { return a_[i]; }
    double h(std::size_t i) const { return h_[i]; }
    double volume(std::size_t i) const { return volume_[i]; }
    const RadialMesh& mesh() const { return mesh_; }

    // Integral of r^{N-1} f e^{-(u - u_i)} over [r_i, m_i] for edge jump d_i.
    double right(std::size_t i, double d, bool measure = false) const
    {
        const auto& tab = measure ? right_m_ : right_f_;
        const double c = capped(d);
        double s = 0.0;
        for (std::size_t j = 0; j < 6; ++j)
            s += tab[i * 6 + j] * std::exp(-c * t_[j]);
        return s;
    }

    // Integral over [m_{i-1}, r_i] for the previous edge jump d_{i-1}.
    double left(std::size_t i, double d, bool measure = false) const
    {
        if (i == 0)
            return 0.0;
        const auto& tab = measure ? left_m_ : left_f_;
        const double c = capped(d);
        double s = 0.0;
        for (std::size_t j = 0; j < 6; ++j)
            s += tab[i * 6 + j] * std::exp(c * t_[j]);
        return s;
    }

private:
    const RadialMesh& mesh_;
    std::size_t n_;
    std::vector<double> a_, h_, volume_;
    std::array<double, 6> t_{}, w_{};
    std::vector<double> right_f_, right_m_, left_f_, left_m_;
};

double edge_z(double d, double h, double eps)
{
    const double g = d / h;
    return g / std::sqrt(g * g + eps * eps);
}

std::vector<double> jumps(const std::vector<double>& u)
{
    std::vector<double> d(u.size() - 1);
    for (std::size_t i = 0; i + 1 < u.size(); ++i)
        d[i] = u[i + 1] - u[i];
    return d;
}

void check_eps(double eps)
{
    if (!(eps > 0.0) || !std::isfinite(eps))
        throw ConfigError("solver: eps must be positive");
}

// Grid helpers. Cells outside the mask carry the boundary value 0.
struct GridGeometry {
    const CartesianGrid& grid;
    const std::vector<double>& u;

    double value(std::size_t k) const { return grid.inside(k) ? u[k] : 0.0; }

    // Normal difference and full regularized magnitude on an edge.
    void edge(const GridEdge& e, double eps, double& delta, double& w) const
    {
        const double h = grid.spacing();
        const std::size_t step = e.horizontal ? grid.nx() : 1;
        delta = value(e.head) - value(e.tail);
        const double gn = delta / h;
        const double gt = 0.25 / h
                          * ((value(e.tail + step) - value(e.tail - step))
                             + (value(e.head + step) - value(e.head - step)));
        w = std::sqrt(gn * gn + gt * gt + eps * eps);
    }
};

ScalarField grid_picard(const ScalarField& uk, const std::vector<double>& f, double eps, double tol)
{
    const auto& grid = std::get<CartesianGrid>(uk.mesh());
    const auto& u = uk.values();
    const GridGeometry geo{grid, u};
    const double h2 = grid.spacing() * grid.spacing();

    std::vector<long> id(grid.size(), -1);
    long count = 0;
    for (std::size_t k = 0; k < grid.size(); ++k)
        if (grid.inside(k))
            id[k] = count++;

    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(count);
    Eigen::VectorXd guess(count);
    for (std::size_t k = 0; k < grid.size(); ++k)
        if (id[k] >= 0) {
            trip.emplace_back(id[k], id[k], h2 * f[k]);
            guess[id[k]] = std::exp(-u[k]);
        }
    for (const auto& e : grid.edges()) {
        double delta, w;
        geo.edge(e, eps, delta, w);
        const double c = bernoulli(delta) / w;
        const long p = id[e.tail], q = id[e.head];
        if (p >= 0)
            trip.emplace_back(p, p, c);
        if (q >= 0)
            trip.emplace_back(q, q, c);
        if (p >= 0 && q >= 0) {
            trip.emplace_back(p, q, -c);
            trip.emplace_back(q, p, -c);
        } else {
            rhs[p >= 0 ? p : q] += c;
        }
    }
    Eigen::SparseMatrix<double> A(count, count);
    A.setFromTriplets(trip.begin(), trip.end());

    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::IncompleteCholesky<double>>
        cg;
    cg.setTolerance(tol);
    cg.setMaxIterations(10 * count + 100);
    cg.compute(A);
    if (cg.info() != Eigen::Success)
        throw SolverError("picard_step: incomplete Cholesky factorization failed");
    const Eigen::VectorXd v = cg.solveWithGuess(rhs, guess);
    if (cg.info() != Eigen::Success)
        throw SolverError("picard_step: conjugate gradient did not converge (error "
                          + std::to_string(cg.error()) + " after " + std::to_string(cg.iterations())
                          + " iterations)");

    std::vector<double> out(grid.size(), 0.0);
    for (std::size_t k = 0; k < grid.size(); ++k)
        if (id[k] >= 0) {
            const double vk = v[id[k]];
            if (!(vk > 0.0) || !std::isfinite(vk))
                throw SolverError("picard_step: linear solve produced a nonpositive transformed value");
            out[k] = -std::log(vk);
        }
    return ScalarField(uk.mesh_ptr(), std::move(out));
}

ScalarField radial_picard(const ScalarField& uk, const DatumSpec& datum, double eps)
{
    const auto& mesh = std::get<RadialMesh>(uk.mesh());
    const RadialSystem sys(mesh, datum);
    const std::size_t n = sys.cells();
    const std::vector<double> d = jumps(uk.values());

    std::vector<double> lr(n);
    double prev_lc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double g = d[i] / sys.h(i);
        const double w = std::sqrt(g * g + eps * eps);
        const double lc = std::log(sys.a(i)) - std::log(sys.h(i)) - std::log(w) + log_bernoulli(d[i]);
        const double q = sys.right(i, d[i]) + (i > 0 ? sys.left(i, d[i - 1]) : 0.0);
        double den = log_sum_exp(lc, q > 0.0 ? std::log(q) : -std::numeric_limits<double>::infinity());
        if (i > 0) {
            const double om = -std::expm1(lr[i - 1]);
            if (om > 0.0)
                den = log_sum_exp(den, prev_lc + std::log(om));
        }
        lr[i] = lc - den;
        prev_lc = lc;
    }
    std::vector<double> out(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;)
        out[i] = out[i + 1] - lr[i];
    return ScalarField(uk.mesh_ptr(), std::move(out));
}

double radial_residual(const RadialSystem& sys, int N, const std::vector<double>& d, double eps)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < sys.cells(); ++i) {
        double row = -sys.a(i) * edge_z(d[i], sys.h(i), eps) * std::exp(-0.5 * d[i]) - sys.right(i, d[i]);
        double measure = sys.right(i, d[i], true);
        if (i > 0) {
            row += sys.a(i - 1) * edge_z(d[i - 1], sys.h(i - 1), eps) * std::exp(0.5 * d[i - 1])
                   - sys.left(i, d[i - 1]);
            measure += sys.left(i, d[i - 1], true);
        }
        const double res = row / measure;
        sum += sys.volume(i) * res * res;
    }
    return std::sqrt(sphere_area(N) * sum);
}

double radial_residual(const ScalarField& u, const DatumSpec& datum, double eps)
{
    const auto& mesh = std::get<RadialMesh>(u.mesh());
    return radial_residual(RadialSystem(mesh, datum), mesh.dimension(), jumps(u.values()), eps);
}

double grid_residual(const ScalarField& u, const std::vector<double>& f, double eps)
{
    const auto& grid = std::get<CartesianGrid>(u.mesh());
    const GridGeometry geo{grid, u.values()};
    const double h2 = grid.spacing() * grid.spacing();
    std::vector<double> div(grid.size(), 0.0);
    for (const auto& e : grid.edges()) {
        double delta, w;
        geo.edge(e, eps, delta, w);
        // outward flux from tail with weight e^{-(u_Q - u_P)/2}, and its mirror
        div[e.tail] += delta / w * std::exp(-0.5 * delta);
        div[e.head] -= delta / w * std::exp(0.5 * delta);
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k)
        if (grid.inside(k)) {
            const double res = -div[k] / h2 - f[k];
            sum += res * res;
        }
    return std::sqrt(h2 * sum);
}

}  // namespace

SolverConfig SolverConfig::for_radius(double R)
{
    SolverConfig c;
    c.eps_start = 1e-2 * R;
    c.eps_min = 1e-6 * R;
    return c;
}

void SolverConfig::validate() const
{
    auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!positive(eps_start) || !positive(eps_min))
        throw ConfigError("solver: eps_start and eps_min must be positive");
    if (eps_min > eps_start)
        throw ConfigError("solver: eps_min exceeds eps_start");
    if (!(shrink > 0.0 && shrink < 1.0))
        throw ConfigError("solver: shrink factor must lie in (0, 1)");
    if (!positive(tol_fp) || !positive(tol_res) || !positive(linear_tol))
        throw ConfigError("solver: tolerances must be positive");
    if (max_iterations < 1)
        throw ConfigError("solver: max_iterations must be >= 1");
}

std::vector<double> SolverConfig::schedule() const
{
    std::vector<double> s;
    double eps = eps_start;
    while (true) {
        if (eps <= eps_min * (1.0 + 1e-12)) {
            s.push_back(eps_min);
            break;
        }
        s.push_back(eps);
        eps *= shrink;
    }
    return s;
}

ScalarField picard_step(const ScalarField& uk, const DatumSpec& datum, double eps)
{
    check_eps(eps);
    if (std::holds_alternative<RadialMesh>(uk.mesh()))
        return radial_picard(uk, datum, eps);
    return grid_picard(uk, evaluate_datum(datum, uk.mesh_ptr()).values(), eps, 1e-12);
}

ScalarField picard_step(const ScalarField& uk, const ScalarField& f, double eps)
{
    return picard_step(uk, Tabulated{f.values()}, eps);
}

namespace {

// Edge jumps u_{i+1} - u_i of the discrete eps-problem, row by row from the
// origin.
std::vector<double> march(const RadialSystem& sys, double eps)
{
    const std::size_t n = sys.cells();
    std::vector<double> d(n, 0.0);

    for (std::size_t i = 0; i < n; ++i) {
        double inflow = 0.0;
        if (i > 0)
            inflow = sys.left(i, d[i - 1])
                     - sys.a(i - 1) * edge_z(d[i - 1], sys.h(i - 1), eps) * std::exp(0.5 * d[i - 1]);
        inflow = std::max(inflow, 0.0);
        if (inflow + sys.right(i, 0.0) == 0.0)
            continue;

        // Row i as a function of y = u_i - u_{i+1} >= 0; strictly increasing.
        const double la = std::log(sys.a(i));
        const double eh = eps * sys.h(i);
        auto H = [&](double y) {
            const double r = eh / y;
            return la - 0.5 * std::log1p(r * r) + 0.5 * y - std::log(inflow + sys.right(i, -y));
        };
        double lo = eh, hi = eh;
        double hlo = H(lo), hhi = hlo;
        if (hlo < 0.0) {
            do {
                lo = hi;
                hlo = hhi;
                hi *= 2.0;
                hhi = H(hi);
            } while (hhi < 0.0);
        } else {
            do {
                hi = lo;
                hhi = hlo;
                lo *= 0.5;
                hlo = H(lo);
            } while (hlo > 0.0 && lo > 0.0);
        }
        double y = hi;
        if (hlo != 0.0 && hhi != 0.0) {
            std::uintmax_t iters = 200;
            const auto root = boost::math::tools::toms748_solve(H, lo, hi, hlo, hhi,
                                                                boost::math::tools::eps_tolerance<double>(52), iters);
            y = 0.5 * (root.first + root.second);
        } else if (hlo == 0.0) {
            y = lo;
        }
        if (!std::isfinite(y))
            throw SolverError("solve_level: root bracketing failed at node " + std::to_string(i));
        d[i] = -y;
    }

    return d;
}

std::vector<double> edge_field(const RadialSystem& sys, const std::vector<double>& d, double eps)
{
    std::vector<double> z(d.size());
    for (std::size_t i = 0; i < d.size(); ++i)
        z[i] = edge_z(d[i], sys.mesh().spacing(i), eps);
    return z;
}

std::vector<double> accumulate_jumps(const std::vector<double>& d)
{
    std::vector<double> u(d.size() + 1, 0.0);
    for (std::size_t i = d.size(); i-- > 0;)
        u[i] = u[i + 1] - d[i];
    return u;
}

}  // namespace

ScalarField solve_level(const MeshPtr& mesh, const DatumSpec& datum, double eps)
{
    check_eps(eps);
    const auto* rm = std::get_if<RadialMesh>(mesh.get());
    if (!rm)
        throw PreconditionError("solve_level: radial mesh required");
    return ScalarField(mesh, accumulate_jumps(march(RadialSystem(*rm, datum), eps)));
}

SolutionReport solve(const MeshPtr& mesh, const DatumSpec& datum, const SolverConfig& config)
{
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    const bool radial = std::holds_alternative<RadialMesh>(*mesh);
    validate_datum(datum, radial ? std::get<RadialMesh>(*mesh).dimension() : 2);

    std::vector<double> f;
    std::optional<RadialSystem> sys;
    if (radial)
        sys.emplace(std::get<RadialMesh>(*mesh), datum);
    else
        f = evaluate_datum(datum, mesh).values();

    // Radial levels keep the solved edge jumps: where u sits on a plateau of
    // height P the jumps are far below ulp(P) and differences of node values
    // no longer resolve them.
    std::vector<double> d;
    ScalarField u(mesh, std::vector<double>(node_count(*mesh), 0.0));
    std::vector<LevelRecord> levels;
    bool converged = true;
    for (double eps : config.schedule()) {
        LevelRecord rec{eps, 0, 0.0, 0.0, false};
        if (radial) {
            d = march(*sys, eps);
            u = ScalarField(mesh, accumulate_jumps(d));
            rec.iterations = 1;
            rec.residual = radial_residual(*sys, sys->mesh().dimension(), d, eps);
            rec.converged = rec.residual <= config.tol_res;
        } else {
            for (int k = 0; k < config.max_iterations; ++k) {
                ScalarField next = grid_picard(u, f, eps, config.linear_tol);
                double change = 0.0;
                for (std::size_t i = 0; i < next.size(); ++i)
                    change = std::max(change, std::abs(next[i] - u[i]) / (1.0 + std::abs(next[i])));
                u = std::move(next);
                rec.iterations = k + 1;
                rec.update = change;
                if (change < config.tol_fp) {
                    rec.converged = true;
                    break;
                }
            }
            rec.residual = grid_residual(u, f, eps);
        }
        converged = converged && rec.converged;
        levels.push_back(rec);
    }

    const double eps = levels.back().eps;
    const double min_value = u.min();
    if (config.clip_negative && min_value < 0.0) {
        u = u.map([](double v) { return std::max(v, 0.0); });
        if (radial)
            d = jumps(u.values());
    }
    VectorField z = radial ? VectorField(mesh, edge_field(*sys, d, eps)) : extract_vector_field(u, eps);
    const double residual = radial ? radial_residual(*sys, sys->mesh().dimension(), d, eps) : grid_residual(u, f, eps);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return SolutionReport{std::move(u), std::move(z), std::move(levels), eps, residual, converged,
                          min_value,    min_value < -config.tol_res,      wall};
}

VectorField extract_vector_field(const ScalarField& u, double eps)
{
    check_eps(eps);
    std::vector<double> z;
    if (const auto* rm = std::get_if<RadialMesh>(&u.mesh())) {
        z.resize(rm->cells());
        for (std::size_t i = 0; i < rm->cells(); ++i)
            z[i] = edge_z(u[i + 1] - u[i], rm->spacing(i), eps);
    } else {
        const auto& grid = std::get<CartesianGrid>(u.mesh());
        const GridGeometry geo{grid, u.values()};
        for (const auto& e : grid.edges()) {
            double delta, w;
            geo.edge(e, eps, delta, w);
            z.push_back(delta / grid.spacing() / w);
        }
    }
    return VectorField(u.mesh_ptr(), std::move(z));
}

double nonlinear_residual(const ScalarField& u, const DatumSpec& datum, double eps)
{
    check_eps(eps);
    if (std::holds_alternative<RadialMesh>(u.mesh()))
        return radial_residual(u, datum, eps);
    return grid_residual(u, evaluate_datum(datum, u.mesh_ptr()).values(), eps);
}

double nonlinear_residual(const ScalarField& u, const ScalarField& f, double eps)
{
    return nonlinear_residual(u, Tabulated{f.values()}, eps);
}

}  // namespace onelap
