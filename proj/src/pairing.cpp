#include "onelap/pairing.hpp"

#include <algorithm>
#include <cmath>

namespace onelap {

namespace {

// Neumaier compensated sum.
struct Accumulator {
    double sum = 0.0;
    double carry = 0.0;
    void add(double v)
    {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            carry += (sum - t) + v;
        else
            carry += (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + carry; }
};

void check_nodes(const EdgeGraph& g, const std::vector<double>& u)
{
    if (u.size() != g.nodes)
        throw DataError("pairing: node field size does not match the graph");
}

void check_edges(const EdgeGraph& g, const std::vector<double>& z)
{
    if (z.size() != g.edges())
        throw DataError("pairing: edge field size does not match the graph");
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Distinct sorted values and the rank of every node among them.
struct Levels {
    std::vector<double> values;
    std::vector<std::size_t> rank;
};

Levels levels_of(const std::vector<double>& u)
{
    Levels lv;
    lv.values = u;
    std::sort(lv.values.begin(), lv.values.end());
    lv.values.erase(std::unique(lv.values.begin(), lv.values.end()), lv.values.end());
    lv.rank.resize(u.size());
    for (std::size_t k = 0; k < u.size(); ++k)
        lv.rank[k] = std::size_t(std::lower_bound(lv.values.begin(), lv.values.end(), u[k]) - lv.values.begin());
    return lv;
}

// Sum over levels t in (v_k, v_{k+1}) of dt times the per-level sum, where
// each edge contributes `amount` on the level range [from, to).
template <typename Contribution>
double level_sweep(const EdgeGraph& g, const Levels& lv, Contribution contribution)
{
    const std::size_t m = lv.values.size();
    if (m < 2)
        return 0.0;
    std::vector<Accumulator> diff(m);
    for (std::size_t e = 0; e < g.edges(); ++e) {
        std::size_t from = 0, to = 0;
        double amount = 0.0;
        if (!contribution(e, from, to, amount))
            continue;
        diff[from].add(amount);
        diff[to].add(-amount);
    }
    Accumulator running, total;
    for (std::size_t k = 0; k + 1 < m; ++k) {
        running.add(diff[k].sum);
        running.add(diff[k].carry);
        total.add((lv.values[k + 1] - lv.values[k]) * running.value());
    }
    return total.value();
}

double ratio(double defect, double scale)
{
    if (defect == 0.0)
        return 0.0;
    return scale > 0.0 ? defect / scale : INFINITY;
}

}  // namespace

EdgeGraph path_graph(const std::vector<double>& weights)
{
    EdgeGraph g;
    g.nodes = weights.size() + 1;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!(weights[i] > 0.0))
            throw DataError("path_graph: weights must be positive");
        g.tail.push_back(i);
        g.head.push_back(i + 1);
    }
    g.weight = weights;
    return g;
}

EdgeGraph path_graph(std::size_t nodes)
{
    if (nodes < 1)
        throw DataError("path_graph: at least one node required");
    return path_graph(std::vector<double>(nodes - 1, 1.0));
}

EdgeGraph radial_graph(const RadialMesh& mesh)
{
    std::vector<double> w(mesh.cells());
    for (std::size_t i = 0; i < w.size(); ++i)
        w[i] = std::pow(mesh.midpoint(i), mesh.dimension() - 1);
    return path_graph(w);
}

EdgeGraph lattice_graph(std::size_t nx, std::size_t ny)
{
    EdgeGraph g;
    g.nodes = nx * ny;
    for (std::size_t k = 0; k < g.nodes; ++k)
        if (k % nx + 1 < nx) {
            g.tail.push_back(k);
            g.head.push_back(k + 1);
        }
    for (std::size_t k = 0; k + nx < g.nodes; ++k) {
        g.tail.push_back(k);
        g.head.push_back(k + nx);
    }
    g.weight.assign(g.tail.size(), 1.0);
    return g;
}

double EdgeVectorField::sup_norm() const
{
    double s = 0.0;
    for (double v : z)
        s = std::max(s, std::abs(v));
    return s;
}

EdgeVectorField path_field(std::vector<double> z, double b_left, double b_right)
{
    EdgeVectorField f;
    f.boundary_flux.assign(z.size() + 1, 0.0);
    f.boundary_flux.front() -= b_left;
    f.boundary_flux.back() += b_right;
    f.z = std::move(z);
    return f;
}

double IdentityCheck::relative_gap() const { return ratio(std::abs(lhs - rhs), scale); }

double GreenCheck::relative_defect() const
{
    return ratio(std::abs(interior + pairing - boundary), scale);
}

PiecewiseLinearMap::PiecewiseLinearMap(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y))
{
    if (x_.empty() || x_.size() != y_.size())
        throw DataError("piecewise-linear map: breakpoint tables differ in length");
    for (std::size_t i = 0; i + 1 < x_.size(); ++i) {
        if (!(x_[i + 1] > x_[i]))
            throw DataError("piecewise-linear map: breakpoints must increase");
        if (y_[i + 1] < y_[i])
            throw PreconditionError("piecewise-linear map: values must be nondecreasing");
    }
}

PiecewiseLinearMap PiecewiseLinearMap::identity(double lo, double hi) { return {{lo, hi}, {lo, hi}}; }

PiecewiseLinearMap PiecewiseLinearMap::truncation(double k)
{
    if (!(k > 0.0))
        throw DomainError("truncation: level must be positive");
    return {{-k, k}, {-k, k}};
}

double PiecewiseLinearMap::operator()(double s) const
{
    if (s <= x_.front())
        return y_.front();
    if (s >= x_.back())
        return y_.back();
    const std::size_t i = std::size_t(std::upper_bound(x_.begin(), x_.end(), s) - x_.begin()) - 1;
    const double t = (s - x_[i]) / (x_[i + 1] - x_[i]);
    return std::clamp(y_[i] + t * (y_[i + 1] - y_[i]), y_[i], y_[i + 1]);
}

double discrete_tv(const EdgeGraph& g, const std::vector<double>& u)
{
    check_nodes(g, u);
    Accumulator acc;
    for (std::size_t e = 0; e < g.edges(); ++e)
        acc.add(g.weight[e] * std::abs(u[g.head[e]] - u[g.tail[e]]));
    return acc.value();
}

IdentityCheck coarea_check(const EdgeGraph& g, const std::vector<double>& u)
{
    const double lhs = discrete_tv(g, u);
    const Levels lv = levels_of(u);
    const double rhs = level_sweep(g, lv, [&](std::size_t e, std::size_t& from, std::size_t& to, double& amount) {
        const std::size_t a = lv.rank[g.tail[e]], b = lv.rank[g.head[e]];
        if (a == b)
            return false;
        from = std::min(a, b);
        to = std::max(a, b);
        amount = g.weight[e];
        return true;
    });
    return {lhs, rhs, lhs};
}

double pairing_sum(const EdgeGraph& g, const std::vector<double>& z, const std::vector<double>& u)
{
    check_nodes(g, u);
    check_edges(g, z);
    Accumulator acc;
    for (std::size_t e = 0; e < g.edges(); ++e)
        acc.add(g.weight[e] * z[e] * (u[g.head[e]] - u[g.tail[e]]));
    return acc.value();
}

IdentityCheck slicing_check(const EdgeGraph& g, const std::vector<double>& z, const std::vector<double>& u)
{
    const double lhs = pairing_sum(g, z, u);
    double scale = 0.0;
    for (std::size_t e = 0; e < g.edges(); ++e)
        scale += g.weight[e] * std::abs(z[e] * (u[g.head[e]] - u[g.tail[e]]));
    const Levels lv = levels_of(u);
    const double rhs = level_sweep(g, lv, [&](std::size_t e, std::size_t& from, std::size_t& to, double& amount) {
        const std::size_t a = lv.rank[g.tail[e]], b = lv.rank[g.head[e]];
        if (a == b || z[e] == 0.0)
            return false;
        from = std::min(a, b);
        to = std::max(a, b);
        amount = (b > a ? 1.0 : -1.0) * g.weight[e] * z[e];
        return true;
    });
    return {lhs, rhs, scale};
}

std::vector<std::pair<std::size_t, double>> theta_density(const EdgeGraph& g, const std::vector<double>& z,
                                                          const std::vector<double>& u)
{
    check_nodes(g, u);
    check_edges(g, z);
    std::vector<std::pair<std::size_t, double>> out;
    for (std::size_t e = 0; e < g.edges(); ++e) {
        const double du = u[g.head[e]] - u[g.tail[e]];
        if (du != 0.0)
            out.emplace_back(e, z[e] * sign(du));
    }
    return out;
}

double theta_invariance_check(const EdgeGraph& g, const std::vector<double>& z, const std::vector<double>& u,
                              const PiecewiseLinearMap& phi)
{
    check_nodes(g, u);
    check_edges(g, z);
    std::vector<double> composed(u.size());
    for (std::size_t k = 0; k < u.size(); ++k)
        composed[k] = phi(u[k]);
    double dev = 0.0;
    for (std::size_t e = 0; e < g.edges(); ++e) {
        const double du = u[g.head[e]] - u[g.tail[e]];
        const double dphi = composed[g.head[e]] - composed[g.tail[e]];
        if (du == 0.0 || dphi == 0.0)
            continue;
        dev = std::max(dev, std::abs(z[e] * sign(dphi) - z[e] * sign(du)));
    }
    return dev;
}

std::vector<double> discrete_divergence(const EdgeGraph& g, const EdgeVectorField& z)
{
    check_edges(g, z.z);
    if (z.boundary_flux.size() != g.nodes)
        throw DataError("pairing: boundary flux size does not match the graph");
    std::vector<double> div = z.boundary_flux;
    for (std::size_t e = 0; e < g.edges(); ++e) {
        const double flux = g.weight[e] * z.z[e];
        div[g.tail[e]] += flux;
        div[g.head[e]] -= flux;
    }
    return div;
}

GreenCheck green_check(const EdgeGraph& g, const EdgeVectorField& z, const std::vector<double>& w)
{
    check_nodes(g, w);
    const std::vector<double> div = discrete_divergence(g, z);
    Accumulator interior, boundary;
    double scale = 0.0;
    for (std::size_t k = 0; k < g.nodes; ++k) {
        interior.add(w[k] * div[k]);
        boundary.add(w[k] * z.boundary_flux[k]);
        scale += std::abs(w[k] * div[k]) + std::abs(w[k] * z.boundary_flux[k]);
    }
    const double pairing = pairing_sum(g, z.z, w);
    for (std::size_t e = 0; e < g.edges(); ++e)
        scale += g.weight[e] * std::abs(z.z[e] * (w[g.head[e]] - w[g.tail[e]]));
    return {interior.value(), pairing, boundary.value(), scale};
}

double product_rule_check(const EdgeGraph& g, const std::vector<double>& z, const std::vector<double>& u,
                          const std::vector<double>& w)
{
    check_nodes(g, u);
    check_nodes(g, w);
    check_edges(g, z);
    double dev = 0.0;
    for (std::size_t e = 0; e < g.edges(); ++e) {
        const double wstar = 0.5 * (w[g.tail[e]] + w[g.head[e]]);
        const double du = u[g.head[e]] - u[g.tail[e]];
        dev = std::max(dev, std::abs((wstar * z[e]) * du - wstar * (z[e] * du)));
    }
    return dev;
}

}  // namespace onelap
