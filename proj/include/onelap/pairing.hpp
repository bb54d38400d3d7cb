#pragma once

// Discrete total variation, coarea, pairing, theta densities and Green's
// identity on a weighted edge graph. Every edge difference is taken
// head minus tail; the 1D and 2D cases are both built on EdgeGraph.

#include <cstddef>
#include <utility>
#include <vector>

#include "onelap/core.hpp"

namespace onelap {

struct EdgeGraph {
    std::size_t nodes = 0;
    std::vector<std::size_t> tail;
    std::vector<std::size_t> head;
    std::vector<double> weight;

    std::size_t edges() const { return tail.size(); }
};

/// Path 0-1-...-(n-1) with the given per-edge weights (n-1 of them).
EdgeGraph path_graph(const std::vector<double>& weights);
EdgeGraph path_graph(std::size_t nodes);

/// Path graph with edge weights midpoint^(N-1).
EdgeGraph radial_graph(const RadialMesh& mesh);

/// Full nx-by-ny lattice with unit weights, horizontal edges first.
EdgeGraph lattice_graph(std::size_t nx, std::size_t ny);

/// Edge values plus an outward boundary flux per node (zero off the boundary).
struct EdgeVectorField {
    std::vector<double> z;
    std::vector<double> boundary_flux;

    double sup_norm() const;
};

/// 1D field on a path graph. b_left and b_right are the field values at the
/// two ends, so the outward fluxes are -b_left and b_right.
EdgeVectorField path_field(std::vector<double> z, double b_left, double b_right);

struct IdentityCheck {
    double lhs;
    double rhs;
    double scale;  // sum of the magnitudes of the summed terms
    double relative_gap() const;
};

struct GreenCheck {
    double interior;
    double pairing;
    double boundary;
    double scale;
    double relative_defect() const;
};

/// Nondecreasing piecewise-linear map given by breakpoints, constant beyond
/// the first and last breakpoint.
class PiecewiseLinearMap {
public:
    PiecewiseLinearMap(std::vector<double> x, std::vector<double> y);

    static PiecewiseLinearMap identity(double lo, double hi);
    static PiecewiseLinearMap truncation(double k);

    double operator()(double s) const;
    const std::vector<double>& xs() const { return x_; }
    const std::vector<double>& ys() const { return y_; }

private:
    std::vector<double> x_, y_;
};

double discrete_tv(const EdgeGraph& g, const std::vector<double>& u);

IdentityCheck coarea_check(const EdgeGraph& g, const std::vector<double>& u);

double pairing_sum(const EdgeGraph& g, const std::vector<double>& z, const std::vector<double>& u);

IdentityCheck slicing_check(const EdgeGraph& g, const std::vector<double>& z,
                            const std::vector<double>& u);

/// (edge index, z sign(Du)) for every edge with Du != 0.
std::vector<std::pair<std::size_t, double>> theta_density(const EdgeGraph& g,
                                                          const std::vector<double>& z,
                                                          const std::vector<double>& u);

/// Throws PreconditionError if phi is not nondecreasing.
double theta_invariance_check(const EdgeGraph& g, const std::vector<double>& z,
                              const std::vector<double>& u, const PiecewiseLinearMap& phi);

/// Negative adjoint of the weighted edge difference plus boundary flux.
std::vector<double> discrete_divergence(const EdgeGraph& g, const EdgeVectorField& z);

GreenCheck green_check(const EdgeGraph& g, const EdgeVectorField& z, const std::vector<double>& w);

/// Edgewise |(w* z) Du - w* (z Du)| with w* the mean of the two end values.
double product_rule_check(const EdgeGraph& g, const std::vector<double>& z,
                          const std::vector<double>& u, const std::vector<double>& w);

}  // namespace onelap
