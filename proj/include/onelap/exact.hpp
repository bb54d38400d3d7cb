#pragma once

// Closed-form radial solutions for the datum lambda |x|^-q on B_R(0).

#include <optional>

#include "onelap/core.hpp"

namespace onelap {

enum class Regime { Singular, Mild, Trivial };

const char* regime_name(Regime regime);

struct ExactRadialSolution {
    Regime regime;
    int N;
    double R;
    double lambda;
    double q;
    double threshold;       // rho_lambda (q > 1) or r_lambda (q < 1)
    double plateau_value;   // central value in the mild case, 0 otherwise
    double field_constant;  // C = rho^(N-1) (1-q)/(N-q), singular case only
    bool plateau_free;      // singular case with rho >= R
};

/// q ranges over (0,1) and (1,N]; q = N yields u but no calibration field.
double threshold_radius(int N, double lambda, double q);

ExactRadialSolution build_exact(int N, double R, double lambda, double q);

/// nullopt marks the singular case at r = 0, where u is unbounded.
std::optional<double> exact_u(const ExactRadialSolution& sol, double r);

/// Radial derivative h'(r) for r in (0, R].
double exact_du(const ExactRadialSolution& sol, double r);

/// Signed radial component of the calibration field, r in (0, R]; q < N.
double exact_z(const ExactRadialSolution& sol, double r);

/// xi(r) with z = xi(r) x on the region where u is flat.
double exact_xi(const ExactRadialSolution& sol, double r);

/// Samples u at the nodes; the unbounded origin value is replaced by u(r_1).
ScalarField sample_exact(const ExactRadialSolution& sol, const MeshPtr& mesh);

/// z at the edge midpoints of a radial mesh.
VectorField sample_exact_z(const ExactRadialSolution& sol, const MeshPtr& mesh);

struct ExactResidual {
    bool empty = true;
    double core = 0.0;     // max relative residual of (N-1)/r - h' - lambda r^-q
    double plateau = 0.0;  // max relative residual of -(N xi + r xi') - lambda r^-q
    std::size_t core_nodes = 0;
    std::size_t plateau_nodes = 0;
};

/// Residuals are scaled by max(1, sum of term magnitudes).
ExactResidual exact_residual(const ExactRadialSolution& sol, const RadialMesh& mesh);

}  // namespace onelap
