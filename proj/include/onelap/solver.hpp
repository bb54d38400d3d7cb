#pragma once

// Regularized solver for -div(Du/|Du|) + |Du| = f with u = 0 on the boundary.
//
// With w = sqrt(|grad u|^2 + eps^2) the regularized equation is
//     -div(grad u / w) + |grad u|^2 / w = f,
// which is equivalent to -div(e^-u grad u / w) = e^-u f. Both the radial and
// the grid discretization are written in this weighted form.

#include <vector>

#include "onelap/core.hpp"

namespace onelap {

struct SolverConfig {
    double eps_start = 1e-2;
    double eps_min = 1e-6;
    double shrink = 0.25;
    double tol_fp = 1e-10;
    double tol_res = 1e-5;
    int max_iterations = 500;
    double linear_tol = 1e-12;
    bool clip_negative = false;

    /// Default schedule scaled by the domain radius.
    static SolverConfig for_radius(double R);
    void validate() const;
    std::vector<double> schedule() const;
};

struct LevelRecord {
    double eps;
    int iterations;
    double update;    // last relative update (0 for the direct radial sweep)
    double residual;  // nonlinear residual at the end of the level
    bool converged;
};

struct SolutionReport {
    ScalarField u;
    VectorField z;
    std::vector<LevelRecord> levels;
    double eps;
    double residual;
    bool converged;
    double min_value;  // before any clipping
    bool undershoot;   // min_value < -tol_res
    double wall_time;  // seconds
};

/// One lagged-diffusivity step. The datum is integrated exactly (PowerLaw,
/// Constant) or by linear interpolation of node values (Tabulated).
ScalarField picard_step(const ScalarField& uk, const DatumSpec& datum, double eps);
ScalarField picard_step(const ScalarField& uk, const ScalarField& f, double eps);

SolutionReport solve(const MeshPtr& mesh, const DatumSpec& datum, const SolverConfig& config);

/// Radial mesh only: exact solution of the discrete eps-problem by an
/// outward sweep over the edge jumps.
ScalarField solve_level(const MeshPtr& mesh, const DatumSpec& datum, double eps);

VectorField extract_vector_field(const ScalarField& u, double eps);

/// Weighted l2 residual from differences of node values. On a plateau of
/// height P jumps below about ulp(P) are not resolved, so this can exceed the
/// residual solve() reports from the solved jumps.
double nonlinear_residual(const ScalarField& u, const DatumSpec& datum, double eps);
double nonlinear_residual(const ScalarField& u, const ScalarField& f, double eps);

}  // namespace onelap
