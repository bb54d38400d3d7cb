#pragma once

// Experiments confronting solver output and the closed forms with the
// comparison principle, summability results and integral identities.

#include <cstdint>
#include <string>
#include <vector>

#include "onelap/core.hpp"
#include "onelap/exact.hpp"
#include "onelap/solver.hpp"

namespace onelap {

struct ExponentLadder {
    int N;
    double p;
    double n_prime;
    double p_prime;
    std::vector<double> s;  // s_0..s_j
    double limit;           // Np/(N-p)
};

ExponentLadder exponent_ladder(int N, double p, int j);

enum class PairFamily { PowerLawLambda, Bump, Mixed };

struct ComparisonPair {
    std::size_t index;
    DatumSpec f1;
    DatumSpec f2;
    double violation;  // max over nodes of u1 - u2
    double tolerance;
    bool pass;
    bool converged;
};

struct ComparisonReport {
    std::vector<ComparisonPair> pairs;
    double worst_violation;
    bool pass;
};

/// Nested data pairs f1 <= f2 drawn from `family`, solved on `mesh`.
/// Tolerance per pair: (h + eps) * 10 * max(1, ||f2||_L1).
ComparisonReport comparison_suite(std::uint64_t seed, std::size_t count, PairFamily family, const MeshPtr& mesh,
                                  const SolverConfig& config, std::size_t workers = 1);

/// Oracle-only pairs with lambda1 < lambda2: max of u(lambda1) - u(lambda2)
/// over sampled radii.
double oracle_comparison(std::uint64_t seed, std::size_t count, int N, double R, std::size_t samples = 200);

struct PlateauProbe {
    double detected;
    double threshold;
    double max_plateau;  // max |u| on r >= threshold
    double tolerance;
    bool pass;
};

/// Detected radius: the smallest node beyond which |u| <= tol. PASS iff it lies
/// within 5 h + sqrt(eps) R of the threshold, h the largest spacing.
PlateauProbe plateau_probe(const ScalarField& u, const ExactRadialSolution& exact, double tol, double eps);

struct NormRow {
    double s;
    std::vector<double> norms;   // one per cutoff
    std::vector<double> ratios;  // successive increment ratios
    bool grows;
};

struct RegularityReport {
    int N;
    double lambda;
    double q;
    std::vector<int> levels;
    std::vector<double> alpha_levels;  // fitted exponent per mesh level
    double alpha;                      // finest level
    double predicted_alpha;            // q - 1
    double critical;                   // N/(q-1)
    std::vector<double> cutoffs;
    std::vector<NormRow> table;
};

/// Fits u ~ r^-alpha on the inner decade of graded (g = 3) meshes and tabulates
/// L^s norms over B_R minus B_c for cutoffs c = R 10^-k, k = 2..5.
RegularityReport regularity_probe(int N, double lambda, double q, double R, const std::vector<int>& levels,
                                  const std::vector<double>& s_list);

struct PowerIdentity {
    double lhs;
    double rhs;
    double gap;  // |lhs - rhs| / rhs
};

/// int |D u^m| + int u^m |Du| against int u^m f on the singular closed form.
PowerIdentity power_identity_check(const ExactRadialSolution& exact, double m, const RadialMesh& mesh);

struct PowerBound {
    double lhs;
    double rhs;
    bool pass;  // lhs <= 1.01 rhs
};

/// int |D u^(m+1)| against (m+1) ||u^m||_p' ||f||_p on the closed form.
PowerBound gradient_power_bound_check(const ExactRadialSolution& exact, double m, double p, const RadialMesh& mesh);

/// Same quantities from node fields on a radial mesh (midpoint rule,
/// difference quotients).
PowerBound gradient_power_bound_check(const ScalarField& u, const ScalarField& f, double m, double p);

struct TransformedOptions {
    double r_min = 0.0;            // nodes with r < r_min are skipped
    double band_lo = 0.0;          // nodes in [band_lo, band_hi] are skipped
    double band_hi = -1.0;
};

struct TransformedResidual {
    double l2;
    double max;
    std::size_t nodes;
};

/// Residual of -div(e^-u z) - e^-u f at interior nodes of a radial mesh, with z
/// given per edge and e^-u on an edge taken from the mean of its end values.
TransformedResidual transformed_equation_check(const ScalarField& u, const VectorField& z, const ScalarField& f,
                                               const TransformedOptions& options = {});

}  // namespace onelap
