#pragma once

// Meshes, fields, data and norms shared by the rest of the library.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace onelap {

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct DataError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};
struct UnsupportedExponentError : DomainError {
    using DomainError::DomainError;
};
struct PreconditionError : std::logic_error {
    using std::logic_error::logic_error;
};
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Area of the unit sphere in R^N.
double sphere_area(int N);

/// Radii r_i = R (i/n)^g on [0, R], to be read as a ball in R^N.
class RadialMesh {
public:
    static RadialMesh build(int N, double R, int n, double g);

    int dimension() const { return N_; }
    double radius() const { return R_; }
    double grading() const { return g_; }
    std::size_t cells() const { return r_.size() - 1; }
    std::size_t size() const { return r_.size(); }
    const std::vector<double>& nodes() const { return r_; }
    double node(std::size_t i) const { return r_[i]; }
    double spacing(std::size_t i) const { return r_[i + 1] - r_[i]; }
    double midpoint(std::size_t i) const { return 0.5 * (r_[i] + r_[i + 1]); }
    double max_spacing() const;

private:
    RadialMesh() = default;
    int N_ = 2;
    double R_ = 1.0;
    double g_ = 1.0;
    std::vector<double> r_;
};

struct GridEdge {
    std::size_t tail;  // cell index; head lies in +x or +y direction
    std::size_t head;
    bool horizontal;
};

/// Uniform cell-centred 2D grid with an interior mask. Cells outside the
/// mask carry the Dirichlet value 0.
class CartesianGrid {
public:
    CartesianGrid(std::size_t nx, std::size_t ny, double h, double x0, double y0,
                  std::vector<std::uint8_t> mask);

    /// Disk of radius R with n cells across the diameter and one ring of
    /// exterior padding cells. n must be even.
    static CartesianGrid disk(double R, std::size_t n);

    std::size_t nx() const { return nx_; }
    std::size_t ny() const { return ny_; }
    std::size_t size() const { return nx_ * ny_; }
    double spacing() const { return h_; }
    std::size_t index(std::size_t i, std::size_t j) const { return j * nx_ + i; }
    std::size_t column(std::size_t k) const { return k % nx_; }
    std::size_t row(std::size_t k) const { return k / nx_; }
    double x(std::size_t k) const { return x0_ + (double(column(k)) + 0.5) * h_; }
    double y(std::size_t k) const { return y0_ + (double(row(k)) + 0.5) * h_; }
    double radius_at(std::size_t k) const;
    bool inside(std::size_t k) const { return mask_[k] != 0; }
    const std::vector<std::uint8_t>& mask() const { return mask_; }
    std::size_t interior_count() const;
    double interior_area() const { return double(interior_count()) * h_ * h_; }

    /// Edges with at least one interior endpoint, horizontal edges first,
    /// each group ordered by tail index.
    const std::vector<GridEdge>& edges() const { return edges_; }

private:
    std::size_t nx_, ny_;
    double h_, x0_, y0_;
    std::vector<std::uint8_t> mask_;
    std::vector<GridEdge> edges_;
};

using Mesh = std::variant<RadialMesh, CartesianGrid>;
using MeshPtr = std::shared_ptr<const Mesh>;

MeshPtr share(RadialMesh mesh);
MeshPtr share(CartesianGrid grid);

std::size_t node_count(const Mesh& mesh);

/// One value per node (radial) or per cell (grid).
class ScalarField {
public:
    ScalarField(MeshPtr mesh, std::vector<double> values);

    const Mesh& mesh() const { return *mesh_; }
    const MeshPtr& mesh_ptr() const { return mesh_; }
    const std::vector<double>& values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    std::size_t size() const { return values_.size(); }

    ScalarField map(const std::function<double(double)>& fn) const;
    double max_abs() const;
    double min() const;

private:
    MeshPtr mesh_;
    std::vector<double> values_;
};

/// Radial: one signed radial component per cell (at edge midpoints).
/// Grid: one normal component per entry of CartesianGrid::edges().
class VectorField {
public:
    VectorField(MeshPtr mesh, std::vector<double> values);

    const Mesh& mesh() const { return *mesh_; }
    const std::vector<double>& values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    std::size_t size() const { return values_.size(); }
    double sup_norm() const { return sup_; }

private:
    MeshPtr mesh_;
    std::vector<double> values_;
    double sup_ = 0.0;
};

std::size_t edge_count(const Mesh& mesh);

struct PowerLaw {
    double lambda;
    double q;
};
struct Constant {
    double c;
};
struct Tabulated {
    std::vector<double> values;
};
using DatumSpec = std::variant<PowerLaw, Constant, Tabulated>;

/// Throws DataError / ConfigError when the datum is not admissible in R^N.
void validate_datum(const DatumSpec& spec, int N);

/// Pointwise value at radius r > 0 for PowerLaw and Constant.
double datum_value(const DatumSpec& spec, double r);

ScalarField evaluate_datum(const DatumSpec& spec, const MeshPtr& mesh);

inline double truncate(double s, double k) { return s > k ? k : (s < -k ? -k : s); }
inline double tail(double s, double k) { return s - truncate(s, k); }

double lp_norm(const ScalarField& u, double s);

/// Runs body(i) for i in [0, count) on up to `workers` threads.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& body);

/// Worker count from ONELAP_WORKERS, falling back to hardware concurrency.
std::size_t default_workers();

}  // namespace onelap
