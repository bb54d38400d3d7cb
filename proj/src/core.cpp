#include "onelap/core.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numbers>
#include <queue>
#include <string>
#include <thread>

namespace onelap {

double sphere_area(int N)
{
    const double half = 0.5 * N;
    return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

RadialMesh RadialMesh::build(int N, double R, int n, double g)
{
    if (N < 2)
        throw ConfigError("radial mesh: dimension must be >= 2");
    if (!(R > 0.0) || !std::isfinite(R))
        throw ConfigError("radial mesh: radius must be positive");
    if (n < 4)
        throw ConfigError("radial mesh: at least 4 cells required");
    if (!(g >= 1.0) || !std::isfinite(g))
        throw ConfigError("radial mesh: grading exponent must be >= 1");

    RadialMesh m;
    m.N_ = N;
    m.R_ = R;
    m.g_ = g;
    m.r_.resize(std::size_t(n) + 1);
    for (int i = 0; i <= n; ++i)
        m.r_[i] = R * std::pow(double(i) / n, g);
    m.r_[0] = 0.0;
    m.r_[n] = R;
    for (int i = 0; i < n; ++i)
        if (!(m.r_[i + 1] > m.r_[i]))
            throw ConfigError("radial mesh: nodes not strictly increasing (n too large for g)");
    return m;
}

double RadialMesh::max_spacing() const
{
    double h = 0.0;
    for (std::size_t i = 0; i + 1 < r_.size(); ++i)
        h = std::max(h, spacing(i));
    return h;
}

CartesianGrid::CartesianGrid(std::size_t nx, std::size_t ny, double h, double x0, double y0,
                             std::vector<std::uint8_t> mask)
    : nx_(nx), ny_(ny), h_(h), x0_(x0), y0_(y0), mask_(std::move(mask))
{
    if (nx < 3 || ny < 3)
        throw ConfigError("grid: at least 3x3 cells required");
    if (!(h > 0.0))
        throw ConfigError("grid: spacing must be positive");
    if (mask_.size() != nx * ny)
        throw ConfigError("grid: mask size does not match nx*ny");

    std::size_t first = size();
    for (std::size_t k = 0; k < size(); ++k) {
        if (!mask_[k])
            continue;
        const std::size_t i = column(k), j = row(k);
        if (i == 0 || j == 0 || i + 1 == nx_ || j + 1 == ny_)
            throw ConfigError("grid: interior cell on the array border has undefined neighbours");
        if (first == size())
            first = k;
    }
    if (first == size())
        throw ConfigError("grid: empty mask");

    std::vector<std::uint8_t> seen(size(), 0);
    std::queue<std::size_t> todo;
    todo.push(first);
    seen[first] = 1;
    std::size_t reached = 0;
    while (!todo.empty()) {
        const std::size_t k = todo.front();
        todo.pop();
        ++reached;
        for (std::size_t nb : {k - 1, k + 1, k - nx_, k + nx_})
            if (mask_[nb] && !seen[nb]) {
                seen[nb] = 1;
                todo.push(nb);
            }
    }
    if (reached != interior_count())
        throw ConfigError("grid: mask is not connected");

    for (std::size_t k = 0; k < size(); ++k)
        if (column(k) + 1 < nx_ && (mask_[k] || mask_[k + 1]))
            edges_.push_back({k, k + 1, true});
    for (std::size_t k = 0; k + nx_ < size(); ++k)
        if (mask_[k] || mask_[k + nx_])
            edges_.push_back({k, k + nx_, false});
}

CartesianGrid CartesianGrid::disk(double R, std::size_t n)
{
    if (!(R > 0.0))
        throw ConfigError("disk: radius must be positive");
    if (n < 4 || n % 2 != 0)
        throw ConfigError("disk: cell count across the diameter must be even and >= 4");
    const double h = 2.0 * R / double(n);
    const std::size_t m = n + 2;
    const double x0 = -R - h;
    std::vector<std::uint8_t> mask(m * m, 0);
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t i = 0; i < m; ++i) {
            const double x = x0 + (double(i) + 0.5) * h;
            const double y = x0 + (double(j) + 0.5) * h;
            mask[j * m + i] = (x * x + y * y < R * R) ? 1 : 0;
        }
    return CartesianGrid(m, m, h, x0, x0, std::move(mask));
}

double CartesianGrid::radius_at(std::size_t k) const { return std::hypot(x(k), y(k)); }

std::size_t CartesianGrid::interior_count() const
{
    return std::size_t(std::count_if(mask_.begin(), mask_.end(), [](auto v) { return v != 0; }));
}

MeshPtr share(RadialMesh mesh) { return std::make_shared<const Mesh>(std::move(mesh)); }
MeshPtr share(CartesianGrid grid) { return std::make_shared<const Mesh>(std::move(grid)); }

std::size_t node_count(const Mesh& mesh)
{
    return std::visit([](const auto& m) { return m.size(); }, mesh);
}

std::size_t edge_count(const Mesh& mesh)
{
    if (const auto* r = std::get_if<RadialMesh>(&mesh))
        return r->cells();
    return std::get<CartesianGrid>(mesh).edges().size();
}

ScalarField::ScalarField(MeshPtr mesh, std::vector<double> values)
    : mesh_(std::move(mesh)), values_(std::move(values))
{
    if (!mesh_)
        throw DataError("scalar field: missing mesh");
    if (values_.size() != node_count(*mesh_))
        throw DataError("scalar field: value count does not match the mesh");
    for (double v : values_)
        if (!std::isfinite(v))
            throw DataError("scalar field: non-finite value");
}

ScalarField ScalarField::map(const std::function<double(double)>& fn) const
{
    std::vector<double> out(values_.size());
    std::transform(values_.begin(), values_.end(), out.begin(), fn);
    return ScalarField(mesh_, std::move(out));
}

double ScalarField::max_abs() const
{
    double m = 0.0;
    for (double v : values_)
        m = std::max(m, std::abs(v));
    return m;
}

double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }

VectorField::VectorField(MeshPtr mesh, std::vector<double> values)
    : mesh_(std::move(mesh)), values_(std::move(values))
{
    if (!mesh_)
        throw DataError("vector field: missing mesh");
    if (values_.size() != edge_count(*mesh_))
        throw DataError("vector field: value count does not match the edge count");
    for (double v : values_) {
        if (!std::isfinite(v))
            throw DataError("vector field: non-finite value");
        sup_ = std::max(sup_, std::abs(v));
    }
}

void validate_datum(const DatumSpec& spec, int N)
{
    if (const auto* p = std::get_if<PowerLaw>(&spec)) {
        if (!(p->lambda > 0.0) || !std::isfinite(p->lambda))
            throw ConfigError("power-law datum: lambda must be positive");
        if (!(p->q > 0.0) || !(p->q < N))
            throw ConfigError("power-law datum: q must lie in (0, N)");
    } else if (const auto* c = std::get_if<Constant>(&spec)) {
        if (!(c->c >= 0.0) || !std::isfinite(c->c))
            throw DataError("constant datum: value must be nonnegative");
    } else {
        for (double v : std::get<Tabulated>(spec).values)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw DataError("tabulated datum: negative or non-finite entry");
    }
}

double datum_value(const DatumSpec& spec, double r)
{
    if (const auto* p = std::get_if<PowerLaw>(&spec))
        return p->lambda * std::pow(r, -p->q);
    if (const auto* c = std::get_if<Constant>(&spec))
        return c->c;
    throw PreconditionError("datum_value: tabulated data has no pointwise formula");
}

ScalarField evaluate_datum(const DatumSpec& spec, const MeshPtr& mesh)
{
    const int N = std::holds_alternative<RadialMesh>(*mesh) ? std::get<RadialMesh>(*mesh).dimension() : 2;
    validate_datum(spec, N);
    const std::size_t count = node_count(*mesh);

    if (const auto* t = std::get_if<Tabulated>(&spec)) {
        if (t->values.size() != count)
            throw DataError("tabulated datum: value count does not match the mesh");
        return ScalarField(mesh, t->values);
    }

    std::vector<double> out(count);
    if (const auto* rm = std::get_if<RadialMesh>(mesh.get())) {
        for (std::size_t i = 1; i < count; ++i)
            out[i] = datum_value(spec, rm->node(i));
        out[0] = out[1];
    } else {
        const auto& g = std::get<CartesianGrid>(*mesh);
        for (std::size_t k = 0; k < count; ++k)
            out[k] = g.inside(k) ? datum_value(spec, g.radius_at(k)) : 0.0;
    }
    return ScalarField(mesh, std::move(out));
}

double lp_norm(const ScalarField& u, double s)
{
    if (!(s >= 1.0))
        throw DomainError("lp_norm: exponent must be >= 1");
    const auto& v = u.values();
    double sum = 0.0;
    if (const auto* rm = std::get_if<RadialMesh>(&u.mesh())) {
        const int N = rm->dimension();
        for (std::size_t i = 0; i < rm->cells(); ++i) {
            const double mid = 0.5 * std::abs(v[i] + v[i + 1]);
            if (mid > 0.0)
                sum += std::pow(mid, s) * std::pow(rm->midpoint(i), N - 1) * rm->spacing(i);
        }
        sum *= sphere_area(N);
    } else {
        const auto& g = std::get<CartesianGrid>(u.mesh());
        for (std::size_t k = 0; k < g.size(); ++k)
            if (g.inside(k) && v[k] != 0.0)
                sum += std::pow(std::abs(v[k]), s);
        sum *= g.spacing() * g.spacing();
    }
    return std::pow(sum, 1.0 / s);
}

void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& body)
{
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_lock;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_lock);
                    if (!error)
                        error = std::current_exception();
                }
            }
        });
    for (auto& t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

std::size_t default_workers()
{
    if (const char* env = std::getenv("ONELAP_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0)
            return std::size_t(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace onelap
