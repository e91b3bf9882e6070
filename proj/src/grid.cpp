#include "sfhn/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <tuple>

#include "sfhn/errors.hpp"

namespace sfhn {

SpatialGrid::SpatialGrid(int dimension, std::array<std::size_t, 2> points, std::array<double, 2> extent)
    : dimension_(dimension), points_(points), extent_(extent) {
    for (int axis = 0; axis < dimension_; ++axis) {
        const auto a = static_cast<std::size_t>(axis);
        if (points_[a] < 3) {
            throw ConfigError("grid needs at least 3 interior points per axis");
        }
        if (!(extent_[a] > 0.0) || !std::isfinite(extent_[a])) {
            throw ConfigError("grid extent must be positive and finite");
        }
        spacing_[a] = extent_[a] / static_cast<double>(points_[a] + 1);
    }
    if (dimension_ == 1) {
        points_[1] = 1;
        extent_[1] = 1.0;
        spacing_[1] = 1.0;
    }
}

SpatialGrid SpatialGrid::line(std::size_t points, double length) {
    return SpatialGrid(1, {points, 1}, {length, 1.0});
}

SpatialGrid SpatialGrid::rectangle(std::size_t nx, std::size_t ny, double lx, double ly) {
    return SpatialGrid(2, {nx, ny}, {lx, ly});
}

ScalarField::ScalarField(const SpatialGrid& grid, double value)
    : grid_(grid), values_(grid.size(), value) {}

ScalarField::ScalarField(const SpatialGrid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
        throw ConfigError("field has " + std::to_string(values_.size()) + " values, grid has " +
                          std::to_string(grid_.size()) + " nodes");
    }
    require_finite("ScalarField construction");
}

ScalarField ScalarField::sample(const SpatialGrid& grid, const std::function<double(double, double)>& f) {
    ScalarField out(grid);
    for (std::size_t j = 0; j < grid.points(1); ++j) {
        const double y = grid.dimension() == 2 ? grid.coordinate(1, j) : 0.0;
        for (std::size_t i = 0; i < grid.points(0); ++i) {
            out[grid.index(i, j)] = f(grid.coordinate(0, i), y);
        }
    }
    out.require_finite("ScalarField::sample");
    return out;
}

ScalarField& ScalarField::operator+=(const ScalarField& other) {
    require_same_grid(grid_, other, "field addition");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& other) {
    require_same_grid(grid_, other, "field subtraction");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
    return *this;
}

ScalarField& ScalarField::operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
}

ScalarField& ScalarField::operator*=(const ScalarField& other) {
    require_same_grid(grid_, other, "field product");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] *= other.values_[i];
    return *this;
}

bool ScalarField::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void ScalarField::require_finite(const char* context) const {
    if (!all_finite()) {
        throw NumericError(std::string(context) + ": non-finite value in field");
    }
}

void require_same_grid(const SpatialGrid& grid, const ScalarField& field, const char* context) {
    if (!(field.grid() == grid)) {
        throw ConfigError(std::string(context) + ": grid mismatch");
    }
}

void apply_laplacian(const SpatialGrid& grid, std::span<const double> in, std::span<double> out) {
    const std::size_t nx = grid.points(0);
    const std::size_t ny = grid.points(1);
    const double ix2 = 1.0 / (grid.spacing(0) * grid.spacing(0));
    const double iy2 = grid.dimension() == 2 ? 1.0 / (grid.spacing(1) * grid.spacing(1)) : 0.0;
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            const std::size_t k = grid.index(i, j);
            const double c = in[k];
            const double w = i > 0 ? in[k - 1] : 0.0;
            const double e = i + 1 < nx ? in[k + 1] : 0.0;
            double acc = (w - 2.0 * c + e) * ix2;
            if (grid.dimension() == 2) {
                const double s = j > 0 ? in[k - nx] : 0.0;
                const double n = j + 1 < ny ? in[k + nx] : 0.0;
                acc += (s - 2.0 * c + n) * iy2;
            }
            out[k] = acc;
        }
    }
}

ScalarField discrete_laplacian(const ScalarField& field) {
    ScalarField out(field.grid());
    apply_laplacian(field.grid(), field.values(), out.values());
    out.require_finite("discrete_laplacian");
    return out;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// -Δ has constant tridiagonal stencil (-1, 2, -1)/h² in 1D.
void poisson_tridiagonal(const SpatialGrid& grid, std::span<const double> rhs, std::span<double> x) {
    const std::size_t n = grid.points(0);
    const double ih2 = 1.0 / (grid.spacing(0) * grid.spacing(0));
    std::vector<double> c(n), d(n);
    const double diag = 2.0 * ih2;
    const double off = -ih2;
    c[0] = off / diag;
    d[0] = rhs[0] / diag;
    for (std::size_t i = 1; i < n; ++i) {
        const double m = diag - off * c[i - 1];
        c[i] = off / m;
        d[i] = (rhs[i] - off * d[i - 1]) / m;
    }
    x[n - 1] = d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
}

void poisson_cg(const SpatialGrid& grid, std::span<const double> rhs, std::span<double> x) {
    constexpr double kRelTol = 1e-12;
    const std::size_t n = rhs.size();
    std::fill(x.begin(), x.end(), 0.0);
    const double bnorm = std::sqrt(dot(rhs, rhs));
    if (bnorm == 0.0) return;
    std::vector<double> r(rhs.begin(), rhs.end()), p(r), ap(n);
    double rr = dot(r, r);
    const std::size_t max_iters = 20 * n + 100;
    for (std::size_t it = 0; it < max_iters; ++it) {
        apply_laplacian(grid, p, ap);
        for (double& v : ap) v = -v;
        const double alpha = rr / dot(p, ap);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        const double rr_new = dot(r, r);
        if (std::sqrt(rr_new) <= kRelTol * bnorm) return;
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    }
    throw NumericError("poisson_solve: conjugate gradients did not converge", std::sqrt(rr) / bnorm);
}

}  // namespace

ScalarField poisson_solve(const ScalarField& rhs) {
    rhs.require_finite("poisson_solve rhs");
    const SpatialGrid& grid = rhs.grid();
    ScalarField x(grid);
    if (grid.dimension() == 1) {
        poisson_tridiagonal(grid, rhs.values(), x.values());
    } else {
        poisson_cg(grid, rhs.values(), x.values());
    }
    // Residual audit: -Δx = rhs to 1e-10 relative.
    ScalarField lap = discrete_laplacian(x);
    double res = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        res = std::max(res, std::abs(lap[i] + rhs[i]));
        scale = std::max(scale, std::abs(rhs[i]));
    }
    if (scale > 0.0 && res > 1e-10 * scale) {
        throw NumericError("poisson_solve: residual above tolerance", res / scale);
    }
    x.require_finite("poisson_solve");
    return x;
}

double inner_l2(const ScalarField& a, const ScalarField& b) {
    require_same_grid(a.grid(), b, "inner_l2");
    return dot(a.values(), b.values()) * a.grid().cell_volume();
}

double norm_l2(const ScalarField& field) { return std::sqrt(inner_l2(field, field)); }

double norm_linf(const ScalarField& field) {
    double m = 0.0;
    for (double v : field.values()) m = std::max(m, std::abs(v));
    return m;
}

double norm_hminus1(const ScalarField& field) {
    const ScalarField x = poisson_solve(field);
    return std::sqrt(std::max(0.0, inner_l2(x, field)));
}

double gradient_energy(const ScalarField& field) {
    const SpatialGrid& g = field.grid();
    const std::size_t nx = g.points(0);
    const std::size_t ny = g.points(1);
    auto at = [&](std::ptrdiff_t i, std::ptrdiff_t j) -> double {
        if (i < 0 || j < 0 || i >= static_cast<std::ptrdiff_t>(nx) || j >= static_cast<std::ptrdiff_t>(ny)) {
            return 0.0;
        }
        return field[g.index(static_cast<std::size_t>(i), static_cast<std::size_t>(j))];
    };
    double sum = 0.0;
    const double hx = g.spacing(0);
    const auto inx = static_cast<std::ptrdiff_t>(nx);
    const auto iny = static_cast<std::ptrdiff_t>(ny);
    // Forward differences over every cell edge, including the two boundary edges.
    for (std::ptrdiff_t j = 0; j < iny; ++j) {
        for (std::ptrdiff_t i = -1; i < inx; ++i) {
            const double d = (at(i + 1, j) - at(i, j)) / hx;
            sum += d * d;
        }
    }
    if (g.dimension() == 2) {
        const double hy = g.spacing(1);
        for (std::ptrdiff_t j = -1; j < iny; ++j) {
            for (std::ptrdiff_t i = 0; i < inx; ++i) {
                const double d = (at(i, j + 1) - at(i, j)) / hy;
                sum += d * d;
            }
        }
    }
    return sum * g.cell_volume();
}

namespace {

double sine_eigenvalue(std::size_t k, double h, double length) {
    const double theta = std::numbers::pi * static_cast<double>(k) * h / length;
    return 2.0 / (h * h) * (1.0 - std::cos(theta));
}

}  // namespace

std::vector<EigenPair> laplacian_eigenpairs(const SpatialGrid& grid, std::size_t count) {
    if (count > grid.size()) {
        throw ConfigError("laplacian_eigenpairs: requested " + std::to_string(count) +
                          " modes but grid has only " + std::to_string(grid.size()) + " nodes");
    }
    struct Candidate {
        double eigenvalue;
        std::size_t kx;
        std::size_t ky;
    };
    std::vector<Candidate> candidates;
    const std::size_t nx = grid.points(0);
    const std::size_t ny = grid.points(1);
    for (std::size_t ky = 1; ky <= ny; ++ky) {
        for (std::size_t kx = 1; kx <= nx; ++kx) {
            double lam = sine_eigenvalue(kx, grid.spacing(0), grid.extent(0));
            if (grid.dimension() == 2) lam += sine_eigenvalue(ky, grid.spacing(1), grid.extent(1));
            candidates.push_back({lam, kx, ky});
        }
    }
    std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        return std::tie(a.eigenvalue, a.kx, a.ky) < std::tie(b.eigenvalue, b.kx, b.ky);
    });

    std::vector<EigenPair> pairs;
    pairs.reserve(count);
    for (std::size_t m = 0; m < count; ++m) {
        const Candidate& c = candidates[m];
        const double lx = grid.extent(0);
        const double ly = grid.extent(1);
        const bool two_d = grid.dimension() == 2;
        ScalarField e = ScalarField::sample(grid, [&](double x, double y) {
            double v = std::sin(std::numbers::pi * static_cast<double>(c.kx) * x / lx);
            if (two_d) v *= std::sin(std::numbers::pi * static_cast<double>(c.ky) * y / ly);
            return v;
        });
        e *= 1.0 / norm_l2(e);
        pairs.push_back(EigenPair{m + 1, {c.kx, two_d ? c.ky : 1}, c.eigenvalue, std::move(e)});
    }
    return pairs;
}

}  // namespace sfhn
