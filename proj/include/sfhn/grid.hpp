#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace sfhn {

/// Uniform tensor grid on [0, Lx] (x [0, Ly]) with homogeneous Dirichlet
/// boundary. Only interior nodes are stored; boundary values are implicitly 0.
class SpatialGrid {
public:
    static SpatialGrid line(std::size_t points, double length = 1.0);
    static SpatialGrid rectangle(std::size_t nx, std::size_t ny, double lx = 1.0, double ly = 1.0);

    int dimension() const noexcept { return dimension_; }
    std::size_t points(int axis) const { return points_.at(static_cast<std::size_t>(axis)); }
    double extent(int axis) const { return extent_.at(static_cast<std::size_t>(axis)); }
    double spacing(int axis) const { return spacing_.at(static_cast<std::size_t>(axis)); }

    /// Total number of interior nodes.
    std::size_t size() const noexcept { return points_[0] * points_[1]; }

    /// Quadrature weight h^d of one node.
    double cell_volume() const noexcept { return spacing_[0] * spacing_[1]; }

    /// Physical coordinate of interior index i along `axis` (boundary sits at -1 and n).
    double coordinate(int axis, std::size_t i) const {
        return static_cast<double>(i + 1) * spacing(axis);
    }

    /// Linear index of node (i, j); x varies fastest.
    std::size_t index(std::size_t i, std::size_t j = 0) const noexcept { return i + points_[0] * j; }

    bool operator==(const SpatialGrid&) const = default;

private:
    SpatialGrid(int dimension, std::array<std::size_t, 2> points, std::array<double, 2> extent);

    int dimension_ = 1;
    std::array<std::size_t, 2> points_{3, 1};
    std::array<double, 2> extent_{1.0, 1.0};
    std::array<double, 2> spacing_{0.25, 1.0};
};

/// Real values on the interior nodes of a grid.
class ScalarField {
public:
    explicit ScalarField(const SpatialGrid& grid, double value = 0.0);
    ScalarField(const SpatialGrid& grid, std::vector<double> values);

    /// Samples f(x, y) at interior nodes (y = 0 in 1D).
    static ScalarField sample(const SpatialGrid& grid, const std::function<double(double, double)>& f);

    const SpatialGrid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }

    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    ScalarField& operator+=(const ScalarField& other);
    ScalarField& operator-=(const ScalarField& other);
    ScalarField& operator*=(double s);
    /// Pointwise product.
    ScalarField& operator*=(const ScalarField& other);

    friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
    friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
    friend ScalarField operator*(ScalarField a, double s) { return a *= s; }
    friend ScalarField operator*(double s, ScalarField a) { return a *= s; }
    friend ScalarField operator*(ScalarField a, const ScalarField& b) { return a *= b; }

    bool all_finite() const noexcept;
    /// Throws NumericError when a NaN/Inf is present.
    void require_finite(const char* context) const;

    bool operator==(const ScalarField&) const = default;

private:
    SpatialGrid grid_;
    std::vector<double> values_;
};

/// Time-indexed sequence of fields.
using FieldSeries = std::vector<ScalarField>;

struct EigenPair {
    std::size_t index = 0;          // 1-based rank in ascending order
    std::array<std::size_t, 2> wavenumber{1, 1};
    double eigenvalue = 0.0;
    ScalarField eigenfunction;
};

/// Throws ConfigError unless both fields live on `grid`.
void require_same_grid(const SpatialGrid& grid, const ScalarField& field, const char* context);

/// Five-point (three-point in 1D) centered Laplacian with zero Dirichlet ghosts.
ScalarField discrete_laplacian(const ScalarField& field);
void apply_laplacian(const SpatialGrid& grid, std::span<const double> in, std::span<double> out);

/// Solves -Δx = rhs. Tridiagonal elimination in 1D, conjugate gradients in 2D.
ScalarField poisson_solve(const ScalarField& rhs);

double inner_l2(const ScalarField& a, const ScalarField& b);
double norm_l2(const ScalarField& field);
double norm_linf(const ScalarField& field);
double norm_hminus1(const ScalarField& field);

/// Squared discrete H^1_0 seminorm |∇v|² using forward differences (boundary zeros included).
double gradient_energy(const ScalarField& field);

/// Exact discrete Dirichlet eigenpairs (sine modes), L²-normalized, ascending.
std::vector<EigenPair> laplacian_eigenpairs(const SpatialGrid& grid, std::size_t count);

}  // namespace sfhn
