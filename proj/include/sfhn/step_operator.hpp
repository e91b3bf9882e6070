#pragma once

#include <memory>
#include <span>
#include <vector>

#include "sfhn/grid.hpp"

namespace sfhn {

/// Linear operator J v = v - dt·Δ(D ⊙ v) + dt·C ⊙ v with diagonal fields D, C.
///
/// This is the Jacobian of one backward-Euler step for the monotone operator
/// z ↦ -Δ(γ(z) + ε_d z) + G_ε(z) + (f + μ) z, and (frozen at the converged
/// state) the step operator of the linearized and adjoint recursions. J is not
/// symmetric when D varies, so both J and Jᵀ solves are provided. The
/// transpose is taken in the plain Euclidean pairing, which coincides with
/// the h^d-weighted L² pairing because all weights are equal.
class StepOperator {
public:
    StepOperator(const SpatialGrid& grid, double dt, std::vector<double> diffusion,
                 std::vector<double> reaction);
    ~StepOperator();
    StepOperator(StepOperator&&) noexcept;
    StepOperator& operator=(StepOperator&&) noexcept;

    void apply(std::span<const double> v, std::span<double> out) const;
    void apply_transpose(std::span<const double> v, std::span<double> out) const;
    void solve(std::span<const double> rhs, std::span<double> x) const;
    void solve_transpose(std::span<const double> rhs, std::span<double> x) const;

    const SpatialGrid& grid() const noexcept { return grid_; }

private:
    struct Sparse;

    void solve_tridiagonal(std::span<const double> rhs, std::span<double> x, bool transpose) const;

    SpatialGrid grid_;
    double dt_;
    std::vector<double> diffusion_;
    std::vector<double> reaction_;
    std::unique_ptr<Sparse> sparse_;  // 2D only: LU factors of J and Jᵀ
};

}  // namespace sfhn
