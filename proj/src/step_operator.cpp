#include "sfhn/step_operator.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <cmath>

#include "sfhn/errors.hpp"

namespace sfhn {

struct StepOperator::Sparse {
    using Matrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
    Eigen::SparseLU<Matrix> lu;
    Eigen::SparseLU<Matrix> lu_transpose;
};

StepOperator::~StepOperator() = default;
StepOperator::StepOperator(StepOperator&&) noexcept = default;
StepOperator& StepOperator::operator=(StepOperator&&) noexcept = default;

StepOperator::StepOperator(const SpatialGrid& grid, double dt, std::vector<double> diffusion,
                           std::vector<double> reaction)
    : grid_(grid), dt_(dt), diffusion_(std::move(diffusion)), reaction_(std::move(reaction)) {
    if (diffusion_.size() != grid_.size() || reaction_.size() != grid_.size()) {
        throw ConfigError("StepOperator: coefficient size does not match grid");
    }
    if (grid_.dimension() == 1) return;

    using Matrix = Sparse::Matrix;
    const std::size_t nx = grid_.points(0);
    const std::size_t ny = grid_.points(1);
    const double ix2 = dt_ / (grid_.spacing(0) * grid_.spacing(0));
    const double iy2 = dt_ / (grid_.spacing(1) * grid_.spacing(1));
    std::vector<Eigen::Triplet<double, int>> entries;
    entries.reserve(5 * grid_.size());
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            const auto k = static_cast<int>(grid_.index(i, j));
            const std::size_t uk = grid_.index(i, j);
            entries.emplace_back(k, k, 1.0 + 2.0 * (ix2 + iy2) * diffusion_[uk] + dt_ * reaction_[uk]);
            auto couple = [&](std::size_t other, double w) {
                entries.emplace_back(k, static_cast<int>(other), -w * diffusion_[other]);
            };
            if (i > 0) couple(uk - 1, ix2);
            if (i + 1 < nx) couple(uk + 1, ix2);
            if (j > 0) couple(uk - nx, iy2);
            if (j + 1 < ny) couple(uk + nx, iy2);
        }
    }
    const auto n = static_cast<int>(grid_.size());
    Matrix a(n, n);
    a.setFromTriplets(entries.begin(), entries.end());
    Matrix at = a.transpose();
    sparse_ = std::make_unique<Sparse>();
    sparse_->lu.compute(a);
    sparse_->lu_transpose.compute(at);
    if (sparse_->lu.info() != Eigen::Success || sparse_->lu_transpose.info() != Eigen::Success) {
        throw NumericError("StepOperator: sparse LU factorization failed");
    }
}

void StepOperator::apply(std::span<const double> v, std::span<double> out) const {
    std::vector<double> dv(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) dv[i] = diffusion_[i] * v[i];
    apply_laplacian(grid_, dv, out);
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] - dt_ * out[i] + dt_ * reaction_[i] * v[i];
}

void StepOperator::apply_transpose(std::span<const double> v, std::span<double> out) const {
    apply_laplacian(grid_, v, out);
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = v[i] - dt_ * diffusion_[i] * out[i] + dt_ * reaction_[i] * v[i];
    }
}

void StepOperator::solve_tridiagonal(std::span<const double> rhs, std::span<double> x, bool transpose) const {
    // Row i of J: lower = -dt D_{i-1}/h², diag, upper = -dt D_{i+1}/h².
    // Row i of Jᵀ: lower = upper = -dt D_i/h². J is column diagonally dominant
    // whenever 1 + dt C > 0, so elimination without pivoting is stable.
    const std::size_t n = grid_.size();
    const double w = dt_ / (grid_.spacing(0) * grid_.spacing(0));
    auto lower = [&](std::size_t i) { return transpose ? -w * diffusion_[i] : -w * diffusion_[i - 1]; };
    auto upper = [&](std::size_t i) { return transpose ? -w * diffusion_[i] : -w * diffusion_[i + 1]; };
    auto diag = [&](std::size_t i) { return 1.0 + 2.0 * w * diffusion_[i] + dt_ * reaction_[i]; };

    std::vector<double> c(n), d(n);
    double m = diag(0);
    if (m == 0.0) throw NumericError("StepOperator: zero pivot");
    c[0] = n > 1 ? upper(0) / m : 0.0;
    d[0] = rhs[0] / m;
    for (std::size_t i = 1; i < n; ++i) {
        m = diag(i) - lower(i) * c[i - 1];
        if (m == 0.0) throw NumericError("StepOperator: zero pivot");
        c[i] = i + 1 < n ? upper(i) / m : 0.0;
        d[i] = (rhs[i] - lower(i) * d[i - 1]) / m;
    }
    x[n - 1] = d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
}

void StepOperator::solve(std::span<const double> rhs, std::span<double> x) const {
    if (!sparse_) {
        solve_tridiagonal(rhs, x, false);
        return;
    }
    const auto n = static_cast<Eigen::Index>(rhs.size());
    Eigen::Map<const Eigen::VectorXd> b(rhs.data(), n);
    Eigen::Map<Eigen::VectorXd>(x.data(), n) = sparse_->lu.solve(b);
}

void StepOperator::solve_transpose(std::span<const double> rhs, std::span<double> x) const {
    if (!sparse_) {
        solve_tridiagonal(rhs, x, true);
        return;
    }
    const auto n = static_cast<Eigen::Index>(rhs.size());
    Eigen::Map<const Eigen::VectorXd> b(rhs.data(), n);
    Eigen::Map<Eigen::VectorXd>(x.data(), n) = sparse_->lu_transpose.solve(b);
}

}  // namespace sfhn
