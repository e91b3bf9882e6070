#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "sfhn/grid.hpp"

namespace sfhn {

/// Uniform time grid 0 = t₀ < … < t_N = T.
struct TimeGrid {
    double horizon = 1.0;
    std::size_t steps = 400;

    TimeGrid() = default;
    TimeGrid(double horizon, std::size_t steps);

    double dt() const noexcept { return horizon / static_cast<double>(steps); }
    double time(std::size_t n) const noexcept { return horizon * static_cast<double>(n) / static_cast<double>(steps); }
    std::size_t nodes() const noexcept { return steps + 1; }

    bool operator==(const TimeGrid&) const = default;
};

/// Truncated expansion W(t, ξ) = Σ_j μ_j e_j(ξ) β_j(t).
class NoiseModel {
public:
    NoiseModel(std::vector<double> coefficients, std::vector<EigenPair> modes);

    /// μ_j = j^{-decay} on the first `modes` Dirichlet eigenfunctions.
    static NoiseModel spectral(const SpatialGrid& grid, std::size_t modes, double decay);
    /// J = 0: the deterministic equation.
    static NoiseModel none(const SpatialGrid& grid);

    const SpatialGrid& grid() const noexcept { return grid_; }
    std::size_t mode_count() const noexcept { return coefficients_.size(); }
    double coefficient(std::size_t j) const { return coefficients_.at(j); }
    const ScalarField& mode(std::size_t j) const { return modes_.at(j).eigenfunction; }
    const std::vector<double>& coefficients() const noexcept { return coefficients_; }

    /// Σ_j μ_j² |e_j|²_∞, the truncated summability constant.
    double convergence_sum() const noexcept { return convergence_sum_; }

private:
    SpatialGrid grid_;
    std::vector<double> coefficients_;
    std::vector<EigenPair> modes_;
    double convergence_sum_ = 0.0;
};

/// Sampled Brownian motions β_j(t_n), one row per mode.
class WienerPath {
public:
    WienerPath(TimeGrid time, std::size_t modes, std::vector<double> beta, std::uint64_t seed);

    const TimeGrid& time_grid() const noexcept { return time_; }
    std::size_t mode_count() const noexcept { return modes_; }
    std::uint64_t seed() const noexcept { return seed_; }

    double beta(std::size_t j, std::size_t n) const { return beta_[j * time_.nodes() + n]; }
    double increment(std::size_t j, std::size_t n) const { return beta(j, n + 1) - beta(j, n); }

    /// Same path observed on every `factor`-th node (exact for Brownian paths).
    WienerPath coarsen(std::size_t factor) const;

    bool operator==(const WienerPath&) const = default;

private:
    TimeGrid time_;
    std::size_t modes_;
    std::vector<double> beta_;
    std::uint64_t seed_;
};

/// ρ_ε(t) = ρ(t/ε)/ε with the unit-mass bump ρ(s) ∝ exp(-1/(1 - s²)) on (-1, 1).
struct MollifierSpec {
    double epsilon;

    explicit MollifierSpec(double epsilon);
    double kernel(double t) const noexcept;
};

WienerPath sample_path(const NoiseModel& model, const TimeGrid& time, std::uint64_t seed);

ScalarField evaluate_W(const WienerPath& path, const NoiseModel& model, std::size_t n);

/// Σ_j μ_j (β_j(t_{n+1}) - β_j(t_n)) e_j.
ScalarField evaluate_dW(const WienerPath& path, const NoiseModel& model, std::size_t n);

/// Per-mode discrete convolution with the sampled kernel (weights renormalized
/// to unit sum), β extended by constants outside [0, T].
WienerPath mollify_path(const WienerPath& path, const MollifierSpec& spec);

/// μ(ξ) = ½ Σ_j μ_j² e_j(ξ)².
ScalarField ito_correction_field(const NoiseModel& model);

/// Pointwise e^{±W(t_n)}. Throws NumericError if |W| > 700 anywhere.
ScalarField exp_W(const WienerPath& path, const NoiseModel& model, std::size_t n, int sign);

/// CSV with header `t,mode,beta`, modes 1-based.
void write_path_csv(std::ostream& out, const WienerPath& path);

}  // namespace sfhn
