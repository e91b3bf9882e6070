#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "sfhn/grid.hpp"
#include "sfhn/noise.hpp"
#include "sfhn/nonlinearity.hpp"
#include "sfhn/step_operator.hpp"

namespace sfhn {

/// Time-dependent source F(t, ·); an empty function means F ≡ 0.
using Forcing = std::function<ScalarField(double t)>;

/// Data of dX = [Δγ(X) - G(X) - fX + F + u] dt + X dW, X(0) = x₀, posed on
/// the rescaled variable y = e^{-W} X.
///
/// Damping enters with the dissipative sign (-fX in the drift, +fy on the
/// left of the rescaled equation).
struct StateProblem {
    explicit StateProblem(const SpatialGrid& grid);

    SpatialGrid grid;
    DiffusionLaw diffusion = DiffusionLaw::linear(1.0);
    IonicCubic ionic{0.5, 1.0};
    ScalarField damping;      ///< f ≥ 0
    Forcing forcing;          ///< F(t)
    NoiseModel noise;
    ScalarField initial;      ///< x₀
    double horizon = 1.0;
    bool diffusion_enabled = true;
    bool noise_enabled = true;

    /// Throws ConfigError on f < 0, grid mismatch, or non-finite data.
    void validate() const;
    ScalarField forcing_at(double t) const;
};

struct StepperParams {
    double yosida_epsilon = 1e-6;
    double diffusion_regularization = 0.0;  ///< ε_d in Δ(γ(z) + ε_d z)
    double newton_tol = 1e-10;
    int newton_max_iters = 50;
    double overflow_guard = 50.0;           ///< abort a path once |W|_∞ exceeds this
    bool newton_polish = true;              ///< one extra Newton correction after convergence

    void validate(const IonicCubic& ionic) const;
    bool operator==(const StepperParams&) const = default;
};

struct StateDiagnostics {
    std::vector<int> newton_iterations;     ///< per step
    std::vector<double> newton_residual;    ///< final |R|_∞ per step
    std::vector<double> sup_y;              ///< |y(t_n)|_∞
    std::vector<double> sup_x;              ///< |X(t_n)|_∞
    std::vector<double> l2sq_y;             ///< |y(t_n)|₂²
    std::vector<double> gradient_energy;    ///< |∇γ(X(t_n))|₂²

    /// sup_n |y_n|₂² + Σ_{n≥1} dt |∇γ(X_n)|₂².
    double energy(double dt) const;
    double sup_y_overall() const;
};

struct StateSolution {
    FieldSeries y;         ///< rescaled state, nodes 0..N
    FieldSeries x;         ///< physical state X = e^W ⊙ y
    FieldSeries exp_w;     ///< e^{W(t_n)}
    ScalarField ito_mu;    ///< μ used by the run (zero when noise is off)
    WienerPath path;
    StateDiagnostics diagnostics;
};

/// Control values u_n applied on [t_n, t_{n+1}), n = 0..N-1.
using ControlSeries = FieldSeries;

/// A path with no modes on `time`; use for noise-free runs.
WienerPath deterministic_path(const TimeGrid& time);

/// Advances y_n to y_{n+1}. With z = e^{W_{n+1}} y_{n+1}, solves
///   z - dt Δ(γ(z) + ε_d z) + dt G_ε(z) + dt (f + μ) z
///     = e^{W_{n+1}} (y_n + dt e^{-W_n} u_n) + dt F(t_{n+1})
/// by damped Newton, then returns e^{-W_{n+1}} z.
ScalarField step_rescaled(const ScalarField& y_n, std::size_t n, const StateProblem& problem,
                          const StepperParams& params, const WienerPath& path,
                          const ScalarField* control_n = nullptr);

StateSolution solve_forward(const StateProblem& problem, const StepperParams& params, const WienerPath& path,
                            const ControlSeries* control = nullptr);

/// Jacobian of the step residual at z (the linear operator frozen at the
/// converged state, shared by the forward Newton and the linearized/adjoint
/// recursions).
StepOperator step_jacobian(const StateProblem& problem, const StepperParams& params, const ScalarField& z,
                           const ScalarField& ito_mu, double dt);

/// Euler–Maruyama per node for dX = (-G(X) - fX + F + u) dt + X dW(t, ξ).
/// Requires diffusion_enabled = false. Test oracle.
FieldSeries scalar_sde_oracle(const StateProblem& problem, const WienerPath& path,
                              const ControlSeries* control = nullptr);

/// H⁻¹ norms of the defect of
///   X(t_n) - x₀ - ∫₀^{t_n} (Δγ(X) - G(X) - fX + F + u) ds - ∫₀^{t_n} X dW
/// (trapezoid for the drift, left-point Itô sums), one per node.
std::vector<double> strong_solution_defects(const StateSolution& solution, const StateProblem& problem,
                                            const ControlSeries* control = nullptr);

/// max_n of strong_solution_defects.
double strong_solution_residual(const StateSolution& solution, const StateProblem& problem,
                                const ControlSeries* control = nullptr);

}  // namespace sfhn
