#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sfhn/state_solver.hpp"

namespace sfhn {

/// Tracking problem
///   Ψ(u) = E[ ∫₀ᵀ |X - v₁|₂² + (α/2)|u|₂² dt + |X(T) - v₂|₂² ],  |u| ≤ M,
/// with the expectation replaced by the average over `paths`. One path is the
/// frozen-path (path-wise) mode.
struct ControlProblem {
    explicit ControlProblem(StateProblem state);

    StateProblem state;
    StepperParams stepper;
    /// One field (static target) or one field per time node.
    FieldSeries running_target;
    ScalarField terminal_target;
    double alpha = 0.1;
    double bound = 1.0;
    std::vector<WienerPath> paths;
    /// Fault injection for the negative-control fixture: negates the adjoint.
    bool flip_adjoint_sign = false;

    void validate() const;
    const TimeGrid& time_grid() const;
    const ScalarField& running_target_at(std::size_t n) const;
};

/// Trapezoid weights τ_n for the running term (dt/2 at both ends).
double running_weight(const TimeGrid& time, std::size_t n);

/// Space-time inner product Σ_{n<N} dt ⟨a_n, b_n⟩ for control-shaped series.
double control_inner(const FieldSeries& a, const FieldSeries& b, double dt);
double control_norm(const FieldSeries& a, double dt);

ControlSeries zero_control(const SpatialGrid& grid, const TimeGrid& time);

/// Ψ for a single path.
double path_cost(const ControlProblem& problem, const ControlSeries& u, const StateSolution& solution);

/// Average of path_cost over the problem's paths; one solution per path, in order.
double cost_psi(const ControlProblem& problem, const ControlSeries& u, const std::vector<StateSolution>& solutions);

std::vector<StateSolution> solve_all(const ControlProblem& problem, const ControlSeries& u, unsigned threads = 1);

/// Linearized response δy_n (nodes 0..N) of the rescaled state to a control
/// direction d, using the step Jacobians of the forward run.
FieldSeries solve_variation(const ControlProblem& problem, const StateSolution& solution,
                            const ControlSeries& direction);

struct AdjointSolution {
    /// Dual state p_n on nodes 0..N. p_N = 2 e^{W(T)} (X(T) - v₂).
    FieldSeries p;
    /// Running sources 2 τ_n e^{W_n} (X_n - v₁_n) / dt paired with δy_n.
    FieldSeries source;
};

/// Exact transpose of the variation recursion, so that for every direction d
///   Σ_n dt ⟨source_n, δy_n⟩ + ⟨p_N, δy_N⟩ = Σ_{n<N} dt ⟨e^{-W_n} p_n, d_n⟩.
AdjointSolution solve_adjoint(const ControlProblem& problem, const StateSolution& solution);

/// g_n = e^{-W_n} p_n + α u_n, n < N.
FieldSeries gradient_field(const ControlSeries& u, const AdjointSolution& adjoint, const StateSolution& solution,
                           double alpha);

/// e^{-W_n} p_n averaged over paths, n < N.
FieldSeries scaled_adjoint_mean(const std::vector<AdjointSolution>& adjoints,
                                const std::vector<StateSolution>& solutions);

ScalarField project_control(const ScalarField& v, double bound);
ControlSeries project_control(const ControlSeries& v, double bound);

/// |u - P_U(-(1/α) q)|₂ / max(1, |u|₂) with q the path-averaged e^{-W} p.
double fixed_point_residual(const ControlSeries& u, const FieldSeries& scaled_adjoint, double alpha, double bound,
                            double dt);

struct OptimizerParams {
    double tol = 1e-4;
    int max_iters = 200;
    double armijo_c = 1e-4;
    int max_halvings = 30;
    unsigned threads = 1;
    std::optional<ControlSeries> initial;
};

enum class Termination { converged, max_iterations };
std::string to_string(Termination t);

struct OptimizerReport {
    std::vector<double> cost;            ///< Ψ_k of accepted iterates, k = 0..K
    std::vector<double> step;            ///< accepted step s_k (k ≥ 1)
    std::vector<double> residual;        ///< fixed-point residual r_k
    std::vector<int> halvings;           ///< backtracking count per accepted step
    ControlSeries control;
    FieldSeries scaled_adjoint;          ///< e^{-W} p at the final control (path average)
    FieldSeries gradient;                ///< gradient at the final control (path average)
    std::vector<StateSolution> solutions;
    std::vector<AdjointSolution> adjoints;
    Termination termination = Termination::max_iterations;
    int iterations = 0;
};

/// Projected gradient with Barzilai–Borwein trial steps and Armijo backtracking.
OptimizerReport optimize(const ControlProblem& problem, const OptimizerParams& params = {});

struct BangBangResult {
    ControlSeries control;
    double deadband = 0.0;
    double deadband_fraction = 0.0;
};

/// u = -M where p > δ, +M where p < -δ, 0 on the deadband. δ defaults to 1e-8 |p|_∞.
BangBangResult bang_bang_refine(const FieldSeries& p, double bound, std::optional<double> deadband = std::nullopt);

/// Fraction of points with |p| > δ where |u| ≥ threshold · M.
double saturation_fraction(const ControlSeries& u, const FieldSeries& p, double bound, double deadband,
                           double threshold = 0.99);

/// min over `samples` random admissible ū of Σ dt ⟨g, ū - u⟩.
double variational_inequality_gap(const ControlSeries& u, const FieldSeries& gradient, double bound, double dt,
                                  std::size_t samples, std::uint64_t seed);

}  // namespace sfhn
