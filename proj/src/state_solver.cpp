#include "sfhn/state_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>

#include "sfhn/errors.hpp"

namespace sfhn {

StateProblem::StateProblem(const SpatialGrid& grid_)
    : grid(grid_), damping(grid_), noise(NoiseModel::none(grid_)), initial(grid_) {}

void StateProblem::validate() const {
    require_same_grid(grid, damping, "StateProblem damping");
    require_same_grid(grid, initial, "StateProblem initial datum");
    if (!(noise.grid() == grid)) throw ConfigError("StateProblem: noise model lives on another grid");
    for (double f : damping.values()) {
        if (!(f >= 0.0)) throw ConfigError("StateProblem: damping f must be nonnegative");
    }
    if (!initial.all_finite()) throw ConfigError("StateProblem: non-finite initial datum");
    if (!(horizon > 0.0)) throw ConfigError("StateProblem: horizon must be positive");
}

ScalarField StateProblem::forcing_at(double t) const {
    if (!forcing) return ScalarField(grid);
    ScalarField f = forcing(t);
    require_same_grid(grid, f, "StateProblem forcing");
    f.require_finite("StateProblem forcing");
    return f;
}

void StepperParams::validate(const IonicCubic& ionic) const {
    require_admissible_epsilon(ionic, yosida_epsilon);
    if (!(diffusion_regularization >= 0.0)) throw ConfigError("StepperParams: diffusion regularization must be ≥ 0");
    if (!(newton_tol > 0.0)) throw ConfigError("StepperParams: newton_tol must be positive");
    if (newton_max_iters < 1) throw ConfigError("StepperParams: newton_max_iters must be ≥ 1");
    if (!(overflow_guard > 0.0)) throw ConfigError("StepperParams: overflow guard must be positive");
}

double StateDiagnostics::energy(double dt) const {
    double sup = 0.0;
    for (double v : l2sq_y) sup = std::max(sup, v);
    double integral = 0.0;
    for (std::size_t n = 1; n < gradient_energy.size(); ++n) integral += dt * gradient_energy[n];
    return sup + integral;
}

double StateDiagnostics::sup_y_overall() const {
    double m = 0.0;
    for (double v : sup_y) m = std::max(m, v);
    return m;
}

WienerPath deterministic_path(const TimeGrid& time) { return WienerPath(time, 0, {}, 0); }

namespace {

ScalarField noise_field(const StateProblem& problem, const WienerPath& path, std::size_t n) {
    if (!problem.noise_enabled) return ScalarField(problem.grid);
    return evaluate_W(path, problem.noise, n);
}

ScalarField guarded_exp(const ScalarField& w, double guard, std::size_t n) {
    const double sup = norm_linf(w);
    if (sup > guard) {
        throw OverflowAbort("|W|_inf = " + std::to_string(sup) + " exceeds guard at step " + std::to_string(n), sup, n);
    }
    ScalarField e(w.grid());
    for (std::size_t i = 0; i < w.size(); ++i) e[i] = std::exp(w[i]);
    return e;
}

ScalarField ito_field(const StateProblem& problem) {
    if (!problem.noise_enabled) return ScalarField(problem.grid);
    return ito_correction_field(problem.noise);
}

void check_path(const StateProblem& problem, const WienerPath& path) {
    if (std::abs(path.time_grid().horizon - problem.horizon) > 1e-12 * problem.horizon) {
        throw ConfigError("noise path horizon does not match the problem horizon");
    }
    if (problem.noise_enabled && path.mode_count() != problem.noise.mode_count()) {
        throw ConfigError("noise path has " + std::to_string(path.mode_count()) + " modes, model has " +
                          std::to_string(problem.noise.mode_count()));
    }
}

void check_control(const StateProblem& problem, const WienerPath& path, const ControlSeries* control) {
    if (!control) return;
    if (control->size() != path.time_grid().steps) {
        throw ConfigError("control has " + std::to_string(control->size()) + " time levels, expected " +
                          std::to_string(path.time_grid().steps));
    }
    for (const ScalarField& u : *control) require_same_grid(problem.grid, u, "control");
}

struct Residual {
    std::vector<double> r;
    std::vector<double> diffusion;
    std::vector<double> reaction;
    double sup = 0.0;
};

// R(z) = z - dt Δ(γ(z) + ε_d z) + dt G_ε(z) + dt (f + μ) z - b, plus Jacobian coefficients.
Residual evaluate_residual(const StateProblem& problem, const StepperParams& params, const ScalarField& mu,
                           double dt, std::span<const double> z, std::span<const double> b) {
    const std::size_t n = z.size();
    Residual out;
    out.r.assign(n, 0.0);
    out.diffusion.assign(n, 0.0);
    out.reaction.assign(n, 0.0);
    if (problem.diffusion_enabled) {
        std::vector<double> g(n);
        for (std::size_t i = 0; i < n; ++i) {
            g[i] = gamma_eval(problem.diffusion, z[i]) + params.diffusion_regularization * z[i];
            out.diffusion[i] = gamma_prime(problem.diffusion, z[i]) + params.diffusion_regularization;
        }
        apply_laplacian(problem.grid, g, out.r);
        for (double& v : out.r) v *= -dt;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const YosidaValue yos = yosida_G_with_derivative(problem.ionic, params.yosida_epsilon, z[i]);
        const double linear = problem.damping[i] + mu[i];
        out.r[i] += z[i] + dt * (yos.value + linear * z[i]) - b[i];
        out.reaction[i] = yos.derivative + linear;
        out.sup = std::max(out.sup, std::abs(out.r[i]));
    }
    if (!std::isfinite(out.sup)) out.sup = std::numeric_limits<double>::infinity();
    return out;
}

struct NewtonOutcome {
    ScalarField z;
    int iterations = 0;
    double residual = 0.0;
};

void newton_correction(const StateProblem& problem, const StepperParams& params, const ScalarField& mu, double dt,
                       const Residual& res, std::span<double> delta) {
    const std::size_t n = delta.size();
    std::vector<double> neg(n);
    for (std::size_t i = 0; i < n; ++i) neg[i] = -res.r[i];
    if (!problem.diffusion_enabled) {
        for (std::size_t i = 0; i < n; ++i) delta[i] = neg[i] / (1.0 + dt * res.reaction[i]);
        return;
    }
    (void)params;
    (void)mu;
    StepOperator jac(problem.grid, dt, res.diffusion, res.reaction);
    jac.solve(neg, delta);
}

NewtonOutcome newton_solve(const StateProblem& problem, const StepperParams& params, const ScalarField& mu,
                           double dt, const ScalarField& rhs, std::size_t step) {
    NewtonOutcome out{rhs, 0, 0.0};
    const double scale = std::max(1.0, norm_linf(rhs));
    const double tol = params.newton_tol * scale;
    Residual res = evaluate_residual(problem, params, mu, dt, out.z.values(), rhs.values());
    std::vector<double> delta(rhs.size());
    std::vector<double> trial(rhs.size());
    while (res.sup > tol) {
        if (out.iterations >= params.newton_max_iters) {
            throw NumericError("Newton did not converge at step " + std::to_string(step) +
                                   " (last residual " + std::to_string(res.sup) + "); try a smaller dt",
                               res.sup);
        }
        ++out.iterations;
        newton_correction(problem, params, mu, dt, res, delta);
        double t = 1.0;
        for (int halving = 0;; ++halving) {
            for (std::size_t i = 0; i < trial.size(); ++i) trial[i] = out.z[i] + t * delta[i];
            Residual cand = evaluate_residual(problem, params, mu, dt, trial, rhs.values());
            if (cand.sup < res.sup || halving >= 30) {
                std::copy(trial.begin(), trial.end(), out.z.values().begin());
                res = std::move(cand);
                break;
            }
            t *= 0.5;
        }
    }
    if (params.newton_polish) {
        newton_correction(problem, params, mu, dt, res, delta);
        for (std::size_t i = 0; i < trial.size(); ++i) trial[i] = out.z[i] + delta[i];
        Residual cand = evaluate_residual(problem, params, mu, dt, trial, rhs.values());
        if (cand.sup <= res.sup) {
            std::copy(trial.begin(), trial.end(), out.z.values().begin());
            res = std::move(cand);
        }
    }
    out.residual = res.sup;
    out.z.require_finite("Newton step");
    return out;
}

// rhs = E_{n+1} (y_n + dt e^{-W_n} u_n) + dt F(t_{n+1})
ScalarField step_rhs(const StateProblem& problem, const ScalarField& y_n, const ScalarField& exp_now,
                     const ScalarField& exp_next, const ScalarField* u_n, double dt, double t_next) {
    ScalarField rhs(problem.grid);
    const ScalarField forcing = problem.forcing_at(t_next);
    for (std::size_t i = 0; i < rhs.size(); ++i) {
        double w = y_n[i];
        if (u_n) w += dt * (*u_n)[i] / exp_now[i];
        rhs[i] = exp_next[i] * w + dt * forcing[i];
    }
    return rhs;
}

void record(StateDiagnostics& d, const StateProblem& problem, const ScalarField& y, const ScalarField& x) {
    d.sup_y.push_back(norm_linf(y));
    d.sup_x.push_back(norm_linf(x));
    d.l2sq_y.push_back(inner_l2(y, y));
    ScalarField g(problem.grid);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = gamma_eval(problem.diffusion, x[i]);
    d.gradient_energy.push_back(gradient_energy(g));
}

}  // namespace

StepOperator step_jacobian(const StateProblem& problem, const StepperParams& params, const ScalarField& z,
                           const ScalarField& ito_mu, double dt) {
    const std::size_t n = z.size();
    std::vector<double> diffusion(n, 0.0), reaction(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (problem.diffusion_enabled) {
            diffusion[i] = gamma_prime(problem.diffusion, z[i]) + params.diffusion_regularization;
        }
        reaction[i] = yosida_G_with_derivative(problem.ionic, params.yosida_epsilon, z[i]).derivative +
                      problem.damping[i] + ito_mu[i];
    }
    return StepOperator(problem.grid, dt, std::move(diffusion), std::move(reaction));
}

ScalarField step_rescaled(const ScalarField& y_n, std::size_t n, const StateProblem& problem,
                          const StepperParams& params, const WienerPath& path, const ScalarField* control_n) {
    problem.validate();
    params.validate(problem.ionic);
    check_path(problem, path);
    require_same_grid(problem.grid, y_n, "step_rescaled state");
    if (n >= path.time_grid().steps) throw ConfigError("step_rescaled: step index out of range");
    if (control_n) require_same_grid(problem.grid, *control_n, "step_rescaled control");
    const double dt = path.time_grid().dt();
    const ScalarField exp_now = guarded_exp(noise_field(problem, path, n), params.overflow_guard, n);
    const ScalarField exp_next = guarded_exp(noise_field(problem, path, n + 1), params.overflow_guard, n + 1);
    const ScalarField mu = ito_field(problem);
    const ScalarField rhs = step_rhs(problem, y_n, exp_now, exp_next, control_n, dt, path.time_grid().time(n + 1));
    NewtonOutcome z = newton_solve(problem, params, mu, dt, rhs, n);
    for (std::size_t i = 0; i < z.z.size(); ++i) z.z[i] /= exp_next[i];
    return std::move(z.z);
}

StateSolution solve_forward(const StateProblem& problem, const StepperParams& params, const WienerPath& path,
                            const ControlSeries* control) {
    problem.validate();
    params.validate(problem.ionic);
    check_path(problem, path);
    check_control(problem, path, control);

    const TimeGrid& time = path.time_grid();
    const double dt = time.dt();
    StateSolution sol{{}, {}, {}, ito_field(problem), path, {}};
    sol.y.reserve(time.nodes());
    sol.x.reserve(time.nodes());
    sol.exp_w.reserve(time.nodes());

    sol.exp_w.push_back(guarded_exp(noise_field(problem, path, 0), params.overflow_guard, 0));
    sol.y.push_back(problem.initial);
    sol.x.push_back(sol.exp_w[0] * problem.initial);
    record(sol.diagnostics, problem, sol.y[0], sol.x[0]);

    for (std::size_t n = 0; n < time.steps; ++n) {
        sol.exp_w.push_back(guarded_exp(noise_field(problem, path, n + 1), params.overflow_guard, n + 1));
        const ScalarField& exp_now = sol.exp_w[n];
        const ScalarField& exp_next = sol.exp_w[n + 1];
        const ScalarField* u_n = control ? &(*control)[n] : nullptr;
        const ScalarField rhs = step_rhs(problem, sol.y[n], exp_now, exp_next, u_n, dt, time.time(n + 1));
        NewtonOutcome z = newton_solve(problem, params, sol.ito_mu, dt, rhs, n);
        ScalarField y_next = z.z;
        for (std::size_t i = 0; i < y_next.size(); ++i) y_next[i] /= exp_next[i];
        sol.x.push_back(exp_next * y_next);
        sol.y.push_back(std::move(y_next));
        sol.diagnostics.newton_iterations.push_back(z.iterations);
        sol.diagnostics.newton_residual.push_back(z.residual);
        record(sol.diagnostics, problem, sol.y.back(), sol.x.back());
    }
    return sol;
}

FieldSeries scalar_sde_oracle(const StateProblem& problem, const WienerPath& path, const ControlSeries* control) {
    problem.validate();
    if (problem.diffusion_enabled) throw ConfigError("scalar_sde_oracle requires diffusion_enabled = false");
    check_path(problem, path);
    check_control(problem, path, control);
    const TimeGrid& time = path.time_grid();
    const double dt = time.dt();
    FieldSeries x;
    x.reserve(time.nodes());
    x.push_back(problem.initial);
    for (std::size_t n = 0; n < time.steps; ++n) {
        const ScalarField& xn = x.back();
        const ScalarField forcing = problem.forcing_at(time.time(n));
        const ScalarField dw = problem.noise_enabled ? evaluate_dW(path, problem.noise, n) : ScalarField(problem.grid);
        ScalarField next(problem.grid);
        for (std::size_t i = 0; i < next.size(); ++i) {
            double drift = -ionic_eval(problem.ionic, xn[i]) - problem.damping[i] * xn[i] + forcing[i];
            if (control) drift += (*control)[n][i];
            next[i] = xn[i] + dt * drift + xn[i] * dw[i];
        }
        x.push_back(std::move(next));
    }
    return x;
}

std::vector<double> strong_solution_defects(const StateSolution& solution, const StateProblem& problem,
                                            const ControlSeries* control) {
    const WienerPath& path = solution.path;
    const TimeGrid& time = path.time_grid();
    const double dt = time.dt();
    check_control(problem, path, control);
    if (solution.x.size() != time.nodes()) throw ConfigError("strong_solution_residual: incomplete solution");

    auto drift = [&](std::size_t n) {
        const ScalarField& x = solution.x[n];
        ScalarField d(problem.grid);
        if (problem.diffusion_enabled) {
            ScalarField g(problem.grid);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] = gamma_eval(problem.diffusion, x[i]);
            d = discrete_laplacian(g);
        }
        const ScalarField forcing = problem.forcing_at(time.time(n));
        for (std::size_t i = 0; i < d.size(); ++i) {
            d[i] += -ionic_eval(problem.ionic, x[i]) - problem.damping[i] * x[i] + forcing[i];
        }
        return d;
    };

    std::vector<double> defects;
    defects.reserve(time.nodes());
    ScalarField integral(problem.grid);
    ScalarField previous_drift = drift(0);
    defects.push_back(norm_hminus1(solution.x[0] - problem.initial));
    for (std::size_t n = 0; n < time.steps; ++n) {
        ScalarField next_drift = drift(n + 1);
        const ScalarField dw =
            problem.noise_enabled ? evaluate_dW(path, problem.noise, n) : ScalarField(problem.grid);
        for (std::size_t i = 0; i < integral.size(); ++i) {
            integral[i] += 0.5 * dt * (previous_drift[i] + next_drift[i]) + solution.x[n][i] * dw[i];
            if (control) integral[i] += dt * (*control)[n][i];
        }
        previous_drift = std::move(next_drift);
        ScalarField defect = solution.x[n + 1] - problem.initial - integral;
        defects.push_back(norm_hminus1(defect));
    }
    return defects;
}

double strong_solution_residual(const StateSolution& solution, const StateProblem& problem,
                                const ControlSeries* control) {
    const std::vector<double> d = strong_solution_defects(solution, problem, control);
    return *std::max_element(d.begin(), d.end());
}

}  // namespace sfhn
