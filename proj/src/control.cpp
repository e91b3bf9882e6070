#include "sfhn/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>

#include "sfhn/errors.hpp"
#include "sfhn/parallel.hpp"

namespace sfhn {

ControlProblem::ControlProblem(StateProblem state_)
    : state(std::move(state_)), running_target{ScalarField(state.grid)}, terminal_target(state.grid) {}

void ControlProblem::validate() const {
    state.validate();
    stepper.validate(state.ionic);
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("control: alpha must be ≥ 0");
    if (!(bound > 0.0) || !std::isfinite(bound)) throw ConfigError("control: bound M must be positive");
    if (paths.empty()) throw ConfigError("control: at least one noise path is required");
    const TimeGrid& time = paths.front().time_grid();
    for (const WienerPath& p : paths) {
        if (!(p.time_grid() == time)) throw ConfigError("control: all paths must share one time grid");
    }
    if (running_target.size() != 1 && running_target.size() != time.nodes()) {
        throw ConfigError("control: running target needs 1 or " + std::to_string(time.nodes()) + " fields");
    }
    for (const ScalarField& v : running_target) {
        require_same_grid(state.grid, v, "running target");
        v.require_finite("running target");
    }
    require_same_grid(state.grid, terminal_target, "terminal target");
    terminal_target.require_finite("terminal target");
}

const TimeGrid& ControlProblem::time_grid() const {
    if (paths.empty()) throw ConfigError("control: no paths");
    return paths.front().time_grid();
}

const ScalarField& ControlProblem::running_target_at(std::size_t n) const {
    return running_target.size() == 1 ? running_target.front() : running_target.at(n);
}

double running_weight(const TimeGrid& time, std::size_t n) {
    return (n == 0 || n == time.steps) ? 0.5 * time.dt() : time.dt();
}

double control_inner(const FieldSeries& a, const FieldSeries& b, double dt) {
    if (a.size() != b.size()) throw ConfigError("control_inner: series lengths differ");
    double s = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) s += dt * inner_l2(a[n], b[n]);
    return s;
}

double control_norm(const FieldSeries& a, double dt) { return std::sqrt(control_inner(a, a, dt)); }

ControlSeries zero_control(const SpatialGrid& grid, const TimeGrid& time) {
    return ControlSeries(time.steps, ScalarField(grid));
}

double path_cost(const ControlProblem& problem, const ControlSeries& u, const StateSolution& solution) {
    const TimeGrid& time = solution.path.time_grid();
    if (u.size() != time.steps || solution.x.size() != time.nodes()) {
        throw ConfigError("path_cost: control or solution has the wrong number of time levels");
    }
    double psi = 0.0;
    for (std::size_t n = 0; n < time.nodes(); ++n) {
        const ScalarField diff = solution.x[n] - problem.running_target_at(n);
        psi += running_weight(time, n) * inner_l2(diff, diff);
    }
    for (std::size_t n = 0; n < time.steps; ++n) psi += time.dt() * 0.5 * problem.alpha * inner_l2(u[n], u[n]);
    const ScalarField last = solution.x.back() - problem.terminal_target;
    return psi + inner_l2(last, last);
}

double cost_psi(const ControlProblem& problem, const ControlSeries& u, const std::vector<StateSolution>& solutions) {
    if (solutions.size() != problem.paths.size()) {
        throw ConfigError("cost_psi: expected " + std::to_string(problem.paths.size()) + " solutions, got " +
                          std::to_string(solutions.size()));
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < solutions.size(); ++k) {
        if (!(solutions[k].path == problem.paths[k])) {
            throw ConfigError("cost_psi: missing solution for path seed " + std::to_string(problem.paths[k].seed()));
        }
        sum += path_cost(problem, u, solutions[k]);
    }
    return sum / static_cast<double>(solutions.size());
}

std::vector<StateSolution> solve_all(const ControlProblem& problem, const ControlSeries& u, unsigned threads) {
    std::vector<std::optional<StateSolution>> slots(problem.paths.size());
    parallel_for(problem.paths.size(), threads, [&](std::size_t k) {
        slots[k] = solve_forward(problem.state, problem.stepper, problem.paths[k], &u);
    });
    std::vector<StateSolution> out;
    out.reserve(slots.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

namespace {

StepOperator jacobian_at(const ControlProblem& problem, const StateSolution& solution, std::size_t node) {
    return step_jacobian(problem.state, problem.stepper, solution.x[node], solution.ito_mu,
                         solution.path.time_grid().dt());
}

}  // namespace

FieldSeries solve_variation(const ControlProblem& problem, const StateSolution& solution,
                            const ControlSeries& direction) {
    const TimeGrid& time = solution.path.time_grid();
    if (direction.size() != time.steps) throw ConfigError("solve_variation: direction has wrong length");
    const double dt = time.dt();
    const SpatialGrid& grid = problem.state.grid;
    FieldSeries dy;
    dy.reserve(time.nodes());
    dy.emplace_back(grid);
    ScalarField rhs(grid), dx(grid);
    for (std::size_t n = 0; n < time.steps; ++n) {
        require_same_grid(grid, direction[n], "variation direction");
        const ScalarField& e0 = solution.exp_w[n];
        const ScalarField& e1 = solution.exp_w[n + 1];
        for (std::size_t i = 0; i < rhs.size(); ++i) {
            rhs[i] = (e1[i] / e0[i]) * (e0[i] * dy[n][i] + dt * direction[n][i]);
        }
        jacobian_at(problem, solution, n + 1).solve(rhs.values(), dx.values());
        ScalarField next(grid);
        for (std::size_t i = 0; i < next.size(); ++i) next[i] = dx[i] / e1[i];
        next.require_finite("variation");
        dy.push_back(std::move(next));
    }
    return dy;
}

AdjointSolution solve_adjoint(const ControlProblem& problem, const StateSolution& solution) {
    const TimeGrid& time = solution.path.time_grid();
    const std::size_t steps = time.steps;
    const double dt = time.dt();
    const SpatialGrid& grid = problem.state.grid;
    if (solution.x.size() != time.nodes()) throw ConfigError("solve_adjoint: incomplete state trajectory");

    AdjointSolution adj;
    adj.p.assign(time.nodes(), ScalarField(grid));
    adj.source.assign(time.nodes(), ScalarField(grid));
    std::vector<ScalarField> mismatch;
    mismatch.reserve(time.nodes());
    for (std::size_t n = 0; n < time.nodes(); ++n) {
        mismatch.push_back(solution.x[n] - problem.running_target_at(n));
        const double w = 2.0 * running_weight(time, n) / dt;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            adj.source[n][i] = w * solution.exp_w[n][i] * mismatch[n][i];
        }
    }

    // λ is the dual of the physical increment δX; p = e^W λ pairs with δy.
    ScalarField lambda(grid);
    const ScalarField terminal = solution.x.back() - problem.terminal_target;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        lambda[i] = 2.0 * terminal[i];
        adj.p[steps][i] = 2.0 * solution.exp_w[steps][i] * terminal[i];
    }
    ScalarField carry(grid), solved(grid);
    for (std::size_t n = steps; n-- > 0;) {
        const double w = 2.0 * running_weight(time, n + 1);
        for (std::size_t i = 0; i < grid.size(); ++i) carry[i] = lambda[i] + w * mismatch[n + 1][i];
        jacobian_at(problem, solution, n + 1).solve_transpose(carry.values(), solved.values());
        const ScalarField& e0 = solution.exp_w[n];
        const ScalarField& e1 = solution.exp_w[n + 1];
        for (std::size_t i = 0; i < grid.size(); ++i) {
            lambda[i] = (e1[i] / e0[i]) * solved[i];
            adj.p[n][i] = e0[i] * lambda[i];
        }
        adj.p[n].require_finite("adjoint");
    }
    if (problem.flip_adjoint_sign) {
        for (ScalarField& p : adj.p) p *= -1.0;
    }
    return adj;
}

FieldSeries gradient_field(const ControlSeries& u, const AdjointSolution& adjoint, const StateSolution& solution,
                           double alpha) {
    if (u.size() + 1 != adjoint.p.size()) throw ConfigError("gradient_field: control/adjoint length mismatch");
    FieldSeries g;
    g.reserve(u.size());
    for (std::size_t n = 0; n < u.size(); ++n) {
        require_same_grid(u[n].grid(), adjoint.p[n], "gradient_field");
        ScalarField gn(u[n].grid());
        for (std::size_t i = 0; i < gn.size(); ++i) {
            gn[i] = adjoint.p[n][i] / solution.exp_w[n][i] + alpha * u[n][i];
        }
        g.push_back(std::move(gn));
    }
    return g;
}

FieldSeries scaled_adjoint_mean(const std::vector<AdjointSolution>& adjoints,
                                const std::vector<StateSolution>& solutions) {
    if (adjoints.empty() || adjoints.size() != solutions.size()) {
        throw ConfigError("scaled_adjoint_mean: need one adjoint per solution");
    }
    const std::size_t steps = adjoints.front().p.size() - 1;
    const SpatialGrid& grid = adjoints.front().p.front().grid();
    FieldSeries q(steps, ScalarField(grid));
    const double inv = 1.0 / static_cast<double>(adjoints.size());
    for (std::size_t k = 0; k < adjoints.size(); ++k) {
        for (std::size_t n = 0; n < steps; ++n) {
            for (std::size_t i = 0; i < grid.size(); ++i) {
                q[n][i] += inv * adjoints[k].p[n][i] / solutions[k].exp_w[n][i];
            }
        }
    }
    return q;
}

ScalarField project_control(const ScalarField& v, double bound) {
    if (!(bound > 0.0)) throw ConfigError("project_control: bound must be positive");
    ScalarField out(v.grid());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::clamp(v[i], -bound, bound);
    return out;
}

ControlSeries project_control(const ControlSeries& v, double bound) {
    ControlSeries out;
    out.reserve(v.size());
    for (const ScalarField& f : v) out.push_back(project_control(f, bound));
    return out;
}

double fixed_point_residual(const ControlSeries& u, const FieldSeries& scaled_adjoint, double alpha, double bound,
                            double dt) {
    if (!(alpha > 0.0)) throw ConfigError("fixed_point_residual: alpha must be positive");
    if (u.size() != scaled_adjoint.size()) throw ConfigError("fixed_point_residual: length mismatch");
    FieldSeries diff;
    diff.reserve(u.size());
    for (std::size_t n = 0; n < u.size(); ++n) {
        ScalarField d(u[n].grid());
        for (std::size_t i = 0; i < d.size(); ++i) {
            d[i] = u[n][i] - std::clamp(-scaled_adjoint[n][i] / alpha, -bound, bound);
        }
        diff.push_back(std::move(d));
    }
    return control_norm(diff, dt) / std::max(1.0, control_norm(u, dt));
}

std::string to_string(Termination t) {
    switch (t) {
        case Termination::converged: return "converged";
        case Termination::max_iterations: return "max_iterations";
    }
    return "max_iterations";
}

namespace {

struct Evaluation {
    ControlSeries u;
    std::vector<StateSolution> solutions;
    std::vector<AdjointSolution> adjoints;
    FieldSeries scaled_adjoint;
    FieldSeries gradient;
    double cost = 0.0;
    double residual = 0.0;
};

void complete(const ControlProblem& problem, Evaluation& ev, unsigned threads, double dt) {
    std::vector<std::optional<AdjointSolution>> slots(ev.solutions.size());
    parallel_for(slots.size(), threads, [&](std::size_t k) { slots[k] = solve_adjoint(problem, ev.solutions[k]); });
    ev.adjoints.clear();
    for (auto& s : slots) ev.adjoints.push_back(std::move(*s));
    ev.scaled_adjoint = scaled_adjoint_mean(ev.adjoints, ev.solutions);
    ev.gradient = ev.scaled_adjoint;
    for (std::size_t n = 0; n < ev.u.size(); ++n) {
        for (std::size_t i = 0; i < ev.u[n].size(); ++i) ev.gradient[n][i] += problem.alpha * ev.u[n][i];
    }
    ev.residual = fixed_point_residual(ev.u, ev.scaled_adjoint, problem.alpha, problem.bound, dt);
}

}  // namespace

OptimizerReport optimize(const ControlProblem& problem, const OptimizerParams& params) {
    problem.validate();
    if (!(problem.alpha > 0.0)) throw ConfigError("optimize requires alpha > 0; use bang_bang_refine for alpha = 0");
    if (params.max_iters < 0 || params.max_halvings < 1 || !(params.tol > 0.0) || !(params.armijo_c > 0.0)) {
        throw ConfigError("optimize: invalid optimizer parameters");
    }
    const TimeGrid& time = problem.time_grid();
    const double dt = time.dt();

    Evaluation cur;
    cur.u = params.initial ? project_control(*params.initial, problem.bound) : zero_control(problem.state.grid, time);
    if (cur.u.size() != time.steps) throw ConfigError("optimize: initial control has wrong length");
    cur.solutions = solve_all(problem, cur.u, params.threads);
    cur.cost = cost_psi(problem, cur.u, cur.solutions);
    complete(problem, cur, params.threads, dt);

    OptimizerReport report;
    report.cost.push_back(cur.cost);
    report.residual.push_back(cur.residual);

    // The first trial step 1/α maps u to the feedback law P_U(-(1/α) e^{-W} p).
    double step = 1.0 / problem.alpha;
    for (int k = 0;; ++k) {
        if (cur.residual <= params.tol) {
            report.termination = Termination::converged;
            break;
        }
        if (k >= params.max_iters) {
            report.termination = Termination::max_iterations;
            break;
        }
        Evaluation next;
        double s = step;
        int halvings = 0;
        for (;; ++halvings) {
            next.u = cur.u;
            for (std::size_t n = 0; n < next.u.size(); ++n) {
                for (std::size_t i = 0; i < next.u[n].size(); ++i) next.u[n][i] -= s * cur.gradient[n][i];
            }
            next.u = project_control(next.u, problem.bound);
            FieldSeries delta = next.u;
            for (std::size_t n = 0; n < delta.size(); ++n) delta[n] -= cur.u[n];
            const double decrease = control_inner(cur.gradient, delta, dt);
            next.solutions = solve_all(problem, next.u, params.threads);
            next.cost = cost_psi(problem, next.u, next.solutions);
            if (next.cost <= cur.cost + params.armijo_c * decrease) break;
            if (halvings + 1 >= params.max_halvings) {
                throw NumericError("optimize: line search failed after " + std::to_string(params.max_halvings) +
                                       " halvings at iteration " + std::to_string(k) + " (Ψ = " +
                                       std::to_string(cur.cost) + ", residual " + std::to_string(cur.residual) + ")",
                                   cur.residual);
            }
            s *= 0.5;
        }
        complete(problem, next, params.threads, dt);

        // Barzilai–Borwein step from the accepted pair.
        double ss = 0.0, sy = 0.0;
        for (std::size_t n = 0; n < next.u.size(); ++n) {
            const ScalarField du = next.u[n] - cur.u[n];
            const ScalarField dg = next.gradient[n] - cur.gradient[n];
            ss += dt * inner_l2(du, du);
            sy += dt * inner_l2(du, dg);
        }
        step = (sy > 0.0 && ss > 0.0) ? std::clamp(ss / sy, 1e-10, 1e10) : std::min(2.0 * s, 1e10);

        report.step.push_back(s);
        report.halvings.push_back(halvings);
        report.cost.push_back(next.cost);
        report.residual.push_back(next.residual);
        report.iterations = k + 1;
        cur = std::move(next);
    }

    report.control = std::move(cur.u);
    report.scaled_adjoint = std::move(cur.scaled_adjoint);
    report.gradient = std::move(cur.gradient);
    report.solutions = std::move(cur.solutions);
    report.adjoints = std::move(cur.adjoints);
    return report;
}

BangBangResult bang_bang_refine(const FieldSeries& p, double bound, std::optional<double> deadband) {
    if (!(bound > 0.0)) throw ConfigError("bang_bang_refine: bound must be positive");
    double sup = 0.0;
    std::size_t total = 0;
    for (const ScalarField& f : p) {
        sup = std::max(sup, norm_linf(f));
        total += f.size();
    }
    BangBangResult out;
    out.deadband = deadband.value_or(1e-8 * sup);
    if (out.deadband < 0.0) throw ConfigError("bang_bang_refine: deadband must be ≥ 0");
    std::size_t dead = 0;
    out.control.reserve(p.size());
    for (const ScalarField& f : p) {
        ScalarField u(f.grid());
        for (std::size_t i = 0; i < f.size(); ++i) {
            if (f[i] > out.deadband) {
                u[i] = -bound;
            } else if (f[i] < -out.deadband) {
                u[i] = bound;
            } else {
                ++dead;
            }
        }
        out.control.push_back(std::move(u));
    }
    out.deadband_fraction = total == 0 ? 1.0 : static_cast<double>(dead) / static_cast<double>(total);
    return out;
}

double saturation_fraction(const ControlSeries& u, const FieldSeries& p, double bound, double deadband,
                           double threshold) {
    if (u.size() > p.size()) throw ConfigError("saturation_fraction: adjoint shorter than control");
    std::size_t active = 0, saturated = 0;
    for (std::size_t n = 0; n < u.size(); ++n) {
        for (std::size_t i = 0; i < u[n].size(); ++i) {
            if (std::abs(p[n][i]) <= deadband) continue;
            ++active;
            if (std::abs(u[n][i]) >= threshold * bound) ++saturated;
        }
    }
    return active == 0 ? 1.0 : static_cast<double>(saturated) / static_cast<double>(active);
}

double variational_inequality_gap(const ControlSeries& u, const FieldSeries& gradient, double bound, double dt,
                                  std::size_t samples, std::uint64_t seed) {
    if (u.size() != gradient.size()) throw ConfigError("variational_inequality_gap: length mismatch");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(-bound, bound);
    const double weight = u.empty() ? 0.0 : dt * u.front().grid().cell_volume();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < samples; ++s) {
        double acc = 0.0;
        for (std::size_t n = 0; n < u.size(); ++n) {
            for (std::size_t i = 0; i < u[n].size(); ++i) acc += gradient[n][i] * (uniform(rng) - u[n][i]);
        }
        best = std::min(best, weight * acc);
    }
    return best;
}

}  // namespace sfhn
