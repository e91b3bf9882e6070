#include "sfhn/harness/verify.hpp"

#include <chrono>
#include <cmath>
#include <optional>
#include <random>
#include <string>

#include "sfhn/control.hpp"
#include "sfhn/errors.hpp"
#include "sfhn/harness/setup.hpp"
#include "sfhn/parallel.hpp"

namespace sfhn::harness {

namespace {

// Two-sided 95% Student-t quantiles, df = 1..30.
constexpr double kT95[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
                           2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
                           2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};

Check within(std::string metric, double value, double lower, double upper) {
    return Check{std::move(metric), value, lower, upper, value >= lower && value <= upper};
}

Check strictly_below(std::string metric, double value, double upper) {
    return Check{std::move(metric), value, -std::numeric_limits<double>::infinity(), upper, value < upper};
}

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

template <class F>
SuiteResult timed(int criterion, std::string name, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    SuiteResult r;
    r.criterion = criterion;
    r.name = std::move(name);
    body(r);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

void add_fit(SuiteResult& r, const std::string& key, const SlopeFit& fit) {
    r.details[key] = {{"slope", fit.slope},
                      {"stderr", fit.stderr_slope},
                      {"ci95", {fit.ci_low, fit.ci_high}},
                      {"intercept", fit.intercept}};
}

double l2_distance(const ScalarField& a, const ScalarField& b) { return norm_l2(a - b); }

// Manufactured solution v = e^{-t} sin(πx) on the unit interval with matching source.
struct Manufactured {
    StateProblem problem;
    double horizon;
};

Manufactured manufactured_problem(const ExperimentConfig& config, std::size_t points) {
    const SpatialGrid grid = SpatialGrid::line(points, 1.0);
    StateProblem p(grid);
    p.diffusion = DiffusionLaw::linear(1.0);
    p.ionic = config.model.ionic;
    p.damping = ScalarField(grid, 0.1);
    p.noise = NoiseModel::none(grid);
    p.noise_enabled = false;
    p.horizon = config.horizon;
    p.initial = ScalarField::sample(grid, [](double x, double) { return std::sin(M_PI * x); });
    const IonicCubic ionic = p.ionic;
    p.forcing = [grid, ionic](double t) {
        return ScalarField::sample(grid, [&](double x, double) {
            const double v = std::exp(-t) * std::sin(M_PI * x);
            return (M_PI * M_PI - 1.0) * v + ionic_eval(ionic, v) + 0.1 * v;
        });
    };
    return {std::move(p), config.horizon};
}

double manufactured_error(const Manufactured& m, const StepperParams& params, std::size_t steps) {
    const TimeGrid time(m.horizon, steps);
    const WienerPath path = deterministic_path(time);
    ScalarField y = m.problem.initial;
    for (std::size_t n = 0; n < steps; ++n) y = step_rescaled(y, n, m.problem, params, path);
    const ScalarField exact = ScalarField::sample(
        m.problem.grid, [&](double x, double) { return std::exp(-m.horizon) * std::sin(M_PI * x); });
    return l2_distance(y, exact);
}

ControlSeries smooth_control(const SpatialGrid& grid, const TimeGrid& time, double amplitude) {
    ControlSeries u = zero_control(grid, time);
    for (std::size_t n = 0; n < u.size(); ++n) {
        const double t = time.time(n);
        u[n] = ScalarField::sample(grid, [&](double x, double y) {
            return amplitude * std::sin(3.0 * x + 2.0 * t) * std::cos(1.5 * y);
        });
    }
    return u;
}

std::vector<double> per_halving_ratios(const std::vector<double>& errors) {
    std::vector<double> r;
    for (std::size_t i = 0; i + 1 < errors.size(); ++i) r.push_back(errors[i] / errors[i + 1]);
    return r;
}

}  // namespace

bool SuiteResult::passed() const {
    if (checks.empty()) return false;
    for (const Check& c : checks) {
        if (!c.passed) return false;
    }
    return true;
}

SlopeFit fit_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ConfigError("fit_log_slope: need at least two points");
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw NumericError("fit_log_slope: nonpositive value", y[i]);
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
        mx += lx[i] / n;
        my += ly[i] / n;
    }
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    SlopeFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (n > 2) {
        double sse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = ly[i] - fit.intercept - fit.slope * lx[i];
            sse += e * e;
        }
        fit.stderr_slope = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
        const std::size_t df = n - 2;
        const double t = df <= 30 ? kT95[df - 1] : 1.96;
        fit.ci_low = fit.slope - t * fit.stderr_slope;
        fit.ci_high = fit.slope + t * fit.stderr_slope;
    } else {
        fit.ci_low = fit.ci_high = fit.slope;
    }
    return fit;
}

SuiteResult suite_rescaling_equivalence(const ExperimentConfig& config, unsigned threads) {
    return timed(1, "rescaling_equivalence", [&](SuiteResult& r) {
        StateProblem problem = build_state_problem(config);
        problem.diffusion_enabled = false;
        problem.noise_enabled = true;
        problem.noise = NoiseModel::spectral(problem.grid, config.noise.modes == 0 ? 8 : config.noise.modes,
                                             config.noise.decay);
        const std::vector<std::size_t> steps{200, 400, 800};
        const TimeGrid fine(config.horizon, steps.back());
        const std::vector<std::uint64_t> seeds = suite_seeds(config, config.verify.sde_paths);

        std::vector<std::vector<double>> sq(seeds.size(), std::vector<double>(steps.size(), 0.0));
        std::vector<int> aborted(seeds.size(), 0);
        parallel_for(seeds.size(), threads, [&](std::size_t k) {
            const WienerPath path = sample_path(problem.noise, fine, seeds[k]);
            try {
                for (std::size_t l = 0; l < steps.size(); ++l) {
                    const WienerPath p = path.coarsen(steps.back() / steps[l]);
                    const StateSolution sol = solve_forward(problem, config.stepper, p);
                    const FieldSeries em = scalar_sde_oracle(problem, p);
                    const double d = l2_distance(sol.x.back(), em.back());
                    sq[k][l] = d * d;
                }
            } catch (const OverflowAbort&) {
                aborted[k] = 1;
            }
        });
        std::vector<double> rms(steps.size(), 0.0), dts;
        std::size_t used = 0;
        for (std::size_t k = 0; k < seeds.size(); ++k) {
            if (aborted[k]) continue;
            ++used;
            for (std::size_t l = 0; l < steps.size(); ++l) rms[l] += sq[k][l];
        }
        for (std::size_t l = 0; l < steps.size(); ++l) {
            rms[l] = std::sqrt(rms[l] / static_cast<double>(std::max<std::size_t>(used, 1)));
            dts.push_back(config.horizon / static_cast<double>(steps[l]));
            r.ladder.push_back({"rms_strong_error", dts.back(), rms[l]});
        }
        const std::vector<double> ratios = per_halving_ratios(rms);
        for (std::size_t i = 0; i < ratios.size(); ++i) {
            r.checks.push_back(within("error_ratio_dt" + fmt(dts[i]) + "_to_dt" + fmt(dts[i + 1]), ratios[i], 1.2, 1.7));
        }
        const SlopeFit fit = fit_log_slope(dts, rms);
        r.checks.push_back(within("fitted_slope", fit.slope, 0.35, 0.65));
        r.checks.push_back(within("aborted_paths", static_cast<double>(seeds.size() - used), 0.0, 0.0));
        add_fit(r, "fit", fit);
        r.details["paths"] = seeds.size();
    });
}

SuiteResult suite_deterministic_convergence(const ExperimentConfig& config, unsigned threads) {
    return timed(2, "deterministic_convergence", [&](SuiteResult& r) {
        StepperParams params = config.stepper;
        params.diffusion_regularization = 0.0;

        const std::vector<std::size_t> dt_steps{10, 20, 40, 80};
        const Manufactured fine_space = manufactured_problem(config, 199);
        std::vector<double> dts, dt_err(dt_steps.size());
        parallel_for(dt_steps.size(), threads,
                     [&](std::size_t i) { dt_err[i] = manufactured_error(fine_space, params, dt_steps[i]); });
        for (std::size_t i = 0; i < dt_steps.size(); ++i) {
            dts.push_back(config.horizon / static_cast<double>(dt_steps[i]));
            r.ladder.push_back({"temporal_l2_error", dts.back(), dt_err[i]});
        }

        const std::vector<std::size_t> points{9, 19, 39, 79};
        const std::size_t fine_steps = 40000;
        std::vector<double> hs, h_err(points.size());
        parallel_for(points.size(), threads, [&](std::size_t i) {
            h_err[i] = manufactured_error(manufactured_problem(config, points[i]), params, fine_steps);
        });
        for (std::size_t i = 0; i < points.size(); ++i) {
            hs.push_back(1.0 / static_cast<double>(points[i] + 1));
            r.ladder.push_back({"spatial_l2_error", hs.back(), h_err[i]});
        }
        const SlopeFit ft = fit_log_slope(dts, dt_err);
        const SlopeFit fs = fit_log_slope(hs, h_err);
        r.checks.push_back(within("temporal_order", ft.slope, 0.9, kInf));
        r.checks.push_back(within("spatial_order", fs.slope, 1.8, kInf));
        add_fit(r, "temporal_fit", ft);
        add_fit(r, "spatial_fit", fs);
        r.details["temporal_points"] = 199;
        r.details["spatial_steps"] = fine_steps;
    });
}

SuiteResult suite_yosida(const ExperimentConfig& config, unsigned) {
    return timed(3, "yosida_approximation", [&](SuiteResult& r) {
        const IonicCubic& g = config.model.ionic;
        const std::vector<double> eps{1e-1, 1e-2, 1e-3};
        std::vector<double> gap(eps.size(), 0.0);
        double residual = 0.0;
        for (std::size_t e = 0; e < eps.size(); ++e) {
            for (int k = 0; k <= 400; ++k) {
                const double z = -2.0 + 4.0 * k / 400.0;
                const double w = resolvent_G(g, eps[e], z);
                residual = std::max(residual, std::abs(w + eps[e] * ionic_eval(g, w) - z));
                gap[e] = std::max(gap[e], std::abs(yosida_G(g, eps[e], z) - ionic_eval(g, z)));
            }
            r.ladder.push_back({"sup_gap", eps[e], gap[e]});
        }
        for (std::size_t e = 0; e + 1 < eps.size(); ++e) {
            r.checks.push_back(strictly_below("gap_ratio_eps" + fmt(eps[e + 1]) + "_over_eps" + fmt(eps[e]),
                                              gap[e + 1] / gap[e], 1.0));
        }
        r.checks.push_back(within("max_resolvent_residual", residual, 0.0, 1e-12));
    });
}

SuiteResult suite_linf_screen(const ExperimentConfig& config, unsigned threads) {
    return timed(4, "linf_screen", [&](SuiteResult& r) {
        const StateProblem problem = build_state_problem(config);
        const TimeGrid time = build_time_grid(config);
        const std::vector<std::uint64_t> seeds = suite_seeds(config, config.verify.screen_seeds);
        std::vector<double> sup(seeds.size(), 0.0);
        std::vector<int> aborted(seeds.size(), 0);
        parallel_for(seeds.size(), threads, [&](std::size_t k) {
            try {
                sup[k] = solve_forward(problem, config.stepper, path_for_seed(problem, time, seeds[k]))
                             .diagnostics.sup_y_overall();
            } catch (const OverflowAbort&) {
                aborted[k] = 1;
            }
        });
        double worst = 0.0;
        int aborts = 0;
        for (std::size_t k = 0; k < seeds.size(); ++k) {
            worst = std::max(worst, sup[k]);
            aborts += aborted[k];
        }
        const double bound = 10.0 * (1.0 + norm_linf(problem.initial));
        r.checks.push_back(within("sup_abs_y", worst, 0.0, bound));
        r.checks.push_back(within("overflow_aborts", aborts, 0.0, 0.0));
        r.details["seeds"] = seeds.size();
    });
}

SuiteResult suite_adjoint_gradient(const ExperimentConfig& config, unsigned) {
    return timed(5, "adjoint_gradient", [&](SuiteResult& r) {
        ExperimentConfig frozen = config;
        frozen.control.mode = "frozen";
        const ControlProblem problem = build_control_problem(frozen);
        const TimeGrid& time = problem.time_grid();
        const double dt = time.dt();
        const SpatialGrid& grid = problem.state.grid;
        const ControlSeries u = smooth_control(grid, time, 0.3 * problem.bound);
        const StateSolution sol = solve_forward(problem.state, problem.stepper, problem.paths.front(), &u);
        const AdjointSolution adj = solve_adjoint(problem, sol);
        const FieldSeries g = gradient_field(u, adj, sol, problem.alpha);
        FieldSeries q(adj.p.begin(), adj.p.end() - 1);
        for (std::size_t n = 0; n < q.size(); ++n) {
            for (std::size_t i = 0; i < q[n].size(); ++i) q[n][i] /= sol.exp_w[n][i];
        }

        std::mt19937_64 rng(config.seeds.empty() ? 0 : config.seeds.front());
        std::normal_distribution<double> normal(0.0, 1.0);
        const double lambda = 1e-5;
        double worst_duality = 0.0, worst_fd = 0.0;
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t k = 0; k < config.verify.gradient_directions; ++k) {
            ControlSeries d = zero_control(grid, time);
            for (ScalarField& f : d) {
                for (std::size_t i = 0; i < f.size(); ++i) f[i] = normal(rng);
            }
            const FieldSeries dy = solve_variation(problem, sol, d);
            double lhs = inner_l2(adj.p.back(), dy.back());
            for (std::size_t n = 0; n < dy.size(); ++n) lhs += dt * inner_l2(adj.source[n], dy[n]);
            const double rhs = control_inner(q, d, dt);
            const double duality = std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-300});

            ControlSeries up = u, um = u;
            for (std::size_t n = 0; n < u.size(); ++n) {
                for (std::size_t i = 0; i < u[n].size(); ++i) {
                    up[n][i] += lambda * d[n][i];
                    um[n][i] -= lambda * d[n][i];
                }
            }
            const double fd =
                (path_cost(problem, up, solve_forward(problem.state, problem.stepper, problem.paths.front(), &up)) -
                 path_cost(problem, um, solve_forward(problem.state, problem.stepper, problem.paths.front(), &um))) /
                (2.0 * lambda);
            const double analytic = control_inner(g, d, dt);
            const double rel = std::abs(fd - analytic) / std::max(std::abs(analytic), 1e-300);
            worst_duality = std::max(worst_duality, duality);
            worst_fd = std::max(worst_fd, rel);
            rows.push_back({{"direction", k}, {"duality_rel", duality}, {"fd", fd}, {"adjoint", analytic},
                            {"fd_rel", rel}});
        }
        r.checks.push_back(within("max_duality_rel_error", worst_duality, 0.0, 1e-10));
        r.checks.push_back(within("max_fd_rel_error", worst_fd, 0.0, 1e-3));
        r.details["directions"] = rows;
        r.details["lambda"] = lambda;
        r.details["flip_adjoint_sign"] = problem.flip_adjoint_sign;
    });
}

SuiteResult suite_optimizer(const ExperimentConfig& config, unsigned threads) {
    return timed(6, "optimizer_contract", [&](SuiteResult& r) {
        ExperimentConfig frozen = config;
        frozen.control.mode = "frozen";
        if (!(frozen.control.alpha > 0.0)) frozen.control.alpha = 0.1;
        const ControlProblem problem = build_control_problem(frozen);
        OptimizerParams params;
        params.tol = config.control.tol;
        params.max_iters = config.control.max_iters;
        params.threads = threads;
        const OptimizerReport rep = optimize(problem, params);
        double worst_increase = -kInf;
        for (std::size_t k = 0; k + 1 < rep.cost.size(); ++k) {
            worst_increase = std::max(worst_increase, rep.cost[k + 1] - rep.cost[k]);
        }
        if (rep.cost.size() < 2) worst_increase = 0.0;
        r.checks.push_back(within("max_cost_increase", worst_increase, -kInf, 0.0));
        const double residual = fixed_point_residual(rep.control, rep.scaled_adjoint, problem.alpha, problem.bound,
                                                     problem.time_grid().dt());
        r.checks.push_back(within("fixed_point_residual", residual, 0.0, 1e-4));
        r.checks.push_back(within("cost_ratio_final_over_uncontrolled", rep.cost.back() / rep.cost.front(), 0.0, 0.9));
        for (std::size_t k = 0; k < rep.cost.size(); ++k) r.ladder.push_back({"cost", double(k), rep.cost[k]});
        r.details["iterations"] = rep.iterations;
        r.details["termination"] = to_string(rep.termination);
        r.details["cost_uncontrolled"] = rep.cost.front();
        r.details["cost_final"] = rep.cost.back();
        r.details["alpha"] = problem.alpha;
    });
}

SuiteResult suite_bang_bang(const ExperimentConfig& config, unsigned threads) {
    return timed(7, "bang_bang_continuation", [&](SuiteResult& r) {
        ExperimentConfig frozen = config;
        frozen.control.mode = "frozen";
        frozen.control.targets_from_uncontrolled = false;
        frozen.control.running_target = config.verify.saturation_target;
        frozen.control.terminal_target = config.verify.saturation_target;
        frozen.control.alpha = config.control.alpha_continuation.empty() ? 0.1 : config.control.alpha_continuation.front();
        ControlProblem problem = build_control_problem(frozen);
        OptimizerParams params;
        params.tol = config.control.tol;
        params.max_iters = config.control.max_iters;
        params.threads = threads;

        std::vector<double> fractions;
        nlohmann::json rows = nlohmann::json::array();
        for (double alpha : config.control.alpha_continuation) {
            problem.alpha = alpha;
            const OptimizerReport rep = optimize(problem, params);
            double sup = 0.0;
            for (const ScalarField& f : rep.scaled_adjoint) sup = std::max(sup, norm_linf(f));
            const double delta = 1e-8 * sup;
            const double frac = saturation_fraction(rep.control, rep.scaled_adjoint, problem.bound, delta);
            fractions.push_back(frac);
            r.ladder.push_back({"saturation_fraction", alpha, frac});
            const BangBangResult bb = bang_bang_refine(rep.scaled_adjoint, problem.bound, delta);
            rows.push_back({{"alpha", alpha}, {"saturation_fraction", frac}, {"iterations", rep.iterations},
                            {"termination", to_string(rep.termination)}, {"cost", rep.cost.back()},
                            {"deadband_fraction", bb.deadband_fraction}});
            params.initial = rep.control;
        }
        for (std::size_t i = 0; i + 1 < fractions.size(); ++i) {
            r.checks.push_back(within("fraction_change_alpha" + fmt(config.control.alpha_continuation[i]) + "_to_" +
                                          fmt(config.control.alpha_continuation[i + 1]),
                                      fractions[i + 1] - fractions[i], 0.0, kInf));
        }
        r.checks.push_back(within("final_saturation_fraction", fractions.empty() ? 0.0 : fractions.back(), 0.95, 1.0));
        r.details["continuation"] = rows;
    });
}

SuiteResult suite_strong_residual(const ExperimentConfig& config, unsigned threads) {
    return timed(8, "strong_solution_residual", [&](SuiteResult& r) {
        StateProblem noisy = build_state_problem(config);
        if (!noisy.noise_enabled) {
            noisy.noise_enabled = true;
            noisy.noise = NoiseModel::spectral(noisy.grid, config.noise.modes == 0 ? 8 : config.noise.modes,
                                               config.noise.decay);
        }
        StateProblem quiet = noisy;
        quiet.noise_enabled = false;
        quiet.noise = NoiseModel::none(quiet.grid);

        const std::vector<std::size_t> steps{200, 400, 800};
        const TimeGrid fine(config.horizon, steps.back());
        const std::vector<std::uint64_t> seeds = suite_seeds(config, config.verify.residual_seeds);
        std::vector<std::vector<double>> sq(seeds.size(), std::vector<double>(steps.size(), 0.0));
        std::vector<int> aborted(seeds.size(), 0);
        parallel_for(seeds.size(), threads, [&](std::size_t k) {
            const WienerPath path = sample_path(noisy.noise, fine, seeds[k]);
            try {
                for (std::size_t l = 0; l < steps.size(); ++l) {
                    const StateSolution sol =
                        solve_forward(noisy, config.stepper, path.coarsen(steps.back() / steps[l]));
                    const double d = strong_solution_residual(sol, noisy);
                    sq[k][l] = d * d;
                }
            } catch (const OverflowAbort&) {
                aborted[k] = 1;
            }
        });
        std::vector<double> dts, rms(steps.size(), 0.0), det(steps.size(), 0.0);
        std::size_t used = 0;
        for (std::size_t k = 0; k < seeds.size(); ++k) {
            if (aborted[k]) continue;
            ++used;
            for (std::size_t l = 0; l < steps.size(); ++l) rms[l] += sq[k][l];
        }
        for (std::size_t l = 0; l < steps.size(); ++l) {
            dts.push_back(config.horizon / static_cast<double>(steps[l]));
            rms[l] = std::sqrt(rms[l] / static_cast<double>(std::max<std::size_t>(used, 1)));
            const StateSolution sol = solve_forward(quiet, config.stepper, deterministic_path(TimeGrid(config.horizon, steps[l])));
            det[l] = strong_solution_residual(sol, quiet);
            r.ladder.push_back({"noisy_rms_residual", dts[l], rms[l]});
            r.ladder.push_back({"deterministic_residual", dts[l], det[l]});
        }
        const SlopeFit fn = fit_log_slope(dts, rms);
        const SlopeFit fd = fit_log_slope(dts, det);
        r.checks.push_back(within("noisy_slope", fn.slope, 0.3, 0.7));
        r.checks.push_back(within("deterministic_slope", fd.slope, 0.8, 1.2));
        r.checks.push_back(within("aborted_paths", static_cast<double>(seeds.size() - used), 0.0, 0.0));
        add_fit(r, "noisy_fit", fn);
        add_fit(r, "deterministic_fit", fd);
        r.details["seeds"] = seeds.size();
    });
}

SuiteResult suite_mollification(const ExperimentConfig& config, unsigned threads) {
    return timed(9, "mollification_consistency", [&](SuiteResult& r) {
        StateProblem problem = build_state_problem(config);
        if (!problem.noise_enabled) {
            problem.noise_enabled = true;
            problem.noise = NoiseModel::spectral(problem.grid, config.noise.modes == 0 ? 8 : config.noise.modes,
                                                 config.noise.decay);
        }
        const TimeGrid time = build_time_grid(config);
        const double dt = time.dt();
        // Paths are drawn at half the solver step so that W_ε with ε = Δt is
        // still resolvable, then observed on the solver grid.
        const TimeGrid fine(config.horizon, 2 * config.steps);
        const std::vector<double> multiples{8.0, 4.0, 2.0, 1.0};
        const std::vector<std::uint64_t> seeds = suite_seeds(config, config.verify.mollify_seeds);
        std::vector<std::vector<double>> dist(seeds.size(), std::vector<double>(multiples.size() - 1, 0.0));
        parallel_for(seeds.size(), threads, [&](std::size_t k) {
            const WienerPath raw = sample_path(problem.noise, fine, seeds[k]);
            std::vector<ScalarField> final_y;
            for (double m : multiples) {
                const double eps = m * dt;
                StepperParams params = config.stepper;
                params.diffusion_regularization = eps;
                const WienerPath smooth = mollify_path(raw, MollifierSpec(eps)).coarsen(2);
                final_y.push_back(solve_forward(problem, params, smooth).y.back());
            }
            for (std::size_t e = 0; e + 1 < multiples.size(); ++e) dist[k][e] = l2_distance(final_y[e], final_y[e + 1]);
        });
        std::vector<double> mean(multiples.size() - 1, 0.0);
        int monotone_seeds = 0;
        for (std::size_t k = 0; k < seeds.size(); ++k) {
            bool mono = true;
            for (std::size_t e = 0; e < mean.size(); ++e) {
                mean[e] += dist[k][e] / static_cast<double>(seeds.size());
                if (e > 0 && !(dist[k][e] < dist[k][e - 1])) mono = false;
            }
            monotone_seeds += mono ? 1 : 0;
        }
        for (std::size_t e = 0; e < mean.size(); ++e) {
            r.ladder.push_back({"mean_cauchy_gap", multiples[e] * dt, mean[e]});
        }
        for (std::size_t e = 0; e + 1 < mean.size(); ++e) {
            r.checks.push_back(strictly_below("gap_ratio_eps" + fmt(multiples[e + 1]) + "dt_over_eps" +
                                                  fmt(multiples[e]) + "dt",
                                              mean[e + 1] / mean[e], 1.0));
        }
        r.details["seeds"] = seeds.size();
        r.details["seeds_monotone_individually"] = monotone_seeds;
    });
}

std::vector<SuiteResult> run_verification(const ExperimentConfig& config, unsigned threads) {
    std::vector<SuiteResult> out;
    for (int id : config.verify.criteria) {
        switch (id) {
            case 1: out.push_back(suite_rescaling_equivalence(config, threads)); break;
            case 2: out.push_back(suite_deterministic_convergence(config, threads)); break;
            case 3: out.push_back(suite_yosida(config, threads)); break;
            case 4: out.push_back(suite_linf_screen(config, threads)); break;
            case 5: out.push_back(suite_adjoint_gradient(config, threads)); break;
            case 6: out.push_back(suite_optimizer(config, threads)); break;
            case 7: out.push_back(suite_bang_bang(config, threads)); break;
            case 8: out.push_back(suite_strong_residual(config, threads)); break;
            case 9: out.push_back(suite_mollification(config, threads)); break;
            default: throw ConfigError("verify: unknown criterion " + std::to_string(id));
        }
    }
    return out;
}

}  // namespace sfhn::harness
