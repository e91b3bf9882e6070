#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "sfhn/errors.hpp"
#include "sfhn/state_solver.hpp"
#include "support.hpp"

using namespace sfhn;

namespace {

StateProblem pure_heat(std::size_t points) {
    StateProblem p(SpatialGrid::line(points));
    p.diffusion = DiffusionLaw::linear(1.0);
    p.ionic = IonicCubic(0.5, 0.0);
    p.damping = ScalarField(p.grid, 0.0);
    p.noise_enabled = false;
    return p;
}

StateProblem reaction_only(std::size_t points, std::size_t modes) {
    StateProblem p(SpatialGrid::line(points));
    p.diffusion_enabled = false;
    p.damping = ScalarField(p.grid, 0.1);
    p.noise = NoiseModel::spectral(p.grid, modes, 1.5);
    p.noise_enabled = modes > 0;
    p.initial = ScalarField::sample(p.grid, [](double x, double) { return 0.9 * std::sin(M_PI * x); });
    return p;
}

/// Solves z + dt·G_ε(z) + dt·c·z = rhs by bisection.
double scalar_step(const IonicCubic& g, double eps, double dt, double c, double rhs) {
    auto f = [&](double z) { return z + dt * yosida_G(g, eps, z) + dt * c * z - rhs; };
    double lo = -10.0 - std::abs(rhs), hi = 10.0 + std::abs(rhs);
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("zero data gives the zero trajectory on every seed") {
    StateProblem p(SpatialGrid::line(49));
    p.noise = NoiseModel::spectral(p.grid, 6, 1.5);
    p.damping = ScalarField(p.grid, 0.1);
    p.diffusion = DiffusionLaw::cubic_monotone(0.1, 0.1);
    const TimeGrid t(1.0, 100);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const StateSolution s = solve_forward(p, {}, sample_path(p.noise, t, seed));
        for (std::size_t n = 0; n < t.nodes(); ++n) {
            CHECK(norm_linf(s.y[n]) == 0.0);
            CHECK(norm_linf(s.x[n]) == 0.0);
        }
        CHECK(strong_solution_residual(s, p) == 0.0);
    }
    const WienerPath path = sample_path(p.noise, t, 3);
    CHECK(norm_linf(step_rescaled(ScalarField(p.grid), 0, p, {}, path)) == 0.0);
}

TEST_CASE("heat step decays the first eigenmode by 1/(1 + dt λ₁)") {
    StateProblem p = pure_heat(63);
    const EigenPair e1 = laplacian_eigenpairs(p.grid, 1).front();
    p.initial = e1.eigenfunction;
    p.horizon = 0.1;
    const TimeGrid t(0.1, 10);
    const StateSolution s = solve_forward(p, {}, deterministic_path(t));
    for (std::size_t n = 0; n < t.nodes(); ++n) {
        ScalarField expect = e1.eigenfunction;
        expect *= std::pow(1.0 / (1.0 + t.dt() * e1.eigenvalue), static_cast<double>(n));
        CHECK(test::max_abs_diff(s.y[n], expect) <= 1e-12);
    }
    // per-step distance to the semigroup e^{-dt λ₁} is O(dt²)
    double prev = 0.0;
    for (double dt : {1e-3, 5e-4, 2.5e-4}) {
        const double err = std::abs(1.0 / (1.0 + dt * e1.eigenvalue) - std::exp(-dt * e1.eigenvalue));
        if (prev > 0.0) CHECK(prev / err == doctest::Approx(4.0).epsilon(0.05));
        prev = err;
    }
}

TEST_CASE("diffusion-off step matches a per-node scalar solve") {
    StateProblem p = reaction_only(21, 1);
    p.noise = NoiseModel({0.8}, laplacian_eigenpairs(p.grid, 1));
    const TimeGrid t(1.0, 50);
    const WienerPath path = sample_path(p.noise, t, 11);
    StepperParams params;
    params.newton_tol = 1e-13;
    const ScalarField mu = ito_correction_field(p.noise);
    ScalarField y = p.initial;
    for (std::size_t n = 0; n < 5; ++n) {
        const ScalarField next = step_rescaled(y, n, p, params, path);
        const ScalarField w0 = evaluate_W(path, p.noise, n), w1 = evaluate_W(path, p.noise, n + 1);
        for (std::size_t i = 0; i < p.grid.size(); ++i) {
            const double rhs = std::exp(w1[i]) * y[i];
            const double z = scalar_step(p.ionic, params.yosida_epsilon, t.dt(), p.damping[i] + mu[i], rhs);
            CHECK(next[i] == doctest::Approx(std::exp(-w1[i]) * z).epsilon(1e-10));
        }
        (void)w0;
        y = next;
    }
}

TEST_CASE("X equals e^W y and y₀ equals x₀") {
    StateProblem p(SpatialGrid::line(31));
    p.noise = NoiseModel::spectral(p.grid, 5, 1.5);
    p.damping = ScalarField(p.grid, 0.1);
    p.initial = ScalarField::sample(p.grid, [](double x, double) { return std::sin(M_PI * x); });
    const TimeGrid t(1.0, 80);
    const WienerPath path = sample_path(p.noise, t, 2);
    const StateSolution s = solve_forward(p, {}, path);
    CHECK(s.y.front() == p.initial);
    CHECK(s.x.front() == p.initial);
    for (std::size_t n = 0; n < t.nodes(); ++n) {
        const ScalarField w = evaluate_W(path, p.noise, n);
        for (std::size_t i = 0; i < p.grid.size(); ++i) {
            const double x = std::exp(w[i]) * s.y[n][i];
            CHECK(std::abs(s.x[n][i] - x) <= 1e-12 * std::max(1.0, std::abs(x)));
        }
    }
    CHECK(s.diagnostics.sup_y.size() == t.nodes());
    CHECK(s.diagnostics.newton_iterations.size() == t.steps);
}

TEST_CASE("forcing is taken at the new time level and u at the old one") {
    StateProblem p = reaction_only(5, 0);
    p.ionic = IonicCubic(0.5, 0.0);
    p.damping = ScalarField(p.grid, 0.0);
    p.initial = ScalarField(p.grid, 0.0);
    const SpatialGrid g = p.grid;
    p.forcing = [g](double t) { return ScalarField(g, t); };
    const TimeGrid t(1.0, 20);
    const StateSolution s = solve_forward(p, {}, deterministic_path(t));
    const double dt = t.dt(), n = 20.0;
    CHECK(s.x.back()[2] == doctest::Approx(dt * dt * n * (n + 1) / 2).epsilon(1e-12));

    p.forcing = {};
    ControlSeries u;
    for (std::size_t k = 0; k < t.steps; ++k) u.emplace_back(g, static_cast<double>(k));
    const StateSolution c = solve_forward(p, {}, deterministic_path(t), &u);
    CHECK(c.x.back()[0] == doctest::Approx(dt * (n - 1) * n / 2).epsilon(1e-12));
}

TEST_CASE("geometric node: implicit closed form and Itô exact solution") {
    StateProblem p = reaction_only(9, 1);
    p.ionic = IonicCubic(0.5, 0.0);
    p.damping = ScalarField(p.grid, 0.0);
    p.noise = NoiseModel({0.5}, laplacian_eigenpairs(p.grid, 1));
    const ScalarField mu = ito_correction_field(p.noise);
    const std::size_t node = 4;

    const TimeGrid fine(1.0, 1600);
    std::vector<double> scheme_err(4, 0.0), oracle_err(4, 0.0);
    const int paths = 200;
    for (int k = 0; k < paths; ++k) {
        const WienerPath base = sample_path(p.noise, fine, 500 + k);
        const double exact = p.initial[node] * std::exp(evaluate_W(base, p.noise, fine.steps)[node] - mu[node]);
        for (std::size_t level = 0; level < 4; ++level) {
            const WienerPath path = base.coarsen(std::size_t{8} >> level);
            const TimeGrid& t = path.time_grid();
            const StateSolution s = solve_forward(p, {}, path);
            const double w = evaluate_W(path, p.noise, t.steps)[node];
            const double closed = p.initial[node] * std::exp(w) / std::pow(1.0 + t.dt() * mu[node], t.steps);
            CHECK(std::abs(s.x.back()[node] - closed) <= 1e-12 * std::abs(closed));
            scheme_err[level] += std::pow(s.x.back()[node] - exact, 2) / paths;
            oracle_err[level] += std::pow(scalar_sde_oracle(p, path).back()[node] - exact, 2) / paths;
        }
    }
    for (std::size_t level = 1; level < 4; ++level) {
        CHECK(scheme_err[level] < scheme_err[level - 1]);
        CHECK(oracle_err[level] < oracle_err[level - 1]);
    }
}

TEST_CASE("oracle is constant in time with zero drift and zero noise") {
    StateProblem p = reaction_only(9, 0);
    p.ionic = IonicCubic(0.5, 0.0);
    p.damping = ScalarField(p.grid, 0.0);
    p.noise = NoiseModel({0.0, 0.0}, laplacian_eigenpairs(p.grid, 2));
    p.noise_enabled = true;
    const FieldSeries x = scalar_sde_oracle(p, sample_path(p.noise, TimeGrid(1.0, 30), 4));
    for (const ScalarField& xn : x) CHECK(xn == p.initial);
    p.diffusion_enabled = true;
    CHECK_THROWS_AS(scalar_sde_oracle(p, sample_path(p.noise, TimeGrid(1.0, 30), 4)), ConfigError);
}

TEST_CASE("strong error against Euler-Maruyama shrinks like sqrt(dt)") {
    StateProblem p = reaction_only(15, 4);
    const TimeGrid fine(1.0, 800);
    std::vector<double> err(3, 0.0);
    const int paths = 200;
    for (int k = 0; k < paths; ++k) {
        const WienerPath base = sample_path(p.noise, fine, 9000 + k);
        for (std::size_t level = 0; level < 3; ++level) {
            const WienerPath path = base.coarsen(std::size_t{4} >> level);
            const ScalarField diff = solve_forward(p, {}, path).x.back() - scalar_sde_oracle(p, path).back();
            err[level] += std::pow(norm_l2(diff), 2) / paths;
        }
    }
    for (double& e : err) e = std::sqrt(e);
    const double slope = std::log(err[0] / err[2]) / std::log(4.0);
    CHECK(slope >= 0.35);
    CHECK(slope <= 0.65);
}

TEST_CASE("sup norm is non-increasing from data in [0, 1]") {
    StateProblem p(SpatialGrid::line(49));
    p.diffusion = DiffusionLaw::cubic_monotone(0.1, 0.1);
    p.damping = ScalarField(p.grid, 0.1);
    p.noise_enabled = false;
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const TimeGrid t(1.0, 100);
    for (int trial = 0; trial < 20; ++trial) {
        for (std::size_t i = 0; i < p.grid.size(); ++i) p.initial[i] = unit(rng);
        const StateSolution s = solve_forward(p, {}, deterministic_path(t));
        for (std::size_t n = 1; n < t.nodes(); ++n) {
            CHECK(s.diagnostics.sup_y[n] <= s.diagnostics.sup_y[n - 1] + 1e-12);
            CHECK(*std::min_element(s.y[n].values().begin(), s.y[n].values().end()) >= -1e-12);
        }
    }
}

TEST_CASE("boundedness and energy screen") {
    StateProblem p(SpatialGrid::line(49));
    p.diffusion = DiffusionLaw::cubic_monotone(0.1, 0.1);
    p.damping = ScalarField(p.grid, 0.1);
    p.noise = NoiseModel::spectral(p.grid, 8, 1.5);
    p.initial = ScalarField::sample(p.grid, [](double x, double) { return 0.9 * std::exp(-std::pow((x - 0.35) / 0.12, 2)); });
    const TimeGrid t(1.0, 200);
    const double bound = 10.0 * (1.0 + norm_linf(p.initial));
    double energy_max = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const StateSolution s = solve_forward(p, {}, sample_path(p.noise, t, seed));
        CHECK(s.diagnostics.sup_y_overall() <= bound);
        const double e = s.diagnostics.energy(t.dt());
        CHECK(e >= norm_l2(p.initial) * norm_l2(p.initial));
        energy_max = std::max(energy_max, e);
    }
    CHECK(std::isfinite(energy_max));
}

TEST_CASE("overflow guard and Newton failure") {
    StateProblem p(SpatialGrid::line(19));
    p.noise = NoiseModel::spectral(p.grid, 3, 1.5);
    p.damping = ScalarField(p.grid, 0.1);
    p.initial = ScalarField(p.grid, 0.5);
    StepperParams tight;
    tight.overflow_guard = 1e-3;
    const WienerPath path = sample_path(p.noise, TimeGrid(1.0, 50), 1);
    CHECK_THROWS_AS(solve_forward(p, tight, path), OverflowAbort);

    StateProblem q = pure_heat(19);
    q.ionic = IonicCubic(0.5, 1.0);
    q.diffusion = DiffusionLaw::cubic_monotone(1.0, 5.0);
    q.initial = ScalarField(q.grid, 20.0);
    StepperParams starved;
    starved.newton_max_iters = 1;
    starved.newton_tol = 1e-14;
    starved.newton_polish = false;
    try {
        solve_forward(q, starved, deterministic_path(TimeGrid(1.0, 4)));
        FAIL("expected a Newton failure");
    } catch (const OverflowAbort&) {
        FAIL("wrong error type");
    } catch (const NumericError& e) {
        CHECK(e.residual() > 1e-14);
    }

    StepperParams bad;
    bad.newton_tol = 0.0;
    CHECK_THROWS_AS(solve_forward(q, bad, deterministic_path(TimeGrid(1.0, 4))), ConfigError);
    StateProblem neg = pure_heat(9);
    neg.damping = ScalarField(neg.grid, -1.0);
    CHECK_THROWS_AS(solve_forward(neg, {}, deterministic_path(TimeGrid(1.0, 4))), ConfigError);
    CHECK_THROWS_AS(solve_forward(p, {}, sample_path(p.noise, TimeGrid(2.0, 4), 0)), ConfigError);
}

TEST_CASE("strong residual") {
    StateProblem p = pure_heat(39);
    p.initial = ScalarField::sample(p.grid, [](double x, double) { return std::sin(M_PI * x); });
    std::vector<double> res;
    for (std::size_t steps : {100, 200, 400}) {
        res.push_back(strong_solution_residual(solve_forward(p, {}, deterministic_path(TimeGrid(1.0, steps))), p));
    }
    CHECK(res[0] / res[1] == doctest::Approx(2.0).epsilon(0.1));
    CHECK(res[1] / res[2] == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("two-dimensional run") {
    StateProblem p(SpatialGrid::rectangle(15, 11));
    p.diffusion = DiffusionLaw::cubic_monotone(0.1, 0.1);
    p.damping = ScalarField(p.grid, 0.1);
    p.noise = NoiseModel::spectral(p.grid, 4, 1.5);
    p.initial = ScalarField::sample(p.grid, [](double x, double y) { return std::sin(M_PI * x) * std::sin(M_PI * y); });
    const StateSolution s = solve_forward(p, {}, sample_path(p.noise, TimeGrid(1.0, 40), 0));
    CHECK(s.x.back().all_finite());
    CHECK(s.diagnostics.sup_y_overall() <= 10.0 * (1.0 + norm_linf(p.initial)));
}
