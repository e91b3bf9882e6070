#include "sfhn/noise.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <string>

#include "sfhn/errors.hpp"

namespace sfhn {

TimeGrid::TimeGrid(double horizon_, std::size_t steps_) : horizon(horizon_), steps(steps_) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("time grid: horizon must be positive");
    if (steps == 0) throw ConfigError("time grid: need at least one step");
}

NoiseModel::NoiseModel(std::vector<double> coefficients, std::vector<EigenPair> modes)
    : grid_(modes.empty() ? SpatialGrid::line(3) : modes.front().eigenfunction.grid()),
      coefficients_(std::move(coefficients)),
      modes_(std::move(modes)) {
    if (coefficients_.size() != modes_.size()) {
        throw ConfigError("noise model: one coefficient per mode required");
    }
    for (std::size_t j = 0; j < modes_.size(); ++j) {
        require_same_grid(grid_, modes_[j].eigenfunction, "noise model modes");
        if (!std::isfinite(coefficients_[j])) throw ConfigError("noise model: non-finite coefficient");
        const double sup = norm_linf(modes_[j].eigenfunction);
        convergence_sum_ += coefficients_[j] * coefficients_[j] * sup * sup;
    }
}

NoiseModel NoiseModel::spectral(const SpatialGrid& grid, std::size_t modes, double decay) {
    std::vector<EigenPair> pairs = laplacian_eigenpairs(grid, modes);
    std::vector<double> mu(modes);
    for (std::size_t j = 0; j < modes; ++j) mu[j] = std::pow(static_cast<double>(j + 1), -decay);
    NoiseModel model(std::move(mu), std::move(pairs));
    model.grid_ = grid;
    return model;
}

NoiseModel NoiseModel::none(const SpatialGrid& grid) {
    NoiseModel model({}, {});
    model.grid_ = grid;
    return model;
}

WienerPath::WienerPath(TimeGrid time, std::size_t modes, std::vector<double> beta, std::uint64_t seed)
    : time_(time), modes_(modes), beta_(std::move(beta)), seed_(seed) {
    if (beta_.size() != modes_ * time_.nodes()) {
        throw ConfigError("WienerPath: beta table has wrong size");
    }
}

WienerPath WienerPath::coarsen(std::size_t factor) const {
    if (factor == 0 || time_.steps % factor != 0) {
        throw ConfigError("WienerPath::coarsen: factor must divide the step count");
    }
    const TimeGrid coarse(time_.horizon, time_.steps / factor);
    std::vector<double> beta(modes_ * coarse.nodes());
    for (std::size_t j = 0; j < modes_; ++j) {
        for (std::size_t n = 0; n < coarse.nodes(); ++n) beta[j * coarse.nodes() + n] = this->beta(j, n * factor);
    }
    return WienerPath(coarse, modes_, std::move(beta), seed_);
}

namespace {

double bump(double s) noexcept {
    if (std::abs(s) >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - s * s));
}

// ∫_{-1}^{1} exp(-1/(1-s²)) ds. The integrand is flat to all orders at ±1, so
// the trapezoid rule converges faster than any power of the spacing.
double bump_mass() {
    static const double mass = [] {
        constexpr int n = 1 << 14;
        const double h = 2.0 / n;
        double sum = 0.0;
        for (int i = 1; i < n; ++i) sum += bump(-1.0 + i * h);
        return sum * h;
    }();
    return mass;
}

}  // namespace

MollifierSpec::MollifierSpec(double epsilon_) : epsilon(epsilon_) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("mollifier: epsilon must be positive");
}

double MollifierSpec::kernel(double t) const noexcept { return bump(t / epsilon) / (epsilon * bump_mass()); }

WienerPath sample_path(const NoiseModel& model, const TimeGrid& time, std::uint64_t seed) {
    const std::size_t modes = model.mode_count();
    std::vector<double> beta(modes * time.nodes(), 0.0);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sd = std::sqrt(time.dt());
    // Time-major draw order: increment n of every mode before increment n+1.
    for (std::size_t n = 0; n < time.steps; ++n) {
        for (std::size_t j = 0; j < modes; ++j) {
            beta[j * time.nodes() + n + 1] = beta[j * time.nodes() + n] + sd * normal(rng);
        }
    }
    return WienerPath(time, modes, std::move(beta), seed);
}

namespace {

void require_compatible(const WienerPath& path, const NoiseModel& model, std::size_t n) {
    if (path.mode_count() != model.mode_count()) {
        throw ConfigError("noise path has " + std::to_string(path.mode_count()) + " modes, model has " +
                          std::to_string(model.mode_count()));
    }
    if (n >= path.time_grid().nodes()) throw ConfigError("time index out of range");
}

}  // namespace

ScalarField evaluate_W(const WienerPath& path, const NoiseModel& model, std::size_t n) {
    require_compatible(path, model, n);
    ScalarField w(model.grid());
    for (std::size_t j = 0; j < model.mode_count(); ++j) {
        const double amp = model.coefficient(j) * path.beta(j, n);
        if (amp == 0.0) continue;
        const ScalarField& e = model.mode(j);
        for (std::size_t i = 0; i < w.size(); ++i) w[i] += amp * e[i];
    }
    return w;
}

ScalarField evaluate_dW(const WienerPath& path, const NoiseModel& model, std::size_t n) {
    require_compatible(path, model, n + 1);
    ScalarField w(model.grid());
    for (std::size_t j = 0; j < model.mode_count(); ++j) {
        const double amp = model.coefficient(j) * path.increment(j, n);
        const ScalarField& e = model.mode(j);
        for (std::size_t i = 0; i < w.size(); ++i) w[i] += amp * e[i];
    }
    return w;
}

WienerPath mollify_path(const WienerPath& path, const MollifierSpec& spec) {
    const TimeGrid& time = path.time_grid();
    const double dt = time.dt();
    if (spec.epsilon < 2.0 * dt * (1.0 - 1e-12)) {
        throw ConfigError("mollify_path: epsilon must be at least 2 dt");
    }
    const auto reach = static_cast<std::ptrdiff_t>(std::floor(spec.epsilon / dt));
    std::vector<double> weights;
    double total = 0.0;
    for (std::ptrdiff_t k = -reach; k <= reach; ++k) {
        const double w = spec.kernel(static_cast<double>(k) * dt) * dt;
        weights.push_back(w);
        total += w;
    }
    for (double& w : weights) w /= total;

    const auto nodes = static_cast<std::ptrdiff_t>(time.nodes());
    std::vector<double> beta(path.mode_count() * time.nodes());
    for (std::size_t j = 0; j < path.mode_count(); ++j) {
        for (std::ptrdiff_t n = 0; n < nodes; ++n) {
            double acc = 0.0;
            for (std::ptrdiff_t k = -reach; k <= reach; ++k) {
                const std::ptrdiff_t m = std::clamp<std::ptrdiff_t>(n - k, 0, nodes - 1);
                acc += weights[static_cast<std::size_t>(k + reach)] * path.beta(j, static_cast<std::size_t>(m));
            }
            beta[j * time.nodes() + static_cast<std::size_t>(n)] = acc;
        }
    }
    return WienerPath(time, path.mode_count(), std::move(beta), path.seed());
}

ScalarField ito_correction_field(const NoiseModel& model) {
    ScalarField mu(model.grid());
    for (std::size_t j = 0; j < model.mode_count(); ++j) {
        const double c2 = model.coefficient(j) * model.coefficient(j);
        const ScalarField& e = model.mode(j);
        for (std::size_t i = 0; i < mu.size(); ++i) mu[i] += 0.5 * c2 * e[i] * e[i];
    }
    return mu;
}

ScalarField exp_W(const WienerPath& path, const NoiseModel& model, std::size_t n, int sign) {
    if (sign != 1 && sign != -1) throw ConfigError("exp_W: sign must be +1 or -1");
    ScalarField w = evaluate_W(path, model, n);
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (std::abs(w[i]) > 700.0) throw NumericError("exp_W: |W| exceeds 700", std::abs(w[i]));
        w[i] = std::exp(sign * w[i]);
    }
    return w;
}

void write_path_csv(std::ostream& out, const WienerPath& path) {
    out << "t,mode,beta\n";
    out.precision(17);
    const TimeGrid& time = path.time_grid();
    for (std::size_t n = 0; n < time.nodes(); ++n) {
        for (std::size_t j = 0; j < path.mode_count(); ++j) {
            out << time.time(n) << ',' << (j + 1) << ',' << path.beta(j, n) << '\n';
        }
    }
}

}  // namespace sfhn
