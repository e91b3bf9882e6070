#include "sfhn/harness/setup.hpp"

#include "sfhn/errors.hpp"

namespace sfhn::harness {

WienerPath path_for_seed(const StateProblem& problem, const TimeGrid& time, std::optional<std::uint64_t> seed) {
    if (!problem.noise_enabled || !seed) return deterministic_path(time);
    return sample_path(problem.noise, time, *seed);
}

std::vector<std::uint64_t> suite_seeds(const ExperimentConfig& config, std::size_t count) {
    const std::uint64_t base = config.seeds.empty() ? 0 : config.seeds.front();
    std::vector<std::uint64_t> seeds(count);
    for (std::size_t k = 0; k < count; ++k) seeds[k] = base + k;
    return seeds;
}

ControlProblem build_control_problem(const ExperimentConfig& config) {
    ControlProblem problem(build_state_problem(config));
    problem.stepper = config.stepper;
    problem.alpha = config.control.alpha;
    problem.bound = config.control.bound;
    problem.flip_adjoint_sign = config.control.flip_adjoint_sign;
    const TimeGrid time = build_time_grid(config);
    if (problem.state.noise_enabled && config.seeds.empty()) {
        throw ConfigError("control: noise is enabled but the seed list is empty");
    }
    if (!problem.state.noise_enabled || config.seeds.empty()) {
        problem.paths.push_back(deterministic_path(time));
    } else if (config.control.mode == "frozen") {
        problem.paths.push_back(sample_path(problem.state.noise, time, config.seeds.front()));
    } else {
        for (std::uint64_t s : config.seeds) problem.paths.push_back(sample_path(problem.state.noise, time, s));
    }
    const SpatialGrid& grid = problem.state.grid;
    if (config.control.targets_from_uncontrolled) {
        const ControlSeries zero = zero_control(grid, time);
        const StateSolution base = solve_forward(problem.state, problem.stepper, problem.paths.front(), &zero);
        problem.running_target = base.x;
        problem.terminal_target = base.x.back();
    } else {
        problem.running_target = {make_field(grid, config.control.running_target)};
        problem.terminal_target = make_field(grid, config.control.terminal_target);
    }
    problem.validate();
    return problem;
}

}  // namespace sfhn::harness
