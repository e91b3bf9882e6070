#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sfhn/control.hpp"
#include "sfhn/harness/config.hpp"

namespace sfhn::harness {

/// Sampled path for `seed`, or the mode-free path when noise is off or no seed is given.
WienerPath path_for_seed(const StateProblem& problem, const TimeGrid& time, std::optional<std::uint64_t> seed);

/// `count` consecutive seeds starting at the first configured seed (0 if none).
std::vector<std::uint64_t> suite_seeds(const ExperimentConfig& config, std::size_t count);

/// Tracking problem from the config: frozen mode uses the first seed, ensemble
/// mode every seed. With targets_from_uncontrolled the targets are replaced
/// by the u = 0 trajectory of the first path.
ControlProblem build_control_problem(const ExperimentConfig& config);

}  // namespace sfhn::harness
