#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sfhn/state_solver.hpp"

namespace sfhn::harness {

enum class RunKind { forward, control, verify, sample_noise };
std::string to_string(RunKind kind);
RunKind run_kind_from_string(const std::string& name);

/// Spatial profile used for initial data, damping, forcing and targets.
///   constant: value
///   sine:     value · Π_axis sin(mode_axis π x_axis / L_axis)
///   bump:     value · exp(-Σ ((x_axis - center_axis)/width)²)
///   values:   explicit nodal values
struct Profile {
    std::string shape = "constant";
    double value = 0.0;
    std::array<int, 2> mode{1, 1};
    std::array<double, 2> center{0.5, 0.5};
    double width = 0.1;
    std::vector<double> values;

    static Profile constant(double v);
    static Profile bump(double amplitude, double center, double width);

    bool operator==(const Profile&) const = default;
};

ScalarField make_field(const SpatialGrid& grid, const Profile& profile);

struct GridConfig {
    int dimension = 1;
    std::array<std::size_t, 2> points{99, 1};
    std::array<double, 2> extent{1.0, 1.0};

    SpatialGrid build() const;
    bool operator==(const GridConfig&) const = default;
};

struct ModelConfig {
    DiffusionLaw diffusion = DiffusionLaw::cubic_monotone(0.1, 0.1);
    bool diffusion_enabled = true;
    IonicCubic ionic{0.5, 1.0};
    Profile damping = Profile::constant(0.1);
    Profile forcing = Profile::constant(0.0);
    Profile initial = Profile::bump(0.9, 0.35, 0.12);

    bool operator==(const ModelConfig&) const = default;
};

struct NoiseConfig {
    bool enabled = true;
    std::size_t modes = 8;
    double decay = 1.5;

    bool operator==(const NoiseConfig&) const = default;
};

struct ControlConfig {
    double alpha = 0.1;
    double bound = 1.0;
    Profile running_target = Profile::bump(0.6, 0.6, 0.12);
    Profile terminal_target = Profile::bump(0.6, 0.6, 0.12);
    /// Replace both targets by the uncontrolled trajectory of the first path.
    bool targets_from_uncontrolled = false;
    /// "frozen" (first seed only) or "ensemble" (average over all seeds).
    std::string mode = "frozen";
    /// Used when alpha = 0: continuation ladder before the bang-bang extraction.
    std::vector<double> alpha_continuation{1e-1, 1e-2, 1e-3};
    double tol = 1e-4;
    int max_iters = 200;
    bool flip_adjoint_sign = false;

    bool operator==(const ControlConfig&) const = default;
};

struct VerifyConfig {
    std::vector<int> criteria{1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::size_t sde_paths = 200;
    std::size_t screen_seeds = 50;
    std::size_t residual_seeds = 50;
    std::size_t mollify_seeds = 10;
    std::size_t gradient_directions = 10;
    /// Target for the α-continuation suite; deliberately out of reach under M.
    Profile saturation_target = Profile::bump(3.0, 0.6, 0.12);

    bool operator==(const VerifyConfig&) const = default;
};

struct OutputConfig {
    std::string directory = "out";
    std::size_t checkpoints = 11;
    bool trajectories = true;

    bool operator==(const OutputConfig&) const = default;
};

struct ExperimentConfig {
    RunKind kind = RunKind::forward;
    GridConfig grid;
    ModelConfig model;
    NoiseConfig noise;
    double horizon = 1.0;
    std::size_t steps = 400;
    std::vector<std::uint64_t> seeds{0};
    StepperParams stepper;
    ControlConfig control;
    VerifyConfig verify;
    OutputConfig output;

    bool operator==(const ExperimentConfig&) const = default;
};

/// Parses JSON text. Errors carry `source:line:column` for syntax problems and
/// the dotted field path (e.g. `control.alpha`) for type or range problems.
/// Unknown keys are rejected.
ExperimentConfig parse_config(std::string_view text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON (sorted keys, two-space indent, trailing newline).
std::string serialize_config(const ExperimentConfig& config);

/// Git blob SHA-1 of serialize_config(config).
std::string content_hash(const ExperimentConfig& config);

/// SHA-1 in git blob framing ("blob <size>\0" + bytes).
std::string git_blob_sha1(std::string_view bytes);

/// Inclusive range "a..b" or a single integer.
std::vector<std::uint64_t> parse_seed_range(const std::string& text);

TimeGrid build_time_grid(const ExperimentConfig& config);
StateProblem build_state_problem(const ExperimentConfig& config);

}  // namespace sfhn::harness
