#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sfhn/harness/config.hpp"

namespace sfhn::harness {

enum ExitCode : int { exit_ok = 0, exit_config = 1, exit_numeric = 2, exit_verification = 3 };

struct PathRecord {
    std::optional<std::uint64_t> seed;  ///< empty for the deterministic run
    std::string status;                 ///< completed | aborted-overflow | failed-numeric
    std::string reason;
};

struct FileRecord {
    std::string name;  ///< relative to the output directory
    std::uintmax_t bytes = 0;
    std::string sha1;  ///< git blob hash of the contents
};

/// Written as manifest.json next to the data files. Timing lives only here,
/// so data files of repeated runs compare byte for byte.
struct RunManifest {
    std::string kind;
    std::string config_hash;
    std::string tool_version;
    std::vector<PathRecord> paths;
    std::string started_utc;
    double wall_seconds = 0.0;
    std::vector<FileRecord> files;
    nlohmann::json summary = nlohmann::json::object();
    int exit_code = exit_ok;
};

struct RunOptions {
    std::filesystem::path out;
    unsigned threads = 1;
};

RunManifest cmd_forward(const ExperimentConfig& config, const RunOptions& options);
RunManifest cmd_control(const ExperimentConfig& config, const RunOptions& options);
RunManifest cmd_verify(const ExperimentConfig& config, const RunOptions& options);
RunManifest cmd_sample_noise(const ExperimentConfig& config, const RunOptions& options);

/// Dispatches on config.kind.
RunManifest run_experiment(const ExperimentConfig& config, const RunOptions& options);

nlohmann::json manifest_to_json(const RunManifest& manifest);

}  // namespace sfhn::harness
