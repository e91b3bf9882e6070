#pragma once

#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "sfhn/harness/config.hpp"

namespace sfhn::harness {

/// Least-squares line through (log x, log y) with a 95% Student-t interval on the slope.
struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};
SlopeFit fit_log_slope(const std::vector<double>& x, const std::vector<double>& y);

struct Check {
    std::string metric;
    double value = 0.0;
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
    bool passed = false;
};

struct LadderRow {
    std::string series;
    double step = 0.0;  ///< dt, h or ε
    double error = 0.0;
};

struct SuiteResult {
    int criterion = 0;
    std::string name;
    std::vector<Check> checks;
    std::vector<LadderRow> ladder;
    nlohmann::json details = nlohmann::json::object();
    double seconds = 0.0;

    bool passed() const;
};

/// Runs the suites listed in config.verify.criteria using the configured
/// problem as the base case.
std::vector<SuiteResult> run_verification(const ExperimentConfig& config, unsigned threads = 1);

SuiteResult suite_rescaling_equivalence(const ExperimentConfig& config, unsigned threads);
SuiteResult suite_deterministic_convergence(const ExperimentConfig& config, unsigned threads);
SuiteResult suite_yosida(const ExperimentConfig& config, unsigned threads);
SuiteResult suite_linf_screen(const ExperimentConfig& config, unsigned threads);
SuiteResult suite_adjoint_gradient(const ExperimentConfig& config, unsigned threads);
SuiteResult suite_optimizer(const ExperimentConfig& config, unsigned threads);
SuiteResult suite_bang_bang(const ExperimentConfig& config, unsigned threads);
SuiteResult suite_strong_residual(const ExperimentConfig& config, unsigned threads);
SuiteResult suite_mollification(const ExperimentConfig& config, unsigned threads);

}  // namespace sfhn::harness
