#pragma once

#include <stdexcept>
#include <string>

namespace sfhn {

/// Invalid input: bad parameters, mismatched grids, malformed configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed; `residual()` carries the last measured defect.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what, double residual = 0.0)
        : std::runtime_error(what), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// |W| exceeded the guard on some path; the path is aborted, never silently dropped.
class OverflowAbort : public NumericError {
public:
    OverflowAbort(const std::string& what, double w_sup, std::size_t step)
        : NumericError(what, w_sup), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

}  // namespace sfhn
