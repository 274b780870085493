#pragma once

#include <stdexcept>
#include <string>

namespace gradforge {

// Tensor/layer dimension mismatches. The message always names the offending shapes.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Domain violations: bad labels, invalid hyperparameters, non-finite gradients.
struct ValueError : std::runtime_error {
    explicit ValueError(const std::string& msg) : std::runtime_error(msg) {}
};

// File-level failures: missing files, size mismatches, malformed containers.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Command-line misuse; maps to exit code 2.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace gradforge
