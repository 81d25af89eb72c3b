#pragma once

#include <stdexcept>
#include <string>

namespace geomsplat {

// Shape disagreement between operands.
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

// A precondition the caller was responsible for does not hold.
struct ContractError : std::runtime_error {
    explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

// An operation that requires a non-empty point cloud received one.
struct EmptyCloudError : ContractError {
    explicit EmptyCloudError(const std::string& msg) : ContractError(msg) {}
};

// Invalid configuration value or incompatible checkpoint.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values or other numerical breakdowns.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace geomsplat
