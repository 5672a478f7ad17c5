#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace metatask {

/// Invalid configuration, malformed input files, or violated preconditions.
/// The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// A numeric computation produced NaN/Inf or training diverged.
/// The CLI maps this to exit code 3.
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
    DivergenceError(const std::string& what, std::size_t iteration)
        : std::runtime_error(what), iteration_(static_cast<long>(iteration)) {}

    /// Iteration at which training diverged, or -1 when not applicable.
    long iteration() const { return iteration_; }

private:
    long iteration_ = -1;
};

}  // namespace metatask
