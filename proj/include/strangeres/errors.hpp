#pragma once

#include <stdexcept>
#include <string>

namespace sr {

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Integration blew past the coordinate cap; step_index is the offending step.
struct DivergenceError : std::runtime_error {
    std::size_t step_index;
    explicit DivergenceError(std::size_t step, const std::string& what)
        : std::runtime_error(what), step_index(step) {}
};

// Iterative estimate did not settle; carries the last iterate.
struct NotConvergedError : std::runtime_error {
    double last_estimate;
    NotConvergedError(double estimate, const std::string& what)
        : std::runtime_error(what), last_estimate(estimate) {}
};

struct ConstructionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct HypothesisViolatedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// GS series evaluation stopped early because the backward orbit diverged.
struct SeriesTruncatedError : std::runtime_error {
    std::size_t achieved_depth;
    double tail_bound;
    SeriesTruncatedError(std::size_t depth, double bound, const std::string& what)
        : std::runtime_error(what), achieved_depth(depth), tail_bound(bound) {}
};

}  // namespace sr
