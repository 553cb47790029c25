#pragma once

#include <stdexcept>
#include <string>

namespace constmoran {

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Denominator of a statistic collapsed (constant input, degenerate lag, ...).
struct zero_variance_error : error {
    using error::error;
};

struct parse_error : error {
    using error::error;
};

// A resample failed to reach its Moran target within the proposal budget.
struct convergence_error : error {
    using error::error;
};

} // namespace constmoran
