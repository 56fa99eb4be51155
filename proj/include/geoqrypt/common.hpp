#pragma once

#include <stdexcept>
#include <string>

namespace geoqrypt {

// Propagation speed of the ranging signals, m/s. Exact by definition.
inline constexpr double speed_of_light = 299792458.0;

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A caller handed in something that violates an operation's contract.
struct precondition_error : error {
    using error::error;
};

// A quantum check came back inconsistent with honest execution.
struct tamper_error : error {
    using error::error;
};

// Station layout does not pin down a position (Fisher matrix rank < 2).
struct degenerate_geometry_error : error {
    using error::error;
};

// Iterative solver failed to settle.
struct estimation_error : error {
    using error::error;
};

// Covariance matrix outside the domain an operation supports.
struct covariance_error : error {
    using error::error;
};

} // namespace geoqrypt
