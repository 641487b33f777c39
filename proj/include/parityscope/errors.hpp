#pragma once

#include <stdexcept>
#include <string>

namespace parityscope {

// Charge-basis truncation did not converge within the allowed dimension.
struct TruncationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// |f_e - f_o| fell below the configured floor; the parity mapping is unusable.
struct UnusableOffsetCharge : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Two Ramsey tones closer than the spectral resolution.
struct DegenerateTones : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Least-squares minimizer failed (iteration cap or singular Jacobian).
struct FitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// g > 0 with no loss channel: the rate equation has no steady state.
struct NoSteadyState : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace parityscope
