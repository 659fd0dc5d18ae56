#pragma once

#include <stdexcept>
#include <string>

namespace smallgain {

/// Base class for all toolkit errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An evaluation argument exceeded the certified domain cap of a function.
/// The caller must enlarge the cap (or the problem's S_max).
struct DomainExceeded : Error {
    using Error::Error;
};

/// An inversion target lies above the range reachable within the cap.
/// Distinct from DomainExceeded: the argument was fine, the value is not.
struct RangeExceeded : Error {
    using Error::Error;
};

/// Numeric inversion was requested for a function that is not strictly
/// increasing on its domain.
struct NotStrictlyIncreasing : Error {
    using Error::Error;
};

/// A tree construction would violate the comparison-class closure rules.
struct ClassClosureError : Error {
    using Error::Error;
};

/// The output algebraic loop did not contract at the evaluation point.
struct LoopDivergence : Error {
    using Error::Error;
};

/// The envelope fixed-point iteration did not converge within its budget.
struct EnvelopeDivergence : Error {
    using Error::Error;
};

/// A tabulated function was queried outside its grid (extend-grid signal).
struct GridExceeded : Error {
    using Error::Error;
};

/// Function-grammar text could not be parsed.
struct ParseError : Error {
    using Error::Error;
};

/// An operation was invoked before its prerequisites were established
/// (e.g. computing an offset for an infeasible gain pair).
struct InfeasiblePrecondition : Error {
    using Error::Error;
};

}  // namespace smallgain
