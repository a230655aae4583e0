#pragma once

#include <stdexcept>
#include <string>

namespace noisecal {

/// Bad input: malformed config, out-of-range parameter, violated precondition.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A computation that cannot produce a meaningful number (assumption
/// violation, collapsed estimate, unresolved grid).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ResolutionError : public NumericError {
public:
    using NumericError::NumericError;
};

}  // namespace noisecal
