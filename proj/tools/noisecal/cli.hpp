#pragma once

#include <ostream>

namespace noisecal::cli {

/// Exit codes: 0 success, 2 usage or validation error, 3 numeric error.
/// Errors are reported as one JSON line on `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace noisecal::cli
