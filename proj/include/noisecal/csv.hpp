#pragma once

#include <string>

namespace noisecal {

/// Shortest decimal text that round-trips to the same double.
[[nodiscard]] std::string format_double(double value);

}  // namespace noisecal
