#include "ringlaw/detail/text.hpp"

#include <cstdio>

namespace ringlaw::detail {

std::string format_double(double value) {
  char buffer[32];
  const int n = std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return std::string(buffer, static_cast<std::size_t>(n));
}

}  // namespace ringlaw::detail
