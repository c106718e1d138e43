#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "ringlaw/rmt.hpp"

namespace ringlaw::cli {

/// Key-frame times of the bundled event scenario.
inline constexpr std::array<TimeIndex, 6> kKeyFrames = {300, 301, 302,
                                                        420, 820, 826};

/// Runs one `ringlaw` invocation. `args` excludes the program name; `-` as a
/// path means `in` or `out`. Returns the process exit code: 0 success,
/// 2 usage or input error, 1 numerical or internal failure.
int run(const std::vector<std::string>& args, std::istream& in,
        std::ostream& out, std::ostream& err);

}  // namespace ringlaw::cli
