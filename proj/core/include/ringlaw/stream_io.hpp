#pragma once

// Stream CSV: header `time,bus_<id1>,...,bus_<idn>`, one row per sample,
// values with 17 significant digits. Lines starting with `#` are comments.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ringlaw/window_engine.hpp"

namespace ringlaw {

/// `comment`, when non-empty, is written as a leading `# ...` line.
void write_stream(std::ostream& out, const MeasurementStream& stream,
                  std::string_view comment = {});
/// Comment lines (without the leading `#` and blank) go to `comments`.
MeasurementStream read_stream(std::istream& in,
                              std::string_view source = "<stream>",
                              std::vector<std::string>* comments = nullptr);

void export_stream(const MeasurementStream& stream,
                   const std::filesystem::path& path,
                   std::string_view comment = {});
MeasurementStream import_stream(const std::filesystem::path& path);

}  // namespace ringlaw
