#include "series_io.hpp"

#include <istream>
#include <ostream>
#include <string>

#include "ringlaw/detail/text.hpp"
#include "ringlaw/error.hpp"

namespace ringlaw::cli {
namespace {

struct CsvLine {
  std::size_t number;
  std::vector<std::string_view> fields;
};

// Splits a CSV document into comment lines and data lines; the returned
// views point into `storage`.
std::vector<CsvLine> read_csv(std::istream& in, std::vector<std::string>& storage,
                              std::vector<std::string>& comments) {
  std::string line;
  std::vector<std::size_t> numbers;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    if (text.front() == '#') {
      comments.emplace_back(detail::trim(text.substr(1)));
      continue;
    }
    storage.emplace_back(text);
    numbers.push_back(number);
  }
  std::vector<CsvLine> lines;
  for (std::size_t k = 0; k < storage.size(); ++k) {
    lines.push_back({numbers[k], detail::split_fields(storage[k])});
  }
  return lines;
}

std::string where(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line) + ": ";
}

template <class T>
T require_number(std::string_view text, std::string_view source,
                 std::size_t line, std::string_view what) {
  const auto v = detail::parse_number<T>(text);
  if (!v) {
    throw FormatError(where(source, line) + std::string(what) + " '" +
                      std::string(text) + "' is not a number");
  }
  return *v;
}

template <class T>
T header_number(const Header& header, const std::string& key,
                std::string_view source) {
  const auto text = header.get(key);
  if (!text) {
    throw FormatError(std::string(source) + ": header lacks " + key);
  }
  const auto v = detail::parse_number<T>(*text);
  if (!v) {
    throw FormatError(std::string(source) + ": header " + key + " '" + *text +
                      "' is not a number");
  }
  return *v;
}

Header require_header(const std::vector<std::string>& comments,
                      std::string_view kind, std::string_view source) {
  auto header = find_header(comments);
  if (!header || header->kind != kind) {
    throw FormatError(std::string(source) + ": missing '# ringlaw " +
                      std::string(kind) + " ...' header");
  }
  return *header;
}

}  // namespace

void write_series(std::ostream& out, const SeriesTable& table) {
  if (table.series.empty() || table.series.front().scope != kGridScope) {
    throw InvalidArgument("series table must start with the grid scope");
  }
  const auto& grid = table.series.front();
  Header header = table.header;
  header.kind = "series";
  header.set("window_len", std::to_string(grid.window_len));
  header.set("factors", std::to_string(grid.factors));
  std::string rows;
  for (const auto& s : table.series) {
    if (s.times != grid.times) {
      throw InvalidArgument("series " + s.scope + " has different times");
    }
    if (!rows.empty()) rows += ';';
    rows += s.scope + ":" + std::to_string(s.n_rows);
  }
  header.set("rows", rows);

  std::string text = "# " + header.format() + "\ntime";
  for (const auto& s : table.series) text += ",msr_" + s.scope;
  text += ",conformance_grid\n";
  for (std::size_t k = 0; k < grid.times.size(); ++k) {
    text += std::to_string(grid.times[k]);
    for (const auto& s : table.series) {
      text += ',';
      text += detail::format_double(s.values[k]);
    }
    text += ',';
    text += detail::format_double(grid.conformance[k].fraction);
    text += '\n';
  }
  out << text;
  if (!out) throw IoError("failed writing series");
}

SeriesTable read_series(std::istream& in, std::string_view source) {
  std::vector<std::string> storage;
  std::vector<std::string> comments;
  const auto lines = read_csv(in, storage, comments);
  SeriesTable table;
  table.header = require_header(comments, "series", source);
  const auto window_len =
      header_number<Eigen::Index>(table.header, "window_len", source);
  const auto factors = header_number<int>(table.header, "factors", source);
  const auto rows = table.header.get("rows");
  if (!rows) throw FormatError(std::string(source) + ": header lacks rows");
  for (const auto item : detail::split_fields(*rows, ';')) {
    const auto colon = item.find(':');
    const auto n = colon == std::string_view::npos
                       ? std::nullopt
                       : detail::parse_number<Eigen::Index>(item.substr(colon + 1));
    if (!n) {
      throw FormatError(std::string(source) + ": bad rows entry '" +
                        std::string(item) + "'");
    }
    MsrSeries s;
    s.scope = std::string(item.substr(0, colon));
    s.n_rows = *n;
    s.window_len = window_len;
    s.factors = factors;
    table.series.push_back(std::move(s));
  }
  if (table.series.empty() || table.series.front().scope != kGridScope) {
    throw FormatError(std::string(source) + ": rows must start with grid");
  }

  if (lines.empty()) throw FormatError(std::string(source) + ": missing header row");
  const auto& head = lines.front();
  const std::size_t width = table.series.size() + 2;
  bool ok = head.fields.size() == width && head.fields.front() == "time" &&
            head.fields.back() == "conformance_grid";
  for (std::size_t c = 0; ok && c < table.series.size(); ++c) {
    ok = head.fields[c + 1] == "msr_" + table.series[c].scope;
  }
  if (!ok) {
    throw FormatError(where(source, head.number) +
                      "columns do not match the rows header");
  }
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto& line = lines[k];
    if (line.fields.size() != width) {
      throw FormatError(where(source, line.number) + "row has " +
                        std::to_string(line.fields.size()) +
                        " fields, expected " + std::to_string(width));
    }
    const auto t =
        require_number<TimeIndex>(line.fields[0], source, line.number, "time");
    for (std::size_t c = 0; c < table.series.size(); ++c) {
      auto& s = table.series[c];
      s.times.push_back(t);
      s.values.push_back(require_number<double>(line.fields[c + 1], source,
                                                line.number, "value"));
      s.conformance.push_back(ConformanceReport{});
    }
    table.series.front().conformance.back().fraction = require_number<double>(
        line.fields.back(), source, line.number, "conformance");
  }
  return table;
}

void write_spectrum(std::ostream& out, const SpectrumTable& table) {
  Header header = table.header;
  header.kind = "spectrum";
  std::string text = "# " + header.format() + "\nindex,re,im,radius\n";
  const auto& s = table.spectrum;
  for (std::size_t k = 0; k < s.size(); ++k) {
    text += std::to_string(k) + ',' + detail::format_double(s.eigenvalues[k].real()) +
            ',' + detail::format_double(s.eigenvalues[k].imag()) + ',' +
            detail::format_double(s.radii[k]) + '\n';
  }
  out << text;
  if (!out) throw IoError("failed writing spectrum");
}

SpectrumTable read_spectrum(std::istream& in, std::string_view source) {
  std::vector<std::string> storage;
  std::vector<std::string> comments;
  const auto lines = read_csv(in, storage, comments);
  SpectrumTable table;
  table.header = require_header(comments, "spectrum", source);
  if (lines.empty() || lines.front().fields !=
                           std::vector<std::string_view>{"index", "re", "im", "radius"}) {
    throw FormatError(std::string(source) +
                      ": header row must be index,re,im,radius");
  }
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto& line = lines[k];
    if (line.fields.size() != 4) {
      throw FormatError(where(source, line.number) + "row has " +
                        std::to_string(line.fields.size()) +
                        " fields, expected 4");
    }
    const double re = require_number<double>(line.fields[1], source, line.number, "re");
    const double im = require_number<double>(line.fields[2], source, line.number, "im");
    table.spectrum.eigenvalues.emplace_back(re, im);
    table.spectrum.radii.push_back(
        require_number<double>(line.fields[3], source, line.number, "radius"));
  }
  return table;
}

}  // namespace ringlaw::cli
