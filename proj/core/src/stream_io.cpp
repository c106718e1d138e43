#include "ringlaw/stream_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "ringlaw/error.hpp"
#include "ringlaw/detail/text.hpp"

namespace ringlaw {

void write_stream(std::ostream& out, const MeasurementStream& stream,
                  std::string_view comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "time";
  for (BusId id : stream.bus_ids()) out << ",bus_" << id;
  out << '\n';
  const auto& samples = stream.samples();
  std::string row;
  for (std::size_t k = 0; k < stream.size(); ++k) {
    row = std::to_string(stream.timestamps()[k]);
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
      row += ',';
      row += detail::format_double(samples(i, static_cast<Eigen::Index>(k)));
    }
    row += '\n';
    out << row;
  }
  if (!out) throw IoError("failed writing stream");
}

MeasurementStream read_stream(std::istream& in, std::string_view source,
                              std::vector<std::string>* comments) {
  const std::string prefix = std::string(source) + ":";
  std::string line;
  std::size_t number = 0;
  std::vector<BusId> ids;
  bool have_header = false;
  std::vector<TimeIndex> times;
  std::vector<double> values;  // time-major
  while (std::getline(in, line)) {
    ++number;
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    if (text.front() == '#') {
      if (comments) comments->emplace_back(detail::trim(text.substr(1)));
      continue;
    }
    const auto fields = detail::split_fields(text);
    if (!have_header) {
      if (fields.empty() || fields[0] != "time") {
        throw FormatError(prefix + std::to_string(number) +
                          ": header must start with 'time'");
      }
      for (std::size_t c = 1; c < fields.size(); ++c) {
        const auto f = fields[c];
        const auto id = f.starts_with("bus_")
                            ? detail::parse_number<int>(f.substr(4))
                            : std::nullopt;
        if (!id) {
          throw FormatError(prefix + std::to_string(number) + ": column " +
                            std::to_string(c + 1) + " header '" +
                            std::string(f) + "' is not bus_<id>");
        }
        ids.push_back(*id);
      }
      have_header = true;
      continue;
    }
    if (fields.size() != ids.size() + 1) {
      throw FormatError(prefix + std::to_string(number) + ": row has " +
                        std::to_string(fields.size()) + " fields, expected " +
                        std::to_string(ids.size() + 1));
    }
    const auto t = detail::parse_number<TimeIndex>(fields[0]);
    if (!t) {
      throw FormatError(prefix + std::to_string(number) + ": bad time '" +
                        std::string(fields[0]) + "'");
    }
    times.push_back(*t);
    for (std::size_t c = 1; c < fields.size(); ++c) {
      const auto v = detail::parse_number<double>(fields[c]);
      if (!v) {
        throw FormatError(prefix + std::to_string(number) + ": column " +
                          std::to_string(c + 1) + " value '" +
                          std::string(fields[c]) + "' is not a number");
      }
      values.push_back(*v);
    }
  }
  if (!have_header) throw FormatError(prefix + " missing header row");
  const auto n = static_cast<Eigen::Index>(ids.size());
  const auto m = static_cast<Eigen::Index>(times.size());
  Eigen::MatrixXd samples(n, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      samples(i, k) = values[static_cast<std::size_t>(k * n + i)];
    }
  }
  try {
    return MeasurementStream(std::move(times), std::move(ids),
                             std::move(samples));
  } catch (const InvalidArgument& e) {
    throw FormatError(prefix + " " + e.what());
  }
}

void export_stream(const MeasurementStream& stream,
                   const std::filesystem::path& path,
                   std::string_view comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_stream(out, stream, comment);
}

MeasurementStream import_stream(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_stream(in, path.string());
}

}  // namespace ringlaw
