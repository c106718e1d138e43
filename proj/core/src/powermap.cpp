#include "ringlaw/powermap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "json.hpp"

#include "ringlaw/error.hpp"

namespace ringlaw {

namespace {

constexpr double kCoincident = 1e-9;

std::string hex64(std::uint64_t v) {
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx",
                static_cast<unsigned long long>(v));
  return buffer;
}

void write_bytes(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

bool is_missing(std::span<const std::string> missing, std::string_view name) {
  return std::find(missing.begin(), missing.end(), name) != missing.end();
}

}  // namespace

std::string_view to_string(Quantity quantity) {
  return quantity == Quantity::kVoltage ? "voltage" : "msr";
}

std::optional<Quantity> parse_quantity(std::string_view text) {
  if (text == "voltage") return Quantity::kVoltage;
  if (text == "msr") return Quantity::kMsr;
  return std::nullopt;
}

void MapSpec::validate() const {
  if (width < 2 || height < 2) {
    throw InvalidArgument("map width and height must be >= 2");
  }
  if (!(bbox.x_max > bbox.x_min && bbox.y_max > bbox.y_min)) {
    throw InvalidArgument("map bounding box is empty");
  }
  if (!(idw_power > 0.0)) throw InvalidArgument("IDW power must be > 0");
  if (neighbor_count && *neighbor_count < 1) {
    throw InvalidArgument("neighbor count must be >= 1");
  }
}

MapSpec map_spec_for(const GridTopology& topology, int width, int height,
                     double margin) {
  BoundingBox box{std::numeric_limits<double>::infinity(),
                  std::numeric_limits<double>::infinity(),
                  -std::numeric_limits<double>::infinity(),
                  -std::numeric_limits<double>::infinity()};
  for (const auto& bus : topology.buses()) {
    box.x_min = std::min(box.x_min, bus.x);
    box.y_min = std::min(box.y_min, bus.y);
    box.x_max = std::max(box.x_max, bus.x);
    box.y_max = std::max(box.y_max, bus.y);
  }
  const double pad_x = std::max(box.x_max - box.x_min, 1.0) * margin;
  const double pad_y = std::max(box.y_max - box.y_min, 1.0) * margin;
  box.x_min -= pad_x;
  box.x_max += pad_x;
  box.y_min -= pad_y;
  box.y_max += pad_y;
  MapSpec spec;
  spec.width = width;
  spec.height = height;
  spec.bbox = box;
  return spec;
}

MapFrame idw_interpolate(std::span<const MapPoint> points, const MapSpec& spec,
                         TimeIndex time, Quantity quantity) {
  spec.validate();
  if (points.empty()) throw EmptyPointSet();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.value)) {
      throw InvalidArgument("map point " + std::to_string(i) + " is not finite");
    }
    if (p.x < spec.bbox.x_min || p.x > spec.bbox.x_max ||
        p.y < spec.bbox.y_min || p.y > spec.bbox.y_max) {
      throw InvalidArgument("map point " + std::to_string(i) +
                            " lies outside the bounding box");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (std::hypot(p.x - points[j].x, p.y - points[j].y) < kCoincident) {
        throw InvalidArgument("map points " + std::to_string(j) + " and " +
                              std::to_string(i) + " coincide");
      }
    }
  }

  const std::size_t k =
      spec.neighbor_count
          ? std::min(points.size(), static_cast<std::size_t>(*spec.neighbor_count))
          : points.size();
  const double dx = (spec.bbox.x_max - spec.bbox.x_min) / (spec.width - 1);
  const double dy = (spec.bbox.y_max - spec.bbox.y_min) / (spec.height - 1);

  MapFrame frame;
  frame.time = time;
  frame.quantity = quantity;
  frame.bbox = spec.bbox;
  frame.values.resize(spec.height, spec.width);

  std::vector<double> dist(points.size());
  std::vector<std::size_t> order(points.size());
  for (int r = 0; r < spec.height; ++r) {
    const double y = spec.bbox.y_max - r * dy;
    for (int c = 0; c < spec.width; ++c) {
      const double x = spec.bbox.x_min + c * dx;
      for (std::size_t i = 0; i < points.size(); ++i) {
        dist[i] = std::hypot(x - points[i].x, y - points[i].y);
      }
      std::iota(order.begin(), order.end(), std::size_t{0});
      if (k < points.size()) {
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                          order.end(), [&](std::size_t a, std::size_t b) {
                            return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
                          });
      }
      double weighted = 0.0;
      double total = 0.0;
      std::optional<double> exact;
      for (std::size_t n = 0; n < k; ++n) {
        const auto i = order[n];
        if (dist[i] < kCoincident) {
          exact = points[i].value;
          break;
        }
        const double w = 1.0 / std::pow(dist[i], spec.idw_power);
        weighted += w * points[i].value;
        total += w;
      }
      frame.values(r, c) = exact ? *exact : weighted / total;
    }
  }
  frame.range_min = frame.values.minCoeff();
  frame.range_max = frame.values.maxCoeff();
  return frame;
}

MapFrame partition_frame(std::span<const MsrSeries> series,
                         const GridTopology& topology, TimeIndex time,
                         const MapSpec& spec,
                         const PartitionFrameOptions& options) {
  std::vector<MapPoint> points;
  for (const auto& partition : topology.partitions()) {
    if (is_missing(options.missing, partition.name)) continue;
    const auto it = std::find_if(series.begin(), series.end(), [&](const MsrSeries& s) {
      return s.scope == partition.name;
    });
    if (it == series.end()) continue;
    const auto value = it->value_at(time);
    if (!value) {
      throw TimeNotInSeries("partition " + partition.name +
                            " has no MSR at t=" + std::to_string(time));
    }
    const double mapped = options.relative ? *value / it->expected() : *value;
    for (BusId id : partition.buses) {
      const auto& bus = topology.buses()[topology.index_of(id)];
      points.push_back({bus.x, bus.y, mapped});
    }
  }
  return idw_interpolate(points, spec, time, Quantity::kMsr);
}

MapFrame voltage_frame(const MeasurementStream& stream,
                       const GridTopology& topology, TimeIndex time,
                       const MapSpec& spec,
                       std::span<const std::string> missing_partitions) {
  const auto column = stream.index_of_time(time);
  if (!column) {
    throw TimeNotInSeries("stream has no sample at t=" + std::to_string(time));
  }
  std::vector<MapPoint> points;
  for (const auto& bus : topology.buses()) {
    if (is_missing(missing_partitions, bus.partition)) continue;
    const auto row = stream.row_of_bus(bus.id);
    if (!row) continue;
    points.push_back({bus.x, bus.y,
                      stream.samples()(*row, static_cast<Eigen::Index>(*column))});
  }
  return idw_interpolate(points, spec, time, Quantity::kVoltage);
}

void apply_shared_range(std::span<MapFrame> frames,
                        std::optional<std::pair<double, double>> range) {
  if (frames.empty()) return;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  if (range) {
    lo = range->first;
    hi = range->second;
  } else {
    for (const auto& f : frames) {
      lo = std::min(lo, f.values.minCoeff());
      hi = std::max(hi, f.values.maxCoeff());
    }
  }
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  for (auto& f : frames) {
    f.range_min = lo;
    f.range_max = hi;
  }
}

double frame_l1_change(const MapFrame& a, const MapFrame& b) {
  if (a.values.rows() != b.values.rows() || a.values.cols() != b.values.cols()) {
    throw DimensionMismatch("frames differ in size");
  }
  const double span = a.range_max - a.range_min;
  if (!(span > 0.0)) throw InvalidArgument("frame has an empty value range");
  return (a.values - b.values).cwiseAbs().mean() / span;
}

std::vector<std::uint8_t> gray_levels(const MapFrame& frame) {
  const double span = frame.range_max - frame.range_min;
  std::vector<std::uint8_t> out;
  out.reserve(static_cast<std::size_t>(frame.values.size()));
  for (Eigen::Index r = 0; r < frame.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < frame.values.cols(); ++c) {
      double level = span > 0.0
                         ? 255.0 * (frame.values(r, c) - frame.range_min) / span
                         : 0.0;
      level = std::clamp(std::round(level), 0.0, 255.0);
      out.push_back(static_cast<std::uint8_t>(level));
    }
  }
  return out;
}

std::string frame_json(const MapFrame& frame, const Provenance& provenance) {
  nlohmann::ordered_json j;
  j["time"] = frame.time;
  j["quantity"] = to_string(frame.quantity);
  j["width"] = frame.values.cols();
  j["height"] = frame.values.rows();
  j["bbox"] = {frame.bbox.x_min, frame.bbox.y_min, frame.bbox.x_max,
               frame.bbox.y_max};
  j["value_range"] = {frame.range_min, frame.range_max};
  j["config_hash"] = hex64(provenance.config_hash);
  j["seed"] = provenance.seed;
  auto values = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < frame.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < frame.values.cols(); ++c) {
      values.push_back(frame.values(r, c));
    }
  }
  j["values"] = std::move(values);
  return j.dump() + "\n";
}

std::string frame_pgm(const MapFrame& frame, const Provenance& provenance) {
  std::string out = "P5\n# ringlaw " + std::string(to_string(frame.quantity)) +
                    " t=" + std::to_string(frame.time) +
                    " config_hash=" + hex64(provenance.config_hash) +
                    " seed=" + std::to_string(provenance.seed) + "\n" +
                    std::to_string(frame.values.cols()) + " " +
                    std::to_string(frame.values.rows()) + "\n255\n";
  const auto levels = gray_levels(frame);
  out.append(levels.begin(), levels.end());
  return out;
}

std::string frame_stem(const MapFrame& frame) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "_t%06lld",
                static_cast<long long>(frame.time));
  return std::string(to_string(frame.quantity)) + buffer;
}

std::vector<std::filesystem::path> write_frames(
    std::span<const MapFrame> frames, const std::filesystem::path& directory,
    const Provenance& provenance) {
  std::vector<std::filesystem::path> written;
  if (frames.empty()) return written;
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw IoError("cannot create " + directory.string() + ": " + ec.message());
  for (const auto& frame : frames) {
    const auto stem = frame_stem(frame);
    const auto json_path = directory / (stem + ".json");
    const auto pgm_path = directory / (stem + ".pgm");
    write_bytes(json_path, frame_json(frame, provenance));
    write_bytes(pgm_path, frame_pgm(frame, provenance));
    written.push_back(json_path);
    written.push_back(pgm_path);
  }
  return written;
}

std::vector<std::filesystem::path> render_voltage_frames(
    const MeasurementStream& stream, const GridTopology& topology,
    const MapSpec& spec, std::span<const TimeIndex> times,
    const std::filesystem::path& directory, const Provenance& provenance,
    std::span<const std::string> missing_partitions,
    std::optional<std::pair<double, double>> range) {
  std::vector<MapFrame> frames;
  for (TimeIndex t : times) {
    frames.push_back(voltage_frame(stream, topology, t, spec, missing_partitions));
  }
  apply_shared_range(frames, range);
  return write_frames(frames, directory, provenance);
}

std::vector<std::filesystem::path> render_msr_frames(
    std::span<const MsrSeries> series, const GridTopology& topology,
    const MapSpec& spec, std::span<const TimeIndex> times,
    const std::filesystem::path& directory, const Provenance& provenance,
    const PartitionFrameOptions& options,
    std::optional<std::pair<double, double>> range) {
  std::vector<MapFrame> frames;
  for (TimeIndex t : times) {
    frames.push_back(partition_frame(series, topology, t, spec, options));
  }
  apply_shared_range(frames, range);
  return write_frames(frames, directory, provenance);
}

}  // namespace ringlaw
