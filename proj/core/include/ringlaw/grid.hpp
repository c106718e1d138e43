#pragma once

// Synthetic grid data source: bus topology with partitions, scripted load
// schedules, and a linear distance-attenuated voltage response.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ringlaw/window_engine.hpp"

namespace ringlaw {

struct Bus {
  BusId id = 0;
  double x = 0.0;
  double y = 0.0;
  std::string partition;

  friend bool operator==(const Bus&, const Bus&) = default;
};

struct Line {
  BusId from = 0;
  BusId to = 0;

  friend bool operator==(const Line&, const Line&) = default;
};

class GridTopology {
 public:
  /// Throws ValidationError naming the violated invariant: unique ids, a
  /// partition for every bus, finite and distinct coordinates, lines between
  /// known buses, connected line graph.
  GridTopology(std::vector<Bus> buses, std::vector<Line> lines);

  const std::vector<Bus>& buses() const noexcept { return buses_; }
  const std::vector<Line>& lines() const noexcept { return lines_; }
  /// Partitions in order of first appearance among the buses.
  const std::vector<Partition>& partitions() const noexcept {
    return partitions_;
  }
  std::vector<BusId> bus_ids() const;
  std::size_t index_of(BusId bus) const;  // throws UnknownBus
  const Partition& partition(std::string_view name) const;  // throws InvalidArgument

  friend bool operator==(const GridTopology& a, const GridTopology& b) {
    return a.buses_ == b.buses_ && a.lines_ == b.lines_;
  }

 private:
  std::vector<Bus> buses_;
  std::vector<Line> lines_;
  std::vector<Partition> partitions_;
};

/// Parses the `[buses]` (id, x, y, partition) / `[lines]` (from, to) text
/// format. Throws ParseError with line diagnostics or ValidationError.
GridTopology parse_topology(std::string_view text,
                            std::string_view source = "<topology>");
GridTopology load_topology(const std::filesystem::path& path);
/// Bundled 118-bus system with six partitions A1..A6.
GridTopology builtin_ieee118();
std::string format_topology(const GridTopology& topology);
void export_topology(const GridTopology& topology,
                     const std::filesystem::path& path);

struct LoadSegment {
  enum class Kind { kConst, kRamp };

  TimeIndex t_start = 0;
  TimeIndex t_end = 0;
  Kind kind = Kind::kConst;
  double slope = 0.0;   // ramp: load = slope * t + offset
  double offset = 0.0;  // const: load = offset

  double load_at(TimeIndex t) const {
    return kind == Kind::kConst ? offset
                                : slope * static_cast<double>(t) + offset;
  }
  friend bool operator==(const LoadSegment&, const LoadSegment&) = default;
};

struct BusSchedule {
  BusId bus = 0;
  std::vector<LoadSegment> segments;  // sorted, contiguous, non-overlapping

  friend bool operator==(const BusSchedule&, const BusSchedule&) = default;
};

/// Piecewise load schedules in MW. Outside every segment a bus draws 0 MW.
class EventScript {
 public:
  EventScript() = default;
  /// Segments of the same bus are merged, sorted and checked to be
  /// contiguous, non-overlapping and finite (ValidationError otherwise).
  explicit EventScript(std::vector<BusSchedule> entries);

  const std::vector<BusSchedule>& entries() const noexcept { return entries_; }
  double load(BusId bus, TimeIndex t) const;
  bool empty() const noexcept { return entries_.empty(); }

  friend bool operator==(const EventScript&, const EventScript&) = default;

 private:
  std::vector<BusSchedule> entries_;
};

/// Rows `bus, t_start, t_end, const, value` or `bus, t_start, t_end, ramp,
/// slope, offset`; `#` starts a comment.
EventScript parse_event_script(std::string_view text,
                               std::string_view source = "<script>");
EventScript load_event_script(const std::filesystem::path& path);
std::string format_event_script(const EventScript& script);
/// Bus 22: 0 MW on [1,300], 200 MW on [301,700], t - 500 MW on [701,1000].
EventScript table2_script();

struct SimConfig {
  TimeIndex duration = 1000;
  double sample_period = 1.0;
  double noise_sigma = 1e-4;  // per unit
  double attenuation = 0.6;   // per graph hop
  double base_voltage = 1.0;  // per unit
  double gain = 2e-4;         // per unit per MW
  Seed seed = 0;
};

/// attenuation^d(i, j) with d the hop distance; rows/columns follow the
/// topology's bus order.
Eigen::MatrixXd influence_matrix(const GridTopology& topology,
                                 double attenuation);

/// v_i(t) = base - gain * sum_j influence(i, j) P_j(t) + noise_i(t),
/// t = 1..duration, noise i.i.d. N(0, noise_sigma^2) from config.seed.
MeasurementStream simulate(const GridTopology& topology,
                           const EventScript& script, const SimConfig& config);

}  // namespace ringlaw
