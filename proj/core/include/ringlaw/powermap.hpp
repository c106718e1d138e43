#pragma once

// Power-map frames: per-bus scalars (voltage, or partition MSR) spread over
// a regular grid by inverse distance weighting, written as JSON and PGM.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ringlaw/grid.hpp"
#include "ringlaw/window_engine.hpp"

namespace ringlaw {

enum class Quantity { kVoltage, kMsr };

std::string_view to_string(Quantity quantity);
std::optional<Quantity> parse_quantity(std::string_view text);

struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 1.0;
  double y_max = 1.0;
};

struct MapSpec {
  int width = 80;
  int height = 60;
  BoundingBox bbox;
  double idw_power = 2.0;
  std::optional<int> neighbor_count;  // nullopt = all points

  /// Throws InvalidArgument on width/height < 2, empty box, power <= 0.
  void validate() const;
};

/// Spec whose box is the topology's coordinate extent padded by `margin`
/// (a fraction of the extent) on every side.
MapSpec map_spec_for(const GridTopology& topology, int width, int height,
                     double margin = 0.05);

struct MapPoint {
  double x = 0.0;
  double y = 0.0;
  double value = 0.0;
};

/// One time step of the map. values(r, c) is the cell at
/// x = x_min + c * dx, y = y_max - r * dy (row 0 at the top).
struct MapFrame {
  TimeIndex time = 0;
  Quantity quantity = Quantity::kMsr;
  BoundingBox bbox;
  Eigen::MatrixXd values;
  double range_min = 0.0;  // value range used for gray-level scaling
  double range_max = 0.0;
};

/// Artifact provenance embedded in every written file.
struct Provenance {
  std::uint64_t config_hash = 0;
  Seed seed = 0;
};

/// Each cell is sum(w_k v_k) / sum(w_k), w_k = 1 / d_k^power over the
/// neighbor_count nearest points; a cell within 1e-9 of a point takes that
/// point's value. The frame's range is the min/max of the cells.
MapFrame idw_interpolate(std::span<const MapPoint> points, const MapSpec& spec,
                         TimeIndex time = 0, Quantity quantity = Quantity::kMsr);

struct PartitionFrameOptions {
  /// Map MSR / expected MSR so partitions of different size share baseline 1.
  bool relative = true;
  /// Partitions contributing no points. Partitions without a series are
  /// treated as missing too.
  std::vector<std::string> missing;
};

/// Every bus takes its partition's MSR at `time`; then IDW.
/// Throws TimeNotInSeries when a present partition has no value at `time`.
MapFrame partition_frame(std::span<const MsrSeries> series,
                         const GridTopology& topology, TimeIndex time,
                         const MapSpec& spec,
                         const PartitionFrameOptions& options = {});

/// Raw bus voltages at `time`, skipping buses of `missing_partitions`.
MapFrame voltage_frame(const MeasurementStream& stream,
                       const GridTopology& topology, TimeIndex time,
                       const MapSpec& spec,
                       std::span<const std::string> missing_partitions = {});

/// Sets one range on every frame: the union of their cell ranges unless an
/// explicit range is given. A degenerate range is widened by 0.5 on each side.
void apply_shared_range(std::span<MapFrame> frames,
                        std::optional<std::pair<double, double>> range = {});

/// Mean absolute per-cell change between two frames, in units of a's range.
double frame_l1_change(const MapFrame& a, const MapFrame& b);

/// Linear map of [range_min, range_max] to 0..255, clamped, row-major.
std::vector<std::uint8_t> gray_levels(const MapFrame& frame);

std::string frame_json(const MapFrame& frame, const Provenance& provenance);
std::string frame_pgm(const MapFrame& frame, const Provenance& provenance);

/// `<quantity>_t<000300>` for the frame's quantity and time.
std::string frame_stem(const MapFrame& frame);

/// Writes `<stem>.json` and `<stem>.pgm` per frame into `directory`
/// (created if missing). Returns the written paths in frame order.
std::vector<std::filesystem::path> write_frames(
    std::span<const MapFrame> frames, const std::filesystem::path& directory,
    const Provenance& provenance);

/// Voltage frames at `times` with one shared range, written to `directory`.
std::vector<std::filesystem::path> render_voltage_frames(
    const MeasurementStream& stream, const GridTopology& topology,
    const MapSpec& spec, std::span<const TimeIndex> times,
    const std::filesystem::path& directory, const Provenance& provenance,
    std::span<const std::string> missing_partitions = {},
    std::optional<std::pair<double, double>> range = {});

/// Partition MSR frames at `times` with one shared range.
std::vector<std::filesystem::path> render_msr_frames(
    std::span<const MsrSeries> series, const GridTopology& topology,
    const MapSpec& spec, std::span<const TimeIndex> times,
    const std::filesystem::path& directory, const Provenance& provenance,
    const PartitionFrameOptions& options = {},
    std::optional<std::pair<double, double>> range = {});

}  // namespace ringlaw
