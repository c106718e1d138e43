#pragma once

// Sliding split-window analysis of a measurement stream: one MSR time
// series for the whole grid plus one per configured partition.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ringlaw/rmt.hpp"

namespace ringlaw {

/// Sampled bus measurements. Column k of samples() is the measurement
/// vector at timestamps()[k]; row r belongs to bus_ids()[r].
class MeasurementStream {
 public:
  MeasurementStream() = default;
  /// Throws InvalidArgument unless timestamps are strictly increasing with a
  /// constant step, bus ids are unique and samples is buses x timestamps.
  MeasurementStream(std::vector<TimeIndex> timestamps,
                    std::vector<BusId> bus_ids, Eigen::MatrixXd samples);

  const std::vector<TimeIndex>& timestamps() const noexcept {
    return timestamps_;
  }
  const std::vector<BusId>& bus_ids() const noexcept { return bus_ids_; }
  const Eigen::MatrixXd& samples() const noexcept { return samples_; }
  std::size_t size() const noexcept { return timestamps_.size(); }
  std::size_t bus_count() const noexcept { return bus_ids_.size(); }
  TimeIndex step() const noexcept { return step_; }

  std::optional<std::size_t> index_of_time(TimeIndex t) const;
  std::optional<Eigen::Index> row_of_bus(BusId bus) const;

  /// Copy of the stream restricted to the given buses, in the given order.
  MeasurementStream select_buses(std::span<const BusId> buses) const;

  friend bool operator==(const MeasurementStream& a,
                         const MeasurementStream& b);

 private:
  std::vector<TimeIndex> timestamps_;
  std::vector<BusId> bus_ids_;
  Eigen::MatrixXd samples_;
  TimeIndex step_ = 1;
};

struct Partition {
  std::string name;
  std::vector<BusId> buses;

  friend bool operator==(const Partition&, const Partition&) = default;
};

struct WindowConfig {
  Eigen::Index window_len = 240;  // T, samples per window
  Eigen::Index hop = 1;
  int factors = 1;  // L
  Seed seed = 0;
  std::vector<Partition> partitions;
  /// Rows of the grid-wide analysis; empty means every bus of the stream.
  std::vector<BusId> grid_rows;
  /// Optional bounds on the end times analyzed by msr_series.
  std::optional<TimeIndex> first_end_time;
  std::optional<TimeIndex> last_end_time;
  UnitaryMode unitary = UnitaryMode::kHaar;
  double conformance_tol = 0.05;
  StandardizeOptions standardize;
  unsigned threads = 0;  // 0 = hardware concurrency
};

inline constexpr std::string_view kGridScope = "grid";

struct WindowAnalysis {
  Spectrum spectrum;
  double msr = 0.0;
  ConformanceReport conformance;
  RingParams params;
};

/// MSR values of one scope (grid-wide or one partition) over time.
struct MsrSeries {
  std::string scope;
  Eigen::Index n_rows = 0;
  Eigen::Index window_len = 0;
  int factors = 1;
  std::vector<TimeIndex> times;
  std::vector<double> values;
  std::vector<ConformanceReport> conformance;  // empty or one per time

  /// Limiting MSR of pure noise for this scope's window geometry.
  double expected() const;
  std::optional<double> value_at(TimeIndex t) const;
};

struct DetectedEvent {
  TimeIndex time;
  double severity;  // relative drop below the trailing baseline
};

/// The N x T window whose last column is the sample at end_time. Rows are
/// `rows` in the given order, or every bus of the stream.
DataWindow window_at(const MeasurementStream& stream, TimeIndex end_time,
                     const WindowConfig& config,
                     std::optional<std::span<const BusId>> rows = {});

/// standardize -> L singular value equivalents of the same window with
/// independent unitaries -> product -> row normalization -> spectrum.
/// Errors carry the window end time and scope as context.
WindowAnalysis analyze_window(const DataWindow& window,
                              const WindowConfig& config,
                              std::string_view scope = kGridScope);

/// Grid-wide series first, then one series per partition in config order.
std::vector<MsrSeries> msr_series(const MeasurementStream& stream,
                                  const WindowConfig& config);

/// Flags every time whose MSR is below (1 - drop_fraction) times the mean of
/// the preceding baseline_window values.
std::vector<DetectedEvent> detect_events(const MsrSeries& series,
                                         std::size_t baseline_window,
                                         double drop_fraction);

}  // namespace ringlaw
