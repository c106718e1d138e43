#include "ringlaw/window_engine.hpp"

#include <algorithm>
#include <array>
#include <string>
#include <unordered_set>

#include "ringlaw/error.hpp"
#include "ringlaw/parallel.hpp"

namespace ringlaw {

MeasurementStream::MeasurementStream(std::vector<TimeIndex> timestamps,
                                     std::vector<BusId> bus_ids,
                                     Eigen::MatrixXd samples)
    : timestamps_(std::move(timestamps)),
      bus_ids_(std::move(bus_ids)),
      samples_(std::move(samples)) {
  if (samples_.rows() != static_cast<Eigen::Index>(bus_ids_.size()) ||
      samples_.cols() != static_cast<Eigen::Index>(timestamps_.size())) {
    throw InvalidArgument("stream samples must be buses x timestamps");
  }
  std::unordered_set<BusId> seen;
  for (BusId id : bus_ids_) {
    if (!seen.insert(id).second) {
      throw InvalidArgument("duplicate bus id " + std::to_string(id));
    }
  }
  if (timestamps_.size() >= 2) {
    step_ = timestamps_[1] - timestamps_[0];
    if (step_ <= 0) {
      throw InvalidArgument("timestamps must be strictly increasing");
    }
    for (std::size_t k = 2; k < timestamps_.size(); ++k) {
      if (timestamps_[k] - timestamps_[k - 1] != step_) {
        throw InvalidArgument("timestamps must have a constant step (break at t=" +
                              std::to_string(timestamps_[k]) + ")");
      }
    }
  }
}

bool operator==(const MeasurementStream& a, const MeasurementStream& b) {
  return a.timestamps_ == b.timestamps_ && a.bus_ids_ == b.bus_ids_ &&
         a.samples_.rows() == b.samples_.rows() &&
         a.samples_.cols() == b.samples_.cols() && a.samples_ == b.samples_;
}

std::optional<std::size_t> MeasurementStream::index_of_time(TimeIndex t) const {
  if (timestamps_.empty()) return std::nullopt;
  const TimeIndex offset = t - timestamps_.front();
  if (offset < 0 || offset % step_ != 0) return std::nullopt;
  const auto k = static_cast<std::size_t>(offset / step_);
  if (k >= timestamps_.size()) return std::nullopt;
  return k;
}

std::optional<Eigen::Index> MeasurementStream::row_of_bus(BusId bus) const {
  const auto it = std::find(bus_ids_.begin(), bus_ids_.end(), bus);
  if (it == bus_ids_.end()) return std::nullopt;
  return static_cast<Eigen::Index>(it - bus_ids_.begin());
}

MeasurementStream MeasurementStream::select_buses(
    std::span<const BusId> buses) const {
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(buses.size()),
                       samples_.cols());
  for (std::size_t k = 0; k < buses.size(); ++k) {
    const auto r = row_of_bus(buses[k]);
    if (!r) throw UnknownBus(buses[k]);
    rows.row(static_cast<Eigen::Index>(k)) = samples_.row(*r);
  }
  return MeasurementStream(timestamps_,
                           std::vector<BusId>(buses.begin(), buses.end()),
                           std::move(rows));
}

double MsrSeries::expected() const {
  return expected_msr(RingParams(n_rows, window_len, factors));
}

std::optional<double> MsrSeries::value_at(TimeIndex t) const {
  const auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.end() || *it != t) return std::nullopt;
  return values[static_cast<std::size_t>(it - times.begin())];
}

DataWindow window_at(const MeasurementStream& stream, TimeIndex end_time,
                     const WindowConfig& config,
                     std::optional<std::span<const BusId>> rows) {
  const Eigen::Index t = config.window_len;
  const auto end = stream.index_of_time(end_time);
  if (!end) {
    throw InsufficientHistory("time " + std::to_string(end_time) +
                              " is not a stream timestamp");
  }
  if (static_cast<Eigen::Index>(*end) + 1 < t) {
    throw InsufficientHistory("window of " + std::to_string(t) +
                              " samples ending at t=" +
                              std::to_string(end_time) + " starts before the stream");
  }
  const Eigen::Index first = static_cast<Eigen::Index>(*end) + 1 - t;

  std::vector<BusId> ids;
  std::vector<Eigen::Index> source_rows;
  if (rows) {
    for (BusId bus : *rows) {
      const auto r = stream.row_of_bus(bus);
      if (!r) throw UnknownBus(bus);
      ids.push_back(bus);
      source_rows.push_back(*r);
    }
  } else {
    ids = stream.bus_ids();
    for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(ids.size()); ++r) {
      source_rows.push_back(r);
    }
  }
  Eigen::MatrixXd values(static_cast<Eigen::Index>(ids.size()), t);
  for (std::size_t k = 0; k < source_rows.size(); ++k) {
    values.row(static_cast<Eigen::Index>(k)) =
        stream.samples().block(source_rows[k], first, 1, t);
  }
  const double period = static_cast<double>(stream.step());
  return DataWindow(std::move(values), std::move(ids), end_time, period);
}

WindowAnalysis analyze_window(const DataWindow& window,
                              const WindowConfig& config,
                              std::string_view scope) {
  try {
    StandardizeOptions standardize = config.standardize;
    standardize.jitter_seed =
        derive_seed(config.seed, window.end_time(), -1, scope);
    const StandardizedWindow x = standardize_rows(window, standardize);

    std::vector<SingularEquivalent> factors;
    factors.reserve(static_cast<std::size_t>(config.factors));
    for (int i = 0; i < config.factors; ++i) {
      factors.push_back(singular_value_equivalent(
          x, derive_seed(config.seed, window.end_time(), i, scope),
          config.unitary));
    }
    const RingMatrix z = normalize_product_rows(ring_product(factors));
    RingParams params(window.rows(), window.cols(), config.factors);
    Spectrum spectrum = eigenvalues(z);
    const double value = msr(spectrum);
    const ConformanceReport conformance =
        ring_conformance(spectrum, params, config.conformance_tol);
    return WindowAnalysis{std::move(spectrum), value, conformance, params};
  } catch (Error& e) {
    e.add_context("window ending at t=" + std::to_string(window.end_time()) +
                  " (" + std::string(scope) + ")");
    throw;
  }
}

std::vector<MsrSeries> msr_series(const MeasurementStream& stream,
                                  const WindowConfig& config) {
  const Eigen::Index t = config.window_len;
  if (config.hop < 1) throw InvalidArgument("hop must be >= 1");
  if (config.factors < 1) throw InvalidArgument("factors must be >= 1");
  if (t < 2) throw InvalidArgument("window length must be >= 2");
  if (static_cast<Eigen::Index>(stream.size()) < t) {
    throw InsufficientHistory("stream has " + std::to_string(stream.size()) +
                              " samples, window needs " + std::to_string(t));
  }

  struct Scope {
    std::string name;
    std::vector<BusId> rows;
  };
  std::vector<Scope> scopes;
  scopes.push_back({std::string(kGridScope),
                    config.grid_rows.empty() ? stream.bus_ids()
                                             : config.grid_rows});
  for (const auto& p : config.partitions) scopes.push_back({p.name, p.buses});
  for (const auto& s : scopes) {
    if (static_cast<Eigen::Index>(s.rows.size()) > t) {
      throw InvalidArgument("scope " + s.name + " has " +
                            std::to_string(s.rows.size()) +
                            " rows, more than the window length " +
                            std::to_string(t));
    }
    for (BusId bus : s.rows) {
      if (!stream.row_of_bus(bus)) throw UnknownBus(bus);
    }
  }

  std::vector<TimeIndex> times;
  const auto& stamps = stream.timestamps();
  for (auto k = static_cast<std::size_t>(t - 1); k < stamps.size();
       k += static_cast<std::size_t>(config.hop)) {
    if (config.first_end_time && stamps[k] < *config.first_end_time) continue;
    if (config.last_end_time && stamps[k] > *config.last_end_time) break;
    times.push_back(stamps[k]);
  }

  std::vector<MsrSeries> out;
  for (const auto& s : scopes) {
    MsrSeries series;
    series.scope = s.name;
    series.n_rows = static_cast<Eigen::Index>(s.rows.size());
    series.window_len = t;
    series.factors = config.factors;
    series.times = times;
    series.values.assign(times.size(), 0.0);
    series.conformance.assign(times.size(), ConformanceReport{});
    out.push_back(std::move(series));
  }

  const std::size_t tasks = times.size() * scopes.size();
  parallel_for(tasks, config.threads, [&](std::size_t task) {
    const std::size_t si = task % scopes.size();
    const std::size_t ti = task / scopes.size();
    const auto& scope = scopes[si];
    const DataWindow window = window_at(stream, times[ti], config,
                                        std::span<const BusId>(scope.rows));
    const WindowAnalysis a = analyze_window(window, config, scope.name);
    out[si].values[ti] = a.msr;
    out[si].conformance[ti] = a.conformance;
  });
  return out;
}

std::vector<DetectedEvent> detect_events(const MsrSeries& series,
                                         std::size_t baseline_window,
                                         double drop_fraction) {
  if (baseline_window < 10) {
    throw InvalidArgument("baseline window must be >= 10 samples");
  }
  if (!(drop_fraction > 0.0 && drop_fraction < 1.0)) {
    throw InvalidArgument("drop fraction must lie in (0, 1)");
  }
  const auto& v = series.values;
  if (v.size() <= baseline_window) {
    throw SeriesTooShort("series of " + std::to_string(v.size()) +
                         " values is too short for a baseline of " +
                         std::to_string(baseline_window));
  }
  std::vector<DetectedEvent> events;
  double window_sum = 0.0;
  for (std::size_t k = 0; k < baseline_window; ++k) window_sum += v[k];
  for (std::size_t k = baseline_window; k < v.size(); ++k) {
    const double baseline = window_sum / static_cast<double>(baseline_window);
    if (v[k] < (1.0 - drop_fraction) * baseline) {
      events.push_back({series.times[k], (baseline - v[k]) / baseline});
    }
    window_sum += v[k] - v[k - baseline_window];
  }
  return events;
}

}  // namespace ringlaw
