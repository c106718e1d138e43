#include "ringlaw/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <queue>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "builtin_data.hpp"
#include "ringlaw/error.hpp"
#include "ringlaw/detail/text.hpp"

namespace ringlaw {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string where(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line) + ": ";
}

// Hop distances from every bus; -1 marks unreachable.
std::vector<std::vector<int>> hop_distances(const GridTopology& topology) {
  const std::size_t n = topology.buses().size();
  std::vector<std::vector<std::size_t>> adjacency(n);
  for (const auto& line : topology.lines()) {
    const auto a = topology.index_of(line.from);
    const auto b = topology.index_of(line.to);
    adjacency[a].push_back(b);
    adjacency[b].push_back(a);
  }
  std::vector<std::vector<int>> dist(n, std::vector<int>(n, -1));
  for (std::size_t s = 0; s < n; ++s) {
    std::queue<std::size_t> frontier;
    dist[s][s] = 0;
    frontier.push(s);
    while (!frontier.empty()) {
      const auto u = frontier.front();
      frontier.pop();
      for (auto v : adjacency[u]) {
        if (dist[s][v] < 0) {
          dist[s][v] = dist[s][u] + 1;
          frontier.push(v);
        }
      }
    }
  }
  return dist;
}

}  // namespace

GridTopology::GridTopology(std::vector<Bus> buses, std::vector<Line> lines)
    : buses_(std::move(buses)), lines_(std::move(lines)) {
  if (buses_.empty()) throw ValidationError("topology has no buses");
  std::unordered_set<BusId> ids;
  for (const auto& bus : buses_) {
    if (!ids.insert(bus.id).second) {
      throw ValidationError("duplicate bus id " + std::to_string(bus.id));
    }
    if (bus.partition.empty()) {
      throw ValidationError("bus " + std::to_string(bus.id) +
                            " has no partition assignment");
    }
    if (!std::isfinite(bus.x) || !std::isfinite(bus.y)) {
      throw ValidationError("bus " + std::to_string(bus.id) +
                            " has non-finite coordinates");
    }
  }
  for (std::size_t i = 0; i < buses_.size(); ++i) {
    for (std::size_t j = i + 1; j < buses_.size(); ++j) {
      if (std::hypot(buses_[i].x - buses_[j].x, buses_[i].y - buses_[j].y) <
          1e-9) {
        throw ValidationError("buses " + std::to_string(buses_[i].id) +
                              " and " + std::to_string(buses_[j].id) +
                              " share coordinates");
      }
    }
  }
  for (const auto& line : lines_) {
    if (!ids.count(line.from) || !ids.count(line.to)) {
      throw ValidationError("line " + std::to_string(line.from) + "-" +
                            std::to_string(line.to) +
                            " references an unknown bus");
    }
    if (line.from == line.to) {
      throw ValidationError("line " + std::to_string(line.from) + "-" +
                            std::to_string(line.to) + " is a self loop");
    }
  }
  for (const auto& bus : buses_) {
    auto it = std::find_if(partitions_.begin(), partitions_.end(),
                           [&](const Partition& p) { return p.name == bus.partition; });
    if (it == partitions_.end()) {
      partitions_.push_back({bus.partition, {}});
      it = std::prev(partitions_.end());
    }
    it->buses.push_back(bus.id);
  }
  const auto dist = hop_distances(*this);
  for (std::size_t j = 0; j < buses_.size(); ++j) {
    if (dist[0][j] < 0) {
      throw DisconnectedGraph("topology is not connected: bus " +
                              std::to_string(buses_[j].id) +
                              " is unreachable from bus " +
                              std::to_string(buses_[0].id));
    }
  }
}

std::vector<BusId> GridTopology::bus_ids() const {
  std::vector<BusId> ids;
  ids.reserve(buses_.size());
  for (const auto& bus : buses_) ids.push_back(bus.id);
  return ids;
}

std::size_t GridTopology::index_of(BusId bus) const {
  const auto it = std::find_if(buses_.begin(), buses_.end(),
                               [&](const Bus& b) { return b.id == bus; });
  if (it == buses_.end()) throw UnknownBus(bus);
  return static_cast<std::size_t>(it - buses_.begin());
}

const Partition& GridTopology::partition(std::string_view name) const {
  for (const auto& p : partitions_) {
    if (p.name == name) return p;
  }
  throw InvalidArgument("unknown partition " + std::string(name));
}

GridTopology parse_topology(std::string_view text, std::string_view source) {
  enum class Section { kNone, kBuses, kLines };
  Section section = Section::kNone;
  std::vector<Bus> buses;
  std::vector<Line> lines;
  for (const auto& [number, raw] : detail::numbered_lines(text)) {
    const auto line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line == "[buses]") {
      section = Section::kBuses;
      continue;
    }
    if (line == "[lines]") {
      section = Section::kLines;
      continue;
    }
    const auto fields = detail::split_fields(line);
    if (section == Section::kBuses) {
      if (fields.size() == 3 || (fields.size() == 4 && fields[3].empty())) {
        throw ValidationError(where(source, number) + "bus " +
                              std::string(fields[0]) +
                              " has no partition assignment");
      }
      if (fields.size() != 4) {
        throw ParseError(where(source, number) +
                         "expected 4 fields (id, x, y, partition), got " +
                         std::to_string(fields.size()));
      }
      const auto id = detail::parse_number<int>(fields[0]);
      const auto x = detail::parse_number<double>(fields[1]);
      const auto y = detail::parse_number<double>(fields[2]);
      if (!id) throw ParseError(where(source, number) + "bad bus id '" + std::string(fields[0]) + "'");
      if (!x) throw ParseError(where(source, number) + "bad x coordinate '" + std::string(fields[1]) + "'");
      if (!y) throw ParseError(where(source, number) + "bad y coordinate '" + std::string(fields[2]) + "'");
      buses.push_back({*id, *x, *y, std::string(fields[3])});
    } else if (section == Section::kLines) {
      if (fields.size() != 2) {
        throw ParseError(where(source, number) +
                         "expected 2 fields (from, to), got " +
                         std::to_string(fields.size()));
      }
      const auto from = detail::parse_number<int>(fields[0]);
      const auto to = detail::parse_number<int>(fields[1]);
      if (!from || !to) {
        throw ParseError(where(source, number) + "bad line endpoint");
      }
      lines.push_back({*from, *to});
    } else {
      throw ParseError(where(source, number) +
                       "data outside a [buses] or [lines] section");
    }
  }
  return GridTopology(std::move(buses), std::move(lines));
}

GridTopology load_topology(const std::filesystem::path& path) {
  return parse_topology(read_file(path), path.string());
}

GridTopology builtin_ieee118() {
  return parse_topology(detail::kIeee118Topology, "<builtin ieee118>");
}

std::string format_topology(const GridTopology& topology) {
  std::string out = "[buses]\n# id, x, y, partition\n";
  for (const auto& bus : topology.buses()) {
    out += std::to_string(bus.id) + ", " + detail::format_double(bus.x) +
           ", " + detail::format_double(bus.y) + ", " + bus.partition + "\n";
  }
  out += "[lines]\n# from, to\n";
  for (const auto& line : topology.lines()) {
    out += std::to_string(line.from) + ", " + std::to_string(line.to) + "\n";
  }
  return out;
}

void export_topology(const GridTopology& topology,
                     const std::filesystem::path& path) {
  write_file(path, format_topology(topology));
}

EventScript::EventScript(std::vector<BusSchedule> entries) {
  std::map<BusId, std::vector<LoadSegment>> merged;
  for (auto& entry : entries) {
    auto& segments = merged[entry.bus];
    segments.insert(segments.end(), entry.segments.begin(),
                    entry.segments.end());
  }
  for (auto& [bus, segments] : merged) {
    std::sort(segments.begin(), segments.end(),
              [](const LoadSegment& a, const LoadSegment& b) {
                return a.t_start < b.t_start;
              });
    for (std::size_t k = 0; k < segments.size(); ++k) {
      const auto& s = segments[k];
      const std::string label = "bus " + std::to_string(bus) + " segment [" +
                                std::to_string(s.t_start) + "," +
                                std::to_string(s.t_end) + "]";
      if (s.t_end < s.t_start) throw ValidationError(label + " ends before it starts");
      if (!std::isfinite(s.slope) || !std::isfinite(s.offset)) {
        throw ValidationError(label + " has a non-finite load");
      }
      if (k > 0) {
        const auto prev_end = segments[k - 1].t_end;
        if (s.t_start <= prev_end) throw ValidationError(label + " overlaps the previous segment");
        if (s.t_start != prev_end + 1) {
          throw ValidationError(label + " leaves a gap after t=" +
                                std::to_string(prev_end));
        }
      }
    }
    entries_.push_back({bus, std::move(segments)});
  }
}

double EventScript::load(BusId bus, TimeIndex t) const {
  for (const auto& entry : entries_) {
    if (entry.bus != bus) continue;
    for (const auto& s : entry.segments) {
      if (t >= s.t_start && t <= s.t_end) return s.load_at(t);
    }
  }
  return 0.0;
}

EventScript parse_event_script(std::string_view text, std::string_view source) {
  std::vector<BusSchedule> entries;
  for (const auto& [number, raw] : detail::numbered_lines(text)) {
    const auto line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() < 5) {
      throw ParseError(where(source, number) +
                       "expected bus, t_start, t_end, kind, params");
    }
    const auto bus = detail::parse_number<int>(fields[0]);
    const auto t0 = detail::parse_number<TimeIndex>(fields[1]);
    const auto t1 = detail::parse_number<TimeIndex>(fields[2]);
    if (!bus || !t0 || !t1) {
      throw ParseError(where(source, number) + "bad bus or time field");
    }
    LoadSegment segment{*t0, *t1};
    if (fields[3] == "const") {
      if (fields.size() != 5) throw ParseError(where(source, number) + "const takes one parameter");
      const auto value = detail::parse_number<double>(fields[4]);
      if (!value) throw ParseError(where(source, number) + "bad load value");
      segment.kind = LoadSegment::Kind::kConst;
      segment.offset = *value;
    } else if (fields[3] == "ramp") {
      if (fields.size() != 6) throw ParseError(where(source, number) + "ramp takes slope and offset");
      const auto a = detail::parse_number<double>(fields[4]);
      const auto b = detail::parse_number<double>(fields[5]);
      if (!a || !b) throw ParseError(where(source, number) + "bad ramp parameters");
      segment.kind = LoadSegment::Kind::kRamp;
      segment.slope = *a;
      segment.offset = *b;
    } else {
      throw ParseError(where(source, number) + "unknown kind '" +
                       std::string(fields[3]) + "' (const|ramp)");
    }
    entries.push_back({*bus, {segment}});
  }
  return EventScript(std::move(entries));
}

EventScript load_event_script(const std::filesystem::path& path) {
  return parse_event_script(read_file(path), path.string());
}

std::string format_event_script(const EventScript& script) {
  std::string out = "# bus, t_start, t_end, kind, params\n";
  for (const auto& entry : script.entries()) {
    for (const auto& s : entry.segments) {
      out += std::to_string(entry.bus) + ", " + std::to_string(s.t_start) +
             ", " + std::to_string(s.t_end) + ", ";
      if (s.kind == LoadSegment::Kind::kConst) {
        out += "const, " + detail::format_double(s.offset) + "\n";
      } else {
        out += "ramp, " + detail::format_double(s.slope) + ", " +
               detail::format_double(s.offset) + "\n";
      }
    }
  }
  return out;
}

EventScript table2_script() {
  return parse_event_script(detail::kTable2Script, "<builtin table2>");
}

Eigen::MatrixXd influence_matrix(const GridTopology& topology,
                                 double attenuation) {
  if (!(attenuation > 0.0 && attenuation <= 1.0)) {
    throw InvalidArgument("attenuation must lie in (0, 1]");
  }
  const auto dist = hop_distances(topology);
  const auto n = static_cast<Eigen::Index>(dist.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const int d = dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (d < 0) throw DisconnectedGraph("topology is not connected");
      m(i, j) = std::pow(attenuation, d);
    }
  }
  return m;
}

MeasurementStream simulate(const GridTopology& topology,
                           const EventScript& script, const SimConfig& config) {
  if (config.duration < 1) throw InvalidArgument("duration must be >= 1");
  if (!(config.noise_sigma > 0.0)) throw InvalidArgument("noise sigma must be > 0");
  std::vector<std::size_t> load_buses;
  for (const auto& entry : script.entries()) {
    load_buses.push_back(topology.index_of(entry.bus));
  }
  const Eigen::MatrixXd influence =
      influence_matrix(topology, config.attenuation);
  const auto n = static_cast<Eigen::Index>(topology.buses().size());

  std::vector<TimeIndex> times(static_cast<std::size_t>(config.duration));
  Eigen::MatrixXd samples(n, config.duration);
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> noise(0.0, config.noise_sigma);
  Eigen::VectorXd loads(static_cast<Eigen::Index>(load_buses.size()));
  for (TimeIndex k = 0; k < config.duration; ++k) {
    const TimeIndex t = k + 1;
    times[static_cast<std::size_t>(k)] = t;
    for (std::size_t e = 0; e < load_buses.size(); ++e) {
      loads(static_cast<Eigen::Index>(e)) =
          script.load(script.entries()[e].bus, t);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      double deviation = 0.0;
      for (std::size_t e = 0; e < load_buses.size(); ++e) {
        deviation += influence(i, static_cast<Eigen::Index>(load_buses[e])) *
                     loads(static_cast<Eigen::Index>(e));
      }
      samples(i, k) = config.base_voltage - config.gain * deviation + noise(rng);
    }
  }
  return MeasurementStream(std::move(times), topology.bus_ids(),
                           std::move(samples));
}

}  // namespace ringlaw
