#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "provenance.hpp"
#include "ringlaw/detail/text.hpp"
#include "ringlaw/error.hpp"
#include "ringlaw/grid.hpp"
#include "ringlaw/powermap.hpp"
#include "ringlaw/ring_check.hpp"
#include "ringlaw/stream_io.hpp"
#include "ringlaw/window_engine.hpp"
#include "series_io.hpp"

namespace ringlaw::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

// Detector settings used by the repro summary.
constexpr std::size_t kBaselineWindow = 50;
constexpr double kDropFraction = 0.10;

struct Io {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
};

struct GlobalOptions {
  unsigned threads = 0;
};

struct TopologyOptions {
  std::string path;  // empty = bundled 118-bus system
  bool builtin = false;

  void add_to(CLI::App& app) {
    app.add_option("--topology", path, "Topology file");
    app.add_flag("--builtin-118", builtin,
                 "Use the bundled 118-bus system (default)");
  }
  GridTopology load() const {
    if (builtin && !path.empty()) {
      throw InvalidArgument("--topology and --builtin-118 are exclusive");
    }
    return path.empty() ? builtin_ieee118() : load_topology(path);
  }
};

// Calls fn(stream, source) on stdin for "-" or on the opened file.
template <class Fn>
auto with_input(const std::string& path, std::istream& in, Fn&& fn) {
  if (path == "-") return fn(in, std::string_view("<stdin>"));
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open " + path);
  return fn(file, std::string_view(path));
}

// Writes through a temporary file so a failure never leaves a partial file.
void write_file(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream file(tmp, std::ios::binary);
    if (!file) throw IoError("cannot write " + path.string());
    file.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!file) {
      file.close();
      fs::remove(tmp);
      throw IoError("failed writing " + path.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot write " + path.string() + ": " + ec.message());
}

void write_output(const std::string& path, std::ostream& out,
                  std::string_view content) {
  if (path == "-") {
    out << content;
    out.flush();
    if (!out) throw IoError("failed writing to stdout");
    return;
  }
  write_file(path, content);
}

void make_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::string join(const std::vector<std::string>& items, char sep) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += sep;
    out += item;
  }
  return out;
}

std::string join_times(std::span<const TimeIndex> times) {
  std::string out;
  for (TimeIndex t : times) {
    if (!out.empty()) out += ',';
    out += std::to_string(t);
  }
  return out;
}

std::uint64_t topology_hash(const GridTopology& topology) {
  return fnv1a64(format_topology(topology));
}

// ---- simulate --------------------------------------------------------------

struct SimulateOptions {
  TopologyOptions topology;
  std::string script_path;
  bool builtin_script = false;
  SimConfig sim;
  std::string output = "-";
};

void add_simulate(CLI::App& app, SimulateOptions& o) {
  o.topology.add_to(app);
  auto* script = app.add_option("--script", o.script_path, "Event script file");
  app.add_flag("--builtin-table2", o.builtin_script,
               "Use the bundled bus-22 event script")
      ->excludes(script);
  app.add_option("--seed", o.sim.seed, "Noise seed")->capture_default_str();
  app.add_option("--duration", o.sim.duration, "Number of samples")
      ->capture_default_str();
  app.add_option("--noise-sigma", o.sim.noise_sigma, "Noise std (pu)")
      ->capture_default_str();
  app.add_option("--attenuation", o.sim.attenuation, "Influence per hop")
      ->capture_default_str();
  app.add_option("--gain", o.sim.gain, "Voltage drop per MW (pu)")
      ->capture_default_str();
  app.add_option("--base-voltage", o.sim.base_voltage, "Base voltage (pu)")
      ->capture_default_str();
  app.add_option("-o,--output", o.output, "Stream CSV, - for stdout")
      ->capture_default_str();
}

void run_simulate(const SimulateOptions& o, Io io) {
  const GridTopology topology = o.topology.load();
  EventScript script;
  if (!o.script_path.empty()) {
    script = load_event_script(o.script_path);
  } else if (o.builtin_script) {
    script = table2_script();
  }
  const auto hash = ConfigHasher("simulate")
                        .add("topology", hex16(topology_hash(topology)))
                        .add("script", hex16(fnv1a64(format_event_script(script))))
                        .add("duration", static_cast<std::int64_t>(o.sim.duration))
                        .add("sample_period", o.sim.sample_period)
                        .add("noise_sigma", o.sim.noise_sigma)
                        .add("attenuation", o.sim.attenuation)
                        .add("base_voltage", o.sim.base_voltage)
                        .add("gain", o.sim.gain)
                        .add("seed", static_cast<std::uint64_t>(o.sim.seed))
                        .value();
  const MeasurementStream stream = simulate(topology, script, o.sim);
  Header header{"stream", {}};
  header.set("config_hash", hex16(hash));
  header.set("seed", std::to_string(o.sim.seed));
  std::ostringstream text;
  write_stream(text, stream, header.format());
  write_output(o.output, io.out, text.str());
}

// ---- analyze ---------------------------------------------------------------

struct AnalyzeOptions {
  std::string input = "-";
  TopologyOptions topology;
  Eigen::Index window_len = 240;
  Eigen::Index hop = 1;
  int factors = 1;
  std::optional<Seed> seed;
  double tol = 0.05;
  bool jitter = false;
  bool identity_unitary = false;
  std::vector<std::string> drop;
  bool no_partitions = false;
  std::optional<TimeIndex> from;
  std::optional<TimeIndex> to;
  std::vector<TimeIndex> dump_times;
  std::string spectrum_dir = ".";
  std::string output = "-";
};

void add_analyze(CLI::App& app, AnalyzeOptions& o) {
  app.add_option("-i,--input", o.input, "Stream CSV, - for stdin")
      ->capture_default_str();
  o.topology.add_to(app);
  app.add_option("--window-len", o.window_len, "Samples per window (T)")
      ->capture_default_str();
  app.add_option("--hop", o.hop, "Samples between window ends")
      ->capture_default_str();
  app.add_option("--factors", o.factors, "Matrices in the product (L)")
      ->capture_default_str();
  app.add_option("--seed", o.seed,
                 "Unitary seed (default: the stream's seed, else 0)");
  app.add_option("--tol", o.tol, "Annulus tolerance")->capture_default_str();
  app.add_flag("--jitter", o.jitter,
               "Jitter constant rows instead of failing");
  app.add_flag("--identity-unitary", o.identity_unitary,
               "Use U = I in the singular value equivalent");
  app.add_option("--drop-partition", o.drop,
                 "Exclude a partition's rows everywhere (repeatable)");
  app.add_flag("--no-partitions", o.no_partitions,
               "Only the grid-wide series");
  app.add_option("--from", o.from, "First window end time");
  app.add_option("--to", o.to, "Last window end time");
  app.add_option("--dump-spectrum", o.dump_times,
                 "Write the grid spectrum of the window ending at T (repeatable)");
  app.add_option("--spectrum-dir", o.spectrum_dir, "Directory for spectra")
      ->capture_default_str();
  app.add_option("-o,--output", o.output, "Series CSV, - for stdout")
      ->capture_default_str();
}

struct AnalyzeResult {
  SeriesTable table;
  std::vector<std::pair<fs::path, std::string>> spectra;
};

AnalyzeResult compute_analyze(const AnalyzeOptions& o, const GlobalOptions& g,
                              Io io) {
  std::vector<std::string> comments;
  const MeasurementStream stream = with_input(
      o.input, io.in, [&](std::istream& s, std::string_view source) {
        return read_stream(s, source, &comments);
      });
  const auto upstream = find_header(comments);
  const std::uint64_t upstream_hash = upstream ? upstream->config_hash() : 0;
  const Seed seed =
      o.seed ? *o.seed : (upstream ? upstream->seed().value_or(0) : 0);

  WindowConfig config;
  config.window_len = o.window_len;
  config.hop = o.hop;
  config.factors = o.factors;
  config.seed = seed;
  config.conformance_tol = o.tol;
  config.standardize.jitter = o.jitter;
  config.unitary = o.identity_unitary ? UnitaryMode::kIdentity : UnitaryMode::kHaar;
  config.first_end_time = o.from;
  config.last_end_time = o.to;
  config.threads = g.threads;

  std::set<BusId> dropped_buses;
  std::vector<std::string> dropped(o.drop);
  std::sort(dropped.begin(), dropped.end());
  dropped.erase(std::unique(dropped.begin(), dropped.end()), dropped.end());
  if (!o.no_partitions || !dropped.empty()) {
    const GridTopology topology = o.topology.load();
    for (const auto& name : dropped) {
      const auto& p = topology.partition(name);
      dropped_buses.insert(p.buses.begin(), p.buses.end());
    }
    if (!o.no_partitions) {
      for (const auto& p : topology.partitions()) {
        if (!std::binary_search(dropped.begin(), dropped.end(), p.name)) {
          config.partitions.push_back(p);
        }
      }
    }
  }
  if (!dropped_buses.empty()) {
    for (BusId bus : stream.bus_ids()) {
      if (!dropped_buses.contains(bus)) config.grid_rows.push_back(bus);
    }
    if (config.grid_rows.empty()) {
      throw InvalidArgument("dropping " + join(dropped, ',') +
                            " leaves no rows");
    }
  }

  ConfigHasher hasher("analyze", upstream_hash);
  hasher.add("window_len", static_cast<std::int64_t>(config.window_len))
      .add("hop", static_cast<std::int64_t>(config.hop))
      .add("factors", config.factors)
      .add("seed", static_cast<std::uint64_t>(seed))
      .add("tol", config.conformance_tol)
      .add("jitter", config.standardize.jitter)
      .add("identity_unitary", o.identity_unitary)
      .add("from", o.from ? std::to_string(*o.from) : std::string("-"))
      .add("to", o.to ? std::to_string(*o.to) : std::string("-"))
      .add("dropped", join(dropped, ','));
  for (const auto& p : config.partitions) {
    std::vector<std::string> ids;
    for (BusId b : p.buses) ids.push_back(std::to_string(b));
    hasher.add("partition." + p.name, join(ids, ','));
  }
  const std::uint64_t hash = hasher.value();

  AnalyzeResult result;
  result.table.header.kind = "series";
  result.table.header.set("config_hash", hex16(hash));
  result.table.header.set("seed", std::to_string(seed));
  result.table.header.set("hop", std::to_string(config.hop));
  result.table.series = msr_series(stream, config);

  std::vector<TimeIndex> dumps(o.dump_times);
  std::sort(dumps.begin(), dumps.end());
  dumps.erase(std::unique(dumps.begin(), dumps.end()), dumps.end());
  const std::optional<std::span<const BusId>> rows =
      config.grid_rows.empty()
          ? std::nullopt
          : std::optional<std::span<const BusId>>(config.grid_rows);
  for (TimeIndex t : dumps) {
    const DataWindow window = window_at(stream, t, config, rows);
    const WindowAnalysis a = analyze_window(window, config, kGridScope);
    SpectrumTable spectrum;
    spectrum.header.kind = "spectrum";
    spectrum.header.set("config_hash", hex16(hash));
    spectrum.header.set("seed", std::to_string(seed));
    spectrum.header.set("time", std::to_string(t));
    spectrum.header.set("scope", std::string(kGridScope));
    spectrum.header.set("rows", std::to_string(window.rows()));
    spectrum.header.set("window_len", std::to_string(window.cols()));
    spectrum.header.set("factors", std::to_string(config.factors));
    spectrum.header.set("tol", detail::format_double(config.conformance_tol));
    spectrum.spectrum = a.spectrum;
    std::ostringstream text;
    write_spectrum(text, spectrum);
    char name[48];
    std::snprintf(name, sizeof name, "spectrum_t%06lld.csv",
                  static_cast<long long>(t));
    result.spectra.emplace_back(fs::path(o.spectrum_dir) / name, text.str());
  }
  return result;
}

void run_analyze(const AnalyzeOptions& o, const GlobalOptions& g, Io io) {
  const AnalyzeResult result = compute_analyze(o, g, io);
  std::ostringstream text;
  write_series(text, result.table);
  if (!result.spectra.empty()) make_directory(o.spectrum_dir);
  for (const auto& [path, content] : result.spectra) write_file(path, content);
  write_output(o.output, io.out, text.str());
}

// ---- map -------------------------------------------------------------------

struct MapOptions {
  std::string quantity = "msr";
  std::string series_path;
  std::string stream_path;
  TopologyOptions topology;
  std::vector<TimeIndex> times;
  bool key_frames = false;
  bool all_times = false;
  std::string out_dir;
  int width = 80;
  int height = 60;
  double idw_power = 2.0;
  std::optional<int> neighbors;
  bool absolute = false;
  std::vector<std::string> drop;
  std::vector<double> range;
};

void add_map(CLI::App& app, MapOptions& o) {
  app.add_option("--quantity", o.quantity, "msr or voltage")
      ->capture_default_str();
  app.add_option("--series", o.series_path, "Series CSV for msr, - for stdin");
  app.add_option("--stream", o.stream_path,
                 "Stream CSV for voltage, - for stdin");
  o.topology.add_to(app);
  auto* times = app.add_option("--times", o.times, "Frame times")
                    ->delimiter(',');
  auto* keys = app.add_flag("--key-frames", o.key_frames,
                            "Times 300,301,302,420,820,826 (default)");
  app.add_flag("--all", o.all_times, "Every time of the input")
      ->excludes(times)
      ->excludes(keys);
  times->excludes(keys);
  app.add_option("--out-dir", o.out_dir, "Frame directory")->required();
  app.add_option("--width", o.width, "Grid columns")->capture_default_str();
  app.add_option("--height", o.height, "Grid rows")->capture_default_str();
  app.add_option("--idw-power", o.idw_power, "IDW distance exponent")
      ->capture_default_str();
  app.add_option("--neighbors", o.neighbors, "IDW nearest points (default all)");
  app.add_flag("--absolute", o.absolute,
               "Map raw MSR instead of MSR / expected MSR");
  app.add_option("--drop-partition", o.drop,
                 "Partition contributing no points (repeatable)");
  app.add_option("--range", o.range, "Fixed value range MIN MAX")
      ->expected(2);
}

struct MapResult {
  std::vector<MapFrame> frames;
  Provenance provenance;
};

MapResult compute_map(const MapOptions& o, Io io) {
  const auto quantity = parse_quantity(o.quantity);
  if (!quantity) {
    throw InvalidArgument("unknown quantity '" + o.quantity +
                          "' (expected msr or voltage)");
  }
  const GridTopology topology = o.topology.load();
  MapSpec spec = map_spec_for(topology, o.width, o.height);
  spec.idw_power = o.idw_power;
  spec.neighbor_count = o.neighbors;
  spec.validate();
  std::optional<std::pair<double, double>> range;
  if (!o.range.empty()) range = std::make_pair(o.range[0], o.range[1]);
  std::vector<std::string> drop(o.drop);
  std::sort(drop.begin(), drop.end());
  drop.erase(std::unique(drop.begin(), drop.end()), drop.end());
  for (const auto& name : drop) topology.partition(name);

  auto choose_times = [&](const std::vector<TimeIndex>& available) {
    if (o.all_times) return available;
    if (!o.times.empty()) return o.times;
    return std::vector<TimeIndex>(kKeyFrames.begin(), kKeyFrames.end());
  };

  MapResult result;
  std::uint64_t upstream_hash = 0;
  std::vector<TimeIndex> times;
  if (*quantity == Quantity::kMsr) {
    if (o.series_path.empty()) {
      throw InvalidArgument("--quantity msr needs --series");
    }
    const SeriesTable table = with_input(
        o.series_path, io.in, [](std::istream& s, std::string_view source) {
          return read_series(s, source);
        });
    upstream_hash = table.header.config_hash();
    result.provenance.seed = table.header.seed().value_or(0);
    times = choose_times(table.series.front().times);
    PartitionFrameOptions options;
    options.relative = !o.absolute;
    options.missing = drop;
    for (TimeIndex t : times) {
      result.frames.push_back(
          partition_frame(table.series, topology, t, spec, options));
    }
  } else {
    if (o.stream_path.empty()) {
      throw InvalidArgument("--quantity voltage needs --stream");
    }
    std::vector<std::string> comments;
    const MeasurementStream stream = with_input(
        o.stream_path, io.in, [&](std::istream& s, std::string_view source) {
          return read_stream(s, source, &comments);
        });
    if (const auto header = find_header(comments)) {
      upstream_hash = header->config_hash();
      result.provenance.seed = header->seed().value_or(0);
    }
    times = choose_times(stream.timestamps());
    for (TimeIndex t : times) {
      result.frames.push_back(voltage_frame(stream, topology, t, spec, drop));
    }
  }
  apply_shared_range(result.frames, range);

  ConfigHasher hasher("map", upstream_hash);
  hasher.add("quantity", to_string(*quantity))
      .add("topology", hex16(topology_hash(topology)))
      .add("width", spec.width)
      .add("height", spec.height)
      .add("idw_power", spec.idw_power)
      .add("neighbors", spec.neighbor_count ? std::to_string(*spec.neighbor_count)
                                            : std::string("all"))
      .add("relative", !o.absolute)
      .add("dropped", join(drop, ','))
      .add("range", range ? std::to_string(range->first) + ":" +
                                std::to_string(range->second)
                          : std::string("shared"))
      .add("times", join_times(times));
  result.provenance.config_hash = hasher.value();
  return result;
}

void run_map(const MapOptions& o, Io io) {
  const MapResult result = compute_map(o, io);
  if (result.frames.empty()) {
    io.err << "no frames requested\n";
    return;
  }
  const auto paths = write_frames(result.frames, o.out_dir, result.provenance);
  io.err << "wrote " << result.frames.size() << " " << o.quantity
         << " frames to " << o.out_dir << "\n";
  (void)paths;
}

// ---- ringcheck -------------------------------------------------------------

struct RingcheckOptions {
  RingCheckConfig config;
  std::string json_path;
  std::string spectrum_path;
};

void add_ringcheck(CLI::App& app, RingcheckOptions& o) {
  app.add_option("-n", o.config.n, "Rows (N)")->capture_default_str();
  app.add_option("-t", o.config.t, "Columns (T)")->capture_default_str();
  app.add_option("-l", o.config.factors, "Matrices in the product (L)")
      ->capture_default_str();
  app.add_option("--trials", o.config.trials, "Monte Carlo trials")
      ->capture_default_str();
  app.add_option("--seed", o.config.seed, "Base seed")->capture_default_str();
  app.add_option("--tol", o.config.tol, "Annulus tolerance")
      ->capture_default_str();
  app.add_option("--json", o.json_path, "Write the report as JSON");
  app.add_option("--spectrum", o.spectrum_path,
                 "Write the first trial's eigenvalues as CSV");
}

void run_ringcheck(RingcheckOptions o, const GlobalOptions& g, Io io) {
  o.config.threads = g.threads;
  const auto hash = ConfigHasher("ringcheck")
                        .add("n", static_cast<std::int64_t>(o.config.n))
                        .add("t", static_cast<std::int64_t>(o.config.t))
                        .add("factors", o.config.factors)
                        .add("trials", o.config.trials)
                        .add("seed", static_cast<std::uint64_t>(o.config.seed))
                        .add("tol", o.config.tol)
                        .value();
  const RingCheckReport r = ring_check(o.config);

  char buf[512];
  std::string text;
  std::snprintf(buf, sizeof buf,
                "ringcheck n=%lld t=%lld L=%d trials=%d seed=%llu tol=%g "
                "config_hash=%s\n",
                static_cast<long long>(o.config.n),
                static_cast<long long>(o.config.t), o.config.factors,
                o.config.trials, static_cast<unsigned long long>(o.config.seed),
                o.config.tol, hex16(hash).c_str());
  text += buf;
  std::snprintf(buf, sizeof buf,
                "ratio c           %.6f\n"
                "inner radius      %.6f\n"
                "outer radius      %.6f\n"
                "expected MSR      %.6f\n"
                "MSR mean +- std   %.6f +- %.6f\n"
                "annulus fraction  %.6f\n",
                r.ratio, r.inner_radius, RingParams::outer_radius(),
                r.expected_msr, r.msr_mean, r.msr_std, r.annulus_fraction);
  text += buf;

  std::vector<std::pair<std::string, std::string>> files;
  if (!o.json_path.empty()) {
    Json j;
    j["n"] = o.config.n;
    j["t"] = o.config.t;
    j["factors"] = o.config.factors;
    j["trials"] = o.config.trials;
    j["seed"] = o.config.seed;
    j["tol"] = o.config.tol;
    j["config_hash"] = hex16(hash);
    j["ratio"] = r.ratio;
    j["inner_radius"] = r.inner_radius;
    j["outer_radius"] = RingParams::outer_radius();
    j["expected_msr"] = r.expected_msr;
    j["msr_mean"] = r.msr_mean;
    j["msr_std"] = r.msr_std;
    j["annulus_fraction"] = r.annulus_fraction;
    Json trials = Json::array();
    for (const auto& t : r.trials) {
      trials.push_back({{"msr", t.msr}, {"annulus_fraction", t.conformance.fraction}});
    }
    j["trial_results"] = std::move(trials);
    files.emplace_back(o.json_path, j.dump(2) + "\n");
  }
  if (!o.spectrum_path.empty()) {
    SpectrumTable table;
    table.header.kind = "spectrum";
    table.header.set("config_hash", hex16(hash));
    table.header.set("seed", std::to_string(o.config.seed));
    table.header.set("rows", std::to_string(o.config.n));
    table.header.set("window_len", std::to_string(o.config.t));
    table.header.set("factors", std::to_string(o.config.factors));
    table.spectrum = r.first_spectrum;
    std::ostringstream s;
    write_spectrum(s, table);
    files.emplace_back(o.spectrum_path, s.str());
  }
  for (const auto& [path, content] : files) write_output(path, io.out, content);
  io.out << text;
}

// ---- repro -----------------------------------------------------------------

struct ReproOptions {
  std::string out_dir;
  Seed seed = 7;
  int width = 80;
  int height = 60;
};

void add_repro(CLI::App& app, ReproOptions& o) {
  app.add_option("--out-dir", o.out_dir, "Output directory")->required();
  app.add_option("--seed", o.seed, "Scenario seed")->capture_default_str();
  app.add_option("--width", o.width, "Frame columns")->capture_default_str();
  app.add_option("--height", o.height, "Frame rows")->capture_default_str();
}

Json event_summary(const SeriesTable& table, const fs::path& spectra) {
  const MsrSeries& grid = table.series.front();
  Json j;
  j["config_hash"] = table.header.get("config_hash").value_or("");
  const auto events = detect_events(grid, kBaselineWindow, kDropFraction);
  j["first_event"] = events.empty() ? Json(nullptr) : Json(events.front().time);
  j["events"] = events.size();
  for (TimeIndex t : {TimeIndex{300}, TimeIndex{301}}) {
    const std::string key = std::to_string(t);
    j["msr_" + key] = grid.value_at(t).value_or(0.0);
    char name[48];
    std::snprintf(name, sizeof name, "spectrum_t%06lld.csv",
                  static_cast<long long>(t));
    if (spectra.empty()) continue;
    std::ifstream in(spectra / name, std::ios::binary);
    if (!in) throw IoError("cannot open " + (spectra / name).string());
    const SpectrumTable s = read_spectrum(in, (spectra / name).string());
    const RingParams params(grid.n_rows, grid.window_len, grid.factors);
    const double tol =
        detail::parse_number<double>(s.header.get("tol").value_or("")).value_or(0.05);
    j["conformance_" + key] = ring_conformance(s.spectrum, params, tol).fraction;
  }
  return j;
}

int run_repro(const ReproOptions& o, const GlobalOptions& g, Io io);

// ---- dispatch --------------------------------------------------------------

int dispatch(const std::vector<std::string>& args, Io io) {
  CLI::App app{"Random-matrix grid monitoring: simulate, analyze, map."};
  app.name("ringlaw");
  app.set_config("--config", "", "Read options from a TOML/INI file");
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions global;
  app.add_option("--threads", global.threads, "Worker threads (0 = all cores)")
      ->envname("RINGLAW_THREADS")
      ->capture_default_str();

  SimulateOptions sim;
  AnalyzeOptions analyze;
  MapOptions map;
  RingcheckOptions ringcheck;
  ReproOptions repro;
  auto* c_sim = app.add_subcommand("simulate", "Simulate a bus voltage stream");
  add_simulate(*c_sim, sim);
  auto* c_analyze =
      app.add_subcommand("analyze", "MSR series (and spectra) of a stream");
  add_analyze(*c_analyze, analyze);
  auto* c_map = app.add_subcommand("map", "Power-map frames (JSON + PGM)");
  add_map(*c_map, map);
  auto* c_ring =
      app.add_subcommand("ringcheck", "Monte Carlo check of the ring law");
  add_ringcheck(*c_ring, ringcheck);
  auto* c_repro =
      app.add_subcommand("repro", "Run the bus-22 event scenario end to end");
  add_repro(*c_repro, repro);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    io.out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    io.out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    io.err << "error: " << e.what() << "\n";
    return 2;
  }

  // Loadable again with --config.
  io.err << "# effective config\nthreads=" << global.threads << "\n";
  for (const auto* sub : app.get_subcommands()) {
    io.err << "[" << sub->get_name() << "]\n";
    std::istringstream lines(sub->config_to_str(true, false));
    for (std::string line; std::getline(lines, line);) {
      if (!line.ends_with("=\"\"")) io.err << line << "\n";
    }
  }

  if (c_sim->parsed()) run_simulate(sim, io);
  if (c_analyze->parsed()) run_analyze(analyze, global, io);
  if (c_map->parsed()) run_map(map, io);
  if (c_ring->parsed()) run_ringcheck(ringcheck, global, io);
  if (c_repro->parsed()) return run_repro(repro, global, io);
  return 0;
}

int run_repro(const ReproOptions& o, const GlobalOptions& g, Io io) {
  const fs::path dir(o.out_dir);
  const fs::path spectra = dir / "spectra";
  make_directory(dir);
  const std::string seed = std::to_string(o.seed);
  const std::string threads = std::to_string(g.threads);
  const std::string width = std::to_string(o.width);
  const std::string height = std::to_string(o.height);
  auto step = [&](std::vector<std::string> args) {
    args.insert(args.begin(), {"--threads", threads});
    std::string line = "ringlaw";
    for (const auto& a : args) line += " " + a;
    io.err << "+ " << line << "\n";
    std::ostringstream sink;
    const int code = dispatch(args, Io{io.in, io.out, sink});
    if (code != 0) {
      io.err << sink.str();
      throw Error("repro step failed (exit " + std::to_string(code) + "): " + line);
    }
  };

  const std::string stream = (dir / "stream.csv").string();
  const std::string series = (dir / "series.csv").string();
  const std::string series_no_a2 = (dir / "series_noA2.csv").string();
  step({"simulate", "--builtin-118", "--builtin-table2", "--seed", seed,
        "-o", stream});
  step({"analyze", "-i", stream, "--dump-spectrum", "300", "--dump-spectrum",
        "301", "--spectrum-dir", spectra.string(), "-o", series});
  step({"analyze", "-i", stream, "--drop-partition", "A2", "-o", series_no_a2});
  for (const auto& [name, drop] :
       {std::pair<std::string, bool>{"full", false}, {"noA2", true}}) {
    const std::string frames = (dir / "frames" / name).string();
    std::vector<std::string> msr = {"map", "--quantity", "msr", "--series",
                                    drop ? series_no_a2 : series, "--key-frames",
                                    "--width", width, "--height", height,
                                    "--out-dir", frames};
    std::vector<std::string> volt = {"map", "--quantity", "voltage", "--stream",
                                     stream, "--key-frames", "--width", width,
                                     "--height", height, "--out-dir", frames};
    if (drop) {
      msr.insert(msr.end(), {"--drop-partition", "A2"});
      volt.insert(volt.end(), {"--drop-partition", "A2"});
    }
    step(msr);
    step(volt);
  }

  // Summary: detector output and the 300 -> 301 frame contrast.
  auto load_series = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return read_series(in, path);
  };
  Json summary;
  summary["seed"] = o.seed;
  summary["detector"] = {{"baseline_window", kBaselineWindow},
                         {"drop_fraction", kDropFraction}};
  summary["grid"] = event_summary(load_series(series), spectra);
  summary["grid_noA2"] = event_summary(load_series(series_no_a2), {});
  for (const auto& [name, drop] :
       {std::pair<std::string, bool>{"full", false}, {"noA2", true}}) {
    Json contrast;
    for (const auto* quantity : {"msr", "voltage"}) {
      MapOptions m;
      m.quantity = quantity;
      m.series_path = drop ? series_no_a2 : series;
      m.stream_path = stream;
      m.width = o.width;
      m.height = o.height;
      m.out_dir = "-";
      if (drop) m.drop = {"A2"};
      const MapResult r = compute_map(m, io);
      contrast[std::string(quantity) + "_l1_300_301"] =
          frame_l1_change(r.frames[0], r.frames[1]);
    }
    contrast["ratio"] = contrast["msr_l1_300_301"].get<double>() /
                        contrast["voltage_l1_300_301"].get<double>();
    summary["contrast_" + name] = std::move(contrast);
  }
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  io.err << "wrote " << dir.string() << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in,
        std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, Io{in, out, err});
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace ringlaw::cli
