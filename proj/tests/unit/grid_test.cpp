#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "ringlaw/error.hpp"
#include "ringlaw/grid.hpp"
#include "ringlaw/stream_io.hpp"

using namespace ringlaw;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ringlaw_grid_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Floyd-Warshall hop distances: an oracle independent of the library's BFS.
std::vector<std::vector<int>> hop_distances(const GridTopology& g) {
  const auto n = g.buses().size();
  const int inf = std::numeric_limits<int>::max() / 4;
  std::vector<std::vector<int>> d(n, std::vector<int>(n, inf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0;
  for (const auto& line : g.lines()) {
    const auto a = g.index_of(line.from);
    const auto b = g.index_of(line.to);
    d[a][b] = d[b][a] = 1;
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return d;
}

GridTopology two_bus() {
  return GridTopology({{1, 0.0, 0.0, "A"}, {2, 1.0, 0.0, "B"}}, {{1, 2}});
}

double mean(const Eigen::RowVectorXd& v) { return v.mean(); }

}  // namespace

TEST_SUITE("topology") {
  TEST_CASE("bundled 118-bus system") {
    const auto g = builtin_ieee118();
    CHECK(g.buses().size() == 118);
    REQUIRE(g.partitions().size() == 6);
    std::size_t covered = 0;
    for (int k = 0; k < 6; ++k) {
      CHECK(g.partitions()[static_cast<std::size_t>(k)].name == "A" + std::to_string(k + 1));
      covered += g.partitions()[static_cast<std::size_t>(k)].buses.size();
    }
    CHECK(covered == 118);
    const auto& a2 = g.partition("A2").buses;
    CHECK(std::find(a2.begin(), a2.end(), 22) != a2.end());
    const auto d = hop_distances(g);
    for (const auto& row : d)
      for (int x : row) CHECK(x < 1000);
  }

  TEST_CASE("missing partition is a validation error") {
    const std::string text = "[buses]\n1, 0, 0, A\n2, 1, 0\n[lines]\n1, 2\n";
    CHECK_THROWS_AS(parse_topology(text), ValidationError);
    const std::string empty = "[buses]\n1, 0, 0, A\n2, 1, 0, \n[lines]\n1, 2\n";
    CHECK_THROWS_AS(parse_topology(empty), ValidationError);
  }

  TEST_CASE("parse errors name the line") {
    const std::string text = "[buses]\n1, 0, 0, A\n2, x, 0, A\n";
    try {
      parse_topology(text, "grid.topo");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("grid.topo:3") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_topology("1, 0, 0, A\n"), ParseError);
    CHECK_THROWS_AS(parse_topology("[buses]\n1, 0, 0, A, extra\n"), ParseError);
    CHECK_THROWS_AS(parse_topology("[buses]\n1,0,0,A\n2,1,0,A\n[lines]\n1\n"), ParseError);
  }

  TEST_CASE("invariant violations") {
    CHECK_THROWS_AS(GridTopology({{1, 0, 0, "A"}, {1, 1, 0, "A"}}, {{1, 1}}), ValidationError);
    CHECK_THROWS_AS(GridTopology({{1, 0, 0, "A"}, {2, 0, 0, "A"}}, {{1, 2}}), ValidationError);
    CHECK_THROWS_AS(GridTopology({{1, 0, 0, "A"}, {2, 1, 0, "A"}}, {{1, 3}}), ValidationError);
    CHECK_THROWS_AS(GridTopology({{1, 0, 0, "A"}, {2, 1, 0, "A"}}, {{1, 1}}), ValidationError);
    CHECK_THROWS_AS(GridTopology({{1, 0, std::nan(""), "A"}, {2, 1, 0, "A"}}, {{1, 2}}), ValidationError);
    CHECK_THROWS_AS(
        GridTopology({{1, 0, 0, "A"}, {2, 1, 0, "A"}, {3, 2, 0, "B"}}, {{1, 2}}),
        DisconnectedGraph);
  }

  TEST_CASE("export then load gives an equal topology") {
    const auto g = builtin_ieee118();
    const auto path = scratch_dir("roundtrip") / "grid.topo";
    export_topology(g, path);
    const auto back = load_topology(path);
    CHECK(back == g);
    CHECK(back.partitions() == g.partitions());
    CHECK_THROWS_AS(load_topology(path.parent_path() / "missing.topo"), IoError);
  }

  TEST_CASE("partition lookup") {
    const auto g = builtin_ieee118();
    CHECK_THROWS_AS(g.partition("A9"), InvalidArgument);
    CHECK_THROWS_AS(g.index_of(119), UnknownBus);
  }
}

TEST_SUITE("influence_matrix") {
  TEST_CASE("diagonal and one hop") {
    const auto m = influence_matrix(two_bus(), 0.5);
    CHECK(m(0, 0) == 1.0);
    CHECK(m(1, 1) == 1.0);
    CHECK(m(0, 1) == 0.5);
    CHECK(m(1, 0) == 0.5);
    CHECK_THROWS_AS(influence_matrix(two_bus(), 0.0), InvalidArgument);
    CHECK_THROWS_AS(influence_matrix(two_bus(), 1.5), InvalidArgument);
  }

  TEST_CASE("118-bus matrix matches shortest-path oracle") {
    const auto g = builtin_ieee118();
    const double a = 0.6;
    const auto m = influence_matrix(g, a);
    const auto d = hop_distances(g);
    for (Eigen::Index i = 0; i < 118; ++i) {
      for (Eigen::Index j = 0; j < 118; ++j) {
        CHECK(m(i, j) == m(j, i));
        CHECK(m(i, j) > 0.0);
        CHECK(m(i, j) <= 1.0);
        CHECK(m(i, j) == doctest::Approx(std::pow(a, d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)])).epsilon(1e-14));
      }
    }
  }
}

TEST_SUITE("event script") {
  TEST_CASE("bundled schedule") {
    const auto s = table2_script();
    CHECK(s.load(22, 1) == 0.0);
    CHECK(s.load(22, 300) == 0.0);
    CHECK(s.load(22, 301) == 200.0);
    CHECK(s.load(22, 700) == 200.0);
    CHECK(s.load(22, 701) == 201.0);
    CHECK(s.load(22, 1000) == 500.0);
    CHECK(s.load(22, 1001) == 0.0);
    CHECK(s.load(23, 500) == 0.0);
  }

  TEST_CASE("format then parse round trip") {
    const auto s = table2_script();
    CHECK(parse_event_script(format_event_script(s)) == s);
  }

  TEST_CASE("segments must be contiguous and non-overlapping") {
    CHECK_THROWS_AS(parse_event_script("5, 1, 10, const, 1\n5, 8, 20, const, 2\n"), ValidationError);
    CHECK_THROWS_AS(parse_event_script("5, 1, 10, const, 1\n5, 12, 20, const, 2\n"), ValidationError);
    CHECK_THROWS_AS(parse_event_script("5, 10, 1, const, 1\n"), ValidationError);
    CHECK_NOTHROW(parse_event_script("5, 11, 20, const, 2\n5, 1, 10, const, 1\n"));
  }

  TEST_CASE("malformed rows") {
    CHECK_THROWS_AS(parse_event_script("5, 1, 10, pulse, 1\n"), ParseError);
    CHECK_THROWS_AS(parse_event_script("5, 1, 10, const\n"), ParseError);
    CHECK_THROWS_AS(parse_event_script("5, 1, 10, ramp, 1\n"), ParseError);
    CHECK_THROWS_AS(parse_event_script("x, 1, 10, const, 1\n"), ParseError);
  }
}

TEST_SUITE("simulate") {
  const GridTopology grid = builtin_ieee118();

  TEST_CASE("empty script gives noise around the base voltage") {
    SimConfig c;
    c.seed = 3;
    const auto s = simulate(grid, EventScript{}, c);
    REQUIRE(s.size() == 1000);
    CHECK(s.timestamps().front() == 1);
    CHECK(s.timestamps().back() == 1000);
    const double bound = 3.0 * c.noise_sigma / std::sqrt(1000.0);
    int outside = 0;
    for (Eigen::Index i = 0; i < 118; ++i) {
      if (std::abs(mean(s.samples().row(i)) - c.base_voltage) > bound) ++outside;
    }
    // 3-sigma bound: expect about 0.3 of 118 buses outside.
    CHECK(outside <= 3);
  }

  TEST_CASE("lag-1 autocorrelation of pure noise") {
    SimConfig c;
    c.seed = 4;
    const auto s = simulate(grid, EventScript{}, c);
    const double bound = 3.0 / std::sqrt(1000.0);
    int outside = 0;
    for (Eigen::Index i = 0; i < 118; ++i) {
      const Eigen::RowVectorXd x = s.samples().row(i).array() - s.samples().row(i).mean();
      const double r = x.head(999).dot(x.tail(999)) / x.squaredNorm();
      if (std::abs(r) > bound) ++outside;
    }
    CHECK(outside <= 3);
  }

  TEST_CASE("step at bus 22 lowers its mean by gain * 200 MW") {
    SimConfig c;
    c.seed = 5;
    const auto s = simulate(grid, table2_script(), c);
    const auto row = *s.row_of_bus(22);
    const double before = s.samples().row(row).segment(0, 300).mean();
    const double after = s.samples().row(row).segment(300, 400).mean();
    // Influence of bus 22 on itself is 1; tolerance is 5 standard errors.
    const double se = c.noise_sigma * std::sqrt(1.0 / 300 + 1.0 / 400);
    CHECK(std::abs((before - after) - c.gain * 200.0) < 5 * se);
  }

  TEST_CASE("ramp slope by linear regression") {
    SimConfig c;
    c.seed = 6;
    const auto s = simulate(grid, table2_script(), c);
    const auto row = *s.row_of_bus(22);
    double st = 0, sv = 0, stt = 0, stv = 0;
    const int n = 300;
    for (int k = 700; k < 1000; ++k) {
      const double t = static_cast<double>(s.timestamps()[static_cast<std::size_t>(k)]);
      const double v = s.samples()(row, k);
      st += t;
      sv += v;
      stt += t * t;
      stv += t * v;
    }
    const double slope = (n * stv - st * sv) / (n * stt - st * st);
    const double se = c.noise_sigma / std::sqrt(stt - st * st / n);
    CHECK(std::abs(slope - (-c.gain)) < 5 * se);
  }

  TEST_CASE("deterministic per seed") {
    SimConfig c;
    c.seed = 9;
    CHECK(simulate(grid, table2_script(), c) == simulate(grid, table2_script(), c));
    SimConfig d = c;
    d.seed = 10;
    CHECK_FALSE(simulate(grid, table2_script(), c) == simulate(grid, table2_script(), d));
  }

  TEST_CASE("superposition of two scripts") {
    SimConfig c;
    c.seed = 12;
    c.duration = 200;
    const EventScript a = parse_event_script("22, 1, 100, const, 50\n22, 101, 200, ramp, 2, -100\n");
    const EventScript b = parse_event_script("80, 50, 200, const, 120\n");
    const EventScript ab = parse_event_script(
        "22, 1, 100, const, 50\n22, 101, 200, ramp, 2, -100\n80, 50, 200, const, 120\n");
    const auto base = simulate(grid, EventScript{}, c).samples();
    const Eigen::MatrixXd da = simulate(grid, a, c).samples() - base;
    const Eigen::MatrixXd db = simulate(grid, b, c).samples() - base;
    const Eigen::MatrixXd dab = simulate(grid, ab, c).samples() - base;
    CHECK((dab - (da + db)).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("deviation is non-increasing in hop distance") {
    SimConfig c;
    c.seed = 1;
    c.duration = 5;
    const auto quiet = simulate(grid, EventScript{}, c).samples();
    const auto loaded = simulate(grid, parse_event_script("22, 1, 5, const, 100\n"), c).samples();
    const auto d = hop_distances(grid);
    const auto src = grid.index_of(22);
    for (Eigen::Index i = 0; i < 118; ++i) {
      for (Eigen::Index j = 0; j < 118; ++j) {
        if (d[src][static_cast<std::size_t>(i)] < d[src][static_cast<std::size_t>(j)]) {
          CHECK(std::abs(quiet(i, 2) - loaded(i, 2)) >= std::abs(quiet(j, 2) - loaded(j, 2)) - 1e-15);
        }
      }
    }
  }

  TEST_CASE("bad inputs") {
    SimConfig c;
    CHECK_THROWS_AS(simulate(grid, parse_event_script("500, 1, 5, const, 1\n"), c), UnknownBus);
    c.noise_sigma = 0.0;
    CHECK_THROWS_AS(simulate(grid, EventScript{}, c), InvalidArgument);
    c.noise_sigma = 1e-3;
    c.duration = 0;
    CHECK_THROWS_AS(simulate(grid, EventScript{}, c), InvalidArgument);
    c.duration = 10;
    c.attenuation = 0.0;
    CHECK_THROWS_AS(simulate(grid, EventScript{}, c), InvalidArgument);
  }
}

TEST_SUITE("stream csv") {
  TEST_CASE("10-sample round trip is exact") {
    SimConfig c;
    c.seed = 2;
    c.duration = 10;
    const auto s = simulate(builtin_ieee118(), table2_script(), c);
    const auto path = scratch_dir("stream") / "s.csv";
    export_stream(s, path, "ringlaw stream seed=2");
    CHECK(import_stream(path) == s);
  }

  TEST_CASE("1000 x 118 stream has 1001 data lines") {
    SimConfig c;
    const auto s = simulate(builtin_ieee118(), table2_script(), c);
    std::ostringstream out;
    write_stream(out, s);
    const auto text = out.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 1001);
    std::vector<std::string> comments;
    std::istringstream with_comment("# hello\n" + text);
    CHECK(read_stream(with_comment, "<s>", &comments) == s);
    CHECK(comments == std::vector<std::string>{"hello"});
  }

  TEST_CASE("ragged row names the row") {
    std::istringstream in("time,bus_1,bus_2\n1,1.0,2.0\n2,1.0\n");
    try {
      read_stream(in, "s.csv");
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      const std::string what = e.what();
      CHECK(what.find("s.csv:3") != std::string::npos);
      CHECK(what.find("2 fields") != std::string::npos);
    }
  }

  TEST_CASE("bad cells and headers") {
    std::istringstream bad_value("time,bus_1\n1,abc\n");
    CHECK_THROWS_AS(read_stream(bad_value), FormatError);
    std::istringstream bad_header("t,bus_1\n1,1\n");
    CHECK_THROWS_AS(read_stream(bad_header), FormatError);
    std::istringstream bad_bus("time,node_1\n1,1\n");
    CHECK_THROWS_AS(read_stream(bad_bus), FormatError);
    std::istringstream uneven("time,bus_1\n1,1\n2,1\n4,1\n");
    CHECK_THROWS_AS(read_stream(uneven), FormatError);
    std::istringstream empty("");
    CHECK_THROWS_AS(read_stream(empty), FormatError);
    CHECK_THROWS_AS(import_stream("/nonexistent/ringlaw.csv"), IoError);
  }
}
