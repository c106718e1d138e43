#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <numeric>
#include <random>

#include "ringlaw/error.hpp"
#include "ringlaw/grid.hpp"
#include "ringlaw/window_engine.hpp"

using namespace ringlaw;

namespace {

MeasurementStream gaussian_stream(int buses, int samples, std::uint64_t seed,
                                  TimeIndex first = 1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise;
  Eigen::MatrixXd v(buses, samples);
  for (Eigen::Index j = 0; j < v.cols(); ++j)
    for (Eigen::Index i = 0; i < v.rows(); ++i) v(i, j) = noise(rng);
  std::vector<TimeIndex> times(static_cast<std::size_t>(samples));
  std::iota(times.begin(), times.end(), first);
  std::vector<BusId> ids(static_cast<std::size_t>(buses));
  std::iota(ids.begin(), ids.end(), 1);
  return MeasurementStream(std::move(times), std::move(ids), std::move(v));
}

std::vector<Partition> split_partitions(int buses, int parts) {
  std::vector<Partition> out;
  for (int p = 0; p < parts; ++p) {
    Partition part{"P" + std::to_string(p + 1), {}};
    for (int b = p + 1; b <= buses; b += parts) part.buses.push_back(b);
    out.push_back(std::move(part));
  }
  return out;
}

MsrSeries series_of(std::vector<double> values) {
  MsrSeries s;
  s.scope = "grid";
  for (std::size_t k = 0; k < values.size(); ++k) {
    s.times.push_back(static_cast<TimeIndex>(k + 1));
  }
  s.values = std::move(values);
  return s;
}

}  // namespace

TEST_SUITE("stream") {
  TEST_CASE("constructor checks") {
    CHECK_THROWS_AS(MeasurementStream({1, 2}, {1}, Eigen::MatrixXd::Zero(1, 3)), InvalidArgument);
    CHECK_THROWS_AS(MeasurementStream({1, 2}, {1, 1}, Eigen::MatrixXd::Zero(2, 2)), InvalidArgument);
    CHECK_THROWS_AS(MeasurementStream({2, 1}, {1}, Eigen::MatrixXd::Zero(1, 2)), InvalidArgument);
    CHECK_THROWS_AS(MeasurementStream({1, 2, 4}, {1}, Eigen::MatrixXd::Zero(1, 3)), InvalidArgument);
    const MeasurementStream s({10, 15, 20}, {7}, Eigen::MatrixXd::Zero(1, 3));
    CHECK(s.step() == 5);
    CHECK(s.index_of_time(15) == 1u);
    CHECK_FALSE(s.index_of_time(16));
    CHECK_FALSE(s.index_of_time(25));
    CHECK_FALSE(s.row_of_bus(8));
  }

  TEST_CASE("select_buses keeps the requested order") {
    const auto s = gaussian_stream(5, 10, 1);
    const std::vector<BusId> pick{4, 2};
    const auto sub = s.select_buses(pick);
    CHECK(sub.bus_ids() == pick);
    CHECK(sub.samples().row(0) == s.samples().row(3));
    CHECK(sub.samples().row(1) == s.samples().row(1));
    const std::vector<BusId> bad{9};
    CHECK_THROWS_AS(s.select_buses(bad), UnknownBus);
  }
}

TEST_SUITE("window_at") {
  TEST_CASE("window ending at 300 covers samples 61..300") {
    const auto s = gaussian_stream(118, 1000, 2);
    WindowConfig c;
    const auto w = window_at(s, 300, c);
    CHECK(w.rows() == 118);
    CHECK(w.cols() == 240);
    CHECK(w.end_time() == 300);
    CHECK(w.values() == s.samples().block(0, 60, 118, 240));
  }

  TEST_CASE("first complete window") {
    const auto s = gaussian_stream(4, 300, 3);
    WindowConfig c;
    CHECK(window_at(s, 240, c).values() == s.samples().leftCols(240));
    CHECK_THROWS_AS(window_at(s, 239, c), InsufficientHistory);
    CHECK_THROWS_AS(window_at(s, 301, c), InsufficientHistory);
  }

  TEST_CASE("partition rows of the bundled grid") {
    const auto grid = builtin_ieee118();
    SimConfig sc;
    sc.duration = 300;
    const auto s = simulate(grid, table2_script(), sc);
    const auto& a2 = grid.partition("A2").buses;
    WindowConfig c;
    const auto w = window_at(s, 300, c, std::span<const BusId>(a2));
    CHECK(w.row_ids() == a2);
    for (std::size_t k = 0; k < a2.size(); ++k) {
      const auto r = *s.row_of_bus(a2[k]);
      CHECK(w.values().row(static_cast<Eigen::Index>(k)) == s.samples().block(r, 60, 1, 240));
    }
    const std::vector<BusId> unknown{500};
    CHECK_THROWS_AS(window_at(s, 300, c, std::span<const BusId>(unknown)), UnknownBus);
  }
}

TEST_SUITE("analyze_window") {
  TEST_CASE("pure noise sits near the ring mean") {
    const auto s = gaussian_stream(118, 240, 4);
    WindowConfig c;
    c.seed = 4;
    const auto a = analyze_window(window_at(s, 240, c), c);
    CHECK(a.spectrum.size() == 118);
    CHECK(std::abs(a.msr - expected_msr(RingParams(118, 240, 1))) < 0.05);
    CHECK(a.conformance.fraction > 0.9);
  }

  TEST_CASE("the bus 22 step lowers the grid MSR") {
    const auto grid = builtin_ieee118();
    int lower = 0;
    for (Seed seed = 1; seed <= 20; ++seed) {
      SimConfig sc;
      sc.duration = 320;
      sc.seed = seed;
      const auto s = simulate(grid, table2_script(), sc);
      WindowConfig c;
      c.seed = seed;
      const double before = analyze_window(window_at(s, 300, c), c).msr;
      const double after = analyze_window(window_at(s, 320, c), c).msr;
      if (after < before) ++lower;
    }
    CHECK(lower == 20);
  }

  TEST_CASE("same seed, same result") {
    const auto s = gaussian_stream(30, 100, 5);
    WindowConfig c;
    c.window_len = 100;
    c.factors = 3;
    c.seed = 77;
    const auto a = analyze_window(window_at(s, 100, c), c, "A1");
    const auto b = analyze_window(window_at(s, 100, c), c, "A1");
    CHECK(a.spectrum.eigenvalues == b.spectrum.eigenvalues);
    CHECK(a.msr == b.msr);
    const auto other = analyze_window(window_at(s, 100, c), c, "A2");
    CHECK(other.msr != a.msr);
  }

  TEST_CASE("errors carry the window end time and scope") {
    Eigen::MatrixXd v = Eigen::MatrixXd::Random(3, 50);
    v.row(1).setConstant(2.0);
    std::vector<TimeIndex> times(50);
    std::iota(times.begin(), times.end(), 1);
    const MeasurementStream flat(times, {1, 2, 3}, v);
    WindowConfig c;
    c.window_len = 50;
    try {
      analyze_window(window_at(flat, 50, c), c, "A3");
      FAIL("expected ZeroVarianceRow");
    } catch (const ZeroVarianceRow& e) {
      const std::string what = e.what();
      CHECK(what.find("t=50") != std::string::npos);
      CHECK(what.find("A3") != std::string::npos);
      CHECK(what.find("bus 2") != std::string::npos);
    }
    c.standardize.jitter = true;
    CHECK_NOTHROW(analyze_window(window_at(flat, 50, c), c, "A3"));
  }
}

TEST_SUITE("msr_series") {
  const auto stream = gaussian_stream(24, 120, 6);

  WindowConfig small_config() {
    WindowConfig c;
    c.window_len = 60;
    c.seed = 11;
    c.partitions = split_partitions(24, 6);
    return c;
  }

  TEST_CASE("one series per scope covering every complete window") {
    auto c = small_config();
    const auto out = msr_series(stream, c);
    REQUIRE(out.size() == 7);
    CHECK(out[0].scope == "grid");
    CHECK(out[0].n_rows == 24);
    CHECK(out[3].scope == "P3");
    CHECK(out[3].n_rows == 4);
    for (const auto& s : out) {
      CHECK(s.times.size() == 61);
      CHECK(s.times.front() == 60);
      CHECK(s.times.back() == 120);
      CHECK(s.values.size() == 61);
      CHECK(s.conformance.size() == 61);
    }
    c.hop = 7;
    const auto sparse = msr_series(stream, c);
    CHECK(sparse[0].times == std::vector<TimeIndex>{60, 67, 74, 81, 88, 95, 102, 109, 116});
  }

  TEST_CASE("series values equal single-window analysis") {
    auto c = small_config();
    c.first_end_time = 100;
    c.last_end_time = 104;
    const auto out = msr_series(stream, c);
    REQUIRE(out[0].times.size() == 5);
    for (std::size_t k = 0; k < 5; ++k) {
      const TimeIndex t = out[0].times[k];
      CHECK(out[0].values[k] == analyze_window(window_at(stream, t, c), c).msr);
      const auto& p = c.partitions[1];
      const auto w = window_at(stream, t, c, std::span<const BusId>(p.buses));
      CHECK(out[2].values[k] == analyze_window(w, c, p.name).msr);
    }
    c.hop = 2;
    const auto hop2 = msr_series(stream, c);
    CHECK(hop2[0].times == std::vector<TimeIndex>{100, 102, 104});
    CHECK(hop2[0].values[1] == out[0].values[2]);
  }

  TEST_CASE("partition series do not depend on the other scopes") {
    auto c = small_config();
    const auto all = msr_series(stream, c);
    c.partitions = {c.partitions[4]};
    const auto one = msr_series(stream, c);
    CHECK(one[1].values == all[5].values);
    CHECK(one[0].values == all[0].values);
  }

  TEST_CASE("thread count does not change the result") {
    auto c = small_config();
    c.threads = 1;
    const auto serial = msr_series(stream, c);
    c.threads = 4;
    const auto parallel = msr_series(stream, c);
    for (std::size_t s = 0; s < serial.size(); ++s) {
      CHECK(serial[s].values == parallel[s].values);
    }
  }

  TEST_CASE("configuration errors") {
    auto c = small_config();
    c.hop = 0;
    CHECK_THROWS_AS(msr_series(stream, c), InvalidArgument);
    c = small_config();
    c.factors = 0;
    CHECK_THROWS_AS(msr_series(stream, c), InvalidArgument);
    c = small_config();
    c.window_len = 200;
    CHECK_THROWS_AS(msr_series(stream, c), InsufficientHistory);
    c = small_config();
    c.window_len = 20;
    c.grid_rows = {};
    CHECK_THROWS_AS(msr_series(stream, c), InvalidArgument);
    c = small_config();
    c.partitions.push_back({"X", {99}});
    CHECK_THROWS_AS(msr_series(stream, c), UnknownBus);
  }
}

TEST_SUITE("detect_events") {
  TEST_CASE("drop from 0.80 to 0.52") {
    std::vector<double> v(60, 0.80);
    v.push_back(0.52);
    const auto events = detect_events(series_of(v), 50, 0.10);
    REQUIRE(events.size() == 1);
    CHECK(events[0].time == 61);
    CHECK(events[0].severity == doctest::Approx(0.35).epsilon(1e-12));
  }

  TEST_CASE("small wiggles are not events") {
    std::vector<double> v;
    for (int k = 0; k < 200; ++k) v.push_back(0.86 + 0.01 * ((k % 3) - 1));
    CHECK(detect_events(series_of(v), 50, 0.10).empty());
  }

  TEST_CASE("baseline trails the current value") {
    std::vector<double> v(50, 1.0);
    v.insert(v.end(), 60, 0.5);
    const auto events = detect_events(series_of(v), 50, 0.10);
    REQUIRE_FALSE(events.empty());
    CHECK(events.front().time == 51);
    // Once the baseline has absorbed the drop, no more events fire.
    CHECK(events.back().time < 110);
  }

  TEST_CASE("argument checks") {
    const auto s = series_of(std::vector<double>(30, 1.0));
    CHECK_THROWS_AS(detect_events(s, 50, 0.1), SeriesTooShort);
    CHECK_THROWS_AS(detect_events(s, 5, 0.1), InvalidArgument);
    CHECK_THROWS_AS(detect_events(s, 10, 0.0), InvalidArgument);
    CHECK_THROWS_AS(detect_events(s, 10, 1.0), InvalidArgument);
  }
}
