#pragma once

// Series CSV: `# ringlaw series ... rows=grid:118;A1:17;...` header comment,
// then `time,msr_grid,msr_<partition>...,conformance_grid`.
// Spectrum CSV: header comment, then `index,re,im,radius`.

#include <iosfwd>
#include <string_view>
#include <vector>

#include "provenance.hpp"
#include "ringlaw/window_engine.hpp"

namespace ringlaw::cli {

struct SeriesTable {
  Header header;  // kind "series"; rows/window_len/factors filled on write
  std::vector<MsrSeries> series;  // grid first
};

void write_series(std::ostream& out, const SeriesTable& table);
/// Only the grid conformance fraction survives the round trip.
SeriesTable read_series(std::istream& in, std::string_view source = "<series>");

struct SpectrumTable {
  Header header;  // kind "spectrum": time, scope, rows, window_len, factors
  Spectrum spectrum;
};

void write_spectrum(std::ostream& out, const SpectrumTable& table);
SpectrumTable read_spectrum(std::istream& in,
                            std::string_view source = "<spectrum>");

}  // namespace ringlaw::cli
