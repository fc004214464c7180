#pragma once

#include <string>
#include <utility>
#include <vector>

#include "core/common.hpp"

namespace rockid {

// Uniform wavenumber grid every spectrum is resampled onto before it reaches
// a classifier. 150-1500 cm^-1 covers the diagnostic bands of the
// rock-forming silicates and carbonates handled here.
struct GridSpec {
  double min_wavenumber = 150.0;
  double max_wavenumber = 1500.0;
  int num_points = 1024;

  void validate() const;
  double step() const { return (max_wavenumber - min_wavenumber) / (num_points - 1); }
  double point(int i) const { return min_wavenumber + step() * i; }
  bool operator==(const GridSpec&) const = default;
};

// Raw measurement: strictly increasing wavenumbers with finite intensities.
struct Spectrum {
  std::vector<double> wavenumbers;  // cm^-1
  std::vector<double> intensities;  // arbitrary units

  void validate() const;
};

struct SpectrumMetadata {
  std::string mineral_name;  // from ##NAMES
  std::string source_id;     // from ##RRUFFID when present
  // All header fields in file order, so a parse -> serialize -> parse
  // round trip reproduces the record exactly.
  std::vector<std::pair<std::string, std::string>> headers;
};

struct ParsedSpectrum {
  SpectrumMetadata metadata;
  Spectrum spectrum;
};

// RRUFF-style record: "##KEY=VALUE" header lines followed by
// "wavenumber, intensity" data lines. Data is re-sorted ascending;
// duplicate wavenumbers are collapsed by averaging their intensities.
ParsedSpectrum parse_spectrum_file(const std::string& text);

std::string serialize_spectrum(const SpectrumMetadata& meta, const Spectrum& spectrum);

// Linear interpolation onto the grid; grid points outside the measured span
// are filled with 0 rather than extrapolated.
std::vector<double> resample(const Spectrum& spectrum, const GridSpec& grid);

// Min-max scaling to [0,1]; a constant vector maps to all zeros.
std::vector<double> normalize(const std::vector<double>& v);

}  // namespace rockid
