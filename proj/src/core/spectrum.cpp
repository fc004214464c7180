#include "core/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace rockid {

void GridSpec::validate() const {
  if (!(min_wavenumber < max_wavenumber))
    fail(Status::InvalidArgument, "grid: min_wavenumber must be < max_wavenumber");
  if (num_points < 2) fail(Status::InvalidArgument, "grid: num_points must be >= 2");
  if (!std::isfinite(min_wavenumber) || !std::isfinite(max_wavenumber))
    fail(Status::InvalidArgument, "grid: bounds must be finite");
}

void Spectrum::validate() const {
  if (wavenumbers.size() != intensities.size())
    fail(Status::ShapeMismatch, "spectrum: wavenumber/intensity length mismatch");
  if (wavenumbers.size() < 2) fail(Status::EmptyInput, "spectrum: needs at least 2 points");
  for (size_t i = 0; i < wavenumbers.size(); ++i) {
    if (!std::isfinite(wavenumbers[i]) || !std::isfinite(intensities[i]))
      fail(Status::ParseError, "spectrum: non-finite value");
    if (i > 0 && !(wavenumbers[i] > wavenumbers[i - 1]))
      fail(Status::ParseError, "spectrum: wavenumbers not strictly increasing");
  }
}

namespace {

bool parse_double(std::string_view s, double& out) {
  std::string tmp = trim(s);
  if (tmp.empty()) return false;
  const char* begin = tmp.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  return end == begin + tmp.size();
}

}  // namespace

ParsedSpectrum parse_spectrum_file(const std::string& text) {
  ParsedSpectrum out;
  std::vector<std::pair<double, double>> points;

  size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    std::string line = (eol == std::string::npos) ? text.substr(pos)
                                                  : text.substr(pos, eol - pos);
    pos = (eol == std::string::npos) ? text.size() + 1 : eol + 1;
    ++line_no;

    std::string stripped = trim(line);
    if (stripped.empty()) continue;

    if (stripped.rfind("##", 0) == 0) {
      std::string body = stripped.substr(2);
      size_t eq = body.find('=');
      std::string key = (eq == std::string::npos) ? body : body.substr(0, eq);
      std::string value = (eq == std::string::npos) ? "" : body.substr(eq + 1);
      out.metadata.headers.emplace_back(key, value);
      if (key == "NAMES") out.metadata.mineral_name = trim(value);
      if (key == "RRUFFID") out.metadata.source_id = trim(value);
      continue;
    }

    size_t comma = stripped.find(',');
    if (comma == std::string::npos)
      fail(Status::ParseError,
           "malformed data line " + std::to_string(line_no) + ": '" + stripped + "'");
    double w = 0.0, v = 0.0;
    if (!parse_double(std::string_view(stripped).substr(0, comma), w) ||
        !parse_double(std::string_view(stripped).substr(comma + 1), v))
      fail(Status::ParseError,
           "malformed data line " + std::to_string(line_no) + ": '" + stripped + "'");
    if (!std::isfinite(w) || !std::isfinite(v))
      fail(Status::ParseError, "non-finite value at line " + std::to_string(line_no));
    points.emplace_back(w, v);
  }

  if (points.empty()) fail(Status::EmptyInput, "no data lines in spectrum file");

  std::stable_sort(points.begin(), points.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  // Collapse duplicate wavenumbers by averaging (deterministic and
  // order-independent).
  for (size_t i = 0; i < points.size();) {
    size_t j = i + 1;
    while (j < points.size() && points[j].first == points[i].first) ++j;
    double sum = 0.0;
    for (size_t k = i; k < j; ++k) sum += points[k].second;
    out.spectrum.wavenumbers.push_back(points[i].first);
    out.spectrum.intensities.push_back(sum / static_cast<double>(j - i));
    i = j;
  }

  return out;
}

std::string serialize_spectrum(const SpectrumMetadata& meta, const Spectrum& spectrum) {
  std::ostringstream os;
  for (const auto& [key, value] : meta.headers) os << "##" << key << "=" << value << "\n";
  char buf[64];
  for (size_t i = 0; i < spectrum.wavenumbers.size(); ++i) {
    // %.17g round-trips doubles exactly.
    std::snprintf(buf, sizeof(buf), "%.17g", spectrum.wavenumbers[i]);
    os << buf << ", ";
    std::snprintf(buf, sizeof(buf), "%.17g", spectrum.intensities[i]);
    os << buf << "\n";
  }
  return os.str();
}

std::vector<double> resample(const Spectrum& spectrum, const GridSpec& grid) {
  spectrum.validate();
  grid.validate();

  const auto& w = spectrum.wavenumbers;
  const auto& y = spectrum.intensities;
  std::vector<double> out(static_cast<size_t>(grid.num_points), 0.0);

  size_t seg = 0;  // index of the segment [w[seg], w[seg+1]] being interpolated
  for (int i = 0; i < grid.num_points; ++i) {
    double x = grid.point(i);
    if (x < w.front() || x > w.back()) continue;  // out of span -> 0
    while (seg + 2 < w.size() && w[seg + 1] < x) ++seg;
    double w0 = w[seg], w1 = w[seg + 1];
    if (x <= w0) {
      out[static_cast<size_t>(i)] = y[seg];
    } else if (x >= w1) {
      out[static_cast<size_t>(i)] = y[seg + 1];
    } else {
      double t = (x - w0) / (w1 - w0);
      out[static_cast<size_t>(i)] = y[seg] + t * (y[seg + 1] - y[seg]);
    }
  }
  return out;
}

std::vector<double> normalize(const std::vector<double>& v) {
  if (v.empty()) return {};
  auto [mn_it, mx_it] = std::minmax_element(v.begin(), v.end());
  double mn = *mn_it, mx = *mx_it;
  std::vector<double> out(v.size(), 0.0);
  if (mx > mn) {
    // Division keeps the extremes exact: (mx-mn)/(mx-mn) == 1.
    double span = mx - mn;
    for (size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - mn) / span;
  }
  return out;
}

}  // namespace rockid
