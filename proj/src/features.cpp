#include "soilrf/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <span>

#include "soilrf/cfr.hpp"
#include "soilrf/constants.hpp"
#include "soilrf/errors.hpp"
#include "soilrf/io.hpp"
#include "soilrf/numeric.hpp"

namespace soilrf::features {
namespace {

struct BandIndices {
  std::size_t lo;
  std::size_t split;
  std::size_t hi;
};

// Band edges snap to the nearest grid points, endpoints inclusive.
BandIndices snap_band(const FrequencyGrid& grid, const WorkingBand& band) {
  band.validate();
  const double half_step = 0.5 * grid.f_step();
  if (band.f1_hz < grid.f_start() - half_step || band.f2_hz > grid.f_stop() + half_step) {
    throw std::out_of_range("working band lies outside the spectrum grid");
  }
  BandIndices idx;
  idx.lo = grid.nearest_index(band.f1_hz);
  idx.split = grid.nearest_index(band.split_hz);
  idx.hi = grid.nearest_index(band.f2_hz);
  if (idx.lo >= idx.hi) {
    throw std::out_of_range("working band snaps to fewer than 2 grid points");
  }
  if (idx.split <= idx.lo || idx.split >= idx.hi) {
    throw std::out_of_range("band split must fall strictly inside the band");
  }
  return idx;
}

std::span<const double> slice(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
  return std::span<const double>(v).subspan(lo, hi - lo + 1);
}

}  // namespace

void WorkingBand::validate() const {
  if (!(f1_hz < split_hz && split_hz < f2_hz)) {
    throw ValidationError("WorkingBand: need f1 < split < f2");
  }
}

double bai(const ChannelSpectrum& spec, const WorkingBand& band) {
  const auto idx = snap_band(spec.grid, band);
  const auto f = slice(spec.grid.points(), idx.lo, idx.hi);
  const auto a = slice(spec.a_db, idx.lo, idx.hi);
  const double a_max = *std::max_element(a.begin(), a.end());
  std::vector<double> deficit(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) deficit[i] = a_max - a[i];
  return num::trapezoid(f, deficit) / (f.back() - f.front());
}

double hl_ratio(const ChannelSpectrum& spec, const WorkingBand& band) {
  const auto idx = snap_band(spec.grid, band);
  const auto mag = spec.magnitude();
  const auto low_f = slice(spec.grid.points(), idx.lo, idx.split);
  const auto low_m = slice(mag, idx.lo, idx.split);
  const auto high_f = slice(spec.grid.points(), idx.split, idx.hi);
  const auto high_m = slice(mag, idx.split, idx.hi);
  const double low = num::trapezoid(low_f, low_m);
  const double high = num::trapezoid(high_f, high_m);
  if (!(low > 0.0)) throw ComputeError("hl_ratio: vanishing low-band integral");
  return high / low;
}

double spectral_slope(const ChannelSpectrum& spec, const WorkingBand& band) {
  const auto idx = snap_band(spec.grid, band);
  const auto f = slice(spec.grid.points(), idx.lo, idx.hi);
  const auto a = slice(spec.a_db, idx.lo, idx.hi);
  return num::ols_fit(f, a).slope;
}

double ripple_variance(const ChannelSpectrum& spec, const WorkingBand& band,
                       std::size_t window) {
  const auto idx = snap_band(spec.grid, band);
  const auto mag = spec.magnitude();
  const auto in_band = slice(mag, idx.lo, idx.hi);
  if (window < 3 || window % 2 == 0 || window > in_band.size()) {
    throw std::invalid_argument("ripple_variance: window must be odd, >= 3 and within band");
  }
  const auto baseline = num::sliding_median(in_band, window);
  std::vector<double> ratio(in_band.size());
  for (std::size_t i = 0; i < in_band.size(); ++i) {
    const double base = baseline[i] > 0.0 ? baseline[i] : constants::kMagnitudeFloor;
    ratio[i] = in_band[i] / base;
  }
  return num::sample_sd(ratio);
}

std::vector<FeatureVector> feature_series(const std::vector<SweepRecord>& records,
                                          const SweepRecord& air, const WorkingBand& band,
                                          std::size_t window) {
  if (records.empty()) throw std::invalid_argument("feature_series: no records");
  std::vector<const SweepRecord*> ordered;
  ordered.reserve(records.size());
  for (const auto& rec : records) {
    if (rec.pot_id != records.front().pot_id) {
      throw std::invalid_argument("feature_series: records span multiple pots");
    }
    if (!(rec.grid == records.front().grid) || !(rec.grid == air.grid)) {
      throw std::invalid_argument("feature_series: inconsistent frequency grids");
    }
    ordered.push_back(&rec);
  }
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const SweepRecord* a, const SweepRecord* b) { return a->day < b->day; });

  const ChannelSpectrum air_spec = cfr::assemble_spectrum(air);
  std::vector<cfr::NormalizedSpectrum> flattened;
  flattened.reserve(ordered.size());
  for (const SweepRecord* rec : ordered) {
    flattened.push_back(cfr::flatten(cfr::assemble_spectrum(*rec), air_spec));
  }

  std::vector<FeatureVector> out;
  out.reserve(ordered.size());
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    const auto normalized = cfr::normalize_day1(flattened[i], flattened.front());
    FeatureVector fv;
    fv.pot_id = ordered[i]->pot_id;
    fv.day = ordered[i]->day;
    fv.bai_db = bai(normalized.base, band);
    fv.hl = hl_ratio(normalized.base, band);
    fv.slope_db_per_hz = spectral_slope(normalized.base, band);
    fv.ripple_var = ripple_variance(normalized.base, band, window);
    out.push_back(std::move(fv));
  }
  return out;
}

void save_feature_table(const std::vector<FeatureVector>& rows,
                        const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path.string());
  out << "pot,day,bai_db,hl,slope_db_per_hz,ripple_var\n";
  for (const auto& fv : rows) {
    out << fv.pot_id << ',' << fv.day << ',' << io::format_double(fv.bai_db) << ','
        << io::format_double(fv.hl) << ',' << io::format_double(fv.slope_db_per_hz) << ','
        << io::format_double(fv.ripple_var) << '\n';
  }
}

std::vector<FeatureVector> load_feature_table(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  std::vector<FeatureVector> rows;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    const std::size_t end = text.find('\n', pos);
    std::string line =
        text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    pos = end == std::string::npos ? text.size() : end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != "pot,day,bai_db,hl,slope_db_per_hz,ripple_var") {
        throw ParseError(path.string(), 1, "bad feature table header");
      }
      continue;
    }
    if (line.empty()) continue;
    const auto cells = io::split(line, ',');
    if (cells.size() != 6) {
      throw ParseError(path.string(), line_no, "expected 6 comma-separated fields");
    }
    FeatureVector fv;
    fv.pot_id = std::string(cells[0]);
    try {
      fv.day = io::parse_int(cells[1]);
      fv.bai_db = io::parse_double(cells[2]);
      fv.hl = io::parse_double(cells[3]);
      fv.slope_db_per_hz = io::parse_double(cells[4]);
      fv.ripple_var = io::parse_double(cells[5]);
    } catch (const std::exception& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
    rows.push_back(std::move(fv));
  }
  return rows;
}

}  // namespace soilrf::features
