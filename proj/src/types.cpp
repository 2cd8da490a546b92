#include "soilrf/types.hpp"

#include <cmath>
#include <sstream>

#include "soilrf/constants.hpp"
#include "soilrf/errors.hpp"
#include "soilrf/numeric.hpp"

namespace soilrf {

FrequencyGrid::FrequencyGrid(double f_start_hz, double f_step_hz, std::size_t n_points)
    : f_start_(f_start_hz), f_step_(f_step_hz) {
  if (!(f_start_hz > 0.0) || !std::isfinite(f_start_hz)) {
    throw ValidationError("FrequencyGrid: f_start must be positive and finite");
  }
  if (!(f_step_hz > 0.0) || !std::isfinite(f_step_hz)) {
    throw ValidationError("FrequencyGrid: f_step must be positive and finite");
  }
  if (n_points == 0) throw ValidationError("FrequencyGrid: need at least one point");
  points_.resize(n_points);
  for (std::size_t k = 0; k < n_points; ++k) {
    points_[k] = f_start_hz + static_cast<double>(k) * f_step_hz;
  }
  f_stop_ = points_.back();
}

FrequencyGrid FrequencyGrid::from_range(double f_start_hz, double f_stop_hz,
                                        double f_step_hz) {
  if (!(f_start_hz < f_stop_hz)) {
    throw ValidationError("FrequencyGrid: f_start must be below f_stop");
  }
  if (!(f_step_hz > 0.0)) throw ValidationError("FrequencyGrid: f_step must be positive");
  // Small relative slack so e.g. (3.5e9 - 2e9) / 4e7 counts its last point.
  const std::size_t n = static_cast<std::size_t>(
      std::floor((f_stop_hz - f_start_hz) / f_step_hz * (1.0 + 1e-12))) + 1;
  return FrequencyGrid(f_start_hz, f_step_hz, n);
}

std::size_t FrequencyGrid::nearest_index(double f_hz) const {
  const double pos = (f_hz - f_start_) / f_step_;
  const double clamped = std::max(0.0, std::min(pos, static_cast<double>(size() - 1)));
  return static_cast<std::size_t>(std::llround(clamped));
}

void SweepRecord::validate() const {
  if (pot_id.empty()) throw ValidationError("SweepRecord: empty pot id");
  if (day < 1) throw ValidationError("SweepRecord: day index must be >= 1");
  if (samples.size() != grid.size()) {
    throw ValidationError("SweepRecord: expected one sample block per grid point");
  }
  if (!(dwell_s > 0.0) || !(rate_sps > 0.0)) {
    throw ValidationError("SweepRecord: dwell and sample rate must be positive");
  }
  const double expected_len = dwell_s * rate_sps;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (samples[k].empty()) {
      throw ValidationError("SweepRecord: empty block at grid index " + std::to_string(k));
    }
    if (std::abs(static_cast<double>(samples[k].size()) - expected_len) > 1.0) {
      throw ValidationError("SweepRecord: block length " +
                            std::to_string(samples[k].size()) +
                            " inconsistent with dwell*rate at grid index " +
                            std::to_string(k));
    }
  }
}

ChannelSpectrum ChannelSpectrum::from_samples(FrequencyGrid grid,
                                              std::vector<std::complex<double>> h) {
  if (h.size() != grid.size()) {
    throw ValidationError("ChannelSpectrum: sample count does not match grid");
  }
  ChannelSpectrum spec;
  spec.grid = std::move(grid);
  spec.h = std::move(h);
  spec.a_db.resize(spec.h.size());
  spec.phase_rad.resize(spec.h.size());
  spec.floored.assign(spec.h.size(), 0);
  for (std::size_t k = 0; k < spec.h.size(); ++k) {
    double mag = std::abs(spec.h[k]);
    if (mag < constants::kMagnitudeFloor) {
      mag = constants::kMagnitudeFloor;
      spec.floored[k] = 1;
    }
    spec.a_db[k] = 20.0 * std::log10(mag);
    spec.phase_rad[k] = std::arg(spec.h[k]);
  }
  num::unwrap_phases(spec.phase_rad);
  return spec;
}

std::vector<double> ChannelSpectrum::magnitude() const {
  std::vector<double> m(h.size());
  for (std::size_t k = 0; k < h.size(); ++k) m[k] = std::abs(h[k]);
  return m;
}

std::string_view to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::Rsrp: return "RSRP";
    case MetricKind::Sinr: return "SINR";
    case MetricKind::Mcs: return "MCS";
    case MetricKind::Throughput: return "throughput";
    case MetricKind::Bler: return "BLER";
  }
  throw std::invalid_argument("to_string: bad MetricKind");
}

MetricKind metric_from_string(std::string_view name) {
  for (MetricKind kind : kAllMetrics) {
    if (name == to_string(kind)) return kind;
  }
  throw ValidationError("unknown metric name: " + std::string(name));
}

void MetricHeatmap::validate() const {
  if (rows == 0 || cols == 0) throw ValidationError("MetricHeatmap: empty grid shape");
  if (values.size() != rows * cols) {
    throw ValidationError("MetricHeatmap: value count does not match declared shape");
  }
  if (!(spacing_cm > 0.0)) throw ValidationError("MetricHeatmap: spacing must be positive");
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError("MetricHeatmap: non-finite value");
  }
}

void OccupancyMap::validate(bool require_binary) const {
  if (rows == 0 || cols == 0) throw ValidationError("OccupancyMap: empty grid shape");
  if (values.size() != rows * cols) {
    throw ValidationError("OccupancyMap: value count does not match declared shape");
  }
  if (!(spacing_cm > 0.0)) throw ValidationError("OccupancyMap: spacing must be positive");
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw ValidationError("OccupancyMap: values must lie in [0, 1]");
    }
    if (require_binary && v != 0.0 && v != 1.0) {
      throw ValidationError("OccupancyMap: ground truth must be binary");
    }
  }
}

std::vector<std::pair<double, double>> TuberAnnotation::centroids_cm() const {
  std::vector<std::pair<double, double>> out;
  out.reserve(pixel_centroids.size());
  for (const auto& [px, py] : pixel_centroids) {
    out.emplace_back(px * scale_cm_per_px, py * scale_cm_per_px);
  }
  return out;
}

void TuberAnnotation::validate() const {
  if (pot_id.empty()) throw ValidationError("TuberAnnotation: empty pot id");
  if (!(scale_cm_per_px > 0.0)) {
    throw ValidationError("TuberAnnotation: scale must be positive");
  }
  for (const auto& [px, py] : pixel_centroids) {
    if (!std::isfinite(px) || !std::isfinite(py)) {
      throw ValidationError("TuberAnnotation: non-finite centroid");
    }
  }
}

void HarvestOutcome::validate() const {
  if (pot_id.empty()) throw ValidationError("HarvestOutcome: empty pot id");
  if (!(mass_g > 0.0)) throw ValidationError("HarvestOutcome: mass must be positive");
  if (!(volume_cm3 > 0.0)) throw ValidationError("HarvestOutcome: volume must be positive");
}

OccupancyMap rasterize_annotation(const TuberAnnotation& ann, double spacing_cm,
                                  std::size_t rows, std::size_t cols) {
  ann.validate();
  if (!(spacing_cm > 0.0)) throw ValidationError("rasterize: spacing must be positive");
  if (rows == 0 || cols == 0) throw ValidationError("rasterize: empty grid shape");

  OccupancyMap map;
  map.rows = rows;
  map.cols = cols;
  map.spacing_cm = spacing_cm;
  map.values.assign(rows * cols, 0.0);

  const double half_x = 0.5 * spacing_cm * static_cast<double>(cols);
  const double half_y = 0.5 * spacing_cm * static_cast<double>(rows);
  const auto cm = ann.centroids_cm();
  for (std::size_t i = 0; i < cm.size(); ++i) {
    const double u = cm[i].first + half_x;   // shifted to nonnegative
    const double v = cm[i].second + half_y;
    const double ci = std::floor(u / spacing_cm);
    const double ri = std::floor(v / spacing_cm);
    if (ci < 0.0 || ri < 0.0 || ci >= static_cast<double>(cols) ||
        ri >= static_cast<double>(rows)) {
      std::ostringstream msg;
      msg << "rasterize: centroid " << i << " at (" << cm[i].first << " cm, "
          << cm[i].second << " cm) lies outside the " << rows << "x" << cols
          << " grid extent";
      throw ValidationError(msg.str());
    }
    map.at(static_cast<std::size_t>(ri), static_cast<std::size_t>(ci)) = 1.0;
  }
  return map;
}

}  // namespace soilrf
