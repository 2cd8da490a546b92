#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace soilrf {

// ---------------------------------------------------------------------------
// Frequency grid
// ---------------------------------------------------------------------------

/// Stepped-frequency grid: points[k] = f_start + k * f_step, last point <= f_stop.
class FrequencyGrid {
 public:
  FrequencyGrid(double f_start_hz, double f_step_hz, std::size_t n_points);

  /// Builds the densest grid with the given step that stays within [f_start, f_stop].
  static FrequencyGrid from_range(double f_start_hz, double f_stop_hz, double f_step_hz);

  double f_start() const { return f_start_; }
  double f_stop() const { return f_stop_; }
  double f_step() const { return f_step_; }
  std::size_t size() const { return points_.size(); }
  double operator[](std::size_t k) const { return points_[k]; }
  const std::vector<double>& points() const { return points_; }

  /// Index of the grid point closest to f_hz.
  std::size_t nearest_index(double f_hz) const;

  bool operator==(const FrequencyGrid& other) const {
    return f_start_ == other.f_start_ && f_step_ == other.f_step_ &&
           points_.size() == other.points_.size();
  }

 private:
  double f_start_;
  double f_stop_;
  double f_step_;
  std::vector<double> points_;
};

// ---------------------------------------------------------------------------
// Sweep record
// ---------------------------------------------------------------------------

/// One day's stepped-frequency acquisition for one pot: a block of complex
/// baseband samples per grid point.
struct SweepRecord {
  std::string pot_id;
  int day = 1;
  FrequencyGrid grid{2.0e9, 40.0e6, 76};
  std::vector<std::vector<std::complex<double>>> samples;  // one block per grid point
  double dwell_s = 0.2;
  double rate_sps = 500e3;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Channel spectrum
// ---------------------------------------------------------------------------

/// Complex channel estimate per grid point plus its polar representation.
/// `floored[k]` marks points where the magnitude floor kicked in before log10.
struct ChannelSpectrum {
  FrequencyGrid grid{2.0e9, 40.0e6, 76};
  std::vector<std::complex<double>> h;
  std::vector<double> a_db;
  std::vector<double> phase_rad;  // unwrapped along frequency
  std::vector<std::uint8_t> floored;

  /// Computes magnitude (dB, floor-guarded) and unwrapped phase from h.
  static ChannelSpectrum from_samples(FrequencyGrid grid,
                                      std::vector<std::complex<double>> h);

  std::vector<double> magnitude() const;
};

// ---------------------------------------------------------------------------
// Planar grid maps
// ---------------------------------------------------------------------------

enum class MetricKind { Rsrp, Sinr, Mcs, Throughput, Bler };

inline constexpr std::array<MetricKind, 5> kAllMetrics = {
    MetricKind::Rsrp, MetricKind::Sinr, MetricKind::Mcs, MetricKind::Throughput,
    MetricKind::Bler};

std::string_view to_string(MetricKind kind);
MetricKind metric_from_string(std::string_view name);

/// One LTE indicator aggregated over a planar scan grid (row-major values).
struct MetricHeatmap {
  MetricKind metric = MetricKind::Rsrp;
  std::size_t rows = 0;
  std::size_t cols = 0;
  double spacing_cm = 5.0;
  std::vector<double> values;

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  void validate() const;
};

/// Binary ground truth or continuous fused score over the same grid.
struct OccupancyMap {
  std::size_t rows = 0;
  std::size_t cols = 0;
  double spacing_cm = 5.0;
  std::vector<double> values;  // in [0, 1]; ground truth restricted to {0, 1}

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  void validate(bool require_binary = false) const;
};

// ---------------------------------------------------------------------------
// Harvest ground truth
// ---------------------------------------------------------------------------

/// Tuber centroids annotated in image pixels; centimeter coordinates are
/// derived through the per-photo scale so the two never drift apart.
struct TuberAnnotation {
  std::string pot_id;
  double scale_cm_per_px = 1.0;
  std::vector<std::pair<double, double>> pixel_centroids;

  std::vector<std::pair<double, double>> centroids_cm() const;
  void validate() const;
};

struct HarvestOutcome {
  std::string pot_id;
  double mass_g = 0.0;
  double volume_cm3 = 0.0;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Rasterization
// ---------------------------------------------------------------------------

/// Quantizes centroids onto a rows x cols occupancy grid. The pot-fixed frame
/// has its origin at the pot centre; the grid extent is symmetric about it, so
/// coordinates are shifted to nonnegative before floor division by spacing.
/// A cell is 1 iff at least one centroid falls inside it.
OccupancyMap rasterize_annotation(const TuberAnnotation& ann, double spacing_cm,
                                  std::size_t rows, std::size_t cols);

}  // namespace soilrf
