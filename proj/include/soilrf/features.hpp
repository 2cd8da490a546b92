#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "soilrf/types.hpp"

namespace soilrf::features {

/// Working band and its high/low split. Defaults follow the 2.0-3.5 GHz band
/// with the split at 2.75 GHz.
struct WorkingBand {
  double f1_hz = 2.0e9;
  double f2_hz = 3.5e9;
  double split_hz = 2.75e9;

  void validate() const;
};

struct FeatureVector {
  std::string pot_id;
  int day = 1;
  double bai_db = 0.0;
  double hl = 1.0;
  double slope_db_per_hz = 0.0;
  double ripple_var = 0.0;
};

inline constexpr std::size_t kDefaultRippleWindow = 9;

/// Broadband attenuation integral: band-averaged deficit of A_dB below its
/// in-band maximum (trapezoidal quadrature).
double bai(const ChannelSpectrum& spec, const WorkingBand& band);

/// Ratio of integrated linear magnitudes, upper half-band over lower.
double hl_ratio(const ChannelSpectrum& spec, const WorkingBand& band);

/// Least-squares slope of A_dB versus frequency over the band.
double spectral_slope(const ChannelSpectrum& spec, const WorkingBand& band);

/// Sample standard deviation of |H| over its sliding-median baseline.
double ripple_variance(const ChannelSpectrum& spec, const WorkingBand& band,
                       std::size_t window = kDefaultRippleWindow);

/// Full per-day pipeline: air flatten, day-1 normalization, four features.
/// Records are processed in day order; the earliest day is the reference.
std::vector<FeatureVector> feature_series(const std::vector<SweepRecord>& records,
                                          const SweepRecord& air, const WorkingBand& band,
                                          std::size_t window = kDefaultRippleWindow);

void save_feature_table(const std::vector<FeatureVector>& rows,
                        const std::filesystem::path& path);
std::vector<FeatureVector> load_feature_table(const std::filesystem::path& path);

}  // namespace soilrf::features
