#pragma once

#include <complex>
#include <filesystem>
#include <span>
#include <vector>

#include "soilrf/types.hpp"

namespace soilrf::cfr {

struct CfoEstimate {
  double delta_f_hz = 0.0;
  double residual_rms_rad = 0.0;
};

/// Residual carrier offset from a least-squares line through the unwrapped
/// sample phase over time. Valid while |delta_f| < rate/2.
CfoEstimate estimate_cfo(std::span<const std::complex<double>> block, double rate_sps);

/// Channel estimate: mean of the CFO-derotated samples.
std::complex<double> estimate_channel(std::span<const std::complex<double>> block,
                                      double rate_sps, const CfoEstimate& cfo);

/// Per-frequency CFO removal + channel estimate, then polar form with the
/// phase unwrapped along the frequency axis.
ChannelSpectrum assemble_spectrum(const SweepRecord& record);

enum class ReferenceKind { Air, Day1, None };

struct NormalizedSpectrum {
  ChannelSpectrum base;
  ReferenceKind reference_kind = ReferenceKind::None;
};

/// Element-wise complex division by the air reference sweep.
NormalizedSpectrum flatten(const ChannelSpectrum& pot, const ChannelSpectrum& air);

/// Element-wise complex division by the (flattened) day-1 spectrum.
NormalizedSpectrum normalize_day1(const NormalizedSpectrum& day_d,
                                  const NormalizedSpectrum& day_1);

/// tau_g = -(1/2pi) dphi/df, central differences inside, one-sided at edges.
std::vector<double> group_delay_s(const ChannelSpectrum& spec);

/// eps_p = (c tau_g / d_eff)^2.
double apparent_permittivity(double tau_g_s, double d_eff_m);

/// Effective path length default: the antenna separation.
inline constexpr double kDefaultEffectivePathM = 0.254;

void save_spectrum(const ChannelSpectrum& spec, const std::filesystem::path& path);

}  // namespace soilrf::cfr
