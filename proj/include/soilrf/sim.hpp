#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "soilrf/types.hpp"

namespace soilrf::sim {

/// Complex relative permittivity eps' - j eps''. A nonzero conductivity adds
/// the dispersive term sigma / (2 pi f eps0) to eps'' at evaluation time.
struct ComplexPermittivity {
  double eps_real = 1.0;
  double eps_imag = 0.0;
  double conductivity_s_per_m = 0.0;

  double eps_imag_at(double f_hz) const;
  std::complex<double> at(double f_hz) const;
  bool lossless() const { return eps_imag == 0.0 && conductivity_s_per_m == 0.0; }
  void validate() const;
};

struct Layer {
  double thickness_m = 0.0;
  ComplexPermittivity permittivity;
};

/// Ordered stack traversed by the link: air, pot wall, soil, then an optional
/// entry carrying the tuber inclusion's permittivity.
struct LayeredMedium {
  std::vector<Layer> layers;
  double tuber_radius_m = 0.0;
  double tuber_water_fraction = 0.8;

  const Layer& air() const { return layers.at(0); }
  const Layer& wall() const { return layers.at(1); }
  const Layer& soil() const { return layers.at(2); }
  bool has_tuber_layer() const { return layers.size() >= 4; }
  const Layer& tuber() const { return layers.at(3); }

  /// Tuber permittivity: the tuber layer entry when present, otherwise derived
  /// from the water fraction by inverting the Topp relation.
  ComplexPermittivity tuber_permittivity() const;

  void validate() const;
};

struct Path {
  std::complex<double> gain;
  double delay_s = 0.0;
};

struct PathSet {
  std::vector<Path> paths;
  void validate() const;
};

struct BandScore {
  double freq_hz = 0.0;
  double psi_p = 0.0;  // penetration, normalized to 1 at the first grid point
  double psi_a = 0.0;  // magnitude sensitivity to the tuber permittivity
};

struct PropagationConstant {
  double alpha_np_per_m = 0.0;
  double beta_rad_per_m = 0.0;
};

/// gamma(f) = j 2 pi f sqrt(mu0 eps0 eps~(f)); returns (Re, Im) = (alpha, beta).
PropagationConstant propagation_constant(const ComplexPermittivity& perm, double f_hz);

/// Power penetration depth 1/alpha; nullopt marks the lossless case.
std::optional<double> penetration_depth_m(const ComplexPermittivity& perm, double f_hz);

/// d_res = c / (2 B sqrt(eps')).
double depth_resolution_m(double bandwidth_hz, double eps_real);

/// Topp polynomial: apparent permittivity -> volumetric water content.
/// No clamping; out-of-calibration inputs return out-of-range values.
double topp_water_content(double eps_apparent);

/// Monotone inverse of the Topp polynomial on [1, 95] by bisection.
double topp_apparent_permittivity(double water_fraction);

/// H(f_k) = sum_k a_k exp(-j 2 pi f tau_k) evaluated on every grid point.
ChannelSpectrum synthesize_cfr(const PathSet& paths, const FrequencyGrid& grid);

/// Per-frequency path decomposition of the growth model: the through-stack
/// transmission path, one internal double-bounce off the far pot wall, and the
/// two tuber-scattered copies. Amplitudes embed the frequency-dependent soil
/// transmission loss from propagation_constant, so the set is specific to f.
PathSet growth_paths(const LayeredMedium& medium, double tuber_radius_m, double f_hz);

/// Analytic zero-noise channel for one day (the oracle the processing chain
/// must recover).
ChannelSpectrum growth_spectrum(const LayeredMedium& medium, double tuber_radius_m,
                                const FrequencyGrid& grid);

struct SimParams {
  std::string pot_id = "pot";
  double dwell_s = 0.2;
  double rate_sps = 5000.0;
  double cfo_hz = 0.0;
  double noise_sd = 0.0;  // rms of the complex noise per baseband sample
  std::uint64_t seed = 0;
};

/// One SweepRecord per day. Deterministic for a fixed seed; the per-day noise
/// stream is keyed by (seed, pot, day) so days are independent.
std::vector<SweepRecord> simulate_growth_series(const LayeredMedium& medium,
                                                const std::vector<double>& radius_by_day_m,
                                                const FrequencyGrid& grid,
                                                const SimParams& params);

/// Free-space reference sweep over the same antenna span (single unit path).
SweepRecord simulate_air_reference(const LayeredMedium& medium, const FrequencyGrid& grid,
                                   const SimParams& params);

/// Psi_P(f): soil penetration depth normalized by its value at the first grid
/// point. Psi_A(f): |d|H|/d eps_tuber| by central finite difference.
std::vector<BandScore> band_scores(const LayeredMedium& medium, const FrequencyGrid& grid,
                                   double eps_tuber_perturbation);

// --- scenario files ----------------------------------------------------------

struct PotScenario {
  std::string pot_id;
  LayeredMedium medium;
  std::vector<std::pair<int, double>> growth_points;  // (day, radius_m), day-sorted

  /// Piecewise-linear per-day radii for days 1..n_days.
  std::vector<double> radius_schedule(int n_days) const;
};

struct Scenario {
  FrequencyGrid grid{2.0e9, 40.0e6, 76};
  int n_days = 1;
  double dwell_s = 0.2;
  double rate_sps = 5000.0;
  double cfo_hz = 0.0;
  double noise_sd = 0.0;
  std::uint64_t seed = 0;
  std::vector<PotScenario> pots;

  SimParams params_for(const std::string& pot_id) const;
};

Scenario load_scenario(const std::filesystem::path& path);

}  // namespace soilrf::sim
