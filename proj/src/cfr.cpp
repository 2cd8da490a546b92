#include "soilrf/cfr.hpp"

#include <cmath>
#include <fstream>

#include "soilrf/constants.hpp"
#include "soilrf/errors.hpp"
#include "soilrf/io.hpp"
#include "soilrf/numeric.hpp"

namespace soilrf::cfr {
namespace {

constexpr double kTwoPi = 2.0 * constants::kPi;

/// Quotient with a magnitude floor on the denominator so nulls cannot produce
/// NaN. Identical numerator and denominator divide to exactly 1 + 0j.
std::complex<double> guarded_divide(std::complex<double> num, std::complex<double> den,
                                    bool& floored) {
  double mag2 = den.real() * den.real() + den.imag() * den.imag();
  constexpr double floor2 = constants::kMagnitudeFloor * constants::kMagnitudeFloor;
  if (mag2 < floor2) {
    floored = true;
    if (mag2 == 0.0) {
      den = {constants::kMagnitudeFloor, 0.0};
    } else {
      den *= constants::kMagnitudeFloor / std::sqrt(mag2);
    }
    mag2 = den.real() * den.real() + den.imag() * den.imag();
  }
  return {(num.real() * den.real() + num.imag() * den.imag()) / mag2,
          (num.imag() * den.real() - num.real() * den.imag()) / mag2};
}

NormalizedSpectrum divide_spectra(const ChannelSpectrum& num, const ChannelSpectrum& den,
                                  ReferenceKind kind) {
  if (!(num.grid == den.grid)) {
    throw std::invalid_argument("spectrum division: frequency grids do not align");
  }
  std::vector<std::complex<double>> q(num.h.size());
  std::vector<std::uint8_t> guard(num.h.size(), 0);
  for (std::size_t k = 0; k < num.h.size(); ++k) {
    bool floored = false;
    q[k] = guarded_divide(num.h[k], den.h[k], floored);
    guard[k] = floored ? 1 : 0;
  }
  NormalizedSpectrum out;
  out.base = ChannelSpectrum::from_samples(num.grid, std::move(q));
  for (std::size_t k = 0; k < guard.size(); ++k) {
    if (guard[k]) out.base.floored[k] = 1;
  }
  out.reference_kind = kind;
  return out;
}

}  // namespace

CfoEstimate estimate_cfo(std::span<const std::complex<double>> block, double rate_sps) {
  if (block.size() < 8) {
    throw std::invalid_argument("estimate_cfo: block must hold at least 8 samples");
  }
  if (!(rate_sps > 0.0)) throw std::invalid_argument("estimate_cfo: bad sample rate");
  bool all_zero = true;
  for (const auto& s : block) {
    if (s != std::complex<double>{0.0, 0.0}) {
      all_zero = false;
      break;
    }
  }
  if (all_zero) throw ComputeError("estimate_cfo: degenerate all-zero block");

  std::vector<double> t(block.size());
  std::vector<double> phase(block.size());
  for (std::size_t i = 0; i < block.size(); ++i) {
    t[i] = static_cast<double>(i) / rate_sps;
    phase[i] = std::arg(block[i]);
  }
  num::unwrap_phases(phase);
  const auto fit = num::ols_fit(t, phase);
  return {fit.slope / kTwoPi, fit.residual_rms};
}

std::complex<double> estimate_channel(std::span<const std::complex<double>> block,
                                      double rate_sps, const CfoEstimate& cfo) {
  if (block.empty()) throw std::invalid_argument("estimate_channel: empty block");
  std::complex<double> acc{0.0, 0.0};
  for (std::size_t i = 0; i < block.size(); ++i) {
    const double t = static_cast<double>(i) / rate_sps;
    acc += block[i] * std::polar(1.0, -kTwoPi * cfo.delta_f_hz * t);
  }
  return acc / static_cast<double>(block.size());
}

ChannelSpectrum assemble_spectrum(const SweepRecord& record) {
  record.validate();
  std::vector<std::complex<double>> h(record.grid.size());
  for (std::size_t k = 0; k < record.grid.size(); ++k) {
    const auto cfo = estimate_cfo(record.samples[k], record.rate_sps);
    h[k] = estimate_channel(record.samples[k], record.rate_sps, cfo);
  }
  return ChannelSpectrum::from_samples(record.grid, std::move(h));
}

NormalizedSpectrum flatten(const ChannelSpectrum& pot, const ChannelSpectrum& air) {
  return divide_spectra(pot, air, ReferenceKind::Air);
}

NormalizedSpectrum normalize_day1(const NormalizedSpectrum& day_d,
                                  const NormalizedSpectrum& day_1) {
  return divide_spectra(day_d.base, day_1.base, ReferenceKind::Day1);
}

std::vector<double> group_delay_s(const ChannelSpectrum& spec) {
  const std::size_t n = spec.grid.size();
  if (n < 3) throw std::invalid_argument("group_delay: need at least 3 grid points");
  std::vector<double> tau(n);
  const auto& f = spec.grid.points();
  const auto& phi = spec.phase_rad;
  tau[0] = -(phi[1] - phi[0]) / (f[1] - f[0]) / kTwoPi;
  tau[n - 1] = -(phi[n - 1] - phi[n - 2]) / (f[n - 1] - f[n - 2]) / kTwoPi;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    tau[k] = -(phi[k + 1] - phi[k - 1]) / (f[k + 1] - f[k - 1]) / kTwoPi;
  }
  return tau;
}

double apparent_permittivity(double tau_g_s, double d_eff_m) {
  if (!(d_eff_m > 0.0)) {
    throw std::invalid_argument("apparent_permittivity: d_eff must be positive");
  }
  if (!(tau_g_s > 0.0)) {
    throw std::domain_error(
        "apparent_permittivity: nonpositive group delay (geometry or unwrap failure)");
  }
  const double ratio = constants::kSpeedOfLight * tau_g_s / d_eff_m;
  return ratio * ratio;
}

void save_spectrum(const ChannelSpectrum& spec, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path.string());
  out << "f_start_hz=" << io::format_double(spec.grid.f_start()) << '\n';
  out << "f_step_hz=" << io::format_double(spec.grid.f_step()) << '\n';
  out << "n_points=" << spec.grid.size() << '\n';
  out << "f_hz,re,im,a_db,phase_rad\n";
  for (std::size_t k = 0; k < spec.grid.size(); ++k) {
    out << io::format_double(spec.grid[k]) << ',' << io::format_double(spec.h[k].real())
        << ',' << io::format_double(spec.h[k].imag()) << ','
        << io::format_double(spec.a_db[k]) << ',' << io::format_double(spec.phase_rad[k])
        << '\n';
  }
}

}  // namespace soilrf::cfr
