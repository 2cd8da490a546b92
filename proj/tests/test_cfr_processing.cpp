#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "soilrf/cfr.hpp"
#include "soilrf/constants.hpp"
#include "soilrf/errors.hpp"
#include "soilrf/numeric.hpp"
#include "soilrf/sim.hpp"

using namespace soilrf;
using doctest::Approx;

namespace {

constexpr double kTwoPi = 2.0 * constants::kPi;

std::vector<std::complex<double>> tone_block(std::complex<double> h, double delta_f,
                                             double rate, std::size_t n, double noise_sd = 0.0,
                                             std::uint64_t seed = 0) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> noise(0.0, noise_sd / std::sqrt(2.0));
  std::vector<std::complex<double>> block(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    block[i] = h * std::polar(1.0, kTwoPi * delta_f * t);
    if (noise_sd > 0.0) block[i] += std::complex<double>{noise(eng), noise(eng)};
  }
  return block;
}

}  // namespace

TEST_CASE("cfo estimation") {
  SUBCASE("pure 100 Hz tone at 500 kS/s") {
    const auto block = tone_block({1.0, 0.0}, 100.0, 500e3, 100000);
    const auto cfo = cfr::estimate_cfo(block, 500e3);
    CHECK(cfo.delta_f_hz == Approx(100.0).epsilon(1e-4));
    CHECK(std::abs(cfo.delta_f_hz - 100.0) < 0.01);
    CHECK(cfo.residual_rms_rad < 1e-9);
  }

  SUBCASE("constant-phase block estimates zero offset") {
    const auto block = tone_block({0.4, 0.3}, 0.0, 5000.0, 64);
    const auto cfo = cfr::estimate_cfo(block, 5000.0);
    CHECK(std::abs(cfo.delta_f_hz) < 1e-9);
  }

  SUBCASE("tone in noise stays within 1 Hz over a 0.2 s window") {
    // Monte Carlo over 100 seeds, noise sd 0.01 on a unit tone.
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto block = tone_block({1.0, 0.0}, 150.0, 50e3, 10000, 0.01, seed);
      const auto cfo = cfr::estimate_cfo(block, 50e3);
      worst = std::max(worst, std::abs(cfo.delta_f_hz - 150.0));
    }
    CHECK(worst < 1.0);
  }

  SUBCASE("degenerate input") {
    std::vector<std::complex<double>> zeros(64, {0.0, 0.0});
    CHECK_THROWS_AS(cfr::estimate_cfo(zeros, 5000.0), ComputeError);
    std::vector<std::complex<double>> short_block(4, {1.0, 0.0});
    CHECK_THROWS_AS(cfr::estimate_cfo(short_block, 5000.0), std::invalid_argument);
  }
}

TEST_CASE("channel estimation") {
  const std::complex<double> h = std::polar(0.5, constants::kPi / 4.0);

  SUBCASE("mean of a constant block is exact") {
    const auto block = tone_block(h, 0.0, 5000.0, 1000);
    const auto est = cfr::estimate_channel(block, 5000.0, {0.0, 0.0});
    CHECK(std::abs(est - h) < 1e-14);
  }

  SUBCASE("perfect cfo compensation recovers the channel") {
    const auto block = tone_block(h, 200.0, 5000.0, 1000);
    const auto cfo = cfr::estimate_cfo(block, 5000.0);
    CHECK(cfo.delta_f_hz == Approx(200.0).epsilon(1e-9));
    const auto est = cfr::estimate_channel(block, 5000.0, cfo);
    CHECK(std::abs(est - h) < 1e-6);
  }

  SUBCASE("noise-only estimate shrinks like 1/sqrt(n)") {
    auto spread_at = [](std::size_t n) {
      std::vector<double> mags;
      for (std::uint64_t seed = 0; seed < 60; ++seed) {
        const auto block = tone_block({0.0, 0.0}, 0.0, 5000.0, n, 1.0, seed + 1);
        mags.push_back(std::abs(cfr::estimate_channel(block, 5000.0, {0.0, 0.0})));
      }
      double ss = 0.0;
      for (double m : mags) ss += m * m;
      return std::sqrt(ss / static_cast<double>(mags.size()));
    };
    const double r = spread_at(256) / spread_at(4096);
    CHECK(r == Approx(4.0).epsilon(0.35));
  }

  SUBCASE("linearity in the block") {
    const auto block = tone_block({0.3, -0.2}, 40.0, 5000.0, 128, 0.05, 9);
    const std::complex<double> scale{1.7, -0.6};
    auto scaled = block;
    for (auto& v : scaled) v *= scale;
    const cfr::CfoEstimate cfo{40.0, 0.0};
    const auto a = cfr::estimate_channel(block, 5000.0, cfo);
    const auto b = cfr::estimate_channel(scaled, 5000.0, cfo);
    CHECK(std::abs(b - scale * a) < 1e-12);
  }
}

TEST_CASE("spectrum assembly") {
  sim::SimParams params;
  params.pot_id = "T";
  params.dwell_s = 0.01;
  params.rate_sps = 5000.0;
  params.cfo_hz = 30.0;

  SUBCASE("single path with zero delay gives flat magnitude and phase") {
    SweepRecord rec;
    rec.pot_id = "T";
    rec.day = 1;
    rec.grid = FrequencyGrid(2.0e9, 0.1e9, 8);
    rec.dwell_s = 0.01;
    rec.rate_sps = 5000.0;
    for (std::size_t k = 0; k < rec.grid.size(); ++k) {
      rec.samples.push_back(tone_block({0.8, 0.0}, 30.0, 5000.0, 50));
    }
    const auto spec = cfr::assemble_spectrum(rec);
    for (std::size_t k = 0; k < spec.h.size(); ++k) {
      CHECK(spec.a_db[k] == Approx(20.0 * std::log10(0.8)).epsilon(1e-9));
      CHECK(std::abs(spec.phase_rad[k]) < 1e-9);
    }
  }

  SUBCASE("single path with 5 ns delay shows the analytic phase slope") {
    const double tau = 5.0e-9;
    const FrequencyGrid grid(2.0e9, 40.0e6, 24);
    SweepRecord rec;
    rec.pot_id = "T";
    rec.day = 1;
    rec.grid = grid;
    rec.dwell_s = 0.01;
    rec.rate_sps = 5000.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const auto h = std::polar(0.9, -kTwoPi * grid[k] * tau);
      rec.samples.push_back(tone_block(h, 30.0, 5000.0, 50));
    }
    const auto spec = cfr::assemble_spectrum(rec);
    const auto fit = num::ols_fit(grid.points(), spec.phase_rad);
    CHECK(fit.slope == Approx(-kTwoPi * tau).epsilon(1e-9));

    // group delay recovers tau at every interior point
    const auto tau_g = cfr::group_delay_s(spec);
    for (std::size_t k = 1; k + 1 < tau_g.size(); ++k) {
      CHECK(tau_g[k] == Approx(tau).epsilon(1e-9));
    }
  }

  SUBCASE("near-null stays finite through the guard floor") {
    sim::PathSet set;
    set.paths = {{{1.0, 0.0}, 0.0}, {{-1.0, 0.0}, 0.0}};  // exact cancellation
    const auto spec = sim::synthesize_cfr(set, FrequencyGrid(2.0e9, 0.1e9, 4));
    for (std::size_t k = 0; k < spec.h.size(); ++k) {
      CHECK(std::isfinite(spec.a_db[k]));
      CHECK(spec.floored[k] == 1);
    }
  }
}

TEST_CASE("reference normalization") {
  const FrequencyGrid grid(2.0e9, 0.1e9, 12);
  std::mt19937_64 eng(21);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<std::complex<double>> pot_h(grid.size());
  std::vector<std::complex<double>> air_h(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    pot_h[k] = {uni(eng) + 1.5, uni(eng)};
    air_h[k] = {uni(eng) + 1.5, uni(eng)};
  }
  const auto pot = ChannelSpectrum::from_samples(grid, pot_h);
  const auto air = ChannelSpectrum::from_samples(grid, air_h);

  SUBCASE("self-division gives exactly ones") {
    const auto flat = cfr::flatten(pot, pot);
    for (const auto& h : flat.base.h) {
      CHECK(h.real() == 1.0);
      CHECK(h.imag() == 0.0);
    }
    CHECK(flat.reference_kind == cfr::ReferenceKind::Air);
  }

  SUBCASE("day-1 normalization of day 1 is the unity spectrum") {
    const auto f1 = cfr::flatten(pot, air);
    const auto n1 = cfr::normalize_day1(f1, f1);
    for (const auto& h : n1.base.h) {
      CHECK(h.real() == 1.0);
      CHECK(h.imag() == 0.0);
    }
    CHECK(n1.reference_kind == cfr::ReferenceKind::Day1);
  }

  SUBCASE("a shared multiplicative ripple cancels in flatten") {
    auto pot_rippled = pot_h;
    auto air_rippled = air_h;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const std::complex<double> ripple =
          std::polar(1.0 + 0.3 * std::sin(1e-8 * grid[k]), 0.2 * std::cos(1e-8 * grid[k]));
      pot_rippled[k] *= ripple;
      air_rippled[k] *= ripple;
    }
    const auto clean = cfr::flatten(pot, air);
    const auto rippled = cfr::flatten(ChannelSpectrum::from_samples(grid, pot_rippled),
                                      ChannelSpectrum::from_samples(grid, air_rippled));
    for (std::size_t k = 0; k < grid.size(); ++k) {
      CHECK(std::abs(rippled.base.h[k] - clean.base.h[k]) < 1e-10);
    }
  }

  SUBCASE("grid mismatch is an alignment error") {
    const auto other = ChannelSpectrum::from_samples(
        FrequencyGrid(2.0e9, 0.2e9, 12),
        std::vector<std::complex<double>>(12, {1.0, 0.0}));
    CHECK_THROWS_AS(cfr::flatten(pot, other), std::invalid_argument);
  }

  SUBCASE("division by a null is floored, never NaN") {
    auto dead = air_h;
    dead[3] = {0.0, 0.0};
    const auto flat = cfr::flatten(pot, ChannelSpectrum::from_samples(grid, dead));
    CHECK(std::isfinite(flat.base.h[3].real()));
    CHECK(std::isfinite(flat.base.a_db[3]));
    CHECK(flat.base.floored[3] == 1);
  }
}

TEST_CASE("pipeline identity: processing recovers the synthetic channel") {
  sim::LayeredMedium medium;
  medium.layers = {{0.0254, {1.0, 0.0, 0.0}},
                   {0.004, {2.8, 0.01, 0.0}},
                   {0.18, {6.0, 0.25, 0.04}},
                   {0.05, {22.0, 2.0, 0.0}}};
  const FrequencyGrid grid(2.0e9, 0.1e9, 16);
  sim::SimParams params;
  params.pot_id = "P";
  params.dwell_s = 0.01;
  params.rate_sps = 5000.0;
  params.cfo_hz = 42.0;  // noiseless, so compensation must be near-exact
  const std::vector<double> radii{0.004, 0.012, 0.02};
  const auto records = sim::simulate_growth_series(medium, radii, grid, params);
  for (std::size_t d = 0; d < records.size(); ++d) {
    const auto truth = sim::growth_spectrum(medium, radii[d], grid);
    const auto est = cfr::assemble_spectrum(records[d]);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      CHECK(std::abs(est.h[k] - truth.h[k]) <= 1e-6 * std::abs(truth.h[k]));
    }
  }
}

TEST_CASE("apparent permittivity mapping") {
  SUBCASE("free-space identity") {
    const double tau = 3.2e-9;
    CHECK(cfr::apparent_permittivity(tau, constants::kSpeedOfLight * tau) ==
          Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("doubling the delay quadruples the permittivity") {
    const double d = 0.254;
    const double tau = d / constants::kSpeedOfLight;
    CHECK(cfr::apparent_permittivity(2.0 * tau, d) == Approx(4.0).epsilon(1e-12));
  }
  SUBCASE("nonpositive group delay is a domain error") {
    CHECK_THROWS_AS(cfr::apparent_permittivity(0.0, 0.254), std::domain_error);
    CHECK_THROWS_AS(cfr::apparent_permittivity(-1.0e-9, 0.254), std::domain_error);
  }
}
