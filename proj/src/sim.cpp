#include "soilrf/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "soilrf/constants.hpp"
#include "soilrf/errors.hpp"
#include "soilrf/io.hpp"

namespace soilrf::sim {
namespace {

constexpr double kC = constants::kSpeedOfLight;
constexpr double kTwoPi = 2.0 * constants::kPi;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::mt19937_64 make_engine(std::uint64_t seed, const std::string& pot_id, int day) {
  const std::uint64_t ph = fnv1a(pot_id);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(ph), static_cast<std::uint32_t>(ph >> 32),
                    static_cast<std::uint32_t>(day)};
  return std::mt19937_64(seq);
}

/// Clausius-Mossotti-style dielectric contrast of the inclusion against soil.
double tuber_contrast(const LayeredMedium& medium, double eps_tuber_real) {
  const double eps_soil = medium.soil().permittivity.eps_real;
  return (eps_tuber_real - eps_soil) / (eps_tuber_real + 2.0 * eps_soil);
}

/// Blockage fraction of the through-soil energy intercepted by the tuber.
/// Capped strictly below 1/(1+|contrast|) so |H(f)| stays nonincreasing in the
/// radius at every frequency.
double blockage_fraction(double radius_m, double wavelength_soil_m, double contrast) {
  const double cap = std::min(0.55, 0.95 / (1.0 + std::abs(contrast)));
  const double ratio = radius_m / wavelength_soil_m;
  return std::min(cap, ratio * ratio);
}

struct GrowthTerms {
  std::complex<double> through_gain;   // all traversal layers, one pass
  std::complex<double> bounce_gain;    // extra double bounce inside the soil
  double through_delay_s = 0.0;
  double bounce_delay_s = 0.0;
  double blockage = 0.0;               // b(f)
  std::complex<double> scatter;        // contrast * detour loss
  double scatter_delay_s = 0.0;        // two-way soil travel to the inclusion
};

GrowthTerms growth_terms(const LayeredMedium& medium, double tuber_radius_m, double f_hz,
                         double eps_tuber_real) {
  GrowthTerms t;
  double loss = 0.0;
  double delay = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {  // traversal stack: air, wall, soil
    const Layer& layer = medium.layers[i];
    const auto pc = propagation_constant(layer.permittivity, f_hz);
    loss += pc.alpha_np_per_m * layer.thickness_m;
    delay += layer.thickness_m * std::sqrt(layer.permittivity.eps_real) / kC;
  }
  t.through_gain = std::exp(-loss);
  t.through_delay_s = delay;

  const Layer& soil = medium.soil();
  const Layer& wall = medium.wall();
  const double soil_alpha = propagation_constant(soil.permittivity, f_hz).alpha_np_per_m;
  const double soil_index = std::sqrt(soil.permittivity.eps_real);
  const std::complex<double> ns = std::sqrt(soil.permittivity.at(f_hz));
  const std::complex<double> nw = std::sqrt(wall.permittivity.at(f_hz));
  const std::complex<double> fresnel = (ns - nw) / (ns + nw);
  t.bounce_gain = t.through_gain * fresnel * fresnel *
                  std::exp(-2.0 * soil_alpha * soil.thickness_m);
  t.bounce_delay_s = delay + 2.0 * soil.thickness_m * soil_index / kC;

  const double wavelength_soil = kC / (f_hz * soil_index);
  const double contrast = tuber_contrast(medium, eps_tuber_real);
  t.blockage = blockage_fraction(tuber_radius_m, wavelength_soil, contrast);
  // Inclusion at mid-depth: the scattered copy detours one extra soil thickness.
  t.scatter = contrast * std::exp(-soil_alpha * soil.thickness_m);
  t.scatter_delay_s = soil.thickness_m * soil_index / kC;
  return t;
}

PathSet paths_from_terms(const GrowthTerms& t) {
  PathSet set;
  const double b = t.blockage;
  set.paths.push_back({t.through_gain * (1.0 - b), t.through_delay_s});
  set.paths.push_back({t.bounce_gain * (1.0 - b), t.bounce_delay_s});
  if (b > 0.0) {
    set.paths.push_back({t.through_gain * b * t.scatter,
                         t.through_delay_s + t.scatter_delay_s});
    set.paths.push_back({t.bounce_gain * b * t.scatter,
                         t.bounce_delay_s + t.scatter_delay_s});
  }
  return set;
}

std::complex<double> eval_paths(const PathSet& set, double f_hz) {
  std::complex<double> h{0.0, 0.0};
  for (const Path& p : set.paths) {
    h += p.gain * std::polar(1.0, -kTwoPi * f_hz * p.delay_s);
  }
  return h;
}

std::vector<std::complex<double>> growth_channel(const LayeredMedium& medium,
                                                 double tuber_radius_m,
                                                 const FrequencyGrid& grid,
                                                 double eps_tuber_real) {
  std::vector<std::complex<double>> h(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto terms = growth_terms(medium, tuber_radius_m, grid[k], eps_tuber_real);
    h[k] = eval_paths(paths_from_terms(terms), grid[k]);
  }
  return h;
}

std::vector<std::complex<double>> make_block(std::complex<double> h, int n_samples,
                                             double rate_sps, double cfo_hz,
                                             double noise_sd, std::mt19937_64& eng) {
  std::vector<std::complex<double>> block(static_cast<std::size_t>(n_samples));
  std::normal_distribution<double> noise(0.0, noise_sd / std::sqrt(2.0));
  for (int i = 0; i < n_samples; ++i) {
    const double t = static_cast<double>(i) / rate_sps;
    std::complex<double> v = h * std::polar(1.0, kTwoPi * cfo_hz * t);
    if (noise_sd > 0.0) v += std::complex<double>(noise(eng), noise(eng));
    block[static_cast<std::size_t>(i)] = v;
  }
  return block;
}

int block_length(const SimParams& params) {
  const int n = static_cast<int>(std::llround(params.dwell_s * params.rate_sps));
  if (n < 8) throw ConfigError("simulator: dwell * rate must give at least 8 samples");
  return n;
}

}  // namespace

double ComplexPermittivity::eps_imag_at(double f_hz) const {
  double total = eps_imag;
  if (conductivity_s_per_m > 0.0) {
    total += conductivity_s_per_m / (kTwoPi * f_hz * constants::kVacuumPermittivity);
  }
  return total;
}

std::complex<double> ComplexPermittivity::at(double f_hz) const {
  return {eps_real, -eps_imag_at(f_hz)};
}

void ComplexPermittivity::validate() const {
  if (!(eps_real >= 1.0)) {
    throw ValidationError("permittivity: eps_real must be >= 1");
  }
  if (eps_imag < 0.0 || conductivity_s_per_m < 0.0) {
    throw ValidationError("permittivity: loss terms must be nonnegative");
  }
}

ComplexPermittivity LayeredMedium::tuber_permittivity() const {
  if (has_tuber_layer()) return tuber().permittivity;
  ComplexPermittivity perm;
  perm.eps_real = topp_apparent_permittivity(tuber_water_fraction);
  perm.eps_imag = 0.1 * perm.eps_real;  // moist tissue, mildly lossy
  return perm;
}

void LayeredMedium::validate() const {
  if (layers.size() < 3) {
    throw ValidationError("medium: need at least air, pot wall and soil layers");
  }
  for (const Layer& layer : layers) {
    if (!(layer.thickness_m > 0.0)) {
      throw ValidationError("medium: layer thicknesses must be positive");
    }
    layer.permittivity.validate();
  }
  if (tuber_radius_m < 0.0) throw ValidationError("medium: negative tuber radius");
  if (tuber_water_fraction < 0.0 || tuber_water_fraction > 1.0) {
    throw ValidationError("medium: tuber water fraction must be in [0, 1]");
  }
}

void PathSet::validate() const {
  if (paths.empty()) throw ValidationError("PathSet: need at least one path");
  for (const Path& p : paths) {
    if (p.delay_s < 0.0) throw ValidationError("PathSet: negative delay");
    if (!std::isfinite(p.gain.real()) || !std::isfinite(p.gain.imag())) {
      throw ValidationError("PathSet: non-finite gain");
    }
  }
}

PropagationConstant propagation_constant(const ComplexPermittivity& perm, double f_hz) {
  if (!(f_hz > 0.0)) throw std::domain_error("propagation_constant: frequency must be positive");
  perm.validate();
  // gamma = j (2 pi f / c) sqrt(eps~); sqrt(mu0 eps0) = 1/c.
  const std::complex<double> root = std::sqrt(perm.at(f_hz));
  const double k0 = kTwoPi * f_hz / kC;
  PropagationConstant pc;
  pc.alpha_np_per_m = k0 * (-root.imag());
  pc.beta_rad_per_m = k0 * root.real();
  return pc;
}

std::optional<double> penetration_depth_m(const ComplexPermittivity& perm, double f_hz) {
  if (perm.lossless()) return std::nullopt;
  const auto pc = propagation_constant(perm, f_hz);
  if (pc.alpha_np_per_m <= 0.0) return std::nullopt;
  return 1.0 / pc.alpha_np_per_m;
}

double depth_resolution_m(double bandwidth_hz, double eps_real) {
  if (!(bandwidth_hz > 0.0)) {
    throw std::domain_error("depth_resolution: bandwidth must be positive");
  }
  if (!(eps_real >= 1.0)) throw std::domain_error("depth_resolution: eps_real must be >= 1");
  return kC / (2.0 * bandwidth_hz * std::sqrt(eps_real));
}

double topp_water_content(double eps_apparent) {
  if (!(eps_apparent >= 0.0)) {
    throw std::domain_error("topp_water_content: permittivity must be nonnegative");
  }
  const double e = eps_apparent;
  return ((4.3e-6 * e - 5.5e-4) * e + 2.92e-2) * e - 5.3e-2;
}

double topp_apparent_permittivity(double water_fraction) {
  double lo = 1.0;
  double hi = 95.0;  // polynomial is strictly increasing on this span
  if (water_fraction <= topp_water_content(lo)) return lo;
  if (water_fraction >= topp_water_content(hi)) return hi;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (topp_water_content(mid) < water_fraction) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

ChannelSpectrum synthesize_cfr(const PathSet& paths, const FrequencyGrid& grid) {
  paths.validate();
  std::vector<std::complex<double>> h(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) h[k] = eval_paths(paths, grid[k]);
  return ChannelSpectrum::from_samples(grid, std::move(h));
}

PathSet growth_paths(const LayeredMedium& medium, double tuber_radius_m, double f_hz) {
  medium.validate();
  const double eps_t = medium.tuber_permittivity().eps_real;
  return paths_from_terms(growth_terms(medium, tuber_radius_m, f_hz, eps_t));
}

ChannelSpectrum growth_spectrum(const LayeredMedium& medium, double tuber_radius_m,
                                const FrequencyGrid& grid) {
  medium.validate();
  const double eps_t = medium.tuber_permittivity().eps_real;
  return ChannelSpectrum::from_samples(
      grid, growth_channel(medium, tuber_radius_m, grid, eps_t));
}

std::vector<SweepRecord> simulate_growth_series(const LayeredMedium& medium,
                                                const std::vector<double>& radius_by_day_m,
                                                const FrequencyGrid& grid,
                                                const SimParams& params) {
  medium.validate();
  if (radius_by_day_m.empty()) throw ConfigError("simulator: need at least one day");
  for (std::size_t d = 0; d < radius_by_day_m.size(); ++d) {
    if (radius_by_day_m[d] < 0.0) throw ConfigError("simulator: negative tuber radius");
    if (d > 0 && radius_by_day_m[d] < radius_by_day_m[d - 1]) {
      throw ConfigError("simulator: radius schedule must be nondecreasing");
    }
    if (radius_by_day_m[d] > medium.soil().thickness_m) {
      throw ConfigError("simulator: tuber radius " +
                        io::format_double(radius_by_day_m[d]) +
                        " exceeds soil layer thickness on day " + std::to_string(d + 1));
    }
  }
  const int n_samples = block_length(params);
  const double eps_t = medium.tuber_permittivity().eps_real;

  std::vector<SweepRecord> records;
  records.reserve(radius_by_day_m.size());
  for (std::size_t d = 0; d < radius_by_day_m.size(); ++d) {
    const int day = static_cast<int>(d) + 1;
    const auto h = growth_channel(medium, radius_by_day_m[d], grid, eps_t);
    auto eng = make_engine(params.seed, params.pot_id, day);

    SweepRecord rec;
    rec.pot_id = params.pot_id;
    rec.day = day;
    rec.grid = grid;
    rec.dwell_s = params.dwell_s;
    rec.rate_sps = params.rate_sps;
    rec.samples.reserve(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      rec.samples.push_back(make_block(h[k], n_samples, params.rate_sps, params.cfo_hz,
                                       params.noise_sd, eng));
    }
    records.push_back(std::move(rec));
  }
  return records;
}

SweepRecord simulate_air_reference(const LayeredMedium& medium, const FrequencyGrid& grid,
                                   const SimParams& params) {
  medium.validate();
  const int n_samples = block_length(params);
  double span = 0.0;
  for (std::size_t i = 0; i < 3; ++i) span += medium.layers[i].thickness_m;
  const double delay = span / kC;

  auto eng = make_engine(params.seed, params.pot_id, 0);
  SweepRecord rec;
  rec.pot_id = params.pot_id;
  rec.day = 1;
  rec.grid = grid;
  rec.dwell_s = params.dwell_s;
  rec.rate_sps = params.rate_sps;
  rec.samples.reserve(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto h = std::polar(1.0, -kTwoPi * grid[k] * delay);
    rec.samples.push_back(
        make_block(h, n_samples, params.rate_sps, params.cfo_hz, params.noise_sd, eng));
  }
  return rec;
}

std::vector<BandScore> band_scores(const LayeredMedium& medium, const FrequencyGrid& grid,
                                   double eps_tuber_perturbation) {
  medium.validate();
  if (eps_tuber_perturbation == 0.0) {
    throw std::invalid_argument("band_scores: perturbation must be nonzero");
  }
  if (!(medium.soil().thickness_m > 0.0)) {
    throw ConfigError("band_scores: zero-thickness soil layer");
  }
  if (medium.soil().permittivity.lossless()) {
    throw ConfigError("band_scores: soil must be lossy for a penetration score");
  }
  if (!(medium.tuber_radius_m > 0.0)) {
    throw ConfigError("band_scores: medium needs a tuber inclusion (tuber_radius_m > 0)");
  }

  const double eps_t = medium.tuber_permittivity().eps_real;
  const double eps_hi = eps_t + eps_tuber_perturbation;
  const double eps_lo = std::max(1.0, eps_t - eps_tuber_perturbation);
  const double actual_step = eps_hi - eps_lo;
  const auto h_hi = growth_channel(medium, medium.tuber_radius_m, grid, eps_hi);
  const auto h_lo = growth_channel(medium, medium.tuber_radius_m, grid, eps_lo);

  const double depth0 = *penetration_depth_m(medium.soil().permittivity, grid[0]);
  std::vector<BandScore> scores(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    BandScore& s = scores[k];
    s.freq_hz = grid[k];
    s.psi_p = *penetration_depth_m(medium.soil().permittivity, grid[k]) / depth0;
    s.psi_a = std::abs(std::abs(h_hi[k]) - std::abs(h_lo[k])) / actual_step;
  }
  return scores;
}

// --- scenario ----------------------------------------------------------------

std::vector<double> PotScenario::radius_schedule(int n_days) const {
  if (growth_points.empty()) throw ConfigError("scenario: pot has no growth schedule");
  std::vector<double> radii(static_cast<std::size_t>(n_days));
  for (int day = 1; day <= n_days; ++day) {
    double r;
    if (day <= growth_points.front().first) {
      r = growth_points.front().second;
    } else if (day >= growth_points.back().first) {
      r = growth_points.back().second;
    } else {
      std::size_t i = 0;
      while (growth_points[i + 1].first < day) ++i;
      const auto& [d0, r0] = growth_points[i];
      const auto& [d1, r1] = growth_points[i + 1];
      const double t = static_cast<double>(day - d0) / static_cast<double>(d1 - d0);
      r = r0 + t * (r1 - r0);
    }
    radii[static_cast<std::size_t>(day - 1)] = r;
  }
  return radii;
}

SimParams Scenario::params_for(const std::string& pot_id) const {
  SimParams p;
  p.pot_id = pot_id;
  p.dwell_s = dwell_s;
  p.rate_sps = rate_sps;
  p.cfo_hz = cfo_hz;
  p.noise_sd = noise_sd;
  p.seed = seed;
  return p;
}

Scenario load_scenario(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  Scenario sc;
  double f_start = 2.0e9;
  double f_step = 40.0e6;
  int n_points = 76;
  PotScenario* pot = nullptr;
  std::size_t line_no = 0;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = text.find('\n', pos);
    std::string line = text.substr(pos, end == std::string::npos ? end : end - pos);
    pos = end == std::string::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;

    auto fail = [&](const std::string& msg) -> void {
      throw ParseError(path.string(), line_no, msg);
    };

    if (line.front() == '[') {
      if (line.size() < 7 || line.substr(0, 5) != "[pot " || line.back() != ']') {
        fail("expected section header `[pot <id>]`");
      }
      sc.pots.emplace_back();
      pot = &sc.pots.back();
      pot->pot_id = line.substr(5, line.size() - 6);
      if (pot->pot_id.empty()) fail("empty pot id");
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected `key=value`, got `" + line + "`");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);

    try {
      if (pot == nullptr) {
        if (key == "days") {
          sc.n_days = io::parse_int(value);
          if (sc.n_days < 1) fail("days must be >= 1");
        } else if (key == "seed") {
          sc.seed = static_cast<std::uint64_t>(std::stoull(value));
        } else if (key == "noise_sd") {
          sc.noise_sd = io::parse_double(value);
          if (sc.noise_sd < 0.0) fail("noise_sd must be nonnegative");
        } else if (key == "cfo_hz") {
          sc.cfo_hz = io::parse_double(value);
        } else if (key == "dwell_s") {
          sc.dwell_s = io::parse_double(value);
        } else if (key == "rate_sps") {
          sc.rate_sps = io::parse_double(value);
        } else if (key == "f_start_hz") {
          f_start = io::parse_double(value);
        } else if (key == "f_step_hz") {
          f_step = io::parse_double(value);
        } else if (key == "n_points") {
          n_points = io::parse_int(value);
          if (n_points < 1) fail("n_points must be >= 1");
        } else {
          fail("unknown global field `" + key + "`");
        }
      } else {
        if (key == "layer") {
          const auto cells = io::split(value, ',');
          if (cells.size() != 3 && cells.size() != 4) {
            fail("layer needs `thickness_m,eps_real,eps_imag[,sigma_s_per_m]`");
          }
          Layer layer;
          layer.thickness_m = io::parse_double(cells[0]);
          layer.permittivity.eps_real = io::parse_double(cells[1]);
          layer.permittivity.eps_imag = io::parse_double(cells[2]);
          if (cells.size() == 4) {
            layer.permittivity.conductivity_s_per_m = io::parse_double(cells[3]);
          }
          pot->medium.layers.push_back(layer);
        } else if (key == "growth") {
          const auto cells = io::split(value, ',');
          if (cells.size() != 2) fail("growth needs `day,radius_m`");
          const int day = io::parse_int(cells[0]);
          const double radius = io::parse_double(cells[1]);
          if (day < 1) fail("growth day must be >= 1");
          if (!pot->growth_points.empty() && day <= pot->growth_points.back().first) {
            fail("growth days must be strictly increasing");
          }
          pot->growth_points.emplace_back(day, radius);
        } else if (key == "tuber_water_fraction") {
          pot->medium.tuber_water_fraction = io::parse_double(value);
        } else if (key == "tuber_radius_m") {
          pot->medium.tuber_radius_m = io::parse_double(value);
        } else {
          fail("unknown pot field `" + key + "`");
        }
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      fail("field `" + key + "`: " + e.what());
    }
  }

  if (sc.pots.empty()) {
    throw ParseError(path.string(), line_no, "scenario declares no pots");
  }
  try {
    sc.grid = FrequencyGrid(f_start, f_step, static_cast<std::size_t>(n_points));
    for (const PotScenario& p : sc.pots) {
      p.medium.validate();
      if (p.growth_points.empty()) {
        throw ConfigError("pot " + p.pot_id + " has no growth schedule");
      }
    }
  } catch (const std::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return sc;
}

}  // namespace soilrf::sim
