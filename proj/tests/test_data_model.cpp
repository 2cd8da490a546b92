#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <complex>
#include <filesystem>
#include <random>

#include "soilrf/errors.hpp"
#include "soilrf/io.hpp"
#include "soilrf/numeric.hpp"
#include "soilrf/sim.hpp"
#include "soilrf/types.hpp"

using namespace soilrf;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "soilrf_data_model_tests";
  fs::create_directories(dir);
  return dir / name;
}

SweepRecord tiny_record() {
  SweepRecord rec;
  rec.pot_id = "P1";
  rec.day = 3;
  rec.grid = FrequencyGrid(2.0e9, 40.0e6, 2);
  rec.dwell_s = 0.002;
  rec.rate_sps = 5000.0;
  rec.samples = {{{1.0, 0.5}, {0.25, -0.125}, {0.3, 0.7}, {1e-3, 2e-3},
                  {0.1, 0.2}, {0.3, 0.4}, {0.5, 0.6}, {0.7, 0.8}, {0.9, 1.0}, {1.1, 1.2}},
                 {{0.5, 0.25}, {1.0, -1.0}, {2.0, 0.125}, {0.75, 0.5},
                  {0.1, 0.2}, {0.3, 0.4}, {0.5, 0.6}, {0.7, 0.8}, {0.9, 1.0}, {1.1, 1.2}}};
  return rec;
}

}  // namespace

TEST_CASE("frequency grid construction and lookup") {
  const auto grid = FrequencyGrid::from_range(2.0e9, 5.0e9, 40.0e6);
  CHECK(grid.size() == 76);
  CHECK(grid[0] == doctest::Approx(2.0e9));
  CHECK(grid[75] == doctest::Approx(5.0e9));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CHECK(grid[k] == 2.0e9 + static_cast<double>(k) * 40.0e6);
  }
  CHECK(grid.nearest_index(2.75e9) == 19);  // 2.76 GHz is closest
  CHECK(grid.nearest_index(1.0e9) == 0);
  CHECK(grid.nearest_index(9.0e9) == 75);

  CHECK_THROWS_AS(FrequencyGrid(2.0e9, -1.0, 4), ValidationError);
  CHECK_THROWS_AS(FrequencyGrid::from_range(3.0e9, 2.0e9, 1.0e6), ValidationError);
}

TEST_CASE("sweep record invariants") {
  auto rec = tiny_record();
  CHECK_NOTHROW(rec.validate());

  SUBCASE("one block per grid point") {
    rec.samples.pop_back();
    CHECK_THROWS_AS(rec.validate(), ValidationError);
  }
  SUBCASE("block length must match dwell * rate within one sample") {
    rec.samples[0].resize(13, {0.0, 0.0});
    CHECK_THROWS_AS(rec.validate(), ValidationError);
  }
  SUBCASE("day index starts at 1") {
    rec.day = 0;
    CHECK_THROWS_AS(rec.validate(), ValidationError);
  }
}

TEST_CASE("channel spectrum polar form") {
  const FrequencyGrid grid(1.0e9, 1.0e8, 4);
  const std::vector<std::complex<double>> h = {
      {1.0, 0.0}, {0.0, 0.5}, {-0.25, 0.0}, {0.0, 0.0}};
  const auto spec = ChannelSpectrum::from_samples(grid, h);

  CHECK(spec.a_db[0] == doctest::Approx(0.0));
  CHECK(spec.a_db[1] == doctest::Approx(20.0 * std::log10(0.5)));
  CHECK(spec.a_db[2] == doctest::Approx(20.0 * std::log10(0.25)));
  // exact zero hits the magnitude floor and is flagged
  CHECK(spec.a_db[3] == doctest::Approx(-240.0));
  CHECK(spec.floored[3] == 1);
  CHECK(spec.floored[0] == 0);
}

TEST_CASE("phase unwrap keeps adjacent differences within pi") {
  std::mt19937_64 eng(11);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 16 + static_cast<std::size_t>(eng() % 48);
    FrequencyGrid grid(1.0e9, 10.0e6, n);
    std::vector<std::complex<double>> h(n);
    for (auto& v : h) v = {uni(eng), uni(eng)};
    const auto spec = ChannelSpectrum::from_samples(grid, h);
    for (std::size_t k = 1; k < n; ++k) {
      CHECK(std::abs(spec.phase_rad[k] - spec.phase_rad[k - 1]) <=
            doctest::Approx(3.14159265358979324));
    }
    // unwrapped phase still represents the same angles
    for (std::size_t k = 0; k < n; ++k) {
      CHECK(num::wrap_phase(spec.phase_rad[k] - std::arg(h[k])) ==
            doctest::Approx(0.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("rasterization quantizes by floor division") {
  // 4x4 grid at 5 cm spacing spans [-10, 10) cm on both axes. A centroid at
  // corner-relative (12.3, 7.0) cm, i.e. pot-fixed (2.3, -3.0), lands in
  // column floor(12.3/5) = 2 and row floor(7.0/5) = 1.
  TuberAnnotation ann;
  ann.pot_id = "P1";
  ann.scale_cm_per_px = 1.0;
  ann.pixel_centroids = {{2.3, -3.0}};
  const auto map = rasterize_annotation(ann, 5.0, 4, 4);
  CHECK(map.at(1, 2) == 1.0);
  double total = 0.0;
  for (double v : map.values) total += v;
  CHECK(total == 1.0);
}

TEST_CASE("rasterization edge cases") {
  TuberAnnotation ann;
  ann.pot_id = "P1";
  ann.scale_cm_per_px = 1.0;

  SUBCASE("no centroids gives an all-zero map") {
    const auto map = rasterize_annotation(ann, 5.0, 3, 3);
    for (double v : map.values) CHECK(v == 0.0);
  }
  SUBCASE("binary occupancy: two centroids in one cell still give 1") {
    ann.pixel_centroids = {{1.0, 1.0}, {2.0, 2.0}};
    const auto map = rasterize_annotation(ann, 5.0, 2, 2);
    CHECK(map.at(1, 1) == 1.0);
    CHECK(map.at(0, 0) + map.at(0, 1) + map.at(1, 0) == 0.0);
  }
  SUBCASE("centroid outside the extent names the offender") {
    ann.pixel_centroids = {{0.0, 0.0}, {25.0, 0.0}};
    CHECK_THROWS_WITH_AS(rasterize_annotation(ann, 5.0, 4, 4),
                         doctest::Contains("centroid 1"), ValidationError);
  }
}

TEST_CASE("rasterization is idempotent and permutation invariant") {
  std::mt19937_64 eng(5);
  std::uniform_real_distribution<double> uni(-9.9, 9.9);
  for (int trial = 0; trial < 20; ++trial) {
    TuberAnnotation ann;
    ann.pot_id = "P";
    ann.scale_cm_per_px = 1.0;
    const std::size_t n = 1 + eng() % 6;
    for (std::size_t i = 0; i < n; ++i) ann.pixel_centroids.push_back({uni(eng), uni(eng)});

    const auto once = rasterize_annotation(ann, 5.0, 4, 4);
    const auto twice = rasterize_annotation(ann, 5.0, 4, 4);
    CHECK(once.values == twice.values);

    auto reversed = ann;
    std::reverse(reversed.pixel_centroids.begin(), reversed.pixel_centroids.end());
    CHECK(rasterize_annotation(reversed, 5.0, 4, 4).values == once.values);
  }
}

TEST_CASE("pixel-to-cm conversion commutes with quantization") {
  TuberAnnotation in_pixels;
  in_pixels.pot_id = "P";
  in_pixels.scale_cm_per_px = 0.25;
  in_pixels.pixel_centroids = {{13.0, -22.0}, {-31.0, 8.0}, {5.0, 5.0}};

  TuberAnnotation pre_converted;
  pre_converted.pot_id = "P";
  pre_converted.scale_cm_per_px = 1.0;
  for (const auto& [px, py] : in_pixels.pixel_centroids) {
    pre_converted.pixel_centroids.push_back({px * 0.25, py * 0.25});
  }
  CHECK(rasterize_annotation(in_pixels, 5.0, 4, 4).values ==
        rasterize_annotation(pre_converted, 5.0, 4, 4).values);
}

TEST_CASE("sweep file round trip") {
  SUBCASE("minimal one-frequency file") {
    const auto path = temp_file("one_freq.sweep");
    io::write_file(path,
                   "pot=P9\nday=1\nf_start_hz=2e+09\nf_step_hz=4e+07\nn_points=1\n"
                   "dwell_s=0.002\nrate_sps=5000\n"
                   "1,0,0.5,0.5,0.25,0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1,0.1,0.1,0.2,0.2\n");
    const auto rec = io::load_sweep(path);
    CHECK(rec.grid.size() == 1);
    CHECK(rec.pot_id == "P9");
    CHECK(rec.samples[0].size() == 10);
    CHECK(rec.samples[0][0] == std::complex<double>{1.0, 0.0});
  }

  SUBCASE("save(load(x)) is byte identical") {
    const auto path = temp_file("tiny.sweep");
    io::save_sweep(tiny_record(), path);
    const auto reloaded = io::load_sweep(path);
    const auto path2 = temp_file("tiny2.sweep");
    io::save_sweep(reloaded, path2);
    CHECK(io::read_file(path) == io::read_file(path2));
  }

  SUBCASE("simulator-generated sweep survives a round trip") {
    sim::LayeredMedium medium;
    medium.layers = {{0.02, {1.0, 0.0, 0.0}}, {0.004, {2.8, 0.01, 0.0}},
                     {0.15, {6.0, 0.3, 0.04}}, {0.05, {22.0, 2.0, 0.0}}};
    sim::SimParams params;
    params.pot_id = "RT";
    params.dwell_s = 0.004;
    params.rate_sps = 5000.0;
    params.noise_sd = 0.01;
    params.cfo_hz = 20.0;
    params.seed = 99;
    const auto records = sim::simulate_growth_series(medium, {0.0, 0.01},
                                                     FrequencyGrid(2.0e9, 2.0e8, 6), params);
    const auto path = temp_file("sim.sweep");
    io::save_sweep(records[1], path);
    const auto reloaded = io::load_sweep(path);
    CHECK(reloaded.pot_id == records[1].pot_id);
    CHECK(reloaded.day == records[1].day);
    CHECK(reloaded.samples == records[1].samples);
    const auto path2 = temp_file("sim2.sweep");
    io::save_sweep(reloaded, path2);
    CHECK(io::read_file(path) == io::read_file(path2));
  }
}

TEST_CASE("loaders reject malformed input") {
  SUBCASE("declared shape must match the rows present") {
    const auto path = temp_file("short.heatmap");
    io::write_file(path, "metric=RSRP\nrows=3\ncols=2\nspacing_cm=5\n1,2\n3,4\n");
    CHECK_THROWS_AS(io::load_heatmap(path), ParseError);
  }
  SUBCASE("NaN is rejected") {
    const auto path = temp_file("nan.heatmap");
    io::write_file(path, "metric=RSRP\nrows=1\ncols=2\nspacing_cm=5\nnan,2\n");
    CHECK_THROWS_AS(io::load_heatmap(path), ParseError);
  }
  SUBCASE("negative spacing is rejected") {
    const auto path = temp_file("negspace.heatmap");
    io::write_file(path, "metric=RSRP\nrows=1\ncols=2\nspacing_cm=-5\n1,2\n");
    CHECK_THROWS_AS(io::load_heatmap(path), ParseError);
  }
  SUBCASE("unknown metric is rejected") {
    const auto path = temp_file("badmetric.heatmap");
    io::write_file(path, "metric=RSSI\nrows=1\ncols=2\nspacing_cm=5\n1,2\n");
    CHECK_THROWS_AS(io::load_heatmap(path), ParseError);
  }
  SUBCASE("missing file raises an io error") {
    CHECK_THROWS_AS(io::load_sweep(temp_file("does_not_exist.sweep")), IoError);
  }
}

TEST_CASE("heatmap and annotation round trips") {
  MetricHeatmap map;
  map.metric = MetricKind::Bler;
  map.rows = 2;
  map.cols = 3;
  map.spacing_cm = 5.0;
  map.values = {0.1, 0.25, -1.5, 2.0, 0.0, 1e-17};
  const auto hm_path = temp_file("map.heatmap");
  io::save_heatmap(map, hm_path);
  const auto map2 = io::load_heatmap(hm_path);
  CHECK(map2.values == map.values);
  CHECK(map2.metric == MetricKind::Bler);
  const auto hm_path2 = temp_file("map2.heatmap");
  io::save_heatmap(map2, hm_path2);
  CHECK(io::read_file(hm_path) == io::read_file(hm_path2));

  TuberAnnotation ann;
  ann.pot_id = "CB.L2";
  ann.scale_cm_per_px = 0.03125;
  ann.pixel_centroids = {{120.5, -33.25}, {64.0, 17.0}};
  const auto ann_path = temp_file("ann.annotation");
  io::save_annotation(ann, ann_path);
  const auto ann2 = io::load_annotation(ann_path);
  CHECK(ann2.pixel_centroids == ann.pixel_centroids);
  CHECK(ann2.centroids_cm()[0].first == doctest::Approx(120.5 * 0.03125));

  std::vector<HarvestOutcome> outcomes = {{"SG.L1", 412.5, 380.0}, {"SG.L2", 298.0, 275.5}};
  const auto h_path = temp_file("harvest.csv");
  io::save_harvest(outcomes, h_path);
  const auto back = io::load_harvest(h_path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].mass_g == 412.5);
  CHECK(back[1].volume_cm3 == 275.5);

  OccupancyMap occ;
  occ.rows = 2;
  occ.cols = 2;
  occ.spacing_cm = 5.0;
  occ.values = {0.0, 0.125, 1.0, 0.5};
  const auto occ_path = temp_file("map.occupancy");
  io::save_occupancy(occ, occ_path);
  CHECK(io::load_occupancy(occ_path).values == occ.values);
}
