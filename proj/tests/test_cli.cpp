#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "soilrf/cli.hpp"
#include "soilrf/features.hpp"
#include "soilrf/io.hpp"
#include "soilrf/types.hpp"

using namespace soilrf;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd =
      std::string(SOILRF_CLI_PATH) + " " + args + " >" + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path work_dir() {
  const auto dir = fs::temp_directory_path() / "soilrf_cli_tests";
  fs::create_directories(dir);
  return dir;
}

// Two pots over the full 45-day window on a light 16-point grid.
fs::path small_scenario() {
  const auto path = work_dir() / "small.scn";
  io::write_file(path,
                 "days=45\n"
                 "seed=777\n"
                 "noise_sd=0.0005\n"
                 "cfo_hz=20\n"
                 "dwell_s=0.02\n"
                 "rate_sps=5000\n"
                 "f_start_hz=2000000000\n"
                 "f_step_hz=100000000\n"
                 "n_points=16\n"
                 "[pot A.1]\n"
                 "layer=0.0254,1,0\n"
                 "layer=0.004,2.8,0.01\n"
                 "layer=0.18,5.8,0.25,0.04\n"
                 "layer=0.05,23,2\n"
                 "growth=1,0.002\n"
                 "growth=45,0.024\n"
                 "[pot B.2]\n"
                 "layer=0.0254,1,0\n"
                 "layer=0.004,3.0,0.012\n"
                 "layer=0.18,6.3,0.28,0.05\n"
                 "layer=0.05,24,2.2\n"
                 "growth=1,0.0021\n"
                 "growth=45,0.0235\n");
  return path;
}

// All outputs except config.echo, which embeds the output path itself.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> contents;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().filename() != "config.echo") {
      contents[fs::relative(entry.path(), dir).string()] = io::read_file(entry.path());
    }
  }
  return contents;
}

// Same 10 x 20 planted grid as the fusion unit tests (blob truth, graded
// metric noise), written out as files for the fuse subcommand.
void write_planted_fusion_inputs(const fs::path& dir, std::uint64_t seed) {
  fs::create_directories(dir);
  TuberAnnotation ann;
  ann.pot_id = "F1";
  ann.scale_cm_per_px = 1.0;
  std::vector<std::pair<std::size_t, std::size_t>> hot;
  for (std::size_t r = 2; r <= 4; ++r) {
    for (std::size_t c = 3; c <= 7; ++c) hot.emplace_back(r, c);
  }
  for (std::size_t r = 6; r <= 8; ++r) {
    for (std::size_t c = 12; c <= 17; ++c) hot.emplace_back(r, c);
  }
  OccupancyMap truth;
  truth.rows = 10;
  truth.cols = 20;
  truth.spacing_cm = 5.0;
  truth.values.assign(200, 0.0);
  for (const auto& [r, c] : hot) {
    truth.at(r, c) = 1.0;
    ann.pixel_centroids.push_back({(static_cast<double>(c) + 0.5) * 5.0 - 50.0,
                                   (static_cast<double>(r) + 0.5) * 5.0 - 25.0});
  }
  io::save_annotation(ann, dir / "truth.annotation");

  const std::array<double, 5> noise_sd = {0.4, 0.7, 0.9, 1.1, 1.4};
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t j = 0; j < 5; ++j) {
    MetricHeatmap map;
    map.metric = kAllMetrics[j];
    map.rows = truth.rows;
    map.cols = truth.cols;
    map.spacing_cm = 5.0;
    map.values.resize(truth.values.size());
    for (std::size_t i = 0; i < map.values.size(); ++i) {
      map.values[i] = (2.0 * truth.values[i] - 1.0) + noise_sd[j] * gauss(eng);
    }
    io::save_heatmap(map, dir / (std::string(to_string(map.metric)) + ".heatmap"));
  }
}

}  // namespace

TEST_CASE("simulate command") {
  const auto scenario = small_scenario();
  const auto out1 = work_dir() / "sim1";
  const auto out2 = work_dir() / "sim2";
  fs::remove_all(out1);
  fs::remove_all(out2);

  CHECK(run_cli("simulate " + scenario.string() + " --out " + out1.string(),
                work_dir() / "sim.log") == 0);
  std::size_t sweeps = 0;
  for (const auto& entry : fs::directory_iterator(out1)) {
    if (entry.path().extension() == ".sweep" && entry.path().filename() != "air.sweep") {
      ++sweeps;
    }
  }
  CHECK(sweeps == 90);  // 2 pots x 45 days
  CHECK(fs::exists(out1 / "air.sweep"));
  CHECK(fs::exists(out1 / "scenario.echo"));
  CHECK(fs::exists(out1 / "config.echo"));
  const auto echo = io::read_file(out1 / "config.echo");
  CHECK(echo.find("seed=777") != std::string::npos);

  SUBCASE("same seed twice gives byte-identical outputs") {
    CHECK(run_cli("simulate " + scenario.string() + " --out " + out2.string(),
                  work_dir() / "sim2.log") == 0);
    CHECK(snapshot(out1) == snapshot(out2));
  }

  SUBCASE("malformed scenario exits with code 2 and a field diagnostic") {
    const auto bad = work_dir() / "bad.scn";
    io::write_file(bad, "days=45\nnoise_sd=abc\n[pot A]\n");
    const auto log = work_dir() / "bad.log";
    CHECK(run_cli("simulate " + bad.string() + " --out " + (work_dir() / "nope").string(),
                  log) == 2);
    CHECK(io::read_file(log).find("noise_sd") != std::string::npos);
  }

  SUBCASE("missing scenario exits with code 2 naming the path") {
    const auto log = work_dir() / "missing.log";
    CHECK(run_cli("simulate /nonexistent/path.scn --out " + (work_dir() / "x").string(),
                  log) == 2);
    CHECK(io::read_file(log).find("/nonexistent/path.scn") != std::string::npos);
  }
}

TEST_CASE("features then classify") {
  const auto scenario = small_scenario();
  const auto sim_out = work_dir() / "pipeline" / "sim";
  const auto feat_out = work_dir() / "pipeline" / "features";
  const auto cls_out = work_dir() / "pipeline" / "classify";
  fs::remove_all(work_dir() / "pipeline");

  REQUIRE(run_cli("simulate " + scenario.string() + " --out " + sim_out.string(),
                  work_dir() / "p1.log") == 0);
  REQUIRE(run_cli("features --sweeps " + sim_out.string() + " --air " +
                      (sim_out / "air.sweep").string() + " --out " + feat_out.string() +
                      " --emit-spectra",
                  work_dir() / "p2.log") == 0);

  const auto table = features::load_feature_table(feat_out / "features.csv");
  CHECK(table.size() == 90);
  CHECK(fs::exists(feat_out / "spectra" / "pot_A.1_day_01.spectrum"));
  CHECK(fs::exists(feat_out / "features_bai.svg"));
  CHECK(fs::exists(feat_out / "spectra.svg"));
  CHECK(fs::exists(feat_out / "config.echo"));

  const auto log = work_dir() / "p3.log";
  REQUIRE(run_cli("classify --features " + (feat_out / "features.csv").string() +
                      " --out " + cls_out.string() + " --seed 5",
                  log) == 0);
  const auto report = io::read_file(cls_out / "lopo_report.txt");
  CHECK(report.find("mean_accuracy=") != std::string::npos);
  CHECK(io::read_file(log).find("mean LOPO accuracy") != std::string::npos);

  SUBCASE("stats command emits density and js tables") {
    const auto stats_out = work_dir() / "pipeline" / "stats";
    REQUIRE(run_cli("stats --features " + (feat_out / "features.csv").string() +
                        " --out " + stats_out.string() + " --resamples 500",
                    work_dir() / "p4.log") == 0);
    CHECK(fs::exists(stats_out / "density_bai_A.1.csv"));
    CHECK(fs::exists(stats_out / "js_bai.csv"));
    CHECK(fs::exists(stats_out / "trends.csv"));
    CHECK(fs::exists(stats_out / "config.echo"));
  }
}

TEST_CASE("fuse command dominates the best single metric on planted grids") {
  const auto train_dir = work_dir() / "fuse_train";
  const auto test_dir = work_dir() / "fuse_test";
  write_planted_fusion_inputs(train_dir, 301);
  write_planted_fusion_inputs(test_dir, 302);
  const auto out = work_dir() / "fuse_out";
  fs::remove_all(out);

  std::string train_maps;
  std::string test_maps;
  for (MetricKind kind : kAllMetrics) {
    train_maps += " " + (train_dir / (std::string(to_string(kind)) + ".heatmap")).string();
    test_maps += " " + (test_dir / (std::string(to_string(kind)) + ".heatmap")).string();
  }
  const int rc = run_cli("fuse --train-maps" + train_maps + " --train-truth " +
                             (train_dir / "truth.annotation").string() + " --test-maps" +
                             test_maps + " --test-truth " +
                             (test_dir / "truth.annotation").string() + " --out " +
                             out.string(),
                         work_dir() / "fuse.log");
  CHECK(rc == 0);
  CHECK(fs::exists(out / "fit.csv"));
  CHECK(fs::exists(out / "heatmaps.svg"));

  // fused MSE must not exceed any single-metric MSE on the test set
  const auto bars = io::read_file(out / "metric_bars.csv");
  double fused_mse = 1e300;
  std::vector<double> single_mse;
  for (const auto& line : io::split(bars, '\n')) {
    if (line.empty() || line.rfind("metric,", 0) == 0) continue;
    const auto cells = io::split(line, ',');
    REQUIRE(cells.size() == 4);
    const double mse = io::parse_double(cells[2]);
    if (cells[0] == "fused") {
      fused_mse = mse;
    } else {
      single_mse.push_back(mse);
    }
  }
  REQUIRE(single_mse.size() == 5);
  for (double mse : single_mse) CHECK(fused_mse <= mse);
}

TEST_CASE("stats command with harvest outcomes emits the correlation table") {
  // four synthetic pots with monotone trajectories over the full 45 days
  std::vector<features::FeatureVector> rows;
  const std::array<const char*, 4> pots = {"P1", "P2", "P3", "P4"};
  for (std::size_t p = 0; p < 4; ++p) {
    for (int day = 1; day <= 45; ++day) {
      features::FeatureVector fv;
      fv.pot_id = pots[p];
      fv.day = day;
      const double scale = 0.8 + 0.1 * static_cast<double>(p);
      fv.bai_db = scale * 0.04 * day;
      fv.hl = 1.0 - scale * 0.004 * day;
      fv.slope_db_per_hz = -scale * 1e-11 * day;
      fv.ripple_var = scale * 0.0008 * day + 0.001 * ((day * 7) % 5);
      rows.push_back(std::move(fv));
    }
  }
  const auto dir = work_dir() / "stats_harvest";
  fs::remove_all(dir);
  fs::create_directories(dir);
  features::save_feature_table(rows, dir / "features.csv");
  io::save_harvest({{"P1", 220.0, 200.0},
                    {"P2", 260.0, 245.0},
                    {"P3", 305.0, 290.0},
                    {"P4", 355.0, 330.0}},
                   dir / "harvest.csv");

  const auto out = dir / "out";
  REQUIRE(run_cli("stats --features " + (dir / "features.csv").string() + " --harvest " +
                      (dir / "harvest.csv").string() + " --out " + out.string() +
                      " --resamples 1000 --seed 11",
                  work_dir() / "stats_h.log") == 0);
  const auto table = io::read_file(out / "correlations.csv");
  CHECK(table.rfind("feature,descriptor,pearson,spearman,ci_lo,ci_hi,n_degenerate", 0) == 0);
  // 4 features x {end, slope} x {mass, volume} = 16 rows after the header
  CHECK(io::split(table, '\n').size() >= 17);
  CHECK(table.find("bai,end:mass,") != std::string::npos);
  CHECK(fs::exists(out / "trends.csv"));
}

TEST_CASE("report command composes the whole chain") {
  const auto scenario = small_scenario();
  const auto out = work_dir() / "report_out";
  fs::remove_all(out);
  REQUIRE(run_cli("report " + scenario.string() + " --out " + out.string() + " --seed 3",
                  work_dir() / "report.log") == 0);
  CHECK(fs::exists(out / "sim" / "air.sweep"));
  CHECK(fs::exists(out / "features" / "features.csv"));
  CHECK(fs::exists(out / "classify" / "lopo_report.txt"));
  CHECK(fs::exists(out / "stats" / "trends.csv"));
  CHECK(fs::exists(out / "bandscan" / "tradeoff.svg"));
  const auto summary = io::read_file(out / "summary.txt");
  CHECK(summary.find("mean_accuracy=") != std::string::npos);
}

TEST_CASE("bandscan command") {
  const auto scenario = small_scenario();
  const auto out = work_dir() / "bandscan_out";
  fs::remove_all(out);
  CHECK(run_cli("bandscan " + scenario.string() + " --out " + out.string(),
                work_dir() / "band.log") == 0);
  CHECK(fs::exists(out / "band_scores.csv"));
  CHECK(fs::exists(out / "tradeoff.svg"));
  const auto csv = io::read_file(out / "band_scores.csv");
  CHECK(csv.rfind("f_hz,psi_p,psi_a", 0) == 0);
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(run_cli("frobnicate", work_dir() / "u1.log") == 2);
  CHECK(run_cli("classify --out /tmp/x", work_dir() / "u2.log") == 2);  // missing required
  CHECK(run_cli("fuse --train-maps a b --train-truth t --test-maps c --test-truth d --out /tmp/y",
                work_dir() / "u4.log") == 2);  // wrong map counts
  const auto log = work_dir() / "u3.log";
  CHECK(run_cli("classify --features /nonexistent/features.csv --out " +
                    (work_dir() / "u3").string(),
                log) == 2);
  CHECK(io::read_file(log).find("/nonexistent/features.csv") != std::string::npos);
}

TEST_CASE("commands never mutate their inputs") {
  const auto scenario = small_scenario();
  const auto before = io::read_file(scenario);
  const auto out = work_dir() / "immutability";
  fs::remove_all(out);
  REQUIRE(run_cli("simulate " + scenario.string() + " --out " + out.string(),
                  work_dir() / "imm.log") == 0);
  CHECK(io::read_file(scenario) == before);
}
