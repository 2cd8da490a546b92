#include "soilrf/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "soilrf/cfr.hpp"
#include "soilrf/errors.hpp"
#include "soilrf/eval.hpp"
#include "soilrf/fusion.hpp"
#include "soilrf/io.hpp"
#include "soilrf/plot.hpp"
#include "soilrf/sim.hpp"
#include "soilrf/stats.hpp"

namespace soilrf::cli {
namespace {

namespace fs = std::filesystem;

using KvList = std::vector<std::pair<std::string, std::string>>;

void ensure_out_dir(const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw IoError("cannot create output directory: " + out_dir);
  }
}

void echo_config(const std::string& out_dir, KvList entries) {
  io::write_kv_file(fs::path(out_dir) / "config.echo", entries);
}

std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += io::format_double(v[i]);
  }
  return s;
}

std::string day_tag(int day) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "%02d", day);
  return buf;
}

std::string require_input_file(const std::string& path) {
  if (!fs::is_regular_file(path)) {
    throw IoError("missing input file: " + path);
  }
  return path;
}

std::vector<features::FeatureVector> load_features_checked(const std::string& path) {
  require_input_file(path);
  return features::load_feature_table(path);
}

constexpr std::array<const char*, 4> kFeatureNames = {"bai", "hl", "slope", "ripple_var"};

double feature_value(const features::FeatureVector& fv, std::size_t j) {
  switch (j) {
    case 0: return fv.bai_db;
    case 1: return fv.hl;
    case 2: return fv.slope_db_per_hz;
    default: return fv.ripple_var;
  }
}

std::map<std::string, std::vector<features::FeatureVector>> group_by_pot(
    std::vector<features::FeatureVector> rows) {
  std::map<std::string, std::vector<features::FeatureVector>> by_pot;
  for (auto& fv : rows) by_pot[fv.pot_id].push_back(std::move(fv));
  for (auto& [pot, series] : by_pot) {
    std::stable_sort(series.begin(), series.end(),
                     [](const auto& a, const auto& b) { return a.day < b.day; });
  }
  return by_pot;
}

std::vector<eval::LabeledFeature> to_labeled(
    const std::vector<features::FeatureVector>& rows) {
  std::vector<eval::LabeledFeature> out;
  out.reserve(rows.size());
  for (const auto& fv : rows) {
    eval::LabeledFeature lf;
    lf.pot_id = fv.pot_id;
    lf.day = fv.day;
    lf.x = {fv.bai_db, fv.hl, fv.slope_db_per_hz, fv.ripple_var};
    lf.y = eval::label_stage(fv.day);
    out.push_back(std::move(lf));
  }
  return out;
}

void write_eval_report_text(std::ostream& out, const std::string& name,
                            const eval::EvalReport& report) {
  out << name << ": accuracy=" << io::format_double(report.accuracy)
      << " balanced=" << io::format_double(report.balanced_accuracy)
      << " mse=" << io::format_double(report.mse)
      << " ssim=" << io::format_double(report.ssim);
  for (const auto& [tol, acc] : report.accuracy_by_tolerance) {
    out << " acc@" << io::format_double(tol) << "cm=" << io::format_double(acc);
  }
  out << '\n';
}

}  // namespace

void cmd_simulate(const std::string& scenario_path, const std::string& out_dir) {
  require_input_file(scenario_path);
  const auto scenario = sim::load_scenario(scenario_path);
  ensure_out_dir(out_dir);

  for (const auto& pot : scenario.pots) {
    const auto radii = pot.radius_schedule(scenario.n_days);
    const auto records = sim::simulate_growth_series(pot.medium, radii, scenario.grid,
                                                     scenario.params_for(pot.pot_id));
    for (const auto& rec : records) {
      io::save_sweep(rec, fs::path(out_dir) /
                              ("pot_" + rec.pot_id + "_day_" + day_tag(rec.day) + ".sweep"));
    }
  }
  auto air_params = scenario.params_for("air");
  const auto air =
      sim::simulate_air_reference(scenario.pots.front().medium, scenario.grid, air_params);
  io::save_sweep(air, fs::path(out_dir) / "air.sweep");
  io::write_file(fs::path(out_dir) / "scenario.echo", io::read_file(scenario_path));

  echo_config(out_dir, {{"command", "simulate"},
                        {"scenario", scenario_path},
                        {"out", out_dir},
                        {"days", std::to_string(scenario.n_days)},
                        {"pots", std::to_string(scenario.pots.size())},
                        {"f_start_hz", io::format_double(scenario.grid.f_start())},
                        {"f_step_hz", io::format_double(scenario.grid.f_step())},
                        {"n_points", std::to_string(scenario.grid.size())},
                        {"dwell_s", io::format_double(scenario.dwell_s)},
                        {"rate_sps", io::format_double(scenario.rate_sps)},
                        {"cfo_hz", io::format_double(scenario.cfo_hz)},
                        {"noise_sd", io::format_double(scenario.noise_sd)},
                        {"seed", std::to_string(scenario.seed)}});
  std::cout << "simulate: wrote " << scenario.pots.size() * static_cast<std::size_t>(scenario.n_days)
            << " sweep files plus air reference to " << out_dir << "\n";
}

void cmd_features(const std::string& sweep_dir, const std::string& air_path,
                  const std::string& out_dir, const features::WorkingBand& band,
                  std::size_t window, bool emit_spectra) {
  if (!fs::is_directory(sweep_dir)) throw IoError("missing input directory: " + sweep_dir);
  require_input_file(air_path);
  ensure_out_dir(out_dir);

  std::vector<fs::path> files;
  const fs::path air_canonical = fs::weakly_canonical(air_path);
  for (const auto& entry : fs::directory_iterator(sweep_dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".sweep") continue;
    if (fs::weakly_canonical(entry.path()) == air_canonical) continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no .sweep files found in " + sweep_dir);

  const auto air = io::load_sweep(air_path);
  std::map<std::string, std::vector<SweepRecord>> by_pot;
  for (const auto& file : files) {
    auto rec = io::load_sweep(file);
    by_pot[rec.pot_id].push_back(std::move(rec));
  }

  std::vector<features::FeatureVector> table;
  for (const auto& [pot, records] : by_pot) {
    auto rows = features::feature_series(records, air, band, window);
    table.insert(table.end(), rows.begin(), rows.end());
    if (emit_spectra) {
      const fs::path spec_dir = fs::path(out_dir) / "spectra";
      fs::create_directories(spec_dir);
      for (const auto& rec : records) {
        cfr::save_spectrum(cfr::assemble_spectrum(rec),
                           spec_dir / ("pot_" + pot + "_day_" + day_tag(rec.day) + ".spectrum"));
      }
    }
  }
  features::save_feature_table(table, fs::path(out_dir) / "features.csv");

  // Feature trajectories, one chart per feature, one series per pot.
  const auto grouped = group_by_pot(table);
  for (std::size_t j = 0; j < 4; ++j) {
    plot::ChartSpec spec;
    spec.title = std::string("Feature trajectory: ") + kFeatureNames[j];
    spec.x_label = "day";
    spec.y_label = kFeatureNames[j];
    for (const auto& [pot, series] : grouped) {
      plot::Series s;
      s.label = pot;
      for (const auto& fv : series) {
        s.x.push_back(fv.day);
        s.y.push_back(feature_value(fv, j));
      }
      spec.series.push_back(std::move(s));
    }
    plot::write_line_chart(spec, fs::path(out_dir) /
                                     (std::string("features_") + kFeatureNames[j] + ".svg"));
  }

  // Magnitude spectra of the first pot across a handful of days.
  {
    const auto& [pot, records] = *by_pot.begin();
    plot::ChartSpec spec;
    spec.title = "Magnitude spectra: pot " + pot;
    spec.x_label = "frequency / Hz";
    spec.y_label = "A / dB";
    const std::size_t n = records.size();
    for (std::size_t pick : {std::size_t{0}, n / 4, n / 2, 3 * n / 4, n - 1}) {
      if (pick >= n) continue;
      const auto s = cfr::assemble_spectrum(records[pick]);
      plot::Series series;
      series.label = "day " + std::to_string(records[pick].day);
      series.x = s.grid.points();
      series.y = s.a_db;
      spec.series.push_back(std::move(series));
      if (n == 1) break;
    }
    plot::write_line_chart(spec, fs::path(out_dir) / "spectra.svg");
  }

  echo_config(out_dir, {{"command", "features"},
                        {"sweeps", sweep_dir},
                        {"air", air_path},
                        {"out", out_dir},
                        {"band", io::format_double(band.f1_hz) + ":" +
                                     io::format_double(band.f2_hz)},
                        {"split", io::format_double(band.split_hz)},
                        {"window", std::to_string(window)},
                        {"emit_spectra", emit_spectra ? "1" : "0"}});
  std::cout << "features: wrote " << table.size() << " rows to " << out_dir
            << "/features.csv\n";
}

void cmd_fuse(const FuseOptions& options) {
  if (options.train_maps.empty() || options.train_maps.size() % 5 != 0) {
    throw std::invalid_argument("fuse: --train-maps needs metric files in groups of 5");
  }
  if (options.train_truths.size() != options.train_maps.size() / 5) {
    throw std::invalid_argument("fuse: need one --train-truth per group of 5 train maps");
  }
  if (options.test_maps.size() != 5) {
    throw std::invalid_argument("fuse: --test-maps needs exactly 5 metric files");
  }
  ensure_out_dir(options.out_dir);

  auto load_set = [](const std::vector<std::string>& paths, std::size_t offset,
                     const std::string& truth_path) {
    std::array<MetricHeatmap, 5> maps;
    for (std::size_t j = 0; j < 5; ++j) {
      maps[j] = fusion::normalize_heatmap(io::load_heatmap(require_input_file(paths[offset + j])));
      if (maps[j].metric != kAllMetrics[j]) {
        throw std::invalid_argument(
            "fuse: maps must arrive in canonical order RSRP,SINR,MCS,throughput,BLER; got `" +
            std::string(to_string(maps[j].metric)) + "` at position " + std::to_string(j + 1));
      }
    }
    const auto ann = io::load_annotation(require_input_file(truth_path));
    const auto truth =
        rasterize_annotation(ann, maps[0].spacing_cm, maps[0].rows, maps[0].cols);
    return std::make_pair(maps, truth);
  };

  fusion::FusionCells cells;
  for (std::size_t set = 0; set < options.train_truths.size(); ++set) {
    const auto [maps, truth] = load_set(options.train_maps, set * 5, options.train_truths[set]);
    cells.append(fusion::FusionCells::from_maps(maps, truth));
  }
  const auto fit = fusion::fit_weights_multistart(cells);
  fusion::save_fit_result(fit, fs::path(options.out_dir) / "fit.csv");

  const auto [test_maps, test_truth] = load_set(options.test_maps, 0, options.test_truth);
  const auto report =
      fusion::localize(fit, test_maps, test_truth, options.etas, options.tolerances_cm);

  std::ofstream txt(fs::path(options.out_dir) / "eval_report.txt", std::ios::binary);
  if (!txt) throw IoError("cannot write eval_report.txt");
  txt << "train_loss=" << io::format_double(fit.train_loss) << " iterations="
      << fit.iterations << " converged=" << (fit.converged ? 1 : 0) << '\n';
  for (const auto& [name, rep] : report.per_metric) write_eval_report_text(txt, name, rep);
  write_eval_report_text(txt, "fused", report.fused);

  {
    std::ofstream csv(fs::path(options.out_dir) / "acc_vs_tolerance.csv", std::ios::binary);
    csv << "metric,tolerance_cm,accuracy\n";
    auto emit = [&](const std::string& name, const eval::EvalReport& rep) {
      csv << name << ",0," << io::format_double(rep.accuracy) << '\n';
      for (const auto& [tol, acc] : rep.accuracy_by_tolerance) {
        csv << name << ',' << io::format_double(tol) << ',' << io::format_double(acc) << '\n';
      }
    };
    for (const auto& [name, rep] : report.per_metric) emit(name, rep);
    emit("fused", report.fused);
  }
  {
    std::ofstream csv(fs::path(options.out_dir) / "metric_bars.csv", std::ios::binary);
    csv << "metric,accuracy,mse,ssim\n";
    for (const auto& [name, rep] : report.per_metric) {
      csv << name << ',' << io::format_double(rep.accuracy) << ','
          << io::format_double(rep.mse) << ',' << io::format_double(rep.ssim) << '\n';
    }
    csv << "fused," << io::format_double(report.fused.accuracy) << ','
        << io::format_double(report.fused.mse) << ','
        << io::format_double(report.fused.ssim) << '\n';
  }
  {
    std::ofstream csv(fs::path(options.out_dir) / "eta_sweep.csv", std::ios::binary);
    csv << "eta,fused_accuracy\n";
    for (const auto& [eta, acc] : report.eta_sweep) {
      csv << io::format_double(eta) << ',' << io::format_double(acc) << '\n';
    }
  }

  const OccupancyMap fused_map = fusion::fuse(test_maps, fit.weights);
  io::save_occupancy(fused_map, fs::path(options.out_dir) / "fused_map.occupancy");
  io::save_occupancy(test_truth, fs::path(options.out_dir) / "truth.occupancy");

  std::vector<std::pair<std::string, OccupancyMap>> panels;
  panels.emplace_back("truth", test_truth);
  panels.emplace_back("fused", fused_map);
  for (std::size_t j = 0; j < 5; ++j) {
    panels.emplace_back(std::string(to_string(test_maps[j].metric)),
                        fusion::rescale_metric(test_maps[j]));
  }
  plot::write_heatmap_panels("Occupancy maps", panels,
                             fs::path(options.out_dir) / "heatmaps.svg");

  KvList echo = {{"command", "fuse"},
                 {"out", options.out_dir},
                 {"eta", join_doubles(options.etas)},
                 {"tol", join_doubles(options.tolerances_cm)},
                 {"train_sets", std::to_string(options.train_truths.size())},
                 {"test_truth", options.test_truth}};
  for (std::size_t i = 0; i < options.train_maps.size(); ++i) {
    echo.emplace_back("train_map_" + std::to_string(i + 1), options.train_maps[i]);
  }
  for (std::size_t i = 0; i < options.train_truths.size(); ++i) {
    echo.emplace_back("train_truth_" + std::to_string(i + 1), options.train_truths[i]);
  }
  for (std::size_t i = 0; i < options.test_maps.size(); ++i) {
    echo.emplace_back("test_map_" + std::to_string(i + 1), options.test_maps[i]);
  }
  echo_config(options.out_dir, echo);

  std::cout << "fuse: train loss " << io::format_double(fit.train_loss) << ", fused MSE "
            << io::format_double(report.fused.mse) << ", fused SSIM "
            << io::format_double(report.fused.ssim) << "\n";
}

void cmd_classify(const std::string& feature_table, const std::string& out_dir,
                  const std::vector<double>& lambda_grid, std::uint64_t seed) {
  const auto rows = load_features_checked(feature_table);
  ensure_out_dir(out_dir);
  const auto report = eval::leave_one_pot_out(to_labeled(rows), lambda_grid, seed);

  std::ofstream txt(fs::path(out_dir) / "lopo_report.txt", std::ios::binary);
  if (!txt) throw IoError("cannot write lopo_report.txt");
  for (const auto& [pot, acc] : report.fold_accuracy) {
    txt << "fold " << pot << " accuracy=" << io::format_double(acc) << '\n';
  }
  txt << "mean_accuracy=" << io::format_double(report.mean_accuracy) << '\n';

  echo_config(out_dir, {{"command", "classify"},
                        {"features", feature_table},
                        {"out", out_dir},
                        {"lambda_grid", join_doubles(lambda_grid)},
                        {"seed", std::to_string(seed)}});
  std::cout << "classify: mean LOPO accuracy " << io::format_double(report.mean_accuracy)
            << " over " << report.fold_accuracy.size() << " folds\n";
}

void cmd_stats(const StatsOptions& options) {
  const auto rows = load_features_checked(options.feature_table);
  ensure_out_dir(options.out_dir);
  const auto by_pot = group_by_pot(rows);

  // Per-feature z-score densities (reference = all pots pooled) and JS matrix.
  for (std::size_t j = 0; j < 4; ++j) {
    std::vector<double> pooled;
    for (const auto& [pot, series] : by_pot) {
      for (const auto& fv : series) pooled.push_back(feature_value(fv, j));
    }
    const auto ctx = stats::ZScoreContext::from_reference(pooled);
    const auto pooled_z = stats::zscore(pooled, ctx);
    const double bandwidth = options.kde_bandwidth > 0.0
                                 ? options.kde_bandwidth
                                 : stats::silverman_bandwidth(pooled_z);
    const auto [lo_it, hi_it] = std::minmax_element(pooled_z.begin(), pooled_z.end());
    std::vector<double> support(512);
    const double lo = *lo_it - 4.0 * bandwidth;
    const double hi = *hi_it + 4.0 * bandwidth;
    for (std::size_t i = 0; i < support.size(); ++i) {
      support[i] = lo + (hi - lo) * static_cast<double>(i) / 511.0;
    }

    std::vector<std::pair<std::string, stats::Density>> densities;
    for (const auto& [pot, series] : by_pot) {
      std::vector<double> vals;
      for (const auto& fv : series) vals.push_back(feature_value(fv, j));
      const auto z = stats::zscore(vals, ctx);
      auto density = stats::kde(z, bandwidth, support);
      stats::save_density(density, fs::path(options.out_dir) /
                                       ("density_" + std::string(kFeatureNames[j]) + "_" +
                                        pot + ".csv"));
      densities.emplace_back(pot, std::move(density));
    }

    std::ofstream js(fs::path(options.out_dir) /
                         ("js_" + std::string(kFeatureNames[j]) + ".csv"),
                     std::ios::binary);
    js << "pot_a,pot_b,js_nats\n";
    for (std::size_t a = 0; a < densities.size(); ++a) {
      for (std::size_t b = a + 1; b < densities.size(); ++b) {
        js << densities[a].first << ',' << densities[b].first << ','
           << io::format_double(
                  stats::js_divergence(densities[a].second, densities[b].second))
           << '\n';
      }
    }
  }

  // Trend descriptors per pot, correlations when harvest outcomes are given.
  std::map<std::string, std::array<stats::TrendDescriptor, 4>> trends;
  bool full_cycle = true;
  for (const auto& [pot, series] : by_pot) {
    if (series.size() != static_cast<std::size_t>(stats::kCycleDays)) {
      full_cycle = false;
      break;
    }
  }
  if (full_cycle) {
    std::ofstream csv(fs::path(options.out_dir) / "trends.csv", std::ios::binary);
    csv << "pot,feature,end_value,temporal_slope\n";
    for (const auto& [pot, series] : by_pot) {
      trends[pot] = stats::trend_descriptors(series);
      for (std::size_t j = 0; j < 4; ++j) {
        csv << pot << ',' << kFeatureNames[j] << ','
            << io::format_double(trends[pot][j].end_value) << ','
            << io::format_double(trends[pot][j].temporal_slope) << '\n';
      }
    }
  } else {
    std::cout << "stats: skipping trend descriptors (need full 1.."
              << stats::kCycleDays << " day series per pot)\n";
  }

  if (!options.harvest_path.empty() && full_cycle) {
    const auto outcomes = io::load_harvest(require_input_file(options.harvest_path));
    std::map<std::string, HarvestOutcome> by_id;
    for (const auto& h : outcomes) by_id[h.pot_id] = h;
    std::vector<std::string> pots;
    for (const auto& [pot, series] : by_pot) {
      if (!by_id.count(pot)) {
        throw ValidationError("stats: harvest table is missing pot " + pot);
      }
      pots.push_back(pot);
    }

    std::vector<stats::CorrelationRow> table;
    std::uint64_t stream = 0;
    for (std::size_t j = 0; j < 4; ++j) {
      for (const bool use_slope : {false, true}) {
        std::vector<double> descriptor;
        for (const auto& pot : pots) {
          const auto& td = trends[pot][j];
          descriptor.push_back(use_slope ? td.temporal_slope : td.end_value);
        }
        for (const bool use_volume : {false, true}) {
          std::vector<double> outcome;
          for (const auto& pot : pots) {
            outcome.push_back(use_volume ? by_id[pot].volume_cm3 : by_id[pot].mass_g);
          }
          stats::CorrelationRow row;
          row.feature = kFeatureNames[j];
          row.descriptor = std::string(use_slope ? "slope" : "end") + ":" +
                           (use_volume ? "volume" : "mass");
          row.result = stats::correlate_with_harvest(descriptor, outcome, options.resamples,
                                                     options.seed + stream);
          ++stream;
          table.push_back(std::move(row));
        }
      }
    }
    stats::save_correlation_table(table, fs::path(options.out_dir) / "correlations.csv");
  }

  echo_config(options.out_dir,
              {{"command", "stats"},
               {"features", options.feature_table},
               {"harvest", options.harvest_path},
               {"out", options.out_dir},
               {"kde_bandwidth", options.kde_bandwidth > 0.0
                                     ? io::format_double(options.kde_bandwidth)
                                     : "silverman"},
               {"resamples", std::to_string(options.resamples)},
               {"seed", std::to_string(options.seed)}});
  std::cout << "stats: wrote density and correlation tables to " << options.out_dir << "\n";
}

void cmd_bandscan(const std::string& scenario_path, const std::string& out_dir,
                  double perturbation) {
  require_input_file(scenario_path);
  auto scenario = sim::load_scenario(scenario_path);
  ensure_out_dir(out_dir);

  auto medium = scenario.pots.front().medium;
  if (!(medium.tuber_radius_m > 0.0)) {
    double max_radius = 0.0;
    for (const auto& [day, r] : scenario.pots.front().growth_points) {
      max_radius = std::max(max_radius, r);
    }
    medium.tuber_radius_m = max_radius;
  }
  const auto scores = sim::band_scores(medium, scenario.grid, perturbation);

  {
    std::ofstream csv(fs::path(out_dir) / "band_scores.csv", std::ios::binary);
    if (!csv) throw IoError("cannot write band_scores.csv");
    csv << "f_hz,psi_p,psi_a\n";
    for (const auto& s : scores) {
      csv << io::format_double(s.freq_hz) << ',' << io::format_double(s.psi_p) << ','
          << io::format_double(s.psi_a) << '\n';
    }
  }
  {
    plot::ChartSpec spec;
    spec.title = "Penetration vs relative activity";
    spec.x_label = "psi_a / psi_p";
    spec.y_label = "psi_p";
    plot::Series s;
    s.label = scenario.pots.front().pot_id;
    s.markers = true;
    for (const auto& score : scores) {
      s.x.push_back(score.psi_a / score.psi_p);
      s.y.push_back(score.psi_p);
    }
    spec.series.push_back(std::move(s));
    plot::write_line_chart(spec, fs::path(out_dir) / "tradeoff.svg");
  }

  echo_config(out_dir, {{"command", "bandscan"},
                        {"scenario", scenario_path},
                        {"out", out_dir},
                        {"perturbation", io::format_double(perturbation)},
                        {"tuber_radius_m", io::format_double(medium.tuber_radius_m)},
                        {"seed", std::to_string(scenario.seed)}});
  std::cout << "bandscan: wrote " << scores.size() << " band scores to " << out_dir << "\n";
}

void cmd_report(const std::string& scenario_path, const std::string& out_dir,
                const features::WorkingBand& band, const std::vector<double>& lambda_grid,
                std::uint64_t seed) {
  ensure_out_dir(out_dir);
  const fs::path root(out_dir);
  cmd_simulate(scenario_path, (root / "sim").string());
  cmd_features((root / "sim").string(), (root / "sim" / "air.sweep").string(),
               (root / "features").string(), band, features::kDefaultRippleWindow, false);
  cmd_classify((root / "features" / "features.csv").string(), (root / "classify").string(),
               lambda_grid, seed);
  StatsOptions stats_options;
  stats_options.feature_table = (root / "features" / "features.csv").string();
  stats_options.out_dir = (root / "stats").string();
  stats_options.seed = seed;
  cmd_stats(stats_options);
  cmd_bandscan(scenario_path, (root / "bandscan").string(), 1.0);

  std::ofstream summary(root / "summary.txt", std::ios::binary);
  if (!summary) throw IoError("cannot write summary.txt");
  summary << "pipeline report\n";
  summary << "sim: sweep files under sim/\n";
  summary << "features: features/features.csv and trajectory plots\n";
  summary << "classify: " << io::read_file(root / "classify" / "lopo_report.txt");
  summary << "stats: density, trend and correlation tables under stats/\n";
  summary << "bandscan: band_scores.csv and tradeoff.svg under bandscan/\n";

  echo_config(out_dir, {{"command", "report"},
                        {"scenario", scenario_path},
                        {"out", out_dir},
                        {"band", io::format_double(band.f1_hz) + ":" +
                                     io::format_double(band.f2_hz)},
                        {"split", io::format_double(band.split_hz)},
                        {"lambda_grid", join_doubles(lambda_grid)},
                        {"seed", std::to_string(seed)}});
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Subsurface RF sensing toolkit: simulate, process, fuse, evaluate"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir;
  std::string sweep_dir;
  std::string air_path;
  std::string feature_table;
  std::string harvest_path;
  std::string band_arg = "2.0e9:3.5e9";
  double split_hz = 2.75e9;
  std::size_t window = features::kDefaultRippleWindow;
  bool emit_spectra = false;
  std::vector<double> etas{0.5};
  std::vector<double> tolerances{5.1, 10.2};
  std::vector<double> lambda_grid{1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  std::uint64_t seed = 0;
  double kde_bandwidth = 0.0;
  std::size_t resamples = 10000;
  double perturbation = 1.0;
  FuseOptions fuse_options;

  auto parse_band = [&]() {
    features::WorkingBand band;
    const auto parts = io::split(band_arg, ':');
    if (parts.size() != 2) {
      throw CLI::ValidationError("--band", "expected `<f1_hz>:<f2_hz>`");
    }
    band.f1_hz = io::parse_double(parts[0]);
    band.f2_hz = io::parse_double(parts[1]);
    band.split_hz = split_hz;
    band.validate();
    return band;
  };

  auto* sim_cmd = app.add_subcommand("simulate", "Generate sweep files from a scenario");
  sim_cmd->add_option("scenario", scenario_path, "Scenario file")->required();
  sim_cmd->add_option("--out", out_dir, "Output directory")->required();

  auto* feat_cmd = app.add_subcommand("features", "Extract CFR features from sweeps");
  feat_cmd->add_option("--sweeps", sweep_dir, "Directory of .sweep files")->required();
  feat_cmd->add_option("--air", air_path, "Air reference sweep")->required();
  feat_cmd->add_option("--out", out_dir, "Output directory")->required();
  feat_cmd->add_option("--band", band_arg, "Working band `f1:f2` in Hz");
  feat_cmd->add_option("--split", split_hz, "High/low split frequency in Hz");
  feat_cmd->add_option("--window", window, "Ripple median window (odd bins)");
  feat_cmd->add_flag("--emit-spectra", emit_spectra, "Also write per-day spectrum files");

  auto* fuse_cmd = app.add_subcommand("fuse", "Fit and evaluate LTE heatmap fusion");
  fuse_cmd->add_option("--train-maps", fuse_options.train_maps,
                       "Train heatmaps, groups of 5 in order RSRP,SINR,MCS,throughput,BLER")
      ->required();
  fuse_cmd->add_option("--train-truth", fuse_options.train_truths,
                       "Annotation file per train group")
      ->required();
  fuse_cmd->add_option("--test-maps", fuse_options.test_maps, "Exactly 5 test heatmaps")
      ->required();
  fuse_cmd->add_option("--test-truth", fuse_options.test_truth, "Test annotation file")
      ->required();
  fuse_cmd->add_option("--out", fuse_options.out_dir, "Output directory")->required();
  fuse_cmd->add_option("--eta", fuse_options.etas, "Score thresholds (first is primary)")
      ->delimiter(',');
  fuse_cmd->add_option("--tol", fuse_options.tolerances_cm, "Tolerance list in cm")
      ->delimiter(',');

  auto* classify_cmd = app.add_subcommand("classify", "Leave-one-pot-out stage classification");
  classify_cmd->add_option("--features", feature_table, "Feature table")->required();
  classify_cmd->add_option("--out", out_dir, "Output directory")->required();
  classify_cmd->add_option("--lambda-grid", lambda_grid, "L2 strengths")->delimiter(',');
  classify_cmd->add_option("--seed", seed, "Fold shuffle seed");

  auto* stats_cmd = app.add_subcommand("stats", "Condition densities and harvest correlations");
  stats_cmd->add_option("--features", feature_table, "Feature table")->required();
  stats_cmd->add_option("--harvest", harvest_path, "Harvest outcomes table");
  stats_cmd->add_option("--out", out_dir, "Output directory")->required();
  stats_cmd->add_option("--kde-bandwidth", kde_bandwidth, "KDE bandwidth override");
  stats_cmd->add_option("--resamples", resamples, "Bootstrap resamples");
  stats_cmd->add_option("--seed", seed, "Bootstrap seed");

  auto* band_cmd = app.add_subcommand("bandscan", "Penetration/activity scores per frequency");
  band_cmd->add_option("scenario", scenario_path, "Scenario file")->required();
  band_cmd->add_option("--out", out_dir, "Output directory")->required();
  band_cmd->add_option("--perturbation", perturbation, "Tuber permittivity delta");

  auto* report_cmd = app.add_subcommand("report", "End-to-end simulate/features/classify/stats");
  report_cmd->add_option("scenario", scenario_path, "Scenario file")->required();
  report_cmd->add_option("--out", out_dir, "Output directory")->required();
  report_cmd->add_option("--band", band_arg, "Working band `f1:f2` in Hz");
  report_cmd->add_option("--split", split_hz, "High/low split frequency in Hz");
  report_cmd->add_option("--lambda-grid", lambda_grid, "L2 strengths")->delimiter(',');
  report_cmd->add_option("--seed", seed, "Seed for classification and stats");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (sim_cmd->parsed()) {
      cmd_simulate(scenario_path, out_dir);
    } else if (feat_cmd->parsed()) {
      cmd_features(sweep_dir, air_path, out_dir, parse_band(), window, emit_spectra);
    } else if (fuse_cmd->parsed()) {
      if (fuse_options.train_maps.size() % 5 != 0 ||
          fuse_options.train_truths.size() != fuse_options.train_maps.size() / 5 ||
          fuse_options.test_maps.size() != 5) {
        throw CLI::ValidationError(
            "fuse", "--train-maps needs groups of 5 (one --train-truth per group) and "
                    "--test-maps exactly 5 files");
      }
      cmd_fuse(fuse_options);
    } else if (classify_cmd->parsed()) {
      cmd_classify(feature_table, out_dir, lambda_grid, seed);
    } else if (stats_cmd->parsed()) {
      StatsOptions so;
      so.feature_table = feature_table;
      so.harvest_path = harvest_path;
      so.out_dir = out_dir;
      so.kde_bandwidth = kde_bandwidth;
      so.resamples = resamples;
      so.seed = seed;
      cmd_stats(so);
    } else if (band_cmd->parsed()) {
      cmd_bandscan(scenario_path, out_dir, perturbation);
    } else if (report_cmd->parsed()) {
      cmd_report(scenario_path, out_dir, parse_band(), lambda_grid, seed);
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCompute;
  }
  return kExitOk;
}

}  // namespace soilrf::cli
