#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "soilrf/features.hpp"

namespace soilrf::cli {

// Exit codes: 0 success, 1 computation-level failure, 2 usage / IO error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCompute = 1;
inline constexpr int kExitUsage = 2;

struct FuseOptions {
  std::vector<std::string> train_maps;   // multiples of 5, canonical metric order
  std::vector<std::string> train_truths; // one annotation per train set
  std::vector<std::string> test_maps;    // exactly 5
  std::string test_truth;
  std::string out_dir;
  std::vector<double> etas{0.5};
  std::vector<double> tolerances_cm{5.1, 10.2};
};

struct StatsOptions {
  std::string feature_table;
  std::string harvest_path;  // optional
  std::string out_dir;
  double kde_bandwidth = 0.0;  // 0 = Silverman
  std::size_t resamples = 10000;
  std::uint64_t seed = 0;
};

void cmd_simulate(const std::string& scenario_path, const std::string& out_dir);
void cmd_features(const std::string& sweep_dir, const std::string& air_path,
                  const std::string& out_dir, const features::WorkingBand& band,
                  std::size_t window, bool emit_spectra);
void cmd_fuse(const FuseOptions& options);
void cmd_classify(const std::string& feature_table, const std::string& out_dir,
                  const std::vector<double>& lambda_grid, std::uint64_t seed);
void cmd_stats(const StatsOptions& options);
void cmd_bandscan(const std::string& scenario_path, const std::string& out_dir,
                  double perturbation);
void cmd_report(const std::string& scenario_path, const std::string& out_dir,
                const features::WorkingBand& band, const std::vector<double>& lambda_grid,
                std::uint64_t seed);

/// Full argument parsing + exit-code mapping; what main() calls.
int run(int argc, const char* const* argv);

}  // namespace soilrf::cli
