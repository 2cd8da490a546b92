#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "soilrf/features.hpp"

namespace soilrf::stats {

/// Reference-set standardization context (sample sd).
struct ZScoreContext {
  double mu = 0.0;
  double sigma = 1.0;
  std::size_t reference_size = 0;

  static ZScoreContext from_reference(std::span<const double> reference);
};

std::vector<double> zscore(std::span<const double> values, const ZScoreContext& ctx);

/// Gaussian kernel density estimate on a sorted support grid.
struct Density {
  std::vector<double> support;
  std::vector<double> values;
  double bandwidth = 1.0;

  double integral() const;
};

/// Silverman's rule of thumb: 0.9 min(sd, iqr/1.34) n^(-1/5).
double silverman_bandwidth(std::span<const double> samples);

/// With an empty support, evaluates on 512 points spanning min-4h .. max+4h.
Density kde(std::span<const double> samples, double bandwidth,
            std::vector<double> support = {});

/// KL with a 1e-12 floor on the densities inside the log (documented bias).
double kl_divergence(const Density& p, const Density& q);

/// JS = KL(p||m)/2 + KL(q||m)/2 with m = (p+q)/2; bounded by ln 2.
double js_divergence(const Density& p, const Density& q);

double pearson(std::span<const double> x, std::span<const double> y);
/// Rank correlation; ties take average ranks.
double spearman(std::span<const double> x, std::span<const double> y);
std::vector<double> average_ranks(std::span<const double> v);

/// End-of-cycle value and least-squares temporal slope of one feature.
struct TrendDescriptor {
  double end_value = 0.0;
  double temporal_slope = 0.0;
};

inline constexpr int kCycleDays = 45;

/// Requires the full day 1..45 trajectory of one pot.
TrendDescriptor trend_descriptor(std::span<const int> days, std::span<const double> values);

/// Per-feature descriptors (bai, hl, slope, ripple_var) for one pot's series.
std::array<TrendDescriptor, 4> trend_descriptors(
    const std::vector<features::FeatureVector>& series);

struct CorrelationResult {
  double pearson = 0.0;
  double spearman = 0.0;
  std::optional<std::pair<double, double>> pearson_ci;   // percentile 95%
  std::optional<std::pair<double, double>> spearman_ci;
  std::size_t n_degenerate = 0;  // zero-variance resamples skipped
};

/// Pot-level bootstrap (resampling pots with replacement). Deterministic for a
/// fixed seed; resamples = 0 returns point estimates only.
CorrelationResult correlate_with_harvest(std::span<const double> descriptor_per_pot,
                                         std::span<const double> outcome_per_pot,
                                         std::size_t resamples = 10000,
                                         std::uint64_t seed = 0);

void save_density(const Density& density, const std::filesystem::path& path);

struct CorrelationRow {
  std::string feature;
  std::string descriptor;  // e.g. "end:mass", "slope:volume"
  CorrelationResult result;
};

void save_correlation_table(const std::vector<CorrelationRow>& rows,
                            const std::filesystem::path& path);

}  // namespace soilrf::stats
