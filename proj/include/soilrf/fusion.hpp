#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "soilrf/eval.hpp"
#include "soilrf/types.hpp"

namespace soilrf::fusion {

/// Softmax-parameterized weights on the 5-simplex. Stabilized by max
/// subtraction, so logits up to |u| ~ 700 stay finite.
struct FusionWeights {
  std::array<double, 5> u{};
  std::array<double, 5> w{0.2, 0.2, 0.2, 0.2, 0.2};

  static FusionWeights from_logits(const std::array<double, 5>& logits);
};

struct OptimizerConfig {
  double grad_tol = 1e-8;
  int max_iterations = 500;
  double armijo_c = 1e-4;
};

struct FusionFit {
  FusionWeights weights;
  double train_loss = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Zero-mean unit-sd standardization across the grid (sample sd).
MetricHeatmap normalize_heatmap(const MetricHeatmap& map);

/// Training cells as rows: x holds the five normalized metric values, y the
/// binary truth. Lets several pots pool into one fit.
struct FusionCells {
  std::vector<std::array<double, 5>> x;
  std::vector<double> y;

  static FusionCells from_maps(const std::array<MetricHeatmap, 5>& maps,
                               const OccupancyMap& truth);
  void append(const FusionCells& other);
};

/// Weighted sum per cell, then min-max rescale into [0,1]; a constant fused
/// map rescales to all 0.5.
OccupancyMap fuse(const std::array<MetricHeatmap, 5>& maps, const FusionWeights& weights);

/// Mean squared error of the raw weighted sum against the binary truth.
double fusion_mse(const FusionCells& cells, const FusionWeights& weights);

/// BFGS minimization of the softmax-composed MSE from a single start.
FusionFit fit_weights(const FusionCells& cells, const std::array<double, 5>& init_u,
                      const OptimizerConfig& config = {});
FusionFit fit_weights(const std::array<MetricHeatmap, 5>& maps, const OccupancyMap& truth,
                      const std::array<double, 5>& init_u,
                      const OptimizerConfig& config = {});

/// Canonical multi-start: u = 0 plus the five vertices (u_j = 20, rest 0).
/// Best final loss wins; ties keep the lowest start index.
FusionFit fit_weights_multistart(const FusionCells& cells,
                                 const OptimizerConfig& config = {});
FusionFit fit_weights_multistart(const std::array<MetricHeatmap, 5>& maps,
                                 const OccupancyMap& truth,
                                 const OptimizerConfig& config = {});

/// Analytic gradient of the training loss in logit space (tests check it
/// against central finite differences).
std::array<double, 5> loss_gradient(const FusionCells& cells,
                                    const std::array<double, 5>& u);
double loss_at(const FusionCells& cells, const std::array<double, 5>& u);

struct LocalizationReport {
  FusionFit fit;
  std::vector<std::pair<std::string, eval::EvalReport>> per_metric;
  eval::EvalReport fused;
  std::vector<std::pair<double, double>> eta_sweep;  // (eta, fused accuracy at tol 0)
};

/// Evaluates the fused map and each single rescaled metric against truth.
/// The first eta is the primary threshold; the rest feed the eta sweep.
LocalizationReport localize(const FusionFit& fit, const std::array<MetricHeatmap, 5>& maps,
                            const OccupancyMap& truth, const std::vector<double>& etas,
                            const std::vector<double>& tolerances_cm);

/// Min-max rescale of one normalized metric into a score map.
OccupancyMap rescale_metric(const MetricHeatmap& map);

void save_fit_result(const FusionFit& fit, const std::filesystem::path& path);

}  // namespace soilrf::fusion
