#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "soilrf/types.hpp"

namespace soilrf::eval {

// ---------------------------------------------------------------------------
// Map agreement metrics
// ---------------------------------------------------------------------------

struct EvalReport {
  double eta = 0.5;
  double accuracy = 0.0;  // at tolerance 0
  std::vector<std::pair<double, double>> accuracy_by_tolerance;  // (cm, fraction)
  double balanced_accuracy = 0.0;  // supplementary; sparse maps inflate plain accuracy
  double mse = 0.0;
  double ssim = 0.0;
};

/// r = ceil(d / spacing): tolerance distance to a Chebyshev cell radius.
int tolerance_radius_cells(double tolerance_cm, double spacing_cm);

/// Chebyshev dilation with a square structuring element of radius r cells.
OccupancyMap dilate(const OccupancyMap& truth, int radius_cells);

/// Cell-wise accuracy of the score map thresholded at eta. A predicted-1 cell
/// counts as correct when it lies within the dilated truth; a predicted-0 cell
/// is judged against the undilated truth, which keeps the metric monotone
/// nondecreasing in the tolerance.
double accuracy(const OccupancyMap& pred, const OccupancyMap& truth, double eta,
                double tolerance_cm);

double balanced_accuracy(const OccupancyMap& pred, const OccupancyMap& truth, double eta,
                         double tolerance_cm);

double mse_map(const OccupancyMap& pred, const OccupancyMap& truth);

/// SSIM with K1=0.01, K2=0.03, L=1, uniform square window of side
/// min(7, smaller map dimension), averaged over fully interior windows.
double ssim_map(const OccupancyMap& pred, const OccupancyMap& truth);

EvalReport evaluate_maps(const OccupancyMap& pred, const OccupancyMap& truth, double eta,
                         const std::vector<double>& tolerances_cm);

// ---------------------------------------------------------------------------
// Day-indexed stage classification
// ---------------------------------------------------------------------------

enum class Stage { Early, Middle, Late };

/// Days 1-15 early, 16-30 middle, 31-45 late.
Stage label_stage(int day);
std::string_view to_string(Stage stage);

struct LabeledFeature {
  std::string pot_id;
  int day = 1;
  std::array<double, 4> x{};  // bai, hl, slope, ripple_var
  Stage y = Stage::Early;
};

/// Multinomial logistic regression over the four CFR features with L2
/// regularization on the weights (not the intercepts). Standardization
/// parameters always come from the training set alone.
struct ClassifierModel {
  std::array<std::array<double, 4>, 3> weights{};
  std::array<double, 3> intercepts{};
  double lambda = 0.0;
  std::array<double, 4> feature_means{};
  std::array<double, 4> feature_sds{};
  double cv_accuracy = 0.0;  // mean 5-fold CV accuracy at the chosen lambda
  bool converged = false;

  Stage predict(const std::array<double, 4>& features) const;
};

/// Fits with the lambda chosen from the grid by mean k-fold CV accuracy
/// (ties go to the smaller lambda), then retrains on the full set.
ClassifierModel train_classifier(const std::vector<LabeledFeature>& data,
                                 const std::vector<double>& lambda_grid, int folds,
                                 std::uint64_t seed);

struct LopoReport {
  std::vector<std::pair<std::string, double>> fold_accuracy;  // per held-out pot
  double mean_accuracy = 0.0;
};

/// Leave-one-pot-out: one fold per pot, accuracy averaged over folds.
LopoReport leave_one_pot_out(const std::vector<LabeledFeature>& data,
                             const std::vector<double>& lambda_grid, std::uint64_t seed);

// Exposed for gradient verification in tests.
double logistic_loss(const std::vector<LabeledFeature>& data,
                     const std::array<std::array<double, 4>, 3>& weights,
                     const std::array<double, 3>& intercepts, double lambda);
void logistic_gradient(const std::vector<LabeledFeature>& data,
                       const std::array<std::array<double, 4>, 3>& weights,
                       const std::array<double, 3>& intercepts, double lambda,
                       std::array<std::array<double, 4>, 3>& grad_w,
                       std::array<double, 3>& grad_b);

}  // namespace soilrf::eval
