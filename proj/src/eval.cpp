#include "soilrf/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "soilrf/errors.hpp"
#include "soilrf/numeric.hpp"

namespace soilrf::eval {
namespace {

void check_shapes(const OccupancyMap& pred, const OccupancyMap& truth) {
  if (pred.rows != truth.rows || pred.cols != truth.cols) {
    throw std::invalid_argument("map metrics: grid shapes do not match");
  }
  pred.validate();
  truth.validate();
}

std::size_t stage_index(Stage s) { return static_cast<std::size_t>(s); }

struct Standardizer {
  std::array<double, 4> means{};
  std::array<double, 4> sds{};

  static Standardizer fit(const std::vector<LabeledFeature>& data) {
    Standardizer st;
    const double n = static_cast<double>(data.size());
    for (std::size_t j = 0; j < 4; ++j) {
      double s = 0.0;
      for (const auto& d : data) s += d.x[j];
      st.means[j] = s / n;
      double ss = 0.0;
      for (const auto& d : data) ss += (d.x[j] - st.means[j]) * (d.x[j] - st.means[j]);
      st.sds[j] = data.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
      if (!(st.sds[j] > 0.0)) st.sds[j] = 1.0;  // constant feature carries no signal
    }
    return st;
  }

  std::array<double, 4> apply(const std::array<double, 4>& x) const {
    std::array<double, 4> z;
    for (std::size_t j = 0; j < 4; ++j) z[j] = (x[j] - means[j]) / sds[j];
    return z;
  }
};

std::array<double, 3> class_scores(const std::array<std::array<double, 4>, 3>& w,
                                   const std::array<double, 3>& b,
                                   const std::array<double, 4>& x) {
  std::array<double, 3> s;
  for (std::size_t c = 0; c < 3; ++c) {
    double acc = b[c];
    for (std::size_t j = 0; j < 4; ++j) acc += w[c][j] * x[j];
    s[c] = acc;
  }
  return s;
}

std::array<double, 3> softmax3(const std::array<double, 3>& s) {
  const double m = std::max({s[0], s[1], s[2]});
  std::array<double, 3> p;
  double z = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    p[c] = std::exp(s[c] - m);
    z += p[c];
  }
  for (double& v : p) v /= z;
  return p;
}

struct GdResult {
  std::array<std::array<double, 4>, 3> weights{};
  std::array<double, 3> intercepts{};
  bool converged = false;
};

// Full-batch gradient descent with backtracking Armijo line search. The
// initial trial step carries over from the previous iteration (doubled), so
// flat directions do not pay for a fresh backtrack every time.
GdResult fit_logistic(const std::vector<LabeledFeature>& data, double lambda) {
  GdResult res;
  constexpr double kGradTol = 1e-8;
  constexpr int kMaxIter = 5000;
  constexpr double kArmijoC = 1e-4;

  double loss = logistic_loss(data, res.weights, res.intercepts, lambda);
  std::array<std::array<double, 4>, 3> gw;
  std::array<double, 3> gb;
  double step_init = 1.0;
  int stalled = 0;
  for (int it = 0; it < kMaxIter; ++it) {
    logistic_gradient(data, res.weights, res.intercepts, lambda, gw, gb);
    double g2 = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      g2 += gb[c] * gb[c];
      for (std::size_t j = 0; j < 4; ++j) g2 += gw[c][j] * gw[c][j];
    }
    if (std::sqrt(g2) < kGradTol) {
      res.converged = true;
      return res;
    }

    double step = step_init;
    bool accepted = false;
    while (step > 1e-16) {
      auto w_try = res.weights;
      auto b_try = res.intercepts;
      for (std::size_t c = 0; c < 3; ++c) {
        b_try[c] -= step * gb[c];
        for (std::size_t j = 0; j < 4; ++j) w_try[c][j] -= step * gw[c][j];
      }
      const double trial = logistic_loss(data, w_try, b_try, lambda);
      if (trial <= loss - kArmijoC * step * g2) {
        res.weights = w_try;
        res.intercepts = b_try;
        stalled = loss - trial <= 1e-15 * std::max(1.0, std::abs(loss)) ? stalled + 1 : 0;
        loss = trial;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || stalled >= 2) return res;  // stalled at float precision
    step_init = std::min(step * 2.0, 1e6);
  }
  return res;
}

std::vector<Stage> present_classes(const std::vector<LabeledFeature>& data) {
  std::set<Stage> seen;
  for (const auto& d : data) seen.insert(d.y);
  return {seen.begin(), seen.end()};
}

double subset_accuracy(const ClassifierModel& model,
                       const std::vector<LabeledFeature>& data) {
  if (data.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& d : data) {
    if (model.predict(d.x) == d.y) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

ClassifierModel fit_at_lambda(const std::vector<LabeledFeature>& data, double lambda) {
  const auto st = Standardizer::fit(data);
  std::vector<LabeledFeature> z = data;
  for (auto& d : z) d.x = st.apply(d.x);
  const auto gd = fit_logistic(z, lambda);
  ClassifierModel model;
  model.weights = gd.weights;
  model.intercepts = gd.intercepts;
  model.lambda = lambda;
  model.feature_means = st.means;
  model.feature_sds = st.sds;
  model.converged = gd.converged;
  return model;
}

}  // namespace

int tolerance_radius_cells(double tolerance_cm, double spacing_cm) {
  if (tolerance_cm < 0.0) throw std::invalid_argument("tolerance must be nonnegative");
  if (!(spacing_cm > 0.0)) throw std::invalid_argument("spacing must be positive");
  return static_cast<int>(std::ceil(tolerance_cm / spacing_cm));
}

OccupancyMap dilate(const OccupancyMap& truth, int radius_cells) {
  truth.validate(true);
  if (radius_cells < 0) throw std::invalid_argument("dilate: negative radius");
  if (radius_cells == 0) return truth;
  OccupancyMap out = truth;
  const auto rows = static_cast<std::ptrdiff_t>(truth.rows);
  const auto cols = static_cast<std::ptrdiff_t>(truth.cols);
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    for (std::ptrdiff_t c = 0; c < cols; ++c) {
      bool hit = false;
      for (std::ptrdiff_t dr = -radius_cells; dr <= radius_cells && !hit; ++dr) {
        for (std::ptrdiff_t dc = -radius_cells; dc <= radius_cells && !hit; ++dc) {
          const std::ptrdiff_t rr = r + dr;
          const std::ptrdiff_t cc = c + dc;
          if (rr >= 0 && rr < rows && cc >= 0 && cc < cols &&
              truth.at(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc)) == 1.0) {
            hit = true;
          }
        }
      }
      out.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = hit ? 1.0 : 0.0;
    }
  }
  return out;
}

double accuracy(const OccupancyMap& pred, const OccupancyMap& truth, double eta,
                double tolerance_cm) {
  check_shapes(pred, truth);
  truth.validate(true);
  if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("accuracy: eta must be in [0, 1]");
  const auto dilated = dilate(truth, tolerance_radius_cells(tolerance_cm, truth.spacing_cm));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    const bool hot = pred.values[i] >= eta;
    const bool ok = hot ? dilated.values[i] == 1.0 : truth.values[i] == 0.0;
    if (ok) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pred.values.size());
}

double balanced_accuracy(const OccupancyMap& pred, const OccupancyMap& truth, double eta,
                         double tolerance_cm) {
  check_shapes(pred, truth);
  truth.validate(true);
  const int r = tolerance_radius_cells(tolerance_cm, truth.spacing_cm);
  const auto dilated_truth = dilate(truth, r);

  OccupancyMap pred_bin = pred;
  for (double& v : pred_bin.values) v = v >= eta ? 1.0 : 0.0;
  const auto dilated_pred = dilate(pred_bin, r);

  std::size_t pos = 0, pos_hit = 0, neg = 0, neg_ok = 0;
  for (std::size_t i = 0; i < truth.values.size(); ++i) {
    if (truth.values[i] == 1.0) {
      ++pos;
      if (dilated_pred.values[i] == 1.0) ++pos_hit;
    } else {
      ++neg;
      if (!(pred_bin.values[i] == 1.0 && dilated_truth.values[i] == 0.0)) ++neg_ok;
    }
  }
  const double tpr = pos == 0 ? 1.0 : static_cast<double>(pos_hit) / static_cast<double>(pos);
  const double tnr = neg == 0 ? 1.0 : static_cast<double>(neg_ok) / static_cast<double>(neg);
  return 0.5 * (tpr + tnr);
}

double mse_map(const OccupancyMap& pred, const OccupancyMap& truth) {
  check_shapes(pred, truth);
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    const double d = pred.values[i] - truth.values[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.values.size());
}

double ssim_map(const OccupancyMap& pred, const OccupancyMap& truth) {
  check_shapes(pred, truth);
  constexpr double kC1 = 0.01 * 0.01;  // (K1 L)^2 with L = 1
  constexpr double kC2 = 0.03 * 0.03;
  const std::size_t win = std::min<std::size_t>(7, std::min(pred.rows, pred.cols));
  const double n = static_cast<double>(win * win);

  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t r0 = 0; r0 + win <= pred.rows; ++r0) {
    for (std::size_t c0 = 0; c0 + win <= pred.cols; ++c0) {
      double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
      for (std::size_t r = r0; r < r0 + win; ++r) {
        for (std::size_t c = c0; c < c0 + win; ++c) {
          const double x = pred.at(r, c);
          const double y = truth.at(r, c);
          sx += x;
          sy += y;
          sxx += x * x;
          syy += y * y;
          sxy += x * y;
        }
      }
      const double mx = sx / n;
      const double my = sy / n;
      const double vx = sxx / n - mx * mx;
      const double vy = syy / n - my * my;
      const double cov = sxy / n - mx * my;
      total += ((2.0 * mx * my + kC1) * (2.0 * cov + kC2)) /
               ((mx * mx + my * my + kC1) * (vx + vy + kC2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

EvalReport evaluate_maps(const OccupancyMap& pred, const OccupancyMap& truth, double eta,
                         const std::vector<double>& tolerances_cm) {
  EvalReport report;
  report.eta = eta;
  report.accuracy = accuracy(pred, truth, eta, 0.0);
  for (double tol : tolerances_cm) {
    report.accuracy_by_tolerance.emplace_back(tol, accuracy(pred, truth, eta, tol));
  }
  report.balanced_accuracy = balanced_accuracy(pred, truth, eta, 0.0);
  report.mse = mse_map(pred, truth);
  report.ssim = ssim_map(pred, truth);
  return report;
}

Stage label_stage(int day) {
  if (day < 1 || day > 45) {
    throw std::invalid_argument("label_stage: day must be in the 1..45 window");
  }
  if (day <= 15) return Stage::Early;
  if (day <= 30) return Stage::Middle;
  return Stage::Late;
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::Early: return "early";
    case Stage::Middle: return "middle";
    case Stage::Late: return "late";
  }
  throw std::invalid_argument("to_string: bad Stage");
}

Stage ClassifierModel::predict(const std::array<double, 4>& features) const {
  std::array<double, 4> z;
  for (std::size_t j = 0; j < 4; ++j) z[j] = (features[j] - feature_means[j]) / feature_sds[j];
  const auto s = class_scores(weights, intercepts, z);
  std::size_t best = 0;
  for (std::size_t c = 1; c < 3; ++c) {
    if (s[c] > s[best]) best = c;
  }
  return static_cast<Stage>(best);
}

double logistic_loss(const std::vector<LabeledFeature>& data,
                     const std::array<std::array<double, 4>, 3>& weights,
                     const std::array<double, 3>& intercepts, double lambda) {
  double loss = 0.0;
  for (const auto& d : data) {
    const auto p = softmax3(class_scores(weights, intercepts, d.x));
    loss -= std::log(std::max(p[stage_index(d.y)], 1e-300));
  }
  loss /= static_cast<double>(data.size());
  double w2 = 0.0;
  for (const auto& row : weights) {
    for (double w : row) w2 += w * w;
  }
  return loss + 0.5 * lambda * w2;
}

void logistic_gradient(const std::vector<LabeledFeature>& data,
                       const std::array<std::array<double, 4>, 3>& weights,
                       const std::array<double, 3>& intercepts, double lambda,
                       std::array<std::array<double, 4>, 3>& grad_w,
                       std::array<double, 3>& grad_b) {
  for (auto& row : grad_w) row.fill(0.0);
  grad_b.fill(0.0);
  for (const auto& d : data) {
    const auto p = softmax3(class_scores(weights, intercepts, d.x));
    for (std::size_t c = 0; c < 3; ++c) {
      const double e = p[c] - (stage_index(d.y) == c ? 1.0 : 0.0);
      grad_b[c] += e;
      for (std::size_t j = 0; j < 4; ++j) grad_w[c][j] += e * d.x[j];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(data.size());
  for (std::size_t c = 0; c < 3; ++c) {
    grad_b[c] *= inv_n;
    for (std::size_t j = 0; j < 4; ++j) {
      grad_w[c][j] = grad_w[c][j] * inv_n + lambda * weights[c][j];
    }
  }
}

ClassifierModel train_classifier(const std::vector<LabeledFeature>& data,
                                 const std::vector<double>& lambda_grid, int folds,
                                 std::uint64_t seed) {
  if (data.size() < 2) throw ComputeError("train_classifier: not enough samples");
  if (lambda_grid.empty()) throw std::invalid_argument("train_classifier: empty lambda grid");
  if (folds < 2) throw std::invalid_argument("train_classifier: need at least 2 folds");
  if (present_classes(data).size() < 2) {
    throw ComputeError("train_classifier: training data holds fewer than 2 classes");
  }
  if (static_cast<std::size_t>(folds) > data.size()) {
    throw ComputeError("train_classifier: more folds than samples");
  }

  std::vector<std::size_t> idx(data.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::mt19937_64 eng(seed);
  num::shuffle_indices(idx, eng);

  std::vector<double> grid = lambda_grid;
  std::sort(grid.begin(), grid.end());
  for (double l : grid) {
    if (l < 0.0) throw std::invalid_argument("train_classifier: negative lambda");
  }

  double best_acc = -1.0;
  double best_lambda = grid.front();
  for (double lambda : grid) {
    double acc_sum = 0.0;
    for (int fold = 0; fold < folds; ++fold) {
      std::vector<LabeledFeature> train;
      std::vector<LabeledFeature> val;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        if (static_cast<int>(i % static_cast<std::size_t>(folds)) == fold) {
          val.push_back(data[idx[i]]);
        } else {
          train.push_back(data[idx[i]]);
        }
      }
      if (train.empty() || val.empty()) {
        throw ComputeError("train_classifier: degenerate CV fold");
      }
      if (present_classes(train).size() < present_classes(data).size()) {
        throw ComputeError("train_classifier: class missing from a CV training fold");
      }
      acc_sum += subset_accuracy(fit_at_lambda(train, lambda), val);
    }
    const double acc = acc_sum / static_cast<double>(folds);
    if (acc > best_acc) {  // ties keep the earlier (smaller) lambda
      best_acc = acc;
      best_lambda = lambda;
    }
  }

  ClassifierModel model = fit_at_lambda(data, best_lambda);
  model.cv_accuracy = best_acc;
  return model;
}

LopoReport leave_one_pot_out(const std::vector<LabeledFeature>& data,
                             const std::vector<double>& lambda_grid, std::uint64_t seed) {
  std::map<std::string, std::vector<LabeledFeature>> by_pot;
  for (const auto& d : data) by_pot[d.pot_id].push_back(d);
  if (by_pot.size() < 2) {
    throw ComputeError("leave_one_pot_out: need at least 2 pots");
  }

  LopoReport report;
  double acc_sum = 0.0;
  for (const auto& [held_out, test] : by_pot) {
    std::vector<LabeledFeature> train;
    for (const auto& [pot, rows] : by_pot) {
      if (pot != held_out) train.insert(train.end(), rows.begin(), rows.end());
    }
    const auto model = train_classifier(train, lambda_grid, 5, seed);
    const double acc = subset_accuracy(model, test);
    report.fold_accuracy.emplace_back(held_out, acc);
    acc_sum += acc;
  }
  report.mean_accuracy = acc_sum / static_cast<double>(by_pot.size());
  return report;
}

}  // namespace soilrf::eval
