#include "soilrf/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "soilrf/errors.hpp"
#include "soilrf/io.hpp"
#include "soilrf/numeric.hpp"

namespace soilrf::fusion {
namespace {

using Vec5 = std::array<double, 5>;
using Mat5 = std::array<std::array<double, 5>, 5>;

Mat5 identity5() {
  Mat5 m{};
  for (std::size_t i = 0; i < 5; ++i) m[i][i] = 1.0;
  return m;
}

Vec5 matvec(const Mat5& m, const Vec5& v) {
  Vec5 out{};
  for (std::size_t i = 0; i < 5; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 5; ++j) s += m[i][j] * v[j];
    out[i] = s;
  }
  return out;
}

double dot(const Vec5& a, const Vec5& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < 5; ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vec5& v) { return std::sqrt(dot(v, v)); }

bool finite(const Vec5& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::string dump(const Vec5& v) {
  std::ostringstream s;
  s << '[';
  for (std::size_t i = 0; i < 5; ++i) {
    if (i) s << ", ";
    s << v[i];
  }
  s << ']';
  return s.str();
}

void check_truth(const FusionCells& cells) {
  if (cells.x.empty()) throw std::invalid_argument("fusion: no training cells");
  for (double y : cells.y) {
    if (y != 0.0 && y != 1.0) {
      throw std::invalid_argument("fusion: ground truth must be binary");
    }
  }
}

}  // namespace

FusionWeights FusionWeights::from_logits(const Vec5& logits) {
  FusionWeights fw;
  fw.u = logits;
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t j = 0; j < 5; ++j) {
    fw.w[j] = std::exp(logits[j] - m);
    z += fw.w[j];
  }
  for (double& w : fw.w) w /= z;
  return fw;
}

MetricHeatmap normalize_heatmap(const MetricHeatmap& map) {
  map.validate();
  if (map.values.size() < 2) {
    throw std::invalid_argument("normalize_heatmap: need at least 2 cells");
  }
  const double sd = num::sample_sd(map.values);
  if (!(sd > 0.0)) {
    throw ComputeError("normalize_heatmap: zero variance (dead metric `" +
                       std::string(to_string(map.metric)) + "`)");
  }
  const double mean = num::mean(map.values);
  MetricHeatmap out = map;
  for (double& v : out.values) v = (v - mean) / sd;
  return out;
}

FusionCells FusionCells::from_maps(const std::array<MetricHeatmap, 5>& maps,
                                   const OccupancyMap& truth) {
  truth.validate(true);
  for (const auto& map : maps) {
    map.validate();
    if (map.rows != truth.rows || map.cols != truth.cols) {
      throw std::invalid_argument("fusion: heatmap shape does not match the truth map");
    }
  }
  FusionCells cells;
  cells.x.resize(truth.values.size());
  cells.y = truth.values;
  for (std::size_t i = 0; i < truth.values.size(); ++i) {
    for (std::size_t j = 0; j < 5; ++j) cells.x[i][j] = maps[j].values[i];
  }
  return cells;
}

void FusionCells::append(const FusionCells& other) {
  x.insert(x.end(), other.x.begin(), other.x.end());
  y.insert(y.end(), other.y.begin(), other.y.end());
}

OccupancyMap fuse(const std::array<MetricHeatmap, 5>& maps, const FusionWeights& weights) {
  for (const auto& map : maps) {
    map.validate();
    if (map.rows != maps[0].rows || map.cols != maps[0].cols) {
      throw std::invalid_argument("fuse: heatmap shapes do not match");
    }
  }
  std::vector<double> score(maps[0].values.size(), 0.0);
  for (std::size_t j = 0; j < 5; ++j) {
    for (std::size_t i = 0; i < score.size(); ++i) {
      score[i] += weights.w[j] * maps[j].values[i];
    }
  }
  const auto [lo_it, hi_it] = std::minmax_element(score.begin(), score.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  OccupancyMap out;
  out.rows = maps[0].rows;
  out.cols = maps[0].cols;
  out.spacing_cm = maps[0].spacing_cm;
  out.values.resize(score.size());
  for (std::size_t i = 0; i < score.size(); ++i) {
    out.values[i] = hi > lo ? (score[i] - lo) / (hi - lo) : 0.5;
  }
  return out;
}

OccupancyMap rescale_metric(const MetricHeatmap& map) {
  map.validate();
  const auto [lo_it, hi_it] = std::minmax_element(map.values.begin(), map.values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  OccupancyMap out;
  out.rows = map.rows;
  out.cols = map.cols;
  out.spacing_cm = map.spacing_cm;
  out.values.resize(map.values.size());
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    out.values[i] = hi > lo ? (map.values[i] - lo) / (hi - lo) : 0.5;
  }
  return out;
}

double fusion_mse(const FusionCells& cells, const FusionWeights& weights) {
  check_truth(cells);
  double acc = 0.0;
  for (std::size_t i = 0; i < cells.x.size(); ++i) {
    double yhat = 0.0;
    for (std::size_t j = 0; j < 5; ++j) yhat += weights.w[j] * cells.x[i][j];
    const double e = yhat - cells.y[i];
    acc += e * e;
  }
  return acc / static_cast<double>(cells.x.size());
}

double loss_at(const FusionCells& cells, const Vec5& u) {
  return fusion_mse(cells, FusionWeights::from_logits(u));
}

std::array<double, 5> loss_gradient(const FusionCells& cells, const Vec5& u) {
  check_truth(cells);
  const auto fw = FusionWeights::from_logits(u);
  // dL/du_m = (2/N) sum_g e(g) w_m (x_m(g) - yhat(g)), via the softmax Jacobian.
  Vec5 grad{};
  for (std::size_t i = 0; i < cells.x.size(); ++i) {
    double yhat = 0.0;
    for (std::size_t j = 0; j < 5; ++j) yhat += fw.w[j] * cells.x[i][j];
    const double e = yhat - cells.y[i];
    for (std::size_t m = 0; m < 5; ++m) {
      grad[m] += e * fw.w[m] * (cells.x[i][m] - yhat);
    }
  }
  for (double& g : grad) g *= 2.0 / static_cast<double>(cells.x.size());
  return grad;
}

FusionFit fit_weights(const FusionCells& cells, const Vec5& init_u,
                      const OptimizerConfig& config) {
  check_truth(cells);
  Vec5 u = init_u;
  double loss = loss_at(cells, u);
  Vec5 grad = loss_gradient(cells, u);
  if (!std::isfinite(loss) || !finite(grad)) {
    throw ComputeError("fit_weights: non-finite objective at init, u = " + dump(u));
  }

  Mat5 h_inv = identity5();
  FusionFit fit;
  int it = 0;
  for (; it < config.max_iterations; ++it) {
    if (norm2(grad) < config.grad_tol) {
      fit.converged = true;
      break;
    }

    Vec5 dir = matvec(h_inv, grad);
    for (double& d : dir) d = -d;
    double slope = dot(grad, dir);
    if (slope >= 0.0) {  // lost positive definiteness, restart from steepest descent
      h_inv = identity5();
      for (std::size_t j = 0; j < 5; ++j) dir[j] = -grad[j];
      slope = dot(grad, dir);
    }

    double step = 1.0;
    bool accepted = false;
    Vec5 u_next{};
    double loss_next = loss;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t j = 0; j < 5; ++j) u_next[j] = u[j] + step * dir[j];
      loss_next = loss_at(cells, u_next);
      if (!std::isfinite(loss_next)) {
        throw ComputeError("fit_weights: non-finite loss at u = " + dump(u_next));
      }
      if (loss_next <= loss + config.armijo_c * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no further progress at float precision

    const Vec5 grad_next = loss_gradient(cells, u_next);
    if (!finite(grad_next)) {
      throw ComputeError("fit_weights: non-finite gradient at u = " + dump(u_next));
    }
    Vec5 s{};
    Vec5 yv{};
    for (std::size_t j = 0; j < 5; ++j) {
      s[j] = u_next[j] - u[j];
      yv[j] = grad_next[j] - grad[j];
    }
    const double ys = dot(yv, s);
    if (std::abs(ys) > 1e-18) {
      const double rho = 1.0 / ys;
      // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
      const Vec5 hy = matvec(h_inv, yv);
      const double yhy = dot(yv, hy);
      for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < 5; ++j) {
          h_inv[i][j] += rho * rho * yhy * s[i] * s[j] - rho * (s[i] * hy[j] + hy[i] * s[j]) +
                         rho * s[i] * s[j];
        }
      }
    } else {
      h_inv = identity5();
    }

    u = u_next;
    loss = loss_next;
    grad = grad_next;
  }

  fit.weights = FusionWeights::from_logits(u);
  fit.train_loss = loss;
  fit.iterations = it;
  if (!fit.converged && norm2(grad) < config.grad_tol) fit.converged = true;
  return fit;
}

FusionFit fit_weights(const std::array<MetricHeatmap, 5>& maps, const OccupancyMap& truth,
                      const Vec5& init_u, const OptimizerConfig& config) {
  return fit_weights(FusionCells::from_maps(maps, truth), init_u, config);
}

FusionFit fit_weights_multistart(const FusionCells& cells, const OptimizerConfig& config) {
  std::vector<Vec5> starts;
  starts.push_back(Vec5{});
  for (std::size_t j = 0; j < 5; ++j) {
    Vec5 vertex{};
    vertex[j] = 20.0;
    starts.push_back(vertex);
  }
  FusionFit best;
  bool have = false;
  for (const Vec5& start : starts) {
    const FusionFit fit = fit_weights(cells, start, config);
    if (!have || fit.train_loss < best.train_loss) {
      best = fit;
      have = true;
    }
  }
  return best;
}

FusionFit fit_weights_multistart(const std::array<MetricHeatmap, 5>& maps,
                                 const OccupancyMap& truth, const OptimizerConfig& config) {
  return fit_weights_multistart(FusionCells::from_maps(maps, truth), config);
}

LocalizationReport localize(const FusionFit& fit, const std::array<MetricHeatmap, 5>& maps,
                            const OccupancyMap& truth, const std::vector<double>& etas,
                            const std::vector<double>& tolerances_cm) {
  if (etas.empty()) throw std::invalid_argument("localize: need at least one eta");
  LocalizationReport report;
  report.fit = fit;
  const double eta = etas.front();
  for (std::size_t j = 0; j < 5; ++j) {
    report.per_metric.emplace_back(
        std::string(to_string(maps[j].metric)),
        eval::evaluate_maps(rescale_metric(maps[j]), truth, eta, tolerances_cm));
  }
  const OccupancyMap fused = fuse(maps, fit.weights);
  report.fused = eval::evaluate_maps(fused, truth, eta, tolerances_cm);
  for (double e : etas) {
    report.eta_sweep.emplace_back(e, eval::accuracy(fused, truth, e, 0.0));
  }
  return report;
}

void save_fit_result(const FusionFit& fit, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path.string());
  out << "w_rsrp,w_sinr,w_mcs,w_rate,w_bler,train_loss,iterations,converged\n";
  for (std::size_t j = 0; j < 5; ++j) out << io::format_double(fit.weights.w[j]) << ',';
  out << io::format_double(fit.train_loss) << ',' << fit.iterations << ','
      << (fit.converged ? 1 : 0) << '\n';
}

}  // namespace soilrf::fusion
