#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "soilrf/constants.hpp"

namespace soilrf::num {

inline double mean(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean: empty input");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Sample (n-1) standard deviation.
inline double sample_sd(std::span<const double> v) {
  if (v.size() < 2) throw std::invalid_argument("sample_sd: need at least 2 values");
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

struct LineFit {
  double slope{0.0};
  double intercept{0.0};
  double residual_rms{0.0};
};

/// Ordinary least squares y = a + b x.
inline LineFit ols_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("ols_fit: need two equally sized inputs of length >= 2");
  }
  const double xm = mean(x);
  const double ym = mean(y);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - xm) * (y[i] - ym);
    sxx += (x[i] - xm) * (x[i] - xm);
  }
  if (sxx == 0.0) throw std::invalid_argument("ols_fit: degenerate abscissa");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ym - fit.slope * xm;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss += r * r;
  }
  fit.residual_rms = std::sqrt(ss / static_cast<double>(x.size()));
  return fit;
}

/// Trapezoidal integral of y over abscissa x (x strictly increasing).
inline double trapezoid(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("trapezoid: need two equally sized inputs of length >= 2");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    acc += 0.5 * (y[i] + y[i + 1]) * (x[i + 1] - x[i]);
  }
  return acc;
}

/// Wrap a phase difference into [-pi, pi); an exact +pi jump maps to -pi.
inline double wrap_phase(double d) {
  return d - 2.0 * constants::kPi *
                 std::floor((d + constants::kPi) / (2.0 * constants::kPi));
}

/// In-place 2*pi-jump correction so adjacent differences stay within [-pi, pi).
inline void unwrap_phases(std::vector<double>& phases) {
  for (std::size_t i = 1; i < phases.size(); ++i) {
    const double d = wrap_phase(phases[i] - phases[i - 1]);
    phases[i] = phases[i - 1] + d;
  }
}

/// Sliding median with window shrinking at the edges; window must be odd.
inline std::vector<double> sliding_median(std::span<const double> v, std::size_t window) {
  if (window < 3 || window % 2 == 0 || window > v.size()) {
    throw std::invalid_argument("sliding_median: window must be odd, >= 3 and <= input size");
  }
  const std::size_t half = window / 2;
  std::vector<double> out(v.size());
  std::vector<double> buf;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(v.size() - 1, i + half);
    buf.assign(v.begin() + static_cast<std::ptrdiff_t>(lo),
               v.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
    const std::size_t n = buf.size();
    std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(n / 2), buf.end());
    double med = buf[n / 2];
    if (n % 2 == 0) {
      std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(n / 2 - 1),
                       buf.end());
      med = 0.5 * (med + buf[n / 2 - 1]);
    }
    out[i] = med;
  }
  return out;
}

/// Uniform index in [0, n) from the raw engine output. Hand-rolled so results
/// do not depend on the standard library's distribution implementation.
template <typename Engine>
std::size_t uniform_index(Engine& eng, std::size_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
  return static_cast<std::size_t>(eng() % static_cast<std::uint64_t>(n));
}

template <typename Engine>
void shuffle_indices(std::vector<std::size_t>& idx, Engine& eng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::swap(idx[i - 1], idx[uniform_index(eng, i)]);
  }
}

/// Empirical quantile with linear interpolation between order statistics.
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile_sorted: empty input");
  if (q <= 0.0) return sorted.front();
  if (q >= 1.0) return sorted.back();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace soilrf::num
