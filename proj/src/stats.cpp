#include "soilrf/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "soilrf/constants.hpp"
#include "soilrf/errors.hpp"
#include "soilrf/io.hpp"
#include "soilrf/numeric.hpp"

namespace soilrf::stats {
namespace {

constexpr double kDensityFloor = 1e-12;

void check_support(const Density& p, const Density& q) {
  if (p.support.size() != q.support.size() || p.support != q.support) {
    throw std::invalid_argument("divergence: densities use different support grids");
  }
}

double kl_on_common(const std::vector<double>& support, const std::vector<double>& p,
                    const std::vector<double>& q) {
  std::vector<double> integrand(support.size());
  for (std::size_t i = 0; i < support.size(); ++i) {
    integrand[i] =
        p[i] <= 0.0 ? 0.0 : p[i] * std::log(std::max(p[i], kDensityFloor) /
                                            std::max(q[i], kDensityFloor));
  }
  return num::trapezoid(support, integrand);
}

}  // namespace

ZScoreContext ZScoreContext::from_reference(std::span<const double> reference) {
  if (reference.size() < 2) {
    throw std::invalid_argument("zscore: reference set needs at least 2 values");
  }
  ZScoreContext ctx;
  ctx.mu = num::mean(reference);
  ctx.sigma = num::sample_sd(reference);
  ctx.reference_size = reference.size();
  if (!(ctx.sigma > 0.0)) {
    throw ComputeError("zscore: degenerate reference set (zero variance)");
  }
  return ctx;
}

std::vector<double> zscore(std::span<const double> values, const ZScoreContext& ctx) {
  if (!(ctx.sigma > 0.0) || ctx.reference_size < 2) {
    throw ComputeError("zscore: invalid context");
  }
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - ctx.mu) / ctx.sigma;
  return out;
}

double Density::integral() const { return num::trapezoid(support, values); }

double silverman_bandwidth(std::span<const double> samples) {
  if (samples.size() < 2) {
    throw std::invalid_argument("silverman_bandwidth: need at least 2 samples");
  }
  const double sd = num::sample_sd(samples);
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = num::quantile_sorted(sorted, 0.75) - num::quantile_sorted(sorted, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = std::max(sd, iqr / 1.34);
  if (!(spread > 0.0)) {
    throw ComputeError("silverman_bandwidth: all samples identical, pass a bandwidth");
  }
  return 0.9 * spread * std::pow(static_cast<double>(samples.size()), -0.2);
}

Density kde(std::span<const double> samples, double bandwidth,
            std::vector<double> support) {
  if (samples.empty()) throw std::invalid_argument("kde: no samples");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("kde: bandwidth must be positive");

  Density density;
  density.bandwidth = bandwidth;
  if (support.empty()) {
    const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
    const double lo = *lo_it - 4.0 * bandwidth;
    const double hi = *hi_it + 4.0 * bandwidth;
    constexpr std::size_t kPoints = 512;
    density.support.resize(kPoints);
    for (std::size_t i = 0; i < kPoints; ++i) {
      density.support[i] =
          lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(kPoints - 1);
    }
  } else {
    if (!std::is_sorted(support.begin(), support.end()) || support.size() < 2) {
      throw std::invalid_argument("kde: support must be sorted with >= 2 points");
    }
    density.support = std::move(support);
  }

  const double norm = 1.0 / (static_cast<double>(samples.size()) * bandwidth *
                             std::sqrt(2.0 * constants::kPi));
  density.values.resize(density.support.size());
  for (std::size_t i = 0; i < density.support.size(); ++i) {
    double acc = 0.0;
    for (double s : samples) {
      const double z = (density.support[i] - s) / bandwidth;
      acc += std::exp(-0.5 * z * z);
    }
    density.values[i] = norm * acc;
  }
  return density;
}

double kl_divergence(const Density& p, const Density& q) {
  check_support(p, q);
  return kl_on_common(p.support, p.values, q.values);
}

double js_divergence(const Density& p, const Density& q) {
  check_support(p, q);
  std::vector<double> mid(p.values.size());
  for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = 0.5 * (p.values[i] + q.values[i]);
  return 0.5 * kl_on_common(p.support, p.values, mid) +
         0.5 * kl_on_common(p.support, q.values, mid);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("pearson: need two equally sized inputs of length >= 2");
  }
  const double xm = num::mean(x);
  const double ym = num::mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - xm) * (y[i] - ym);
    sxx += (x[i] - xm) * (x[i] - xm);
    syy += (y[i] - ym) * (y[i] - ym);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) {
    throw ComputeError("pearson: zero variance input");
  }
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based average rank
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

TrendDescriptor trend_descriptor(std::span<const int> days, std::span<const double> values) {
  if (days.size() != values.size()) {
    throw std::invalid_argument("trend_descriptor: size mismatch");
  }
  if (days.size() != static_cast<std::size_t>(kCycleDays)) {
    throw std::invalid_argument("trend_descriptor: need the full 45-day window");
  }
  std::vector<double> d(days.size());
  double end_value = 0.0;
  bool saw_last = false;
  for (std::size_t i = 0; i < days.size(); ++i) {
    if (days[i] != static_cast<int>(i) + 1) {
      throw std::invalid_argument("trend_descriptor: days must be exactly 1..45 in order");
    }
    d[i] = static_cast<double>(days[i]);
    if (days[i] == kCycleDays) {
      end_value = values[i];
      saw_last = true;
    }
  }
  if (!saw_last) throw std::invalid_argument("trend_descriptor: day 45 missing");
  TrendDescriptor td;
  td.end_value = end_value;
  td.temporal_slope = num::ols_fit(d, values).slope;
  return td;
}

std::array<TrendDescriptor, 4> trend_descriptors(
    const std::vector<features::FeatureVector>& series) {
  std::vector<int> days(series.size());
  std::array<std::vector<double>, 4> cols;
  for (auto& c : cols) c.resize(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    days[i] = series[i].day;
    cols[0][i] = series[i].bai_db;
    cols[1][i] = series[i].hl;
    cols[2][i] = series[i].slope_db_per_hz;
    cols[3][i] = series[i].ripple_var;
  }
  std::array<TrendDescriptor, 4> out;
  for (std::size_t j = 0; j < 4; ++j) out[j] = trend_descriptor(days, cols[j]);
  return out;
}

CorrelationResult correlate_with_harvest(std::span<const double> descriptor_per_pot,
                                         std::span<const double> outcome_per_pot,
                                         std::size_t resamples, std::uint64_t seed) {
  const std::size_t n = descriptor_per_pot.size();
  if (n != outcome_per_pot.size()) {
    throw std::invalid_argument("correlate_with_harvest: size mismatch");
  }
  if (n < 3) {
    throw ComputeError("correlate_with_harvest: need at least 3 pots");
  }

  CorrelationResult result;
  result.pearson = pearson(descriptor_per_pot, outcome_per_pot);
  result.spearman = spearman(descriptor_per_pot, outcome_per_pot);
  if (resamples == 0) return result;

  std::mt19937_64 eng(seed);
  std::vector<double> pearson_stats;
  std::vector<double> spearman_stats;
  pearson_stats.reserve(resamples);
  spearman_stats.reserve(resamples);
  std::vector<double> xs(n), ys(n);
  for (std::size_t r = 0; r < resamples; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t pick = num::uniform_index(eng, n);
      xs[i] = descriptor_per_pot[pick];
      ys[i] = outcome_per_pot[pick];
    }
    const bool x_flat = std::all_of(xs.begin(), xs.end(), [&](double v) { return v == xs[0]; });
    const bool y_flat = std::all_of(ys.begin(), ys.end(), [&](double v) { return v == ys[0]; });
    if (x_flat || y_flat) {
      ++result.n_degenerate;
      continue;
    }
    pearson_stats.push_back(pearson(xs, ys));
    spearman_stats.push_back(spearman(xs, ys));
  }
  if (!pearson_stats.empty()) {
    std::sort(pearson_stats.begin(), pearson_stats.end());
    std::sort(spearman_stats.begin(), spearman_stats.end());
    result.pearson_ci = {num::quantile_sorted(pearson_stats, 0.025),
                         num::quantile_sorted(pearson_stats, 0.975)};
    result.spearman_ci = {num::quantile_sorted(spearman_stats, 0.025),
                          num::quantile_sorted(spearman_stats, 0.975)};
  }
  return result;
}

void save_density(const Density& density, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path.string());
  out << "z,p_z\n";
  for (std::size_t i = 0; i < density.support.size(); ++i) {
    out << io::format_double(density.support[i]) << ','
        << io::format_double(density.values[i]) << '\n';
  }
}

void save_correlation_table(const std::vector<CorrelationRow>& rows,
                            const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path.string());
  out << "feature,descriptor,pearson,spearman,ci_lo,ci_hi,n_degenerate\n";
  for (const auto& row : rows) {
    const auto& r = row.result;
    out << row.feature << ',' << row.descriptor << ',' << io::format_double(r.pearson)
        << ',' << io::format_double(r.spearman) << ','
        << (r.pearson_ci ? io::format_double(r.pearson_ci->first) : "nan") << ','
        << (r.pearson_ci ? io::format_double(r.pearson_ci->second) : "nan") << ','
        << r.n_degenerate << '\n';
  }
}

}  // namespace soilrf::stats
