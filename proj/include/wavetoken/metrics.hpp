#pragma once

// Forecast metrics (WQL, MASE, VRSE), relative aggregation, ranks and the
// seasonal-naive baseline.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wavetoken/error.hpp"
#include "wavetoken/stats.hpp"

namespace wavetoken {

inline constexpr std::array<double, 9> kQuantileLevels{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};

/// Pinball loss: alpha (x - q) if x >= q else (1 - alpha) (q - x).
inline double quantile_loss(double alpha, double q, double x) {
  return x >= q ? alpha * (x - q) : (1.0 - alpha) * (q - x);
}

namespace detail {

inline void check_same_length(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size())
    throw Error(ErrorKind::inconsistent, std::string(what) + ": lengths " + std::to_string(a.size()) + " and " +
                                             std::to_string(b.size()) + " differ");
}

inline double abs_sum(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += std::abs(v);
  return s;
}

}  // namespace detail

/// Sum over t and levels of 2 QL_alpha(q_t, x_t), before normalisation.
inline double weighted_quantile_numerator(std::span<const double> truth,
                                          const std::vector<std::vector<double>>& quantiles,
                                          std::span<const double> levels = kQuantileLevels) {
  if (quantiles.size() != levels.size())
    throw Error(ErrorKind::inconsistent, "expected " + std::to_string(levels.size()) + " quantile forecasts");
  double total = 0.0;
  for (std::size_t a = 0; a < levels.size(); ++a) {
    detail::check_same_length(truth, quantiles[a], "wql");
    for (std::size_t t = 0; t < truth.size(); ++t) total += 2.0 * quantile_loss(levels[a], quantiles[a][t], truth[t]);
  }
  return total;
}

/// (1/|A|) sum_alpha [2 sum_t QL_alpha] / sum_t |x_t|.
inline double wql(std::span<const double> truth, const std::vector<std::vector<double>>& quantiles,
                  std::span<const double> levels = kQuantileLevels) {
  const double denom = detail::abs_sum(truth);
  if (!(denom > 0.0)) throw Error(ErrorKind::degenerate, "wql: truth is identically zero");
  return weighted_quantile_numerator(truth, quantiles, levels) / static_cast<double>(levels.size()) / denom;
}

/// sum_{t=1}^{C-S} |x_t - x_{t+S}|.
inline double seasonal_error_sum(std::span<const double> context, std::size_t season) {
  if (season < 1) throw Error(ErrorKind::invalid_argument, "seasonality must be >= 1");
  if (context.size() <= season)
    throw Error(ErrorKind::too_short, "context of length " + std::to_string(context.size()) +
                                          " needs more than S = " + std::to_string(season) + " points");
  double s = 0.0;
  for (std::size_t t = 0; t + season < context.size(); ++t) s += std::abs(context[t] - context[t + season]);
  return s;
}

/// [(C - S) / H * sum |y_hat - y|] / sum_{t=1}^{C-S} |x_t - x_{t+S}|.
inline double mase(std::span<const double> truth, std::span<const double> forecast, std::span<const double> context,
                   std::size_t season) {
  detail::check_same_length(truth, forecast, "mase");
  if (truth.empty()) throw Error(ErrorKind::invalid_argument, "mase: empty horizon");
  const double denom = seasonal_error_sum(context, season);
  if (!(denom > 0.0)) throw Error(ErrorKind::degenerate, "mase: context has zero seasonal error");
  double num = 0.0;
  for (std::size_t t = 0; t < truth.size(); ++t) num += std::abs(forecast[t] - truth[t]);
  const double scale = static_cast<double>(context.size() - season) / static_cast<double>(truth.size());
  return scale * num / denom;
}

/// One-sided DFT amplitudes |X(f)| for f = 0 .. floor(n/2), DC included.
inline std::vector<double> amplitude_spectrum(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> amp(n / 2 + 1);
  for (std::size_t f = 0; f < amp.size(); ++f) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>((f * t) % n) / static_cast<double>(n);
      acc += x[t] * std::polar(1.0, angle);
    }
    amp[f] = std::abs(acc);
  }
  return amp;
}

/// sum_f (A_hat(f) - A(f))^2 / sum_f A(f)^2.
inline double vrse(std::span<const double> truth, std::span<const double> forecast) {
  detail::check_same_length(truth, forecast, "vrse");
  if (truth.size() < 2) throw Error(ErrorKind::invalid_argument, "vrse needs at least 2 points");
  const auto at = amplitude_spectrum(truth);
  const auto af = amplitude_spectrum(forecast);
  double num = 0.0, den = 0.0;
  for (std::size_t f = 0; f < at.size(); ++f) {
    num += (af[f] - at[f]) * (af[f] - at[f]);
    den += at[f] * at[f];
  }
  if (!(den > 0.0)) throw Error(ErrorKind::degenerate, "vrse: truth has zero spectral energy");
  return num / den;
}

struct RelativeScore {
  double value = 0.0;
  /// Indices dropped because score or baseline was not positive and finite.
  std::vector<std::size_t> excluded;
};

/// Geometric mean of score_d / baseline_d.
inline RelativeScore aggregate_relative(std::span<const double> scores, std::span<const double> baselines) {
  detail::check_same_length(scores, baselines, "aggregate_relative");
  RelativeScore r;
  double log_sum = 0.0;
  std::size_t used = 0;
  for (std::size_t d = 0; d < scores.size(); ++d) {
    const double ratio = scores[d] / baselines[d];
    if (!(baselines[d] > 0.0) || !(ratio > 0.0) || !std::isfinite(ratio)) {
      r.excluded.push_back(d);
      continue;
    }
    log_sum += std::log(ratio);
    ++used;
  }
  if (used == 0) throw Error(ErrorKind::degenerate, "no dataset has a positive score ratio");
  r.value = std::exp(log_sum / static_cast<double>(used));
  return r;
}

/// table[m][d] = score of model m on dataset d (lower is better). Returns the
/// mean rank per model, ties sharing the mean of their ranks.
inline std::vector<double> average_rank(const std::vector<std::vector<double>>& table) {
  if (table.empty()) throw Error(ErrorKind::invalid_argument, "empty score table");
  const std::size_t n_data = table[0].size();
  if (n_data == 0) throw Error(ErrorKind::invalid_argument, "score table has no datasets");
  for (const auto& row : table) {
    if (row.size() != n_data) throw Error(ErrorKind::inconsistent, "ragged score table");
    for (double v : row)
      if (std::isnan(v)) throw Error(ErrorKind::inconsistent, "score table has a missing entry");
  }
  const std::size_t n_models = table.size();
  std::vector<double> ranks(n_models, 0.0);
  for (std::size_t d = 0; d < n_data; ++d) {
    for (std::size_t m = 0; m < n_models; ++m) {
      std::size_t better = 0, equal = 0;
      for (std::size_t o = 0; o < n_models; ++o) {
        if (table[o][d] < table[m][d]) ++better;
        else if (table[o][d] == table[m][d]) ++equal;
      }
      ranks[m] += static_cast<double>(better) + (static_cast<double>(equal) + 1.0) / 2.0;
    }
  }
  for (auto& r : ranks) r /= static_cast<double>(n_data);
  return ranks;
}

struct QuantileForecast {
  std::vector<double> point;
  /// One array per level in kQuantileLevels.
  std::vector<std::vector<double>> quantiles;
};

/// Repeats the last observed season over the horizon; every quantile equals the point forecast.
inline QuantileForecast seasonal_naive(std::span<const double> context, std::size_t season, std::size_t horizon) {
  if (season < 1) throw Error(ErrorKind::invalid_argument, "seasonality must be >= 1");
  if (context.size() < season)
    throw Error(ErrorKind::too_short, "context shorter than one season (" + std::to_string(season) + ")");
  QuantileForecast f;
  f.point.resize(horizon);
  const std::size_t start = context.size() - season;
  for (std::size_t h = 0; h < horizon; ++h) f.point[h] = context[start + h % season];
  f.quantiles.assign(kQuantileLevels.size(), f.point);
  return f;
}

/// Per-step empirical quantiles (inclusive linear interpolation) of sample
/// paths; the point forecast is the median.
inline QuantileForecast quantiles_from_samples(const std::vector<std::vector<double>>& paths,
                                               std::span<const double> levels = kQuantileLevels) {
  if (paths.empty()) throw Error(ErrorKind::invalid_argument, "no sample paths");
  const std::size_t h = paths[0].size();
  for (const auto& p : paths)
    if (p.size() != h) throw Error(ErrorKind::inconsistent, "sample paths differ in length");
  QuantileForecast f;
  f.point.resize(h);
  f.quantiles.assign(levels.size(), std::vector<double>(h));
  std::vector<double> column(paths.size());
  for (std::size_t t = 0; t < h; ++t) {
    for (std::size_t s = 0; s < paths.size(); ++s) column[s] = paths[s][t];
    std::sort(column.begin(), column.end());
    for (std::size_t a = 0; a < levels.size(); ++a) f.quantiles[a][t] = stats::quantile_sorted(column, levels[a]);
    f.point[t] = stats::quantile_sorted(column, 0.5);
  }
  return f;
}

/// Conventional seasonal period for a frequency tag (leading multiples ignored).
inline std::size_t seasonality_for(std::string_view freq) {
  std::size_t i = 0;
  while (i < freq.size() && std::isdigit(static_cast<unsigned char>(freq[i]))) ++i;
  std::string tag(freq.substr(i));
  for (auto& c : tag) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (const auto dash = tag.find('-'); dash != std::string::npos) tag.resize(dash);
  if (tag == "H") return 24;
  if (tag == "D" || tag == "B") return 7;
  if (tag == "W") return 1;
  if (tag == "M" || tag == "MS" || tag == "ME") return 12;
  if (tag == "Q" || tag == "QS" || tag == "QE") return 4;
  if (tag == "Y" || tag == "A" || tag == "YS" || tag == "AS" || tag == "YE") return 1;
  return 1;
}

struct SeriesMetrics {
  double wql_numerator = 0.0;  ///< sum over levels of 2 * QL, divided by |A|
  double abs_truth = 0.0;
  double wql = NAN;
  double mase = NAN;
  double vrse = NAN;
};

/// Scores one forecast; degenerate metrics are left as NaN rather than thrown.
inline SeriesMetrics score_forecast(std::span<const double> truth, const QuantileForecast& f,
                                    std::span<const double> context, std::size_t season) {
  SeriesMetrics m;
  m.wql_numerator = weighted_quantile_numerator(truth, f.quantiles) / static_cast<double>(kQuantileLevels.size());
  m.abs_truth = detail::abs_sum(truth);
  if (m.abs_truth > 0.0) m.wql = m.wql_numerator / m.abs_truth;
  try {
    m.mase = mase(truth, f.point, context, season);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::degenerate && e.kind() != ErrorKind::too_short) throw;
  }
  try {
    m.vrse = vrse(truth, f.point);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::degenerate && e.kind() != ErrorKind::invalid_argument) throw;
  }
  return m;
}

struct DatasetMetrics {
  double wql = NAN;
  double mase = NAN;
  double vrse = NAN;
  std::size_t n_series = 0;
  std::size_t n_degenerate = 0;
};

/// WQL pools numerators and denominators over series; MASE and VRSE are the
/// mean over series where they are defined.
inline DatasetMetrics aggregate_dataset(std::span<const SeriesMetrics> series) {
  DatasetMetrics d;
  d.n_series = series.size();
  double num = 0.0, den = 0.0, mase_sum = 0.0, vrse_sum = 0.0;
  std::size_t n_mase = 0, n_vrse = 0;
  for (const auto& s : series) {
    num += s.wql_numerator;
    den += s.abs_truth;
    if (std::isfinite(s.mase)) mase_sum += s.mase, ++n_mase;
    if (std::isfinite(s.vrse)) vrse_sum += s.vrse, ++n_vrse;
    if (!std::isfinite(s.mase) || !std::isfinite(s.vrse) || !std::isfinite(s.wql)) ++d.n_degenerate;
  }
  if (den > 0.0) d.wql = num / den;
  if (n_mase > 0) d.mase = mase_sum / static_cast<double>(n_mase);
  if (n_vrse > 0) d.vrse = vrse_sum / static_cast<double>(n_vrse);
  return d;
}

}  // namespace wavetoken
