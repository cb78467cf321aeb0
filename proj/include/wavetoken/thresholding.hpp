#pragma once

// Detail-coefficient thresholding: none, CDF (per-level magnitude quantile),
// VisuShrink (soft/hard universal threshold) and FDRC (Benjamini-Hochberg on
// two-sided Gaussian p-values). Approximation coefficients always pass through.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "wavetoken/dwt.hpp"
#include "wavetoken/error.hpp"
#include "wavetoken/stats.hpp"

namespace wavetoken {

enum class ThresholdMethod { none, cdf, visu_soft, visu_hard, fdrc };
enum class SigmaEstimator { mad_finest, std_finest };

/// How the CDF cutoff fraction varies with level j (1 = finest).
enum class CdfExponent {
  /// b^j: the finest level gets the largest cutoff.
  finer_prunes_more,
  /// b^(J - j + 1): the literal exponent, largest cutoff at the coarsest level.
  coarse_first,
};

enum class FdrScope { pooled, per_level };

struct ThresholdSpec {
  ThresholdMethod method = ThresholdMethod::none;
  double b = 0.5;
  double q = 0.05;
  SigmaEstimator sigma_estimator = SigmaEstimator::mad_finest;
  CdfExponent cdf_exponent = CdfExponent::finer_prunes_more;
  FdrScope fdr_scope = FdrScope::pooled;

  void validate() const {
    if (method == ThresholdMethod::cdf && !(b > 0.0 && b < 1.0))
      throw Error(ErrorKind::invalid_argument, "cdf thresholding needs b in (0, 1)");
    if (method == ThresholdMethod::fdrc && !(q > 0.0 && q < 1.0))
      throw Error(ErrorKind::invalid_argument, "fdrc thresholding needs q in (0, 1)");
  }

  bool operator==(const ThresholdSpec&) const = default;
};

inline std::string to_string(ThresholdMethod m) {
  switch (m) {
    case ThresholdMethod::none: return "none";
    case ThresholdMethod::cdf: return "cdf";
    case ThresholdMethod::visu_soft: return "visu_soft";
    case ThresholdMethod::visu_hard: return "visu_hard";
    case ThresholdMethod::fdrc: return "fdrc";
  }
  return "none";
}

inline ThresholdMethod parse_threshold_method(std::string_view s) {
  if (s == "none") return ThresholdMethod::none;
  if (s == "cdf") return ThresholdMethod::cdf;
  if (s == "visu_soft") return ThresholdMethod::visu_soft;
  if (s == "visu_hard") return ThresholdMethod::visu_hard;
  if (s == "fdrc") return ThresholdMethod::fdrc;
  throw Error(ErrorKind::invalid_argument, "unknown threshold method '" + std::string(s) + "'");
}

inline std::string to_string(SigmaEstimator e) { return e == SigmaEstimator::mad_finest ? "mad_finest" : "std_finest"; }

inline SigmaEstimator parse_sigma_estimator(std::string_view s) {
  if (s == "mad_finest") return SigmaEstimator::mad_finest;
  if (s == "std_finest") return SigmaEstimator::std_finest;
  throw Error(ErrorKind::invalid_argument, "unknown sigma estimator '" + std::string(s) + "'");
}

inline std::string to_string(CdfExponent e) {
  return e == CdfExponent::finer_prunes_more ? "finer_prunes_more" : "coarse_first";
}

inline CdfExponent parse_cdf_exponent(std::string_view s) {
  if (s == "finer_prunes_more") return CdfExponent::finer_prunes_more;
  if (s == "coarse_first") return CdfExponent::coarse_first;
  throw Error(ErrorKind::invalid_argument, "unknown cdf exponent mapping '" + std::string(s) + "'");
}

inline std::string to_string(FdrScope s) { return s == FdrScope::pooled ? "pooled" : "per_level"; }

inline FdrScope parse_fdr_scope(std::string_view s) {
  if (s == "pooled") return FdrScope::pooled;
  if (s == "per_level") return FdrScope::per_level;
  throw Error(ErrorKind::invalid_argument, "unknown fdr scope '" + std::string(s) + "'");
}

/// Noise scale from the finest details: median(|d|) / 0.6745 or the sample
/// standard deviation.
inline double estimate_sigma(std::span<const double> finest, SigmaEstimator estimator) {
  if (finest.empty()) throw Error(ErrorKind::invalid_argument, "no finest-level details to estimate sigma");
  if (estimator == SigmaEstimator::std_finest) return stats::sample_stddev(finest);
  std::vector<double> mags(finest.size());
  std::transform(finest.begin(), finest.end(), mags.begin(), [](double v) { return std::abs(v); });
  return stats::median(mags) / 0.6745;
}

inline double universal_threshold(double sigma, std::size_t n_total) {
  if (n_total < 2) throw Error(ErrorKind::invalid_argument, "universal threshold needs N >= 2");
  return sigma * std::sqrt(2.0 * std::log(static_cast<double>(n_total)));
}

/// VisuShrink lambda = sigma_hat * sqrt(2 ln N).
inline double visu_lambda(std::span<const double> finest, std::size_t n_total,
                          SigmaEstimator estimator = SigmaEstimator::mad_finest) {
  return universal_threshold(estimate_sigma(finest, estimator), n_total);
}

inline std::vector<double> hard_threshold(std::span<const double> d, double lambda) {
  std::vector<double> out(d.begin(), d.end());
  for (auto& v : out)
    if (!(std::abs(v) > lambda)) v = 0.0;
  return out;
}

inline std::vector<double> soft_threshold(std::span<const double> d, double lambda) {
  std::vector<double> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double shrunk = std::max(std::abs(d[i]) - lambda, 0.0);
    out[i] = shrunk == 0.0 ? 0.0 : std::copysign(shrunk, d[i]);
  }
  return out;
}

/// Fraction of level-j magnitudes treated as the lower tail.
inline double cdf_cutoff_fraction(int j, int max_level, double b, CdfExponent mapping) {
  if (j < 1 || j > max_level) throw Error(ErrorKind::invalid_argument, "level outside [1, J]");
  const int exponent = mapping == CdfExponent::finer_prunes_more ? j : max_level - j + 1;
  return std::pow(b, exponent);
}

/// Zeroes the floor(fraction * n) smallest magnitudes (and any ties with the
/// largest of them). Fractions below 1/n zero nothing.
inline std::vector<double> zero_lower_tail(std::span<const double> d, double fraction) {
  std::vector<double> out(d.begin(), d.end());
  if (d.empty() || fraction <= 0.0) return out;
  std::vector<double> mags(d.size());
  std::transform(d.begin(), d.end(), mags.begin(), [](double v) { return std::abs(v); });
  std::sort(mags.begin(), mags.end());
  const auto rank = static_cast<std::size_t>(std::floor(std::min(fraction, 1.0) * static_cast<double>(mags.size())));
  if (rank == 0) return out;
  const double cutoff = mags[rank - 1];
  for (auto& v : out)
    if (std::abs(v) <= cutoff) v = 0.0;
  return out;
}

inline std::vector<double> cdf_threshold(std::span<const double> details_level_j, int j, int max_level, double b,
                                         CdfExponent mapping = CdfExponent::finer_prunes_more) {
  if (!(b > 0.0 && b < 1.0)) throw Error(ErrorKind::invalid_argument, "b must lie in (0, 1)");
  return zero_lower_tail(details_level_j, cdf_cutoff_fraction(j, max_level, b, mapping));
}

/// p = 2 (1 - Phi(|d| / sigma)), computed as erfc(|d| / (sigma sqrt2)).
inline double two_sided_pvalue(double d, double sigma) {
  return std::erfc(std::abs(d) / (sigma * std::numbers::sqrt2));
}

/// sigma * Phi^{-1}(1 - p/2), i.e. the magnitude whose two-sided p-value is p.
inline double pvalue_to_threshold(double p, double sigma) {
  if (p <= 0.0) return std::numeric_limits<double>::infinity();
  if (p >= 1.0) return 0.0;
  return sigma * std::numbers::sqrt2 * boost::math::erfc_inv(p);
}

struct FdrCutoff {
  std::size_t rank = 0;  ///< i0, 1-based
  double pvalue = 0.0;   ///< p_(i0)
};

/// Step-up rule: the largest i with p_(i) <= (i / m) q over ascending p-values.
inline std::optional<FdrCutoff> fdr_step_up(std::span<const double> sorted_pvalues, double q) {
  const double m = static_cast<double>(sorted_pvalues.size());
  std::optional<FdrCutoff> best;
  for (std::size_t i = 1; i <= sorted_pvalues.size(); ++i) {
    if (sorted_pvalues[i - 1] <= static_cast<double>(i) / m * q) best = FdrCutoff{i, sorted_pvalues[i - 1]};
  }
  return best;
}

struct FdrcResult {
  std::vector<double> values;
  /// Threshold used; empty when no hypothesis was rejected (everything zeroed).
  std::optional<double> lambda;
  std::optional<FdrCutoff> cutoff;
};

inline FdrcResult fdrc_threshold(std::span<const double> details, double sigma, double q) {
  if (!(sigma > 0.0)) throw Error(ErrorKind::invalid_argument, "fdrc needs sigma > 0");
  if (!(q > 0.0 && q < 1.0)) throw Error(ErrorKind::invalid_argument, "fdrc needs q in (0, 1)");
  FdrcResult result;
  result.values.assign(details.size(), 0.0);
  if (details.empty()) return result;

  std::vector<std::size_t> order(details.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> p(details.size());
  for (std::size_t i = 0; i < details.size(); ++i) p[i] = two_sided_pvalue(details[i], sigma);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(details[a]) > std::abs(details[b]);
  });
  std::vector<double> sorted_p(details.size());
  for (std::size_t i = 0; i < order.size(); ++i) sorted_p[i] = p[order[i]];

  result.cutoff = fdr_step_up(sorted_p, q);
  if (!result.cutoff) return result;
  // The p-value round trip can underflow (p = 0) or lose the last ulp; the
  // rejected coefficient with the smallest magnitude bounds lambda exactly.
  const double boundary = std::abs(details[order[result.cutoff->rank - 1]]);
  const double lambda = std::min(pvalue_to_threshold(result.cutoff->pvalue, sigma), boundary);
  result.lambda = lambda;
  for (std::size_t i = 0; i < details.size(); ++i)
    if (std::abs(details[i]) >= lambda) result.values[i] = details[i];
  return result;
}

/// Applies `spec` to every detail array; the approximation is copied bit-for-bit.
inline CoefficientPyramid<double> apply_threshold(const CoefficientPyramid<double>& p, const ThresholdSpec& spec) {
  spec.validate();
  CoefficientPyramid<double> out = p;
  if (spec.method == ThresholdMethod::none || p.level < 1) return out;

  const auto& finest = p.detail_at(1);
  switch (spec.method) {
    case ThresholdMethod::none: break;
    case ThresholdMethod::cdf:
      for (int j = 1; j <= p.level; ++j)
        out.detail_at(j) = cdf_threshold(p.detail_at(j), j, p.level, spec.b, spec.cdf_exponent);
      break;
    case ThresholdMethod::visu_soft:
    case ThresholdMethod::visu_hard: {
      const double lambda = visu_lambda(finest, p.coefficient_count(), spec.sigma_estimator);
      for (auto& d : out.details)
        d = spec.method == ThresholdMethod::visu_soft ? soft_threshold(d, lambda) : hard_threshold(d, lambda);
      break;
    }
    case ThresholdMethod::fdrc: {
      const double sigma = estimate_sigma(finest, spec.sigma_estimator);
      // sigma -> 0+: every nonzero detail has p = 0 and is retained.
      if (!(sigma > 0.0)) break;
      if (spec.fdr_scope == FdrScope::per_level) {
        for (auto& d : out.details) d = fdrc_threshold(d, sigma, spec.q).values;
      } else {
        std::vector<double> pooled;
        for (const auto& d : p.details) pooled.insert(pooled.end(), d.begin(), d.end());
        const auto kept = fdrc_threshold(pooled, sigma, spec.q).values;
        std::size_t offset = 0;
        for (auto& d : out.details) {
          std::copy_n(kept.begin() + static_cast<std::ptrdiff_t>(offset), d.size(), d.begin());
          offset += d.size();
        }
      }
      break;
    }
  }
  return out;
}

}  // namespace wavetoken
