#pragma once

// Forward map: z-score -> fill gaps -> DWT -> threshold -> quantize, with
// segments laid out coarsest-first [a_J, d_J, ..., d_1]. detokenize inverts
// it up to quantization.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wavetoken/codebook.hpp"
#include "wavetoken/dwt.hpp"
#include "wavetoken/error.hpp"
#include "wavetoken/thresholding.hpp"
#include "wavetoken/time_series.hpp"
#include "wavetoken/wavelet_bank.hpp"

namespace wavetoken {

struct ScaleStats {
  double mu = 0.0;
  double sigma = 1.0;

  bool operator==(const ScaleStats&) const = default;
};

struct TokenizerConfig {
  std::string family = "bior2.2";
  int level = 1;
  BoundaryMode boundary = BoundaryMode::symmetric;
  ThresholdSpec threshold;

  bool operator==(const TokenizerConfig&) const = default;
};

struct TokenStream {
  std::vector<TokenId> tokens;
  /// [len(a_J), len(d_J), ..., len(d_1)]; excludes any trailing EOS.
  std::vector<std::size_t> segment_lengths;
  ScaleStats scale;
  std::string family_name;
  int level = 0;
  BoundaryMode boundary = BoundaryMode::symmetric;
  std::size_t source_length = 0;

  std::size_t coefficient_count() const {
    return std::accumulate(segment_lengths.begin(), segment_lengths.end(), std::size_t{0});
  }

  bool has_eos() const { return tokens.size() == coefficient_count() + 1; }

  bool operator==(const TokenStream&) const = default;
};

/// Mean and sample standard deviation over observed (non-NaN) values; a zero
/// spread is replaced by 1.
inline ScaleStats compute_scale(std::span<const double> x) {
  std::vector<double> seen;
  seen.reserve(x.size());
  for (double v : x) {
    if (is_missing(v)) continue;
    if (!std::isfinite(v)) throw Error(ErrorKind::non_finite, "infinite value in scaling window");
    seen.push_back(v);
  }
  if (seen.empty()) throw Error(ErrorKind::degenerate, "scaling window has no observed values");
  ScaleStats s{stats::mean(seen), stats::sample_stddev(seen)};
  if (!(s.sigma > 0.0)) s.sigma = 1.0;
  return s;
}

inline std::vector<double> apply_scale(std::span<const double> x, const ScaleStats& s) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = is_missing(x[i]) ? kMissing : (x[i] - s.mu) / s.sigma;
  return out;
}

inline std::vector<double> invert_scale(std::span<const double> z, const ScaleStats& s) {
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] * s.sigma + s.mu;
  return out;
}

/// Linear interpolation across interior gaps, nearest observation held at
/// the ends. Returns the completed series and the observed mask.
inline std::pair<std::vector<double>, std::vector<bool>> fill_missing(std::span<const double> x) {
  std::vector<double> out(x.begin(), x.end());
  std::vector<bool> observed(x.size());
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    observed[i] = !is_missing(x[i]);
    if (observed[i]) idx.push_back(i);
  }
  if (idx.empty()) throw Error(ErrorKind::degenerate, "window has no observed values");
  if (idx.size() == x.size()) return {std::move(out), std::move(observed)};

  for (std::size_t i = 0; i < idx.front(); ++i) out[i] = x[idx.front()];
  for (std::size_t i = idx.back() + 1; i < x.size(); ++i) out[i] = x[idx.back()];
  for (std::size_t g = 0; g + 1 < idx.size(); ++g) {
    const std::size_t a = idx[g], b = idx[g + 1];
    for (std::size_t i = a + 1; i < b; ++i) {
      const double t = static_cast<double>(i - a) / static_cast<double>(b - a);
      out[i] = x[a] + t * (x[b] - x[a]);
    }
  }
  return {std::move(out), std::move(observed)};
}

namespace detail {

/// Coefficient k of one analysis step is observed if any sample under a
/// non-zero tap of `taps` is observed.
inline std::vector<bool> propagate_mask(const std::vector<bool>& observed, const std::vector<double>& taps,
                                        BoundaryMode mode) {
  const std::size_t n = observed.size();
  const std::size_t out_n = dwt_output_length(n, taps.size(), mode);
  std::vector<bool> out(out_n, false);
  const std::size_t padded = 2 * out_n;
  for (std::size_t k = 0; k < out_n; ++k) {
    const auto base = static_cast<std::ptrdiff_t>(2 * k + 1);
    for (std::size_t j = 0; j < taps.size() && !out[k]; ++j) {
      if (taps[j] == 0.0) continue;
      const std::ptrdiff_t i = base - static_cast<std::ptrdiff_t>(j);
      const std::size_t src = mode == BoundaryMode::symmetric ? reflect_index(i, n)
                                                              : std::min(wrap_index(i, padded), n - 1);
      out[k] = observed[src];
    }
  }
  return out;
}

}  // namespace detail

/// Observed-support masks shaped like the pyramid: approx mask plus detail masks coarsest-first.
struct CoefficientMask {
  std::vector<bool> approx;
  std::vector<std::vector<bool>> details;

  bool all_observed() const {
    auto full = [](const std::vector<bool>& m) { return std::all_of(m.begin(), m.end(), [](bool b) { return b; }); };
    return full(approx) && std::all_of(details.begin(), details.end(), full);
  }
};

inline CoefficientMask coefficient_mask(const std::vector<bool>& observed, const WaveletFamily& f, int level,
                                        BoundaryMode mode) {
  CoefficientMask m;
  m.details.resize(static_cast<std::size_t>(level));
  std::vector<bool> current = observed;
  for (int j = 1; j <= level; ++j) {
    m.details[static_cast<std::size_t>(level - j)] = detail::propagate_mask(current, f.dec_hi, mode);
    current = detail::propagate_mask(current, f.dec_lo, mode);
  }
  m.approx = std::move(current);
  return m;
}

/// Scaled, gap-filled, decomposed and thresholded coefficients of one window.
struct ScaledCoefficients {
  CoefficientPyramid<double> pyramid;
  CoefficientMask mask;
};

inline ScaledCoefficients scaled_coefficients(std::span<const double> x, const TokenizerConfig& cfg,
                                              const ScaleStats& scale) {
  const auto f = get_family(cfg.family);
  auto [filled, observed] = fill_missing(apply_scale(x, scale));
  ScaledCoefficients out;
  out.pyramid = apply_threshold(decompose(filled, f, cfg.level, cfg.boundary), cfg.threshold);
  out.mask = coefficient_mask(observed, f, cfg.level, cfg.boundary);
  return out;
}

/// Tokenizes `x` with the given scale statistics (the context's, for horizons).
inline TokenStream tokenize_with_scale(std::span<const double> x, const TokenizerConfig& cfg, const Codebook& cb,
                                       const ScaleStats& scale) {
  const auto sc = scaled_coefficients(x, cfg, scale);
  TokenStream ts;
  ts.scale = scale;
  ts.family_name = cfg.family;
  ts.level = cfg.level;
  ts.boundary = cfg.boundary;
  ts.source_length = x.size();
  ts.tokens.reserve(sc.pyramid.coefficient_count());

  auto emit = [&](const std::vector<double>& values, const std::vector<bool>& mask) {
    ts.segment_lengths.push_back(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) ts.tokens.push_back(mask[i] ? quantize(values[i], cb) : cb.pad_id);
  };
  emit(sc.pyramid.approx, sc.mask.approx);
  for (std::size_t s = 0; s < sc.pyramid.details.size(); ++s) emit(sc.pyramid.details[s], sc.mask.details[s]);
  return ts;
}

inline TokenStream tokenize(std::span<const double> x, const TokenizerConfig& cfg, const Codebook& cb) {
  return tokenize_with_scale(x, cfg, cb, compute_scale(x));
}

/// Both windows are scaled with the context statistics and transformed
/// independently; the horizon stream ends with EOS.
inline std::pair<TokenStream, TokenStream> tokenize_pair(std::span<const double> context,
                                                         std::span<const double> horizon,
                                                         const TokenizerConfig& cfg, const Codebook& cb) {
  const ScaleStats scale = compute_scale(context);
  auto ctx = tokenize_with_scale(context, cfg, cb, scale);
  auto hor = tokenize_with_scale(horizon, cfg, cb, scale);
  hor.tokens.push_back(cb.eos_id);
  return {std::move(ctx), std::move(hor)};
}

/// Dequantizes a coefficient-token sequence (PAD -> 0) into a pyramid with the
/// layout implied by (length, family, level, boundary).
inline CoefficientPyramid<double> tokens_to_pyramid(std::span<const TokenId> tokens, std::size_t length,
                                                    const WaveletFamily& f, int level, BoundaryMode mode,
                                                    const Codebook& cb) {
  const auto layout = coefficient_layout(length, f, level, mode);
  const std::size_t total = std::accumulate(layout.begin(), layout.end(), std::size_t{0});
  if (tokens.size() != total)
    throw Error(ErrorKind::inconsistent, std::to_string(tokens.size()) + " coefficient tokens, layout needs " +
                                             std::to_string(total));
  CoefficientPyramid<double> p;
  p.level = level;
  p.input_length = length;
  p.family_name = f.name;
  p.boundary = mode;
  std::size_t pos = 0;
  auto take = [&](std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i, ++pos) {
      if (tokens[pos] == cb.eos_id)
        throw Error(ErrorKind::inconsistent, "EOS inside coefficient segment at position " + std::to_string(pos));
      v[i] = dequantize(tokens[pos], cb);
    }
    return v;
  };
  p.approx = take(layout[0]);
  for (std::size_t s = 1; s < layout.size(); ++s) p.details.push_back(take(layout[s]));
  return p;
}

inline std::vector<double> detokenize(const TokenStream& ts, const Codebook& cb, const WaveletFamily& f) {
  if (ts.family_name != f.name)
    throw Error(ErrorKind::inconsistent, "stream was tokenized with '" + ts.family_name + "', not '" + f.name + "'");
  const auto layout = coefficient_layout(ts.source_length, f, ts.level, ts.boundary);
  if (ts.segment_lengths != layout) throw Error(ErrorKind::inconsistent, "segment lengths do not match the layout");
  const std::size_t n = ts.coefficient_count();
  if (ts.tokens.size() != n && !(ts.tokens.size() == n + 1 && ts.tokens.back() == cb.eos_id))
    throw Error(ErrorKind::inconsistent, "token count does not match segment lengths");
  const auto p = tokens_to_pyramid(std::span<const TokenId>(ts.tokens).first(n), ts.source_length, f, ts.level,
                                   ts.boundary, cb);
  return invert_scale(reconstruct(p, f), ts.scale);
}

/// Bundles configuration, codebook and family for repeated use.
class Tokenizer {
 public:
  Tokenizer(TokenizerConfig cfg, Codebook cb) : cfg_(std::move(cfg)), cb_(std::move(cb)), family_(get_family(cfg_.family)) {
    cfg_.threshold.validate();
    cb_.validate();
    if (cfg_.level < 1) throw Error(ErrorKind::invalid_argument, "decomposition level must be >= 1");
  }

  const TokenizerConfig& config() const { return cfg_; }
  const Codebook& codebook() const { return cb_; }
  const WaveletFamily& family() const { return family_; }

  TokenStream tokenize(std::span<const double> x) const { return wavetoken::tokenize(x, cfg_, cb_); }

  std::pair<TokenStream, TokenStream> tokenize_pair(std::span<const double> context,
                                                    std::span<const double> horizon) const {
    return wavetoken::tokenize_pair(context, horizon, cfg_, cb_);
  }

  std::vector<double> detokenize(const TokenStream& ts) const { return wavetoken::detokenize(ts, cb_, family_); }

  /// Token count of a window of length n (without EOS).
  std::size_t token_count(std::size_t n) const {
    const auto layout = coefficient_layout(n, family_, cfg_.level, cfg_.boundary);
    return std::accumulate(layout.begin(), layout.end(), std::size_t{0});
  }

 private:
  TokenizerConfig cfg_;
  Codebook cb_;
  WaveletFamily family_;
};

}  // namespace wavetoken
