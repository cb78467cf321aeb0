#pragma once

// Decimated discrete wavelet transform: single-level analysis/synthesis and
// the multi-level Mallat cascade. Direct convolution, O(N * L) per level and
// O(N * L) overall since each level halves the signal.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wavetoken/error.hpp"
#include "wavetoken/wavelet_bank.hpp"

namespace wavetoken {

enum class BoundaryMode {
  /// Half-sample symmetric reflection; floor((n + L - 1) / 2) coefficients per level.
  symmetric,
  /// Periodization; ceil(n / 2) coefficients per level (odd inputs repeat the last sample).
  periodic,
};

inline std::string to_string(BoundaryMode m) { return m == BoundaryMode::symmetric ? "symmetric" : "periodic"; }

inline BoundaryMode parse_boundary_mode(std::string_view s) {
  if (s == "symmetric") return BoundaryMode::symmetric;
  if (s == "periodic" || s == "periodization") return BoundaryMode::periodic;
  throw Error(ErrorKind::invalid_argument, "unknown boundary mode '" + std::string(s) + "'");
}

/// Approximation a_J plus details ordered coarsest-first [d_J, ..., d_1].
template <std::floating_point T = double>
struct CoefficientPyramid {
  std::vector<T> approx;
  std::vector<std::vector<T>> details;
  int level = 0;
  std::size_t input_length = 0;
  std::string family_name;
  BoundaryMode boundary = BoundaryMode::symmetric;

  /// Detail array at decomposition level j (1 = finest).
  std::vector<T>& detail_at(int j) { return details[static_cast<std::size_t>(level - j)]; }
  const std::vector<T>& detail_at(int j) const { return details[static_cast<std::size_t>(level - j)]; }

  std::size_t coefficient_count() const {
    std::size_t n = approx.size();
    for (const auto& d : details) n += d.size();
    return n;
  }

  bool operator==(const CoefficientPyramid&) const = default;
};

/// Number of coefficients produced by one analysis step on n samples.
inline std::size_t dwt_output_length(std::size_t n, std::size_t filter_length, BoundaryMode mode) {
  if (mode == BoundaryMode::periodic) return (n + 1) / 2;
  return (n + filter_length - 1) / 2;
}

/// Deepest valid level: floor(log2(n / (L - 1))), 0 if the signal is shorter than L - 1.
inline int max_level(std::size_t n, std::size_t filter_length) {
  if (filter_length < 2) return 0;
  const std::size_t span = filter_length - 1;
  int level = 0;
  while ((span << (level + 1)) <= n) ++level;
  return level;
}

inline int max_level(std::size_t n, const WaveletFamily& f) { return max_level(n, f.filter_length()); }

namespace detail {

inline void check_level(std::size_t n, const WaveletFamily& f, int level) {
  if (level < 1) throw Error(ErrorKind::invalid_argument, "decomposition level must be >= 1");
  if (f.filter_length() < 2 || f.filter_length() % 2 != 0)
    throw Error(ErrorKind::invalid_argument, "family '" + f.name + "' needs even-length filters");
  const int deepest = max_level(n, f);
  if (level > deepest) {
    throw Error(ErrorKind::too_short, "length " + std::to_string(n) + " supports at most level " +
                                          std::to_string(deepest) + " with " + f.name + ", requested " +
                                          std::to_string(level));
  }
}

/// Length of the signal entering each level: ladder[0] = n, ladder[j] = length of a_j.
inline std::vector<std::size_t> length_ladder(std::size_t n, std::size_t filter_length, int level,
                                              BoundaryMode mode) {
  std::vector<std::size_t> ladder{n};
  for (int j = 0; j < level; ++j) ladder.push_back(dwt_output_length(ladder.back(), filter_length, mode));
  return ladder;
}

/// Half-sample symmetric index into [0, n) for any integer i.
inline std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  const auto period = static_cast<std::ptrdiff_t>(2 * n);
  std::ptrdiff_t r = i % period;
  if (r < 0) r += period;
  if (r >= static_cast<std::ptrdiff_t>(n)) r = period - 1 - r;
  return static_cast<std::size_t>(r);
}

inline std::size_t wrap_index(std::ptrdiff_t i, std::size_t n) {
  const auto m = static_cast<std::ptrdiff_t>(n);
  std::ptrdiff_t r = i % m;
  if (r < 0) r += m;
  return static_cast<std::size_t>(r);
}

}  // namespace detail

/// One analysis step: returns (approximation, detail).
template <std::floating_point T>
std::pair<std::vector<T>, std::vector<T>> dwt_step(std::span<const T> x, const WaveletFamily& f,
                                                   BoundaryMode mode = BoundaryMode::symmetric) {
  const std::size_t n = x.size();
  const std::size_t len = f.filter_length();
  const std::size_t out_n = dwt_output_length(n, len, mode);
  std::vector<T> approx(out_n), det(out_n);
  const auto flen = static_cast<std::ptrdiff_t>(len);

  if (mode == BoundaryMode::symmetric) {
    for (std::size_t k = 0; k < out_n; ++k) {
      const auto base = static_cast<std::ptrdiff_t>(2 * k + 1);
      T a = 0, d = 0;
      if (base - (flen - 1) >= 0 && base < static_cast<std::ptrdiff_t>(n)) {
        for (std::ptrdiff_t j = 0; j < flen; ++j) {
          const T v = x[static_cast<std::size_t>(base - j)];
          a += static_cast<T>(f.dec_lo[j]) * v;
          d += static_cast<T>(f.dec_hi[j]) * v;
        }
      } else {
        for (std::ptrdiff_t j = 0; j < flen; ++j) {
          const T v = x[detail::reflect_index(base - j, n)];
          a += static_cast<T>(f.dec_lo[j]) * v;
          d += static_cast<T>(f.dec_hi[j]) * v;
        }
      }
      approx[k] = a;
      det[k] = d;
    }
  } else {
    // Periodization of the even-length extension (last sample repeated when n is odd).
    const std::size_t padded = 2 * out_n;
    auto sample = [&](std::ptrdiff_t i) { return x[std::min(detail::wrap_index(i, padded), n - 1)]; };
    for (std::size_t k = 0; k < out_n; ++k) {
      const auto base = static_cast<std::ptrdiff_t>(2 * k + 1);
      T a = 0, d = 0;
      for (std::ptrdiff_t j = 0; j < flen; ++j) {
        const T v = sample(base - j);
        a += static_cast<T>(f.dec_lo[j]) * v;
        d += static_cast<T>(f.dec_hi[j]) * v;
      }
      approx[k] = a;
      det[k] = d;
    }
  }
  return {std::move(approx), std::move(det)};
}

/// One synthesis step producing exactly `out_length` samples.
template <std::floating_point T>
std::vector<T> idwt_step(std::span<const T> approx, std::span<const T> det, const WaveletFamily& f,
                         std::size_t out_length, BoundaryMode mode = BoundaryMode::symmetric) {
  if (approx.size() != det.size())
    throw Error(ErrorKind::inconsistent, "approximation and detail lengths differ");
  const std::size_t nc = approx.size();
  const std::size_t len = f.filter_length();
  if (dwt_output_length(out_length, len, mode) != nc)
    throw Error(ErrorKind::inconsistent, std::to_string(nc) + " coefficients cannot reconstruct " +
                                             std::to_string(out_length) + " samples");
  const auto flen = static_cast<std::ptrdiff_t>(len);

  if (mode == BoundaryMode::symmetric) {
    // out[m] = sum_k c[k] * g[m + L - 2 - 2k]
    std::vector<T> out(out_length, T{0});
    for (std::size_t m = 0; m < out_length; ++m) {
      const auto shift = static_cast<std::ptrdiff_t>(m) + flen - 2;
      T acc = 0;
      for (std::ptrdiff_t t = shift % 2; t < flen; t += 2) {
        const std::ptrdiff_t k = (shift - t) / 2;
        if (k < 0) break;
        if (k >= static_cast<std::ptrdiff_t>(nc)) continue;
        acc += static_cast<T>(f.rec_lo[t]) * approx[k] + static_cast<T>(f.rec_hi[t]) * det[k];
      }
      out[m] = acc;
    }
    return out;
  }

  const std::size_t padded = 2 * nc;
  std::vector<T> full(padded, T{0});
  for (std::size_t k = 0; k < nc; ++k) {
    for (std::ptrdiff_t t = 0; t < flen; ++t) {
      const std::size_t m = detail::wrap_index(static_cast<std::ptrdiff_t>(2 * k) + t - flen + 2, padded);
      full[m] += static_cast<T>(f.rec_lo[t]) * approx[k] + static_cast<T>(f.rec_hi[t]) * det[k];
    }
  }
  full.resize(out_length);
  return full;
}

/// Per-level lengths [len(a_J), len(d_J), ..., len(d_1)] without running the transform.
inline std::vector<std::size_t> coefficient_layout(std::size_t n, const WaveletFamily& f, int level,
                                                   BoundaryMode mode = BoundaryMode::symmetric) {
  detail::check_level(n, f, level);
  const auto ladder = detail::length_ladder(n, f.filter_length(), level, mode);
  std::vector<std::size_t> layout{ladder.back()};
  for (int j = level; j >= 1; --j) layout.push_back(ladder[static_cast<std::size_t>(j)]);
  return layout;
}

template <std::floating_point T>
CoefficientPyramid<T> decompose(std::span<const T> x, const WaveletFamily& f, int level,
                                BoundaryMode mode = BoundaryMode::symmetric) {
  detail::check_level(x.size(), f, level);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) throw Error(ErrorKind::non_finite, "input sample " + std::to_string(i));
  }
  CoefficientPyramid<T> p;
  p.level = level;
  p.input_length = x.size();
  p.family_name = f.name;
  p.boundary = mode;
  p.details.resize(static_cast<std::size_t>(level));

  std::vector<T> current;
  for (int j = 1; j <= level; ++j) {
    auto [a, d] = dwt_step<T>(j == 1 ? x : std::span<const T>(current), f, mode);
    p.detail_at(j) = std::move(d);
    current = std::move(a);
  }
  p.approx = std::move(current);
  return p;
}

template <std::floating_point T>
CoefficientPyramid<T> decompose(const std::vector<T>& x, const WaveletFamily& f, int level,
                                BoundaryMode mode = BoundaryMode::symmetric) {
  return decompose(std::span<const T>(x), f, level, mode);
}

template <std::floating_point T>
std::vector<T> reconstruct(const CoefficientPyramid<T>& p, const WaveletFamily& f) {
  if (p.level < 1 || p.details.size() != static_cast<std::size_t>(p.level))
    throw Error(ErrorKind::inconsistent, "pyramid level does not match its detail count");
  const auto layout = coefficient_layout(p.input_length, f, p.level, p.boundary);
  if (p.approx.size() != layout[0])
    throw Error(ErrorKind::inconsistent, "approximation length " + std::to_string(p.approx.size()) +
                                             ", expected " + std::to_string(layout[0]));
  for (std::size_t i = 0; i < p.details.size(); ++i) {
    if (p.details[i].size() != layout[i + 1])
      throw Error(ErrorKind::inconsistent, "detail segment " + std::to_string(i) + " has length " +
                                               std::to_string(p.details[i].size()) + ", expected " +
                                               std::to_string(layout[i + 1]));
  }
  const auto ladder = detail::length_ladder(p.input_length, f.filter_length(), p.level, p.boundary);
  std::vector<T> current = p.approx;
  for (int j = p.level; j >= 1; --j) {
    current = idwt_step<T>(current, p.detail_at(j), f, ladder[static_cast<std::size_t>(j - 1)], p.boundary);
  }
  return current;
}

}  // namespace wavetoken
