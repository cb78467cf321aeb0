#pragma once

// Wavelet families as quadruples of FIR filters.
//
// Taps follow the PyWavelets convention: analysis filters are applied by
// full convolution followed by keeping the odd-indexed outputs, and
// synthesis filters by the matching "valid" upsampling convolution. Under
// this convention the Haar analysis high-pass is [-1/sqrt2, 1/sqrt2], which
// yields details (x[2k] - x[2k+1]) / sqrt2. Published PyWavelets tables can
// be used directly as test vectors.

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wavetoken/error.hpp"

namespace wavetoken {

struct WaveletFamily {
  std::string name;
  std::vector<double> dec_lo;
  std::vector<double> dec_hi;
  std::vector<double> rec_lo;
  std::vector<double> rec_hi;
  bool orthogonal = false;
  /// (analysis, synthesis)
  std::pair<int, int> vanishing_moments{0, 0};

  std::size_t filter_length() const { return dec_lo.size(); }

  bool operator==(const WaveletFamily&) const = default;
};

namespace detail {

inline std::vector<double> reversed(std::vector<double> v) { return {v.rbegin(), v.rend()}; }

/// Builds the full orthogonal quadruple from the reconstruction low-pass:
/// rec_hi[k] = (-1)^k rec_lo[L-1-k], dec filters are the time reverses.
inline WaveletFamily orthogonal_family(std::string name, std::vector<double> rec_lo, int moments) {
  const std::size_t n = rec_lo.size();
  std::vector<double> rec_hi(n);
  for (std::size_t k = 0; k < n; ++k) rec_hi[k] = ((k % 2 == 0) ? 1.0 : -1.0) * rec_lo[n - 1 - k];
  WaveletFamily f;
  f.name = std::move(name);
  f.dec_lo = reversed(rec_lo);
  f.dec_hi = reversed(rec_hi);
  f.rec_lo = std::move(rec_lo);
  f.rec_hi = std::move(rec_hi);
  f.orthogonal = true;
  f.vanishing_moments = {moments, moments};
  return f;
}

inline WaveletFamily make_haar() {
  const double r = 1.0 / std::numbers::sqrt2;
  return orthogonal_family("haar", {r, r}, 1);
}

inline WaveletFamily make_db2() {
  const double s3 = std::sqrt(3.0);
  const double d = 4.0 * std::numbers::sqrt2;
  return orthogonal_family("db2", {(1 + s3) / d, (3 + s3) / d, (3 - s3) / d, (1 - s3) / d}, 2);
}

inline WaveletFamily make_db4() {
  return orthogonal_family("db4",
                           {0.2303778133088965, 0.7148465705529157, 0.6308807679298589,
                            -0.027983769416859854, -0.18703481171909309, 0.030841381835560764,
                            0.0328830116668852, -0.010597401785069032},
                           4);
}

/// Cohen-Daubechies-Feauveau 5/3 pair, normalised so sum(dec_lo) = sqrt2.
inline WaveletFamily make_bior22() {
  const double r = std::numbers::sqrt2;
  WaveletFamily f;
  f.name = "bior2.2";
  f.dec_lo = {0.0, -r / 8, r / 4, 3 * r / 4, r / 4, -r / 8};
  f.dec_hi = {0.0, r / 4, -r / 2, r / 4, 0.0, 0.0};
  f.rec_lo = {0.0, r / 4, r / 2, r / 4, 0.0, 0.0};
  f.rec_hi = {0.0, r / 8, r / 4, -3 * r / 4, r / 4, r / 8};
  f.orthogonal = false;
  f.vanishing_moments = {2, 2};
  return f;
}

}  // namespace detail

inline constexpr std::array<std::string_view, 4> kFamilyNames{"haar", "db2", "db4", "bior2.2"};

/// Returns the named family with exact taps.
inline WaveletFamily get_family(std::string_view name) {
  if (name == "haar") return detail::make_haar();
  if (name == "db2") return detail::make_db2();
  if (name == "db4") return detail::make_db4();
  if (name == "bior2.2") return detail::make_bior22();
  throw Error(ErrorKind::unknown_family, "'" + std::string(name) + "'");
}

}  // namespace wavetoken
