#pragma once

// Scalar quantization of wavelet coefficients into a shared vocabulary.
//
// Token ids: pad_id = 0, eos_id = 1, value tokens start at value_offset = 2.
// Bin i (0-based) covers [edges[i-1], edges[i]) and decodes to centers[i];
// values outside the edges clamp to the outermost bins.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "wavetoken/error.hpp"
#include "wavetoken/hash.hpp"
#include "wavetoken/stats.hpp"

namespace wavetoken {

using TokenId = std::int32_t;

enum class Binning {
  /// Freedman-Diaconis width, uniform bins around a 0 center.
  uniform,
  /// Centers at quantiles of |w|, mirrored around 0.
  quantile,
};

inline std::string to_string(Binning b) { return b == Binning::uniform ? "uniform" : "quantile"; }

inline Binning parse_binning(std::string_view s) {
  if (s == "uniform") return Binning::uniform;
  if (s == "quantile") return Binning::quantile;
  throw Error(ErrorKind::invalid_argument, "unknown binning '" + std::string(s) + "'");
}

inline constexpr int kCodebookVersion = 1;
inline constexpr std::string_view kCodebookFormat = "wavetoken-codebook";

struct Codebook {
  std::vector<double> centers;
  std::vector<double> edges;
  double lo = -30.0;
  double hi = 30.0;
  /// Bin width for uniform binning; the widest center spacing otherwise.
  double width = 0.0;
  Binning binning = Binning::uniform;
  TokenId pad_id = 0;
  TokenId eos_id = 1;
  TokenId value_offset = 2;

  std::size_t bin_count() const { return centers.size(); }
  std::size_t vocab_size() const { return centers.size() + 2; }

  TokenId zero_token() const {
    const auto it = std::lower_bound(centers.begin(), centers.end(), 0.0);
    return value_offset + static_cast<TokenId>(it - centers.begin());
  }

  bool is_value_token(TokenId t) const {
    return t >= value_offset && t < value_offset + static_cast<TokenId>(centers.size());
  }

  bool operator==(const Codebook&) const = default;

  /// Throws Error(inconsistent) on any invariant violation.
  void validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorKind::inconsistent, "codebook: " + what); };
    const std::size_t b = centers.size();
    if (b < 3 || b % 2 == 0) fail("need an odd number of at least 3 centers, got " + std::to_string(b));
    if (edges.size() != b - 1) fail("edge count must be centers - 1");
    for (double v : centers)
      if (!std::isfinite(v)) fail("non-finite center");
    for (double v : edges)
      if (!std::isfinite(v)) fail("non-finite edge");
    for (std::size_t i = 0; i + 1 < b; ++i) {
      if (!(centers[i] < centers[i + 1])) fail("centers not strictly increasing at index " + std::to_string(i));
      if (!(centers[i] < edges[i] && edges[i] < centers[i + 1]))
        fail("edge " + std::to_string(i) + " does not separate its centers");
    }
    if (std::count(centers.begin(), centers.end(), 0.0) != 1) fail("no center at exactly 0");
    if (!(lo < 0.0 && 0.0 < hi)) fail("bounds must satisfy lo < 0 < hi");
    if (centers.front() < lo || centers.back() > hi) fail("centers outside bounds");
    if (pad_id == eos_id || pad_id < 0 || eos_id < 0) fail("special ids must be distinct and non-negative");
    if (is_value_token(pad_id) || is_value_token(eos_id)) fail("special ids overlap value tokens");
    if (pad_id >= static_cast<TokenId>(vocab_size()) || eos_id >= static_cast<TokenId>(vocab_size()))
      fail("special ids outside the vocabulary");
  }
};

namespace detail {

inline std::vector<double> midpoints(const std::vector<double>& centers) {
  std::vector<double> edges(centers.size() - 1);
  for (std::size_t i = 0; i + 1 < centers.size(); ++i) edges[i] = 0.5 * (centers[i] + centers[i + 1]);
  return edges;
}

inline void check_fit_inputs(std::span<const double> sample, int vocab_budget, double lo, double hi) {
  if (sample.empty()) throw Error(ErrorKind::invalid_argument, "cannot fit a codebook on an empty sample");
  if (vocab_budget < 5) throw Error(ErrorKind::invalid_argument, "vocabulary budget must be >= 5");
  if (!(lo < 0.0 && 0.0 < hi)) throw Error(ErrorKind::invalid_argument, "bounds must satisfy lo < 0 < hi");
  for (double v : sample)
    if (!std::isfinite(v)) throw Error(ErrorKind::non_finite, "codebook sample contains a non-finite value");
}

}  // namespace detail

/// 2 * IQR * n^(-1/3).
inline double freedman_diaconis_width(std::span<const double> sample) {
  if (sample.empty()) throw Error(ErrorKind::invalid_argument, "empty sample");
  return 2.0 * stats::iqr(sample) * std::cbrt(1.0 / static_cast<double>(sample.size()));
}

inline Codebook fit_codebook(std::span<const double> sample, int vocab_budget, double lo = -30.0, double hi = 30.0,
                             Binning binning = Binning::uniform) {
  detail::check_fit_inputs(sample, vocab_budget, lo, hi);
  const double reach = std::min(-lo, hi);
  const int max_half = (vocab_budget - 3) / 2;

  Codebook cb;
  cb.lo = lo;
  cb.hi = hi;
  cb.binning = binning;

  std::vector<double> positive;
  if (binning == Binning::uniform) {
    double h = std::max(freedman_diaconis_width(sample), (hi - lo) / static_cast<double>(vocab_budget - 2));
    h = std::min(h, reach);  // keeps at least one bin on each side of 0
    const auto fit = static_cast<int>(std::floor(reach / h));
    const int half = std::clamp(fit, 1, max_half);
    for (int i = 1; i <= half; ++i) positive.push_back(static_cast<double>(i) * h);
    cb.width = h;
  } else {
    std::vector<double> mags(sample.size());
    std::transform(sample.begin(), sample.end(), mags.begin(), [](double v) { return std::abs(v); });
    std::sort(mags.begin(), mags.end());
    for (int i = 1; i <= max_half; ++i) {
      const double c = std::min(stats::quantile_sorted(mags, (i - 0.5) / max_half), reach);
      if (c > 0.0 && (positive.empty() || c > positive.back())) positive.push_back(c);
    }
    if (positive.empty()) positive.push_back(std::min(1.0, reach));
  }

  cb.centers.reserve(2 * positive.size() + 1);
  for (auto it = positive.rbegin(); it != positive.rend(); ++it) cb.centers.push_back(-*it);
  cb.centers.push_back(0.0);
  cb.centers.insert(cb.centers.end(), positive.begin(), positive.end());
  cb.edges = detail::midpoints(cb.centers);
  if (binning == Binning::quantile) {
    for (std::size_t i = 0; i + 1 < cb.centers.size(); ++i)
      cb.width = std::max(cb.width, cb.centers[i + 1] - cb.centers[i]);
  }
  cb.validate();
  return cb;
}

inline Codebook fit_codebook(const std::vector<double>& sample, int vocab_budget, double lo = -30.0,
                             double hi = 30.0, Binning binning = Binning::uniform) {
  return fit_codebook(std::span<const double>(sample), vocab_budget, lo, hi, binning);
}

/// NaN is read as "missing" and maps to pad_id; infinities are rejected.
inline TokenId quantize(double w, const Codebook& cb) {
  if (std::isnan(w)) return cb.pad_id;
  if (!std::isfinite(w)) throw Error(ErrorKind::non_finite, "cannot quantize an infinite coefficient");
  const auto bin = std::upper_bound(cb.edges.begin(), cb.edges.end(), w) - cb.edges.begin();
  return cb.value_offset + static_cast<TokenId>(bin);
}

struct Dequantized {
  double value = 0.0;
  bool missing = false;
};

inline Dequantized dequantize_checked(TokenId t, const Codebook& cb) {
  if (t == cb.pad_id) return {0.0, true};
  if (t == cb.eos_id) throw Error(ErrorKind::invalid_argument, "EOS has no coefficient value");
  if (!cb.is_value_token(t))
    throw Error(ErrorKind::invalid_argument, "token " + std::to_string(t) + " is outside the vocabulary");
  return {cb.centers[static_cast<std::size_t>(t - cb.value_offset)], false};
}

inline double dequantize(TokenId t, const Codebook& cb) { return dequantize_checked(t, cb).value; }

inline nlohmann::json codebook_to_json(const Codebook& cb) {
  return {
      {"format", kCodebookFormat},
      {"version", kCodebookVersion},
      {"binning", to_string(cb.binning)},
      {"bounds", {cb.lo, cb.hi}},
      {"width", cb.width},
      {"pad_id", cb.pad_id},
      {"eos_id", cb.eos_id},
      {"value_offset", cb.value_offset},
      {"centers", cb.centers},
      {"edges", cb.edges},
  };
}

inline Codebook codebook_from_json(const nlohmann::json& j) {
  auto need = [&](const char* key) -> const nlohmann::json& {
    if (!j.is_object() || !j.contains(key))
      throw Error(ErrorKind::format, std::string("codebook field '") + key + "' is missing");
    return j.at(key);
  };
  Codebook cb;
  try {
    if (need("format").get<std::string>() != kCodebookFormat)
      throw Error(ErrorKind::format, "not a codebook file");
    const int version = need("version").get<int>();
    if (version != kCodebookVersion)
      throw Error(ErrorKind::version, "codebook version " + std::to_string(version) + " is not supported");
    cb.binning = parse_binning(need("binning").get<std::string>());
    const auto bounds = need("bounds").get<std::vector<double>>();
    if (bounds.size() != 2) throw Error(ErrorKind::format, "bounds must have two entries");
    cb.lo = bounds[0];
    cb.hi = bounds[1];
    cb.width = need("width").get<double>();
    cb.pad_id = need("pad_id").get<TokenId>();
    cb.eos_id = need("eos_id").get<TokenId>();
    cb.value_offset = need("value_offset").get<TokenId>();
    cb.centers = need("centers").get<std::vector<double>>();
    cb.edges = need("edges").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, std::string("codebook: ") + e.what());
  }
  cb.validate();
  return cb;
}

/// Canonical serialization; doubles are written with round-trip precision.
inline std::string codebook_to_string(const Codebook& cb) { return codebook_to_json(cb).dump(); }

inline Codebook codebook_from_string(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, std::string("codebook is not valid JSON: ") + e.what());
  }
  return codebook_from_json(j);
}

inline std::string codebook_hash(const Codebook& cb) { return fingerprint(codebook_to_string(cb)); }

/// Writes the codebook; `meta` is stored alongside and ignored by the hash.
inline void save_codebook(const std::string& path, const Codebook& cb,
                          const nlohmann::json& meta = nlohmann::json::object()) {
  cb.validate();
  auto j = codebook_to_json(cb);
  j["meta"] = meta;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::io, "write failed for " + path);
}

inline Codebook load_codebook(const std::string& path, nlohmann::json* meta = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, path + " is not valid JSON: " + e.what());
  }
  if (meta) *meta = j.is_object() ? j.value("meta", nlohmann::json::object()) : nlohmann::json::object();
  return codebook_from_json(j);
}

}  // namespace wavetoken
