#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace wavetoken {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

/// A univariate series; NaN marks a missing observation.
struct TimeSeries {
  std::string id;
  /// ISO-8601 timestamp of the first observation (may be empty for synthetic data).
  std::string start;
  /// Frequency tag such as "H", "D", "W", "M", "Q", "Y"; empty if unknown.
  std::string freq;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }

  std::vector<bool> observed_mask() const {
    std::vector<bool> m(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) m[i] = !is_missing(values[i]);
    return m;
  }

  bool operator==(const TimeSeries& o) const {
    if (id != o.id || start != o.start || freq != o.freq || values.size() != o.values.size()) return false;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const bool a = is_missing(values[i]), b = is_missing(o.values[i]);
      if (a != b || (!a && values[i] != o.values[i])) return false;
    }
    return true;
  }
};

/// A (context, horizon) training or evaluation pair.
struct WindowPair {
  std::string id;
  std::vector<double> context;
  std::vector<double> horizon;

  bool operator==(const WindowPair&) const = default;
};

}  // namespace wavetoken
