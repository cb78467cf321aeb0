#pragma once

// Property checks for wavelet families. Failures are reported, never thrown.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "wavetoken/dwt.hpp"
#include "wavetoken/wavelet_bank.hpp"

namespace wavetoken {

struct FamilyCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct FamilyReport {
  std::vector<FamilyCheck> checks;

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const FamilyCheck& c) { return c.passed; });
  }
  const FamilyCheck* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
  bool passed(const std::string& name) const {
    const auto* c = find(name);
    return c != nullptr && c->passed;
  }
};

namespace detail {

inline double tap_sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

inline bool taps_finite_nonempty(const WaveletFamily& f) {
  for (const auto* v : {&f.dec_lo, &f.dec_hi, &f.rec_lo, &f.rec_hi}) {
    if (v->empty()) return false;
    for (double x : *v)
      if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace detail

/// Checks: finite, lowpass_sum, highpass_zero_mean, orthogonality, perfect_reconstruction.
///
/// "orthogonality" passes when the family's orthogonal flag agrees with the
/// measured property (dec = reversed rec and unit-energy dec_lo), so a
/// biorthogonal family reports non-orthogonal in `detail` without failing.
inline FamilyReport verify_family(const WaveletFamily& f, double tol = 1e-12) {
  FamilyReport report;
  const bool finite = detail::taps_finite_nonempty(f);
  report.checks.push_back({"finite", finite, finite ? "all taps finite" : "empty or non-finite taps"});
  if (!finite) return report;

  const double lo_sum = detail::tap_sum(f.dec_lo);
  report.checks.push_back({"lowpass_sum", std::abs(lo_sum - std::numbers::sqrt2) <= tol,
                           "sum(dec_lo) = " + std::to_string(lo_sum)});
  const double hi_sum = detail::tap_sum(f.dec_hi);
  report.checks.push_back(
      {"highpass_zero_mean", std::abs(hi_sum) <= tol, "sum(dec_hi) = " + std::to_string(hi_sum)});

  const bool same_len = f.dec_lo.size() == f.rec_lo.size() && f.dec_hi.size() == f.rec_hi.size() &&
                        f.dec_lo.size() == f.dec_hi.size();
  bool measured_orthogonal = same_len;
  if (same_len) {
    const std::size_t n = f.dec_lo.size();
    double energy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      measured_orthogonal = measured_orthogonal && std::abs(f.dec_lo[k] - f.rec_lo[n - 1 - k]) <= tol &&
                            std::abs(f.dec_hi[k] - f.rec_hi[n - 1 - k]) <= tol;
      energy += f.dec_lo[k] * f.dec_lo[k];
    }
    measured_orthogonal = measured_orthogonal && std::abs(energy - 1.0) <= tol;
  }
  report.checks.push_back({"orthogonality", measured_orthogonal == f.orthogonal,
                           measured_orthogonal ? "orthogonal" : "non-orthogonal"});

  // Perfect reconstruction on every unit impulse for lengths up to 64.
  bool pr = same_len && f.filter_length() >= 2 && f.filter_length() % 2 == 0;
  double worst = 0.0;
  if (pr) {
    for (std::size_t n = 2; n <= 64 && pr; ++n) {
      if (max_level(n, f) < 1) continue;
      std::vector<double> x(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        x.assign(n, 0.0);
        x[i] = 1.0;
        const auto y = reconstruct(decompose(x, f, 1), f);
        for (std::size_t m = 0; m < n; ++m) worst = std::max(worst, std::abs(y[m] - x[m]));
      }
    }
    pr = worst <= 1e-9;
  }
  report.checks.push_back({"perfect_reconstruction", pr, "max impulse error " + std::to_string(worst)});
  return report;
}

}  // namespace wavetoken
