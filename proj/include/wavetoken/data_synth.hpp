#pragma once

// Synthetic series: exponential trends, sparse spikes, frequency-switching
// sinusoids, Gaussian-process draws from random kernel mixtures and TSMixup
// convex combinations. Every draw comes from the seeded Rng.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "wavetoken/error.hpp"
#include "wavetoken/parallel.hpp"
#include "wavetoken/random.hpp"
#include "wavetoken/time_series.hpp"

namespace wavetoken {

enum class GeneratorKind { trend_exp, sparse_spikes, multi_freq_switch, gp_kernel_mix, tsmixup };

inline std::string to_string(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::trend_exp: return "trend_exp";
    case GeneratorKind::sparse_spikes: return "sparse_spikes";
    case GeneratorKind::multi_freq_switch: return "multi_freq_switch";
    case GeneratorKind::gp_kernel_mix: return "gp_kernel_mix";
    case GeneratorKind::tsmixup: return "tsmixup";
  }
  return "tsmixup";
}

inline GeneratorKind parse_generator_kind(std::string_view s) {
  for (auto k : {GeneratorKind::trend_exp, GeneratorKind::sparse_spikes, GeneratorKind::multi_freq_switch,
                 GeneratorKind::gp_kernel_mix, GeneratorKind::tsmixup})
    if (s == to_string(k)) return k;
  throw Error(ErrorKind::invalid_argument, "unknown generator '" + std::string(s) + "'");
}

inline constexpr std::size_t kMaxGpLength = 1024;

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::tsmixup;
  std::size_t length = 576;
  double noise = 0.1;
  std::uint64_t seed = 0;

  // trend_exp: a * exp(b * t)
  double trend_a = 1.0;
  double trend_b = 0.005;
  // sparse_spikes: Poisson arrivals at `spike_rate` per step
  double baseline = 0.0;
  double spike_rate = 0.02;
  double spike_height = 5.0;
  // multi_freq_switch: `n_freqs` sinusoids re-drawn on each of `n_segments` pieces
  int n_freqs = 2;
  int n_segments = 3;
  // gp_kernel_mix
  int max_kernels = 3;
  // tsmixup
  int max_components = 3;

  void validate() const {
    auto bad = [](const std::string& what) { throw Error(ErrorKind::invalid_argument, "generator: " + what); };
    if (length < 1) bad("length must be >= 1");
    if (!(noise >= 0.0) || !std::isfinite(noise)) bad("noise must be >= 0");
    if (!std::isfinite(trend_a) || !std::isfinite(trend_b)) bad("trend parameters must be finite");
    if (!(spike_rate >= 0.0 && spike_rate <= 1.0)) bad("spike rate must lie in [0, 1]");
    if (n_freqs < 1 || n_segments < 1) bad("need at least one frequency and one segment");
    if (max_kernels < 1 || max_components < 1) bad("kernel and component counts must be >= 1");
    if (kind == GeneratorKind::gp_kernel_mix && length > kMaxGpLength)
      bad("gp_kernel_mix supports at most " + std::to_string(kMaxGpLength) + " points");
  }
};

/// Pointwise convex combination sum_k w_k x_k; weights must be >= 0 and sum to 1.
inline std::vector<double> mixup(const std::vector<std::vector<double>>& components, std::span<const double> weights) {
  if (components.empty() || components.size() != weights.size())
    throw Error(ErrorKind::invalid_argument, "mixup needs one weight per component");
  double wsum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw Error(ErrorKind::invalid_argument, "mixup weights must be non-negative");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-9) throw Error(ErrorKind::invalid_argument, "mixup weights must sum to 1");
  const std::size_t n = components[0].size();
  std::vector<double> out(n, 0.0);
  for (std::size_t k = 0; k < components.size(); ++k) {
    if (components[k].size() != n) throw Error(ErrorKind::inconsistent, "mixup components differ in length");
    for (std::size_t t = 0; t < n; ++t) out[t] += weights[k] * components[k][t];
  }
  return out;
}

/// Flat Dirichlet weights from normalised exponential draws.
inline std::vector<double> dirichlet_ones(std::size_t k, Rng& rng) {
  std::vector<double> w(k);
  double s = 0.0;
  for (auto& v : w) s += (v = rng.exponential());
  for (auto& v : w) v /= s;
  return w;
}

namespace detail {

inline void add_noise(std::vector<double>& x, double noise, Rng& rng) {
  if (noise == 0.0) return;
  for (auto& v : x) v += noise * rng.normal();
}

inline std::vector<double> trend_exp(const GeneratorSpec& s, Rng& rng) {
  std::vector<double> x(s.length);
  for (std::size_t t = 0; t < s.length; ++t) x[t] = s.trend_a * std::exp(s.trend_b * static_cast<double>(t));
  add_noise(x, s.noise, rng);
  return x;
}

inline std::vector<double> sparse_spikes(const GeneratorSpec& s, Rng& rng) {
  std::vector<double> x(s.length, s.baseline);
  if (s.spike_rate > 0.0) {
    double pos = rng.exponential() / s.spike_rate;
    while (pos < static_cast<double>(s.length)) {
      const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
      x[static_cast<std::size_t>(pos)] += sign * s.spike_height * rng.uniform(0.5, 1.5);
      pos += rng.exponential() / s.spike_rate;
    }
  }
  add_noise(x, s.noise, rng);
  return x;
}

inline std::vector<double> multi_freq_switch(const GeneratorSpec& s, Rng& rng) {
  std::vector<std::size_t> cuts{0, s.length};
  for (int i = 1; i < s.n_segments; ++i)
    cuts.push_back(static_cast<std::size_t>(rng.integer(1, std::max<std::int64_t>(1, static_cast<std::int64_t>(s.length) - 1))));
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> x(s.length, 0.0);
  for (std::size_t seg = 0; seg + 1 < cuts.size(); ++seg) {
    for (int k = 0; k < s.n_freqs; ++k) {
      const double freq = std::exp(rng.uniform(std::log(1.0 / 64), std::log(1.0 / 4)));
      const double amp = rng.uniform(0.5, 2.0);
      const double phase = rng.uniform(0.0, 2 * std::numbers::pi);
      for (std::size_t t = cuts[seg]; t < cuts[seg + 1]; ++t)
        x[t] += amp * std::sin(2 * std::numbers::pi * freq * static_cast<double>(t) + phase);
    }
  }
  add_noise(x, s.noise, rng);
  return x;
}

inline Eigen::MatrixXd random_kernel(std::size_t n, int max_kernels, Rng& rng) {
  const auto nd = static_cast<Eigen::Index>(n);
  Eigen::VectorXd t(nd);
  for (Eigen::Index i = 0; i < nd; ++i) t(i) = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
  auto draw = [&]() {
    Eigen::MatrixXd k(nd, nd);
    switch (rng.integer(0, 2)) {
      case 0: {  // RBF
        const double ell = std::exp(rng.uniform(std::log(0.02), std::log(0.5)));
        for (Eigen::Index i = 0; i < nd; ++i)
          for (Eigen::Index j = 0; j < nd; ++j) k(i, j) = std::exp(-0.5 * std::pow((t(i) - t(j)) / ell, 2));
        break;
      }
      case 1: {  // periodic
        const double period = std::exp(rng.uniform(std::log(0.02), std::log(0.5)));
        const double ell = rng.uniform(0.5, 2.0);
        for (Eigen::Index i = 0; i < nd; ++i)
          for (Eigen::Index j = 0; j < nd; ++j) {
            const double sn = std::sin(std::numbers::pi * std::abs(t(i) - t(j)) / period);
            k(i, j) = std::exp(-2.0 * sn * sn / (ell * ell));
          }
        break;
      }
      default: {  // linear
        const double c = rng.uniform(0.0, 1.0);
        const double bias = rng.uniform(0.0, 0.5);
        for (Eigen::Index i = 0; i < nd; ++i)
          for (Eigen::Index j = 0; j < nd; ++j) k(i, j) = bias + (t(i) - c) * (t(j) - c);
        break;
      }
    }
    return k;
  };
  Eigen::MatrixXd k = draw();
  const auto extra = rng.integer(0, max_kernels - 1);
  for (std::int64_t i = 0; i < extra; ++i) {
    Eigen::MatrixXd other = draw();
    if (rng.bernoulli(0.5)) k += other;
    else k = k.cwiseProduct(other);
  }
  return k;
}

inline std::vector<double> gp_kernel_mix(const GeneratorSpec& s, Rng& rng) {
  const Eigen::MatrixXd k = random_kernel(s.length, s.max_kernels, rng);
  const auto n = static_cast<Eigen::Index>(s.length);
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 1e-8 * std::max(1.0, k.diagonal().mean());
  for (int attempt = 0; attempt < 8; ++attempt, jitter *= 10) {
    llt.compute(k + jitter * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() == Eigen::Success) break;
  }
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::degenerate, "GP covariance is not positive definite");
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.normal();
  const Eigen::VectorXd y = llt.matrixL() * z;
  std::vector<double> x(y.data(), y.data() + n);
  add_noise(x, s.noise, rng);
  return x;
}

}  // namespace detail

/// A randomly parameterised spec of the given kind.
inline GeneratorSpec random_spec(GeneratorKind kind, std::size_t length, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x5eed));
  GeneratorSpec s;
  s.kind = kind;
  s.length = length;
  s.seed = seed;
  s.noise = rng.uniform(0.0, 0.3);
  s.trend_a = rng.uniform(0.5, 5.0) * (rng.bernoulli(0.5) ? 1.0 : -1.0);
  s.trend_b = rng.uniform(-3.0, 3.0) / static_cast<double>(std::max<std::size_t>(length, 1));
  s.baseline = rng.uniform(-2.0, 2.0);
  s.spike_rate = rng.uniform(0.005, 0.05);
  s.spike_height = rng.uniform(2.0, 10.0);
  s.n_freqs = rng.bernoulli(0.5) ? 2 : 5;
  s.n_segments = static_cast<int>(rng.integer(1, 4));
  return s;
}

inline std::vector<double> generate_values(const GeneratorSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  switch (spec.kind) {
    case GeneratorKind::trend_exp: return detail::trend_exp(spec, rng);
    case GeneratorKind::sparse_spikes: return detail::sparse_spikes(spec, rng);
    case GeneratorKind::multi_freq_switch: return detail::multi_freq_switch(spec, rng);
    case GeneratorKind::gp_kernel_mix: return detail::gp_kernel_mix(spec, rng);
    case GeneratorKind::tsmixup: break;
  }
  // 1..max_components base series, each scaled by its mean absolute value,
  // combined with flat Dirichlet weights.
  constexpr GeneratorKind kBases[] = {GeneratorKind::trend_exp, GeneratorKind::sparse_spikes,
                                      GeneratorKind::multi_freq_switch};
  const auto k = static_cast<std::size_t>(rng.integer(1, spec.max_components));
  std::vector<std::vector<double>> parts;
  for (std::size_t i = 0; i < k; ++i) {
    auto sub = random_spec(kBases[rng.integer(0, 2)], spec.length, derive_seed(spec.seed, i + 1));
    auto x = generate_values(sub);
    double scale = 0.0;
    for (double v : x) scale += std::abs(v);
    scale /= static_cast<double>(x.size());
    if (scale > 0.0)
      for (auto& v : x) v /= scale;
    parts.push_back(std::move(x));
  }
  return mixup(parts, dirichlet_ones(k, rng));
}

inline TimeSeries generate(const GeneratorSpec& spec) {
  TimeSeries ts;
  ts.id = to_string(spec.kind) + "-" + std::to_string(spec.seed);
  ts.values = generate_values(spec);
  return ts;
}

/// n (context, horizon) windows; each series is TSMixup with probability
/// `p_mixup` and a GP draw otherwise. Ids are "<kind>-<index>".
inline std::vector<WindowPair> make_corpus(std::size_t n_series, double p_mixup, std::size_t context,
                                           std::size_t horizon, std::uint64_t seed, std::size_t workers = 1) {
  if (n_series < 1) throw Error(ErrorKind::invalid_argument, "corpus needs at least one series");
  if (!(p_mixup >= 0.0 && p_mixup <= 1.0)) throw Error(ErrorKind::invalid_argument, "mix probability outside [0, 1]");
  if (context < 1 || horizon < 1) throw Error(ErrorKind::invalid_argument, "window lengths must be >= 1");
  std::vector<WindowPair> out(n_series);
  std::vector<std::string> errors(n_series);
  parallel_for(n_series, workers, [&](std::size_t i) {
    try {
      const std::uint64_t s = derive_seed(seed, i);
      Rng pick(derive_seed(s, 1));
      const auto kind = pick.bernoulli(p_mixup) ? GeneratorKind::tsmixup : GeneratorKind::gp_kernel_mix;
      auto spec = random_spec(kind, context + horizon, s);
      const auto x = generate_values(spec);
      char id[32];
      std::snprintf(id, sizeof id, "%06zu", i);
      out[i].id = to_string(kind) + "-" + id;
      out[i].context.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(context));
      out[i].horizon.assign(x.begin() + static_cast<std::ptrdiff_t>(context), x.end());
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) throw Error(ErrorKind::degenerate, "corpus generation failed: " + e);
  return out;
}

}  // namespace wavetoken
