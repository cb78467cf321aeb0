// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "wavetoken/codebook.hpp"
#include "wavetoken/data_synth.hpp"
#include "wavetoken/dwt.hpp"
#include "wavetoken/metrics.hpp"
#include "wavetoken/random.hpp"
#include "wavetoken/seq_model.hpp"
#include "wavetoken/thresholding.hpp"
#include "wavetoken/tokenizer.hpp"

using namespace wavetoken;
using Clock = std::chrono::steady_clock;

namespace {

// Synthesis gain max ||IDWT(delta)||_inf / ||delta||_inf of bior2.2, J = 1,
// N = 512 (maximum absolute row sum of the synthesis matrix, 3/sqrt(2)).
constexpr double kKappaBior22 = 2.1213203435596428;

// Coefficient counts for bior2.2 (L = 6), J = 1: floor((n + 5) / 2).
constexpr std::size_t kHorizonSegment = 34;   // n = 64
constexpr std::size_t kContextSegment = 258;  // n = 512

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("%s %2d  %-34s %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  failures += ok ? 0 : 1;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::vector<double> normal_signal(Rng& rng, std::size_t n) {
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal();
  return x;
}

std::vector<double> random_walk(Rng& rng, std::size_t n) {
  std::vector<double> x(n);
  double level = rng.uniform(-5, 5);
  for (auto& v : x) {
    level += rng.normal(0.0, 0.3);
    v = level + 0.5 * rng.normal();
  }
  return x;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double rmse(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

const char* kFamilies[] = {"haar", "db2", "db4", "bior2.2"};

// ---------------------------------------------------------------------------

void perfect_reconstruction_and_parseval() {
  Rng rng(2024);
  const auto t0 = Clock::now();
  double worst = 0.0, worst_energy = 0.0;
  std::size_t n_signals = 0, n_parseval = 0;
  while (n_signals < 1200) {
    const auto n = static_cast<std::size_t>(rng.integer(2, 1024));
    const auto f = get_family(kFamilies[rng.integer(0, 3)]);
    const int deepest = std::min(max_level(n, f), 5);
    if (deepest < 1) continue;
    const int level = static_cast<int>(rng.integer(1, deepest));
    const auto mode = rng.bernoulli(0.5) ? BoundaryMode::symmetric : BoundaryMode::periodic;
    const auto x = normal_signal(rng, n);
    worst = std::max(worst, max_abs_diff(reconstruct(decompose(x, f, level, mode), f), x));
    ++n_signals;

    if (f.orthogonal) {
      // Periodization on a length divisible by 2^J is the orthogonal case.
      const std::size_t m = (n >> level) << level;
      if (m == 0 || max_level(m, f) < level) continue;
      const std::vector<double> y(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(m));
      const auto p = decompose(y, f, level, BoundaryMode::periodic);
      double ex = 0.0, ec = 0.0;
      for (double v : y) ex += v * v;
      for (double v : p.approx) ec += v * v;
      for (const auto& d : p.details)
        for (double v : d) ec += v * v;
      worst_energy = std::max(worst_energy, std::abs(ec - ex) / ex);
      ++n_parseval;
    }
  }
  const double elapsed = seconds_since(t0);
  report(1, "perfect reconstruction", worst <= 1e-9 && elapsed < 10.0,
         fmt("max |x - IDWT(DWT(x))| = %.3g over %zu signals (<= 1e-9), %.2f s (< 10 s)", worst, n_signals,
             elapsed));
  report(2, "Parseval (orthogonal families)", worst_energy <= 1e-10 && n_parseval > 0,
         fmt("max relative energy mismatch = %.3g over %zu signals (<= 1e-10)", worst_energy, n_parseval));
}

void linear_complexity() {
  const auto f = get_family("bior2.2");
  Rng rng(7);
  auto median_time = [&](std::size_t n) {
    const auto x = normal_signal(rng, n);
    const int reps = static_cast<int>(std::max<std::size_t>(21, (std::size_t{1} << 24) / n));
    std::vector<double> t(static_cast<std::size_t>(reps));
    volatile double sink = decompose(x, f, 5).approx[0];  // warm-up
    for (auto& v : t) {
      const auto t0 = Clock::now();
      const auto p = decompose(x, f, 5);
      v = seconds_since(t0);
      sink = sink + p.approx[0];
    }
    std::nth_element(t.begin(), t.begin() + reps / 2, t.end());
    return t[static_cast<std::size_t>(reps / 2)];
  };
  double worst = 0.0;
  int worst_k = 0;
  double prev = median_time(std::size_t{1} << 12);
  for (int k = 12; k <= 19; ++k) {
    const double next = median_time(std::size_t{1} << (k + 1));
    if (next / prev > worst) worst = next / prev, worst_k = k;
    prev = next;
  }
  report(3, "linear-time decomposition", worst <= 3.0,
         fmt("max median-time ratio T(2^(k+1))/T(2^k) = %.2f at k = %d (<= 3, k = 12..19)", worst, worst_k));
}

void coefficient_layout_counts() {
  const auto f = get_family("bior2.2");
  // Oracle: one symmetric analysis step keeps floor((n + L - 1) / 2) samples.
  auto oracle = [&](std::size_t n) { return (n + f.filter_length() - 1) / 2; };
  const auto hor = coefficient_layout(64, f, 1);
  const auto ctx = coefficient_layout(512, f, 1);
  const bool ok = hor == std::vector<std::size_t>{kHorizonSegment, kHorizonSegment} &&
                  ctx == std::vector<std::size_t>{kContextSegment, kContextSegment} &&
                  oracle(64) == kHorizonSegment && oracle(512) == kContextSegment;
  report(4, "coefficient layout (C=512, H=64)", ok,
         fmt("horizon [%zu, %zu], context [%zu, %zu] total %zu (expect [34, 34], 516)", hor[0], hor[1], ctx[0],
             ctx[1], ctx[0] + ctx[1]));
}

/// max absolute row sum of the J = 1 synthesis matrix at length n.
double synthesis_gain(const WaveletFamily& f, std::size_t n) {
  auto p = decompose(std::vector<double>(n, 0.0), f, 1);
  std::vector<double> row_sum(n, 0.0);
  auto column = [&](std::vector<double>& seg) {
    for (auto& c : seg) {
      c = 1.0;
      const auto x = reconstruct(p, f);
      for (std::size_t i = 0; i < n; ++i) row_sum[i] += std::abs(x[i]);
      c = 0.0;
    }
  };
  column(p.approx);
  column(p.details[0]);
  return *std::max_element(row_sum.begin(), row_sum.end());
}

Codebook corpus_codebook() {
  // Fit on pooled context coefficients of a synthetic corpus, the usual way.
  const auto corpus = make_corpus(200, 0.9, 512, 64, 11, 4);
  TokenizerConfig cfg;
  std::vector<double> pooled;
  for (const auto& w : corpus) {
    const auto sc = scaled_coefficients(w.context, cfg, compute_scale(w.context));
    pooled.insert(pooled.end(), sc.pyramid.approx.begin(), sc.pyramid.approx.end());
    for (const auto& d : sc.pyramid.details) pooled.insert(pooled.end(), d.begin(), d.end());
  }
  return fit_codebook(pooled, 1024, -30, 30);
}

bool coefficients_in_range(const ScaledCoefficients& sc, const Codebook& cb) {
  const double lo = cb.centers.front() - cb.width / 2, hi = cb.centers.back() + cb.width / 2;
  auto ok = [&](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double c) { return c >= lo && c <= hi; });
  };
  if (!ok(sc.pyramid.approx)) return false;
  for (const auto& d : sc.pyramid.details)
    if (!ok(d)) return false;
  return true;
}

void quantization_round_trip(const Codebook& cb) {
  const double kappa = synthesis_gain(get_family("bior2.2"), 512);
  Rng rng(31);
  double worst_haar = 0.0, worst_bior = 0.0;
  std::size_t used = 0, skipped = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto x = random_walk(rng, 512);
    bool in_range = true;
    double ratio[2];
    for (int k = 0; k < 2; ++k) {
      TokenizerConfig cfg;
      cfg.family = k == 0 ? "haar" : "bior2.2";
      const auto scale = compute_scale(x);
      in_range = in_range && coefficients_in_range(scaled_coefficients(x, cfg, scale), cb);
      const auto ts = tokenize(x, cfg, cb);
      const double bound = (k == 0 ? 1.0 : kKappaBior22) * cb.width / 2 * ts.scale.sigma;
      ratio[k] = rmse(detokenize(ts, cb, get_family(cfg.family)), x) / bound;
    }
    if (!in_range) {
      ++skipped;
      continue;
    }
    ++used;
    worst_haar = std::max(worst_haar, ratio[0]);
    worst_bior = std::max(worst_bior, ratio[1]);
  }
  const bool ok = used >= 100 && worst_haar <= 1.0 && worst_bior <= 1.0 && std::abs(kappa - kKappaBior22) < 1e-12;
  report(5, "quantization round trip", ok,
         fmt("RMSE/bound max haar %.3f, bior2.2 %.3f (kappa %.6f) over %zu in-range signals (%zu clipped)",
             worst_haar, worst_bior, kappa, used, skipped));
}

void visushrink() {
  const double lambda = universal_threshold(1.0, 1024);
  Rng rng(41);
  ThresholdSpec spec;
  spec.method = ThresholdMethod::visu_soft;
  const auto haar = get_family("haar");
  double zeroed = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto p = apply_threshold(decompose(normal_signal(rng, 1024), haar, 1), spec);
    const auto& d1 = p.detail_at(1);
    zeroed += static_cast<double>(std::count(d1.begin(), d1.end(), 0.0)) / static_cast<double>(d1.size());
  }
  zeroed /= 1000.0;
  report(6, "VisuShrink", std::abs(lambda - 3.7233) <= 1e-4 && zeroed >= 0.99,
         fmt("lambda(1, 1024) = %.6f (3.7233 +- 1e-4), zeroed level-1 details %.4f (>= 0.99)", lambda, zeroed));
}

void fdrc() {
  const std::vector<double> p{0.001, 0.2, 0.5, 0.9};
  const auto cut = fdr_step_up(p, 0.05);
  const double sigma = 1.7;
  const double lambda = cut ? pvalue_to_threshold(cut->pvalue, sigma) : NAN;
  const bool example_ok = cut && cut->rank == 1 && std::abs(lambda / sigma - 3.2905) <= 1e-3;

  Rng rng(43);
  ThresholdSpec spec;
  spec.method = ThresholdMethod::fdrc;
  spec.q = 0.05;
  const auto haar = get_family("haar");
  double retained = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto pyr = apply_threshold(decompose(normal_signal(rng, 1024), haar, 1), spec);
    const auto& d1 = pyr.detail_at(1);
    retained += static_cast<double>(d1.size() - std::count(d1.begin(), d1.end(), 0.0)) / static_cast<double>(d1.size());
  }
  retained /= 100.0;
  report(7, "FDRC", example_ok && retained <= 2 * spec.q,
         fmt("i0 = %zu, lambda/sigma = %.5f (3.2905 +- 1e-3), null retained fraction %.4f (<= %.2f)",
             cut ? cut->rank : 0, lambda / sigma, retained, 2 * spec.q));
}

void metric_identities() {
  const std::vector<double> y{3, -1, 4, 1, 5, -9, 2, 6}, ctx{1, 2, 3, 4, 3, 2, 1, 2};
  std::vector<std::vector<double>> perfect(kQuantileLevels.size(), y);
  const double wql0 = wql(y, perfect), mase0 = mase(y, y, ctx, 1), vrse0 = vrse(y, y);

  // truth 10, every quantile 8: (1/9) sum_a 2 a (10 - 8) / 10 = 0.2.
  const double wql_hand = wql(std::vector<double>{10}, std::vector<std::vector<double>>(9, std::vector<double>{8}));
  // context 1..4 (naive error 1), forecast {5, 7} for truth {5, 6}: mean error 0.5.
  const double mase_hand =
      mase(std::vector<double>{5, 6}, std::vector<double>{5, 7}, std::vector<double>{1, 2, 3, 4}, 1);
  std::vector<double> twice(y);
  for (auto& v : twice) v *= 2;
  const double vrse_double = vrse(y, twice);
  const double geo = aggregate_relative(std::vector<double>{0.25, 4.0}, std::vector<double>{1.0, 1.0}).value;

  const bool ok = wql0 == 0 && mase0 == 0 && vrse0 == 0 && std::abs(wql_hand - 0.2) <= 1e-12 &&
                  std::abs(mase_hand - 0.5) <= 1e-12 && std::abs(vrse_double - 1.0) <= 1e-12 &&
                  std::abs(geo - 1.0) <= 1e-12;
  report(8, "metric identities", ok,
         fmt("perfect (%g, %g, %g), WQL %.15g, MASE %.15g, VRSE(2y) %.15g, geomean %.15g", wql0, mase0, vrse0,
             wql_hand, mase_hand, vrse_double, geo));
}

void vrse_pitfall() {
  const std::size_t n = 64, period = 16, shift = 4;
  std::vector<double> y(n), shifted(n);
  for (std::size_t t = 0; t < n; ++t) {
    y[t] = 3.0 + std::sin(2 * std::numbers::pi * static_cast<double>(t) / period);
  }
  for (std::size_t t = 0; t < n; ++t) shifted[t] = y[(t + shift) % n];
  // The median minimizes MAE among constants; the mean minimizes VRSE (only DC is matched).
  std::vector<double> sorted(y);
  std::sort(sorted.begin(), sorted.end());
  const double med = 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  double mean = 0.0;
  for (double v : y) mean += v / static_cast<double>(n);
  auto mae = [&](const std::vector<double>& f) {
    double s = 0.0;
    for (std::size_t t = 0; t < n; ++t) s += std::abs(y[t] - f[t]);
    return s / static_cast<double>(n);
  };
  const double v_shift = vrse(y, shifted), v_const = vrse(y, std::vector<double>(n, mean));
  const double m_shift = mae(shifted), m_const = mae(std::vector<double>(n, med));
  report(9, "VRSE pitfall", v_shift < v_const && m_shift > m_const,
         fmt("VRSE shifted %.3g < constant %.3g, MAE shifted %.4f > constant %.4f", v_shift, v_const, m_shift,
             m_const));
}

void learnability(const Codebook& cb) {
  const auto t0 = Clock::now();
  // Even samples trace a period-8 sine, odd samples sit at the mean, so haar
  // maps both coefficient segments to the same period-8 token cycle.
  const std::size_t period = 8, c = 512, h = 64;
  std::vector<double> x(c + h);
  for (std::size_t t = 0; t < x.size(); ++t)
    x[t] = 5.0 + (t % 2 == 0 ? 3.0 * std::sin(2 * std::numbers::pi * static_cast<double>(t / 2) / period) : 0.0);
  TokenizerConfig cfg;
  cfg.family = "haar";
  const std::span<const double> s(x);
  const auto [ctx, hor] = tokenize_pair(s.first(c), s.subspan(c), cfg, cb);

  // Smallest period of the context stream.
  std::size_t found = 0;
  for (std::size_t p = 1; p <= 64 && !found; ++p) {
    bool periodic = true;
    for (std::size_t i = p; i < ctx.tokens.size() && periodic; ++i) periodic = ctx.tokens[i] == ctx.tokens[i - p];
    if (periodic) found = p;
  }
  const int order = static_cast<int>(period);
  const auto model = train_markov({{ctx, hor}}, order, 0.01, cb.vocab_size());
  SamplingOptions opt;
  opt.temperature = 0.0;
  opt.n_samples = 1;
  const auto f = sample_forecast(model, ctx, h, cfg, cb, opt);
  const std::vector<TokenId> want(hor.tokens.begin(), hor.tokens.end() - 1);
  const bool exact = f.tokens[0] == want;
  const double err = rmse(f.paths[0], s.subspan(c));
  const double bound = cb.width / 2 * ctx.scale.sigma;
  const double elapsed = seconds_since(t0);
  report(10, "end-to-end learnability", found > 0 && found <= period && exact && err <= bound && elapsed < 5.0,
         fmt("stream period %zu <= k = %d, greedy horizon %s, RMSE %.4g <= %.4g, %.2f s (< 5 s)", found, order,
             exact ? "exact" : "differs", err, bound, elapsed));
}

void invariances(const Codebook& cb) {
  Rng rng(53);
  std::size_t broken = 0;
  for (int trial = 0; trial < 100; ++trial) {
    TokenizerConfig cfg;
    const auto x = random_walk(rng, 512);
    const auto ref = tokenize(x, cfg, cb).tokens;
    const double c = rng.uniform(-100, 100);
    const double alpha = std::exp(rng.uniform(std::log(0.01), std::log(100.0)));
    std::vector<double> shifted(x), scaled(x);
    for (auto& v : shifted) v += c;
    for (auto& v : scaled) v *= alpha;
    broken += tokenize(shifted, cfg, cb).tokens != ref;
    broken += tokenize(scaled, cfg, cb).tokens != ref;
  }
  report(11, "shift and scale invariance", broken == 0,
         fmt("%zu of 200 transformed signals changed tokens", broken));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void determinism() {
  namespace fs = std::filesystem;
  const auto root = fs::temp_directory_path() / "wavetoken_acceptance";
  fs::remove_all(root);
  const std::vector<std::string> sizes{"--context", "128", "--horizon", "32", "--seed", "17"};
  auto run = [&](const fs::path& dir) {
    fs::create_directories(dir);
    auto p = [&](const char* name) { return (dir / name).string(); };
    std::ostringstream out, err;
    int rc = 0;
    auto call = [&](std::vector<std::string> args) {
      args.insert(args.begin(), "wavetoken");
      args.insert(args.end(), sizes.begin(), sizes.end());
      rc |= cli::run(args, out, err);
    };
    call({"synth", "--series", "40", "--out", p("corpus.jsonl")});
    call({"fit-codebook", "--data", p("corpus.jsonl"), "--out", p("codebook.json")});
    call({"train", "--data", p("corpus.jsonl"), "--codebook", p("codebook.json"), "--out", p("model.json")});
    call({"forecast", "--data", p("corpus.jsonl"), "--codebook", p("codebook.json"), "--model", p("model.json"),
          "--workers", "4", "--out", p("forecasts.jsonl")});
    return rc;
  };
  const int rc = run(root / "a") | run(root / "b");
  std::size_t same = 0;
  for (const char* name : {"corpus.jsonl", "codebook.json", "model.json", "forecasts.jsonl"}) {
    const auto a = slurp(root / "a" / name);
    same += !a.empty() && a == slurp(root / "b" / name);
  }
  fs::remove_all(root);
  report(12, "determinism", rc == 0 && same == 4,
         fmt("%zu of 4 artifacts byte-identical (corpus, codebook, model, forecasts), exit %d", same, rc));
}

}  // namespace

int main() {
  auto guard = [](int id, const char* name, const std::function<void()>& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, name, false, std::string("threw: ") + e.what());
    }
  };
  guard(1, "perfect reconstruction", perfect_reconstruction_and_parseval);
  guard(3, "linear-time decomposition", linear_complexity);
  guard(4, "coefficient layout (C=512, H=64)", coefficient_layout_counts);
  const auto cb = corpus_codebook();
  guard(5, "quantization round trip", [&] { quantization_round_trip(cb); });
  guard(6, "VisuShrink", visushrink);
  guard(7, "FDRC", fdrc);
  guard(8, "metric identities", metric_identities);
  guard(9, "VRSE pitfall", vrse_pitfall);
  guard(10, "end-to-end learnability", [&] { learnability(cb); });
  guard(11, "shift and scale invariance", [&] { invariances(cb); });
  guard(12, "determinism", determinism);
  std::printf("%s: %d failing criteria\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
