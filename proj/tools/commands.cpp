#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "wavetoken/codebook.hpp"
#include "wavetoken/data_io.hpp"
#include "wavetoken/data_synth.hpp"
#include "wavetoken/metrics.hpp"
#include "wavetoken/parallel.hpp"
#include "wavetoken/seq_model.hpp"
#include "wavetoken/tokenizer.hpp"

namespace wavetoken::cli {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::fingerprint_mismatch: return kMismatch;
    case ErrorKind::io:
    case ErrorKind::format:
    case ErrorKind::version: return kIo;
    default: return kUsage;
  }
}

namespace {

constexpr const char* kBaseline = "seasonal_naive";

/// Per-item failures collected while the rest of a batch keeps going.
struct Failures {
  std::vector<std::string> items;

  void add(std::string what) { items.push_back(std::move(what)); }
  void absorb(std::vector<std::string>& slots) {
    for (auto& s : slots)
      if (!s.empty()) items.push_back(std::move(s));
  }

  int report(std::ostream& err, const std::string& noun) const {
    for (const auto& s : items) err << "error: " << s << '\n';
    if (items.empty()) return kOk;
    err << items.size() << ' ' << noun << " failed\n";
    return kPartial;
  }
};

template <typename Fn>
int guarded(std::ostream& err, Fn&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  }
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

/// File name without directories and data extensions.
std::string dataset_label(const std::string& path) {
  std::string name = std::filesystem::path(path).filename().string();
  for (const char* ext : {".gz", ".csv", ".jsonl", ".json"})
    if (ends_with(name, ext)) name.resize(name.size() - std::string_view(ext).size());
  return name;
}

struct LoadedSet {
  std::string label;
  Dataset data;
};

std::vector<LoadedSet> load_all(const std::vector<std::string>& paths, const std::string& freq) {
  if (paths.empty()) throw Error(ErrorKind::invalid_argument, "no dataset given");
  std::vector<LoadedSet> out;
  for (const auto& p : paths) {
    LoadedSet s{dataset_label(p), load_dataset(p, std::nullopt, freq)};
    for (const auto& o : out)
      if (o.label == s.label) throw Error(ErrorKind::invalid_argument, "two datasets are named '" + s.label + "'");
    out.push_back(std::move(s));
  }
  return out;
}

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  write_text_file(path, text);
}

void write_atomically(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  write_text_file(tmp, text);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::io, "cannot replace " + path + ": " + ec.message());
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

json parse_record(const std::string& line, const std::string& where) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::format, where + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Pipeline stages shared by several commands

std::vector<WindowPair> training_pairs(const std::vector<LoadedSet>& sets, const RunConfig& cfg, bool use_all) {
  std::vector<WindowPair> out;
  for (const auto& s : sets) {
    const auto series = use_all ? s.data.series : split_last_h(s.data, cfg.horizon, cfg.context).train;
    auto w = training_windows(series, cfg.context, cfg.horizon, cfg.stride, cfg.min_window());
    for (auto& p : w) {
      p.id = s.label + "/" + p.id;
      out.push_back(std::move(p));
    }
  }
  if (out.empty())
    throw Error(ErrorKind::degenerate, "no training windows: every series is shorter than H + " +
                                           std::to_string(cfg.min_window()));
  return out;
}

struct Pool {
  std::vector<double> values;
  std::size_t windows_used = 0;
};

/// Observed coefficients of every window (context and horizon, context scale).
Pool pool_coefficients(const std::vector<WindowPair>& windows, const RunConfig& cfg, Failures& failures) {
  std::vector<std::vector<double>> parts(windows.size());
  std::vector<std::string> errors(windows.size());
  parallel_for(windows.size(), cfg.workers, [&](std::size_t i) {
    try {
      const auto& w = windows[i];
      const auto scale = compute_scale(w.context);
      for (const auto* x : {&w.context, &w.horizon}) {
        const auto sc = scaled_coefficients(*x, cfg.tokenizer, scale);
        for (std::size_t k = 0; k < sc.pyramid.approx.size(); ++k)
          if (sc.mask.approx[k]) parts[i].push_back(sc.pyramid.approx[k]);
        for (std::size_t s = 0; s < sc.pyramid.details.size(); ++s)
          for (std::size_t k = 0; k < sc.pyramid.details[s].size(); ++k)
            if (sc.mask.details[s][k]) parts[i].push_back(sc.pyramid.details[s][k]);
      }
    } catch (const std::exception& e) {
      errors[i] = windows[i].id + ": " + e.what();
      parts[i].clear();
    }
  });
  Pool pool;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (!errors[i].empty()) continue;
    pool.values.insert(pool.values.end(), parts[i].begin(), parts[i].end());
    ++pool.windows_used;
  }
  failures.absorb(errors);
  if (pool.values.size() < 2) throw Error(ErrorKind::degenerate, "too few observed coefficients to fit a codebook");
  return pool;
}

Codebook fit_from_pool(const Pool& pool, const RunConfig& cfg) {
  return fit_codebook(pool.values, cfg.vocab_budget, cfg.lo, cfg.hi, cfg.binning);
}

/// Share of coefficients beyond half a bin past the outermost centers.
double clamp_rate(const std::vector<double>& values, const Codebook& cb) {
  const auto& c = cb.centers;
  const double lo = c.front() - (c[1] - c[0]) / 2.0;
  const double hi = c.back() + (c[c.size() - 1] - c[c.size() - 2]) / 2.0;
  std::size_t n = 0;
  for (double v : values) n += (v < lo || v > hi) ? 1 : 0;
  return values.empty() ? 0.0 : static_cast<double>(n) / static_cast<double>(values.size());
}

MarkovModel train_from_windows(const std::vector<WindowPair>& windows, const RunConfig& cfg, const Codebook& cb,
                               Failures& failures) {
  std::vector<std::optional<std::pair<TokenStream, TokenStream>>> streams(windows.size());
  std::vector<std::string> errors(windows.size());
  parallel_for(windows.size(), cfg.workers, [&](std::size_t i) {
    try {
      streams[i] = tokenize_pair(windows[i].context, windows[i].horizon, cfg.tokenizer, cb);
    } catch (const std::exception& e) {
      errors[i] = windows[i].id + ": " + e.what();
    }
  });
  failures.absorb(errors);
  std::vector<std::pair<TokenStream, TokenStream>> corpus;
  for (auto& s : streams)
    if (s) corpus.push_back(std::move(*s));
  if (corpus.empty()) throw Error(ErrorKind::degenerate, "no window could be tokenized");
  return train_markov(corpus, cfg.order, cfg.alpha, cb.vocab_size(), cb.pad_id);
}

std::uint64_t series_seed(std::uint64_t seed, const std::string& label, const std::string& id) {
  return derive_seed(seed, fnv1a64(label + "/" + id));
}

std::vector<std::vector<double>> markov_paths(const MarkovModel& model, const Codebook& cb, const RunConfig& cfg,
                                              std::span<const double> context, std::uint64_t seed) {
  const auto ctx = tokenize(context, cfg.tokenizer, cb);
  SamplingOptions opt;
  opt.n_samples = cfg.n_samples;
  opt.temperature = cfg.temperature;
  opt.seed = seed;
  opt.workers = 1;
  return sample_forecast(model, ctx, cfg.horizon, cfg.tokenizer, cb, opt).paths;
}

std::size_t season_for(std::size_t season, std::size_t context_length) {
  return context_length > season ? season : 1;
}

QuantileForecast naive_forecast(std::span<const double> context, std::size_t season, std::size_t horizon) {
  return seasonal_naive(context, season_for(season, context.size()), horizon);
}

/// Test windows of one dataset, or (future) the last C points of each series.
std::vector<WindowPair> forecast_windows(const Dataset& ds, const RunConfig& cfg, bool future, std::ostream& err) {
  if (!future) {
    auto split = split_last_h(ds, cfg.horizon, cfg.context);
    for (const auto& id : split.skipped)
      err << "warning: " << ds.name << ": series '" << id << "' is not longer than H = " << cfg.horizon
          << ", skipped\n";
    return std::move(split.test);
  }
  std::vector<WindowPair> out;
  for (const auto& s : ds.series) {
    WindowPair w;
    w.id = s.id;
    const std::size_t c0 = s.values.size() > cfg.context ? s.values.size() - cfg.context : 0;
    w.context.assign(s.values.begin() + static_cast<std::ptrdiff_t>(c0), s.values.end());
    out.push_back(std::move(w));
  }
  return out;
}

Codebook load_checked_codebook(const std::string& path, const RunConfig& cfg) {
  json meta;
  auto cb = load_codebook(path, &meta);
  const std::string want = cfg.tokenizer_fingerprint();
  const std::string have = meta.value("tokenizer_fingerprint", "");
  if (have != want)
    throw Error(ErrorKind::fingerprint_mismatch, path + " was fitted under tokenizer fingerprint '" + have +
                                                     "' but this run uses '" + want + "' (" +
                                                     cfg.tokenizer_json().dump() + ")");
  return cb;
}

// ---------------------------------------------------------------------------
// Scoring

struct ScoredSet {
  DatasetMetrics metrics;
  bool complete = true;
};

/// Scores forecasts[i] against test[i]; a missing forecast marks the set incomplete.
ScoredSet score_set(const std::vector<WindowPair>& test, const std::vector<std::optional<QuantileForecast>>& forecasts,
                    std::size_t season) {
  std::vector<SeriesMetrics> per;
  ScoredSet out;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (!forecasts[i]) {
      out.complete = false;
      continue;
    }
    const auto& w = test[i];
    per.push_back(score_forecast(w.horizon, *forecasts[i], w.context, season_for(season, w.context.size())));
  }
  out.metrics = aggregate_dataset(per);
  if (!out.complete) out.metrics = DatasetMetrics{};
  return out;
}

struct Aggregate {
  std::vector<double> relative_wql, relative_mase, rank_wql, rank_mase;
};

/// table[m][d] with row 0 the baseline.
Aggregate aggregate_models(const std::vector<std::vector<DatasetMetrics>>& table, std::ostream& err) {
  const std::size_t n_models = table.size();
  const std::size_t n_data = n_models ? table[0].size() : 0;
  Aggregate a;
  a.relative_wql.assign(n_models, NAN);
  a.relative_mase.assign(n_models, NAN);
  a.rank_wql.assign(n_models, NAN);
  a.rank_mase.assign(n_models, NAN);
  auto column = [&](std::size_t m, double DatasetMetrics::*field) {
    std::vector<double> v(n_data);
    for (std::size_t d = 0; d < n_data; ++d) v[d] = table[m][d].*field;
    return v;
  };
  for (std::size_t m = 0; m < n_models; ++m) {
    try {
      a.relative_wql[m] = aggregate_relative(column(m, &DatasetMetrics::wql), column(0, &DatasetMetrics::wql)).value;
    } catch (const Error&) {
    }
    try {
      a.relative_mase[m] =
          aggregate_relative(column(m, &DatasetMetrics::mase), column(0, &DatasetMetrics::mase)).value;
    } catch (const Error&) {
    }
  }
  // Ranks use only datasets where every model has a finite score.
  auto ranks = [&](double DatasetMetrics::*field, std::vector<double>& dst, const char* what) {
    std::vector<std::vector<double>> t(n_models);
    for (std::size_t d = 0; d < n_data; ++d) {
      bool ok = true;
      for (std::size_t m = 0; m < n_models; ++m) ok = ok && std::isfinite(table[m][d].*field);
      if (!ok) continue;
      for (std::size_t m = 0; m < n_models; ++m) t[m].push_back(table[m][d].*field);
    }
    if (t[0].empty()) {
      err << "warning: no dataset has a finite " << what << " for every model; ranks omitted\n";
      return;
    }
    dst = average_rank(t);
  };
  if (n_models > 0) {
    ranks(&DatasetMetrics::wql, a.rank_wql, "wql");
    ranks(&DatasetMetrics::mase, a.rank_mase, "mase");
  }
  return a;
}

struct ParsedForecast {
  std::string fingerprint;
  std::map<std::pair<std::string, std::string>, std::vector<std::vector<double>>> samples;
};

}  // namespace

// ---------------------------------------------------------------------------
// Commands

int fit_codebook(const FitCodebookArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    a.cfg.validate();
    if (a.out.empty()) throw Error(ErrorKind::invalid_argument, "--out is required");
    const auto sets = load_all(a.data, a.freq);
    const auto windows = training_pairs(sets, a.cfg, a.use_all);
    Failures failures;
    const auto pool = pool_coefficients(windows, a.cfg, failures);
    const auto cb = fit_from_pool(pool, a.cfg);
    ojson meta;
    meta["tokenizer_fingerprint"] = a.cfg.tokenizer_fingerprint();
    meta["tokenizer"] = a.cfg.tokenizer_json();
    meta["windows"] = pool.windows_used;
    meta["coefficients"] = pool.values.size();
    save_codebook(a.out, cb, json(meta));
    out << "windows " << pool.windows_used << "  coefficients " << pool.values.size() << '\n'
        << "bins B = " << cb.bin_count() << "  vocabulary = " << cb.vocab_size() << "  width h = "
        << short_fmt(cb.width) << '\n'
        << "clamp rate " << short_fmt(clamp_rate(pool.values, cb)) << '\n'
        << "codebook " << codebook_hash(cb) << " -> " << a.out << '\n';
    return failures.report(err, "windows");
  });
}

int tokenize(const TokenizeArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    a.cfg.validate();
    const auto cb = load_checked_codebook(a.codebook, a.cfg);
    const auto sets = load_all(a.data, a.freq);
    const auto family = get_family(a.cfg.tokenizer.family);
    const std::string cb_hash = codebook_hash(cb);
    const std::string fp = a.cfg.tokenizer_fingerprint();
    std::string text;
    Failures failures;
    for (const auto& set : sets) {
      const auto& series = set.data.series;
      std::vector<std::string> lines(series.size()), errors(series.size());
      std::vector<double> rmse(series.size(), NAN);
      std::vector<std::size_t> pads(series.size(), 0), counts(series.size(), 0);
      parallel_for(series.size(), a.cfg.workers, [&](std::size_t i) {
        const auto& s = series[i];
        try {
          const auto ts = wavetoken::tokenize(s.values, a.cfg.tokenizer, cb);
          const auto back = wavetoken::detokenize(ts, cb, family);
          double se = 0.0;
          std::size_t n = 0;
          for (std::size_t t = 0; t < s.values.size(); ++t) {
            if (is_missing(s.values[t])) continue;
            const double e = (back[t] - s.values[t]) / ts.scale.sigma;
            se += e * e;
            ++n;
          }
          rmse[i] = n ? std::sqrt(se / static_cast<double>(n)) : 0.0;
          pads[i] = static_cast<std::size_t>(std::count(ts.tokens.begin(), ts.tokens.end(), cb.pad_id));
          counts[i] = ts.tokens.size();
          ojson r;
          r["dataset"] = set.label;
          r["id"] = s.id;
          r["start"] = s.start;
          r["freq"] = s.freq;
          r["tokens"] = ts.tokens;
          r["segment_lengths"] = ts.segment_lengths;
          r["scale"] = {{"mu", ts.scale.mu}, {"sigma", ts.scale.sigma}};
          r["family"] = ts.family_name;
          r["level"] = ts.level;
          r["boundary"] = to_string(ts.boundary);
          r["source_length"] = ts.source_length;
          r["codebook_hash"] = cb_hash;
          r["tokenizer_fingerprint"] = fp;
          lines[i] = r.dump() + '\n';
        } catch (const std::exception& e) {
          errors[i] = set.label + "/" + s.id + ": " + e.what();
        }
      });
      failures.absorb(errors);
      std::size_t pad_total = 0, token_total = 0, ok = 0;
      double rmse_max = 0.0, rmse_sum = 0.0;
      for (std::size_t i = 0; i < series.size(); ++i) {
        text += lines[i];
        if (std::isnan(rmse[i])) continue;
        ++ok;
        pad_total += pads[i];
        token_total += counts[i];
        rmse_max = std::max(rmse_max, rmse[i]);
        rmse_sum += rmse[i];
      }
      out << set.label << ": " << ok << '/' << series.size() << " series  PAD rate "
          << short_fmt(token_total ? static_cast<double>(pad_total) / static_cast<double>(token_total) : 0.0)
          << "  round-trip RMSE (scaled) mean " << short_fmt(ok ? rmse_sum / static_cast<double>(ok) : 0.0)
          << " max " << short_fmt(rmse_max) << "  bound h/2 = " << short_fmt(cb.width / 2.0)
          << (family.orthogonal ? "" : " (times the synthesis gain)") << '\n';
    }
    write_output(a.out, text, out);
    return failures.report(err, "series");
  });
}

int detokenize(const DetokenizeArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    a.cfg.validate();
    if (a.out.empty()) throw Error(ErrorKind::invalid_argument, "--out is required");
    const auto cb = load_checked_codebook(a.codebook, a.cfg);
    const std::string cb_hash = codebook_hash(cb);
    const std::string fp = a.cfg.tokenizer_fingerprint();
    const auto lines = split_lines(read_text_file(a.tokens));
    std::vector<json> records;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const std::string where = a.tokens + ":" + std::to_string(i + 1);
      auto r = parse_record(lines[i], where);
      if (r.value("codebook_hash", "") != cb_hash)
        throw Error(ErrorKind::fingerprint_mismatch,
                    where + ": tokens were made with codebook '" + r.value("codebook_hash", "") + "', not '" + cb_hash + "'");
      if (r.value("tokenizer_fingerprint", "") != fp)
        throw Error(ErrorKind::fingerprint_mismatch, where + ": tokenizer fingerprint '" +
                                                         r.value("tokenizer_fingerprint", "") + "' differs from '" +
                                                         fp + "'");
      records.push_back(std::move(r));
    }
    std::set<std::string> labels;
    for (const auto& r : records) labels.insert(r.value("dataset", ""));
    const bool prefix = labels.size() > 1;

    const auto family = get_family(a.cfg.tokenizer.family);
    std::vector<std::optional<TimeSeries>> series(records.size());
    std::vector<std::string> errors(records.size());
    parallel_for(records.size(), a.cfg.workers, [&](std::size_t i) {
      const auto& r = records[i];
      try {
        TokenStream ts;
        ts.tokens = r.at("tokens").get<std::vector<TokenId>>();
        ts.segment_lengths = r.at("segment_lengths").get<std::vector<std::size_t>>();
        ts.scale = {r.at("scale").at("mu").get<double>(), r.at("scale").at("sigma").get<double>()};
        ts.family_name = r.at("family").get<std::string>();
        ts.level = r.at("level").get<int>();
        ts.boundary = parse_boundary_mode(r.at("boundary").get<std::string>());
        ts.source_length = r.at("source_length").get<std::size_t>();
        TimeSeries s;
        s.id = (prefix ? r.value("dataset", "") + "/" : "") + r.at("id").get<std::string>();
        s.start = r.value("start", "");
        s.freq = r.value("freq", "");
        s.values = wavetoken::detokenize(ts, cb, family);
        series[i] = std::move(s);
      } catch (const std::exception& e) {
        errors[i] = a.tokens + ":" + std::to_string(i + 1) + ": " + e.what();
      }
    });
    Failures failures;
    failures.absorb(errors);
    Dataset ds;
    ds.name = a.out;
    for (auto& s : series)
      if (s) ds.series.push_back(std::move(*s));
    if (!ds.series.empty()) ds.freq = ds.series.front().freq;
    save_dataset(a.out, ds);
    out << ds.series.size() << '/' << records.size() << " series reconstructed -> " << a.out << '\n';
    return failures.report(err, "records");
  });
}

int train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    a.cfg.validate();
    if (a.out.empty()) throw Error(ErrorKind::invalid_argument, "--out is required");
    const auto cb = load_checked_codebook(a.codebook, a.cfg);
    const auto sets = load_all(a.data, a.freq);
    const auto windows = training_pairs(sets, a.cfg, a.use_all);
    Failures failures;
    const auto model = train_from_windows(windows, a.cfg, cb, failures);
    ojson meta;
    meta["codebook_hash"] = codebook_hash(cb);
    meta["tokenizer_fingerprint"] = a.cfg.tokenizer_fingerprint();
    meta["config_fingerprint"] = a.cfg.fingerprint();
    meta["windows"] = windows.size() - failures.items.size();
    model.save(a.out, json(meta));
    out << "windows " << windows.size() - failures.items.size() << "  order " << a.cfg.order << "  vocabulary "
        << model.vocab_size() << '\n'
        << "model " << model.hash() << " -> " << a.out << '\n';
    return failures.report(err, "windows");
  });
}

int forecast(const ForecastArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    a.cfg.validate();
    const bool naive = a.model_kind == "seasonal-naive";
    if (!naive && a.model_kind != "markov")
      throw Error(ErrorKind::invalid_argument, "unknown model kind '" + a.model_kind + "'");
    std::optional<Codebook> cb;
    std::optional<MarkovModel> model;
    std::string model_hash;
    if (!naive) {
      cb = load_checked_codebook(a.codebook, a.cfg);
      json meta;
      model = MarkovModel::load(a.model, &meta);
      if (meta.value("codebook_hash", "") != codebook_hash(*cb))
        throw Error(ErrorKind::fingerprint_mismatch, a.model + " was trained with codebook '" +
                                                         meta.value("codebook_hash", "") + "', not '" +
                                                         codebook_hash(*cb) + "'");
      if (meta.value("tokenizer_fingerprint", "") != a.cfg.tokenizer_fingerprint())
        throw Error(ErrorKind::fingerprint_mismatch, a.model + " was trained under different tokenizer settings");
      model_hash = model->hash();
    }
    const std::string name = a.name.empty() ? a.model_kind : a.name;
    const std::string fp = a.cfg.fingerprint();
    const auto sets = load_all(a.data, a.freq);
    std::string text;
    Failures failures;
    for (const auto& set : sets) {
      const auto windows = forecast_windows(set.data, a.cfg, a.future, err);
      const std::size_t season = seasonality_for(set.data.freq);
      std::vector<std::string> lines(windows.size()), errors(windows.size());
      parallel_for(windows.size(), a.cfg.workers, [&](std::size_t i) {
        const auto& w = windows[i];
        try {
          std::vector<std::vector<double>> paths;
          if (naive) paths.push_back(naive_forecast(w.context, season, a.cfg.horizon).point);
          else paths = markov_paths(*model, *cb, a.cfg, w.context, series_seed(a.cfg.seed, set.label, w.id));
          ojson r;
          r["dataset"] = set.label;
          r["id"] = w.id;
          r["model"] = name;
          r["horizon"] = a.cfg.horizon;
          r["samples"] = paths;
          r["config_fingerprint"] = fp;
          r["model_hash"] = model_hash;
          lines[i] = r.dump() + '\n';
        } catch (const std::exception& e) {
          errors[i] = set.label + "/" + w.id + ": " + e.what();
        }
      });
      std::size_t ok = 0;
      for (const auto& l : lines) {
        text += l;
        ok += l.empty() ? 0 : 1;
      }
      failures.absorb(errors);
      out << set.label << ": " << ok << '/' << windows.size() << " series forecast\n";
    }
    write_output(a.out, text, out);
    return failures.report(err, "series");
  });
}

int eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    a.cfg.validate();
    if (a.forecasts.empty()) throw Error(ErrorKind::invalid_argument, "no forecast file given");
    const auto sets = load_all(a.data, a.freq);

    std::vector<std::string> models;
    std::map<std::string, ParsedForecast> parsed;
    for (const auto& path : a.forecasts) {
      const auto lines = split_lines(read_text_file(path));
      for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string where = path + ":" + std::to_string(i + 1);
        const auto r = parse_record(lines[i], where);
        try {
          const auto m = r.at("model").get<std::string>();
          if (m == kBaseline) throw Error(ErrorKind::invalid_argument, "model name '" + m + "' is reserved");
          if (r.at("horizon").get<std::size_t>() != a.cfg.horizon)
            throw Error(ErrorKind::fingerprint_mismatch,
                        "forecast horizon " + r.at("horizon").dump() + " differs from H = " + std::to_string(a.cfg.horizon));
          auto [it, fresh] = parsed.try_emplace(m);
          const auto fp = r.at("config_fingerprint").get<std::string>();
          if (fresh) {
            models.push_back(m);
            it->second.fingerprint = fp;
          } else if (it->second.fingerprint != fp) {
            throw Error(ErrorKind::fingerprint_mismatch, "model '" + m + "' mixes config fingerprints '" +
                                                             it->second.fingerprint + "' and '" + fp + "'");
          }
          auto key = std::make_pair(r.at("dataset").get<std::string>(), r.at("id").get<std::string>());
          if (!it->second.samples.emplace(key, r.at("samples").get<std::vector<std::vector<double>>>()).second)
            throw Error(ErrorKind::inconsistent, "duplicate forecast for " + key.first + "/" + key.second);
        } catch (const json::exception& e) {
          throw Error(ErrorKind::format, where + ": " + e.what());
        } catch (const Error& e) {
          throw Error(e.kind(), where + ": " + e.what());
        }
      }
    }

    Failures failures;
    // table[m][d]; row 0 is the baseline.
    std::vector<std::vector<DatasetMetrics>> table(models.size() + 1);
    for (const auto& set : sets) {
      const auto test = split_last_h(set.data, a.cfg.horizon, a.cfg.context).test;
      const std::size_t season = seasonality_for(set.data.freq);
      std::vector<std::optional<QuantileForecast>> base(test.size());
      for (std::size_t i = 0; i < test.size(); ++i) {
        try {
          base[i] = naive_forecast(test[i].context, season, a.cfg.horizon);
        } catch (const std::exception& e) {
          failures.add(set.label + "/" + test[i].id + ": baseline: " + e.what());
        }
      }
      table[0].push_back(score_set(test, base, season).metrics);
      for (std::size_t m = 0; m < models.size(); ++m) {
        const auto& pf = parsed[models[m]];
        std::vector<std::optional<QuantileForecast>> fc(test.size());
        for (std::size_t i = 0; i < test.size(); ++i) {
          const auto it = pf.samples.find({set.label, test[i].id});
          try {
            if (it == pf.samples.end()) throw Error(ErrorKind::inconsistent, "no forecast");
            for (const auto& p : it->second)
              if (p.size() != test[i].horizon.size())
                throw Error(ErrorKind::inconsistent, "sample path length " + std::to_string(p.size()) +
                                                         " differs from the horizon " +
                                                         std::to_string(test[i].horizon.size()));
            fc[i] = quantiles_from_samples(it->second);
          } catch (const std::exception& e) {
            failures.add(models[m] + " on " + set.label + "/" + test[i].id + ": " + e.what());
          }
        }
        table[m + 1].push_back(score_set(test, fc, season).metrics);
      }
    }

    const auto agg = aggregate_models(table, err);
    const std::string eval_fp = a.cfg.fingerprint();
    auto fp_of = [&](std::size_t m) { return m == 0 ? eval_fp : parsed[models[m - 1]].fingerprint; };
    auto name_of = [&](std::size_t m) { return m == 0 ? std::string(kBaseline) : models[m - 1]; };
    std::string csv = "dataset,model,metric,value,config_fingerprint\n";
    auto row = [&](const std::string& d, std::size_t m, const char* metric, double v) {
      csv += d + "," + name_of(m) + "," + metric + "," + fmt(v) + "," + fp_of(m) + "\n";
    };
    for (std::size_t d = 0; d < sets.size(); ++d)
      for (std::size_t m = 0; m < table.size(); ++m) {
        row(sets[d].label, m, "wql", table[m][d].wql);
        row(sets[d].label, m, "mase", table[m][d].mase);
        row(sets[d].label, m, "vrse", table[m][d].vrse);
      }
    for (std::size_t m = 0; m < table.size(); ++m) {
      row("ALL", m, "relative_wql", agg.relative_wql[m]);
      row("ALL", m, "relative_mase", agg.relative_mase[m]);
      row("ALL", m, "avg_rank_wql", agg.rank_wql[m]);
      row("ALL", m, "avg_rank_mase", agg.rank_mase[m]);
    }
    write_output(a.out, csv, out);
    if (!a.out.empty() && a.out != "-")
      for (std::size_t m = 0; m < table.size(); ++m)
        out << name_of(m) << ": relative WQL " << short_fmt(agg.relative_wql[m]) << "  relative MASE "
            << short_fmt(agg.relative_mase[m]) << '\n';
    return failures.report(err, "forecasts");
  });
}

AblateGrid AblateGrid::from_json(const json& j) {
  AblateGrid g;
  try {
    if (j.contains("family")) g.families = j.at("family").get<std::vector<std::string>>();
    if (j.contains("level")) g.levels = j.at("level").get<std::vector<int>>();
    if (j.contains("vocab_budget")) g.vocab_budgets = j.at("vocab_budget").get<std::vector<int>>();
    if (j.contains("threshold")) g.thresholds = j.at("threshold").get<std::vector<std::string>>();
    for (const auto& [k, v] : j.items())
      if (k != "family" && k != "level" && k != "vocab_budget" && k != "threshold")
        throw Error(ErrorKind::format, "unknown grid knob '" + k + "'");
  } catch (const json::exception& e) {
    throw Error(ErrorKind::format, std::string("grid: ") + e.what());
  }
  return g;
}

namespace {

const char* kAblateHeader =
    "cell,family,level,vocab_budget,threshold,status,wql,mase,vrse,relative_wql,relative_mase,failures,error";

std::string csv_safe(std::string s) {
  for (auto& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

struct CellResult {
  double wql = NAN, mase = NAN, vrse = NAN, rel_wql = NAN, rel_mase = NAN;
  std::size_t failures = 0;
};

CellResult run_cell(const RunConfig& cfg, const std::vector<LoadedSet>& sets, std::ostream& err) {
  cfg.validate();
  Failures failures;
  const auto windows = training_pairs(sets, cfg, false);
  const auto pool = pool_coefficients(windows, cfg, failures);
  const auto cb = fit_from_pool(pool, cfg);
  const auto model = train_from_windows(windows, cfg, cb, failures);

  std::vector<std::vector<DatasetMetrics>> table(2);
  for (const auto& set : sets) {
    const auto test = split_last_h(set.data, cfg.horizon, cfg.context).test;
    const std::size_t season = seasonality_for(set.data.freq);
    std::vector<std::optional<QuantileForecast>> base(test.size()), fc(test.size());
    std::vector<std::string> errors(test.size());
    parallel_for(test.size(), cfg.workers, [&](std::size_t i) {
      try {
        base[i] = naive_forecast(test[i].context, season, cfg.horizon);
        fc[i] = quantiles_from_samples(
            markov_paths(model, cb, cfg, test[i].context, series_seed(cfg.seed, set.label, test[i].id)));
      } catch (const std::exception& e) {
        base[i].reset();
        fc[i].reset();
        errors[i] = set.label + "/" + test[i].id + ": " + e.what();
      }
    });
    failures.absorb(errors);
    // Both rows drop the same failed series so they stay comparable.
    std::vector<WindowPair> kept;
    std::vector<std::optional<QuantileForecast>> kb, kf;
    for (std::size_t i = 0; i < test.size(); ++i)
      if (fc[i]) kept.push_back(test[i]), kb.push_back(base[i]), kf.push_back(fc[i]);
    table[0].push_back(score_set(kept, kb, season).metrics);
    table[1].push_back(score_set(kept, kf, season).metrics);
  }
  const auto agg = aggregate_models(table, err);
  CellResult r;
  auto mean = [&](double DatasetMetrics::*field) {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& d : table[1])
      if (std::isfinite(d.*field)) s += d.*field, ++n;
    return n ? s / static_cast<double>(n) : NAN;
  };
  r.wql = mean(&DatasetMetrics::wql);
  r.mase = mean(&DatasetMetrics::mase);
  r.vrse = mean(&DatasetMetrics::vrse);
  r.rel_wql = agg.relative_wql[1];
  r.rel_mase = agg.relative_mase[1];
  r.failures = failures.items.size();
  for (const auto& f : failures.items) err << "warning: " << f << '\n';
  return r;
}

}  // namespace

int ablate(const AblateArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (a.out.empty()) throw Error(ErrorKind::invalid_argument, "--out is required");
    AblateGrid g = a.grid;
    if (g.families.empty()) g.families = {a.cfg.tokenizer.family};
    if (g.levels.empty()) g.levels = {a.cfg.tokenizer.level};
    if (g.vocab_budgets.empty()) g.vocab_budgets = {a.cfg.vocab_budget};
    if (g.thresholds.empty()) g.thresholds = {to_string(a.cfg.tokenizer.threshold.method)};
    for (const auto& f : g.families) get_family(f);
    for (const auto& t : g.thresholds) parse_threshold_method(t);

    const auto sets = load_all(a.data, a.freq);
    std::string data_key;
    for (const auto& p : a.data) data_key += hex64(fnv1a64(read_text_file(p))) + ";";
    data_key += a.freq;

    std::map<std::string, std::string> done;
    if (std::filesystem::exists(a.out)) {
      const auto lines = split_lines(read_text_file(a.out));
      if (lines.empty() || lines[0] != kAblateHeader)
        throw Error(ErrorKind::format, a.out + " exists but is not a sweep table");
      for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cells = detail::split_csv(lines[i]);
        if (cells.size() >= 6 && cells[5] == "ok") done[cells[0]] = lines[i];
      }
    }

    std::vector<std::string> rows;
    std::size_t failed = 0, reused = 0, index = 0;
    auto flush = [&] {
      std::string text = std::string(kAblateHeader) + "\n";
      for (const auto& r : rows) text += r + "\n";
      write_atomically(a.out, text);
    };
    for (const auto& family : g.families)
      for (int level : g.levels)
        for (int vocab : g.vocab_budgets)
          for (const auto& threshold : g.thresholds) {
            ++index;
            RunConfig cfg = a.cfg;
            cfg.tokenizer.family = family;
            cfg.tokenizer.level = level;
            cfg.vocab_budget = vocab;
            cfg.tokenizer.threshold.method = parse_threshold_method(threshold);
            const std::string cell = fingerprint(cfg.fingerprint() + "|" + data_key);
            const std::string knobs =
                family + "," + std::to_string(level) + "," + std::to_string(vocab) + "," + threshold;
            out << "cell " << index << '/' << g.size() << ' ' << family << " J=" << level << " V=" << vocab << ' '
                << threshold << ": ";
            if (const auto it = done.find(cell); it != done.end()) {
              rows.push_back(it->second);
              ++reused;
              out << "reused\n";
              continue;
            }
            std::string line;
            try {
              const auto r = run_cell(cfg, sets, err);
              line = cell + "," + knobs + ",ok," + fmt(r.wql) + "," + fmt(r.mase) + "," + fmt(r.vrse) + "," +
                     fmt(r.rel_wql) + "," + fmt(r.rel_mase) + "," + std::to_string(r.failures) + ",";
              out << "relative WQL " << short_fmt(r.rel_wql) << '\n';
            } catch (const std::exception& e) {
              ++failed;
              line = cell + "," + knobs + ",failed,nan,nan,nan,nan,nan,0," + csv_safe(e.what());
              out << "failed\n";
              err << "error: cell " << knobs << ": " << e.what() << '\n';
            }
            rows.push_back(std::move(line));
            flush();
          }
    if (rows.size() == reused) flush();
    out << rows.size() << " cells (" << reused << " reused, " << failed << " failed) -> " << a.out << '\n';
    return failed ? kPartial : kOk;
  });
}

int synth(const SynthArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    a.cfg.validate();
    if (a.out.empty()) throw Error(ErrorKind::invalid_argument, "--out is required");
    const auto windows = make_corpus(a.n_series, a.p_mixup, a.cfg.context, a.cfg.horizon, a.cfg.seed, a.cfg.workers);
    auto ds = windows_to_dataset(windows, "H", "2000-01-01");
    ds.name = dataset_label(a.out);
    save_dataset(a.out, ds);
    out << windows.size() << " series of length " << a.cfg.context + a.cfg.horizon << " -> " << a.out
        << "  config " << a.cfg.fingerprint() << '\n';
    return kOk;
  });
}

// ---------------------------------------------------------------------------
// Argument parsing

namespace {

/// Run-config flags of one subcommand; only flags actually given override
/// the config file.
class Knobs {
 public:
  explicit Knobs(CLI::App* app) : app_(app) {
    app->add_option("--config", config_, "JSON config file");
    add<std::string>("--family", "family", "wavelet family (haar, db2, db4, bior2.2, ...)");
    add<int>("--level", "level", "decomposition level J");
    add<std::string>("--boundary", "boundary", "symmetric or periodic");
    add<std::string>("--threshold", "threshold", "none, cdf, visu_soft, visu_hard or fdrc");
    add<double>("--cdf-b", "cdf_b", "CDF thresholding base");
    add<double>("--fdr-q", "fdr_q", "FDRC target rate");
    add<std::string>("--sigma-estimator", "sigma_estimator", "mad_finest or std_finest");
    add<std::string>("--cdf-exponent", "cdf_exponent", "level-to-exponent mapping");
    add<std::string>("--fdr-scope", "fdr_scope", "pooled or per_level");
    add<int>("--vocab", "vocab_budget", "vocabulary budget including PAD and EOS");
    add<double>("--lo", "lo", "lower quantization bound");
    add<double>("--hi", "hi", "upper quantization bound");
    add<std::string>("--binning", "binning", "uniform or quantile");
    add<std::size_t>("--context", "context", "context length C");
    add<std::size_t>("--horizon", "horizon", "prediction length H");
    add<std::size_t>("--stride", "stride", "step between training windows");
    add<int>("--order", "order", "Markov order k");
    add<double>("--alpha", "alpha", "additive smoothing");
    add<std::size_t>("--samples", "n_samples", "sample paths per series");
    add<double>("--temperature", "temperature", "sampling temperature (0 = greedy)");
    add<std::uint64_t>("--seed", "seed", "random seed");
    add<std::size_t>("--workers", "workers", "worker threads");
  }

  RunConfig resolve(json* file = nullptr) const {
    RunConfig cfg;
    if (!config_.empty()) {
      const auto j = read_json_file(config_);
      cfg.merge_json(j);
      if (file) *file = j;
    }
    json flags = json::object();
    for (const auto& s : setters_) s(flags);
    cfg.merge_json(flags);
    return cfg;
  }

 private:
  template <typename T>
  void add(const std::string& flag, const std::string& key, const std::string& help) {
    auto v = std::make_shared<T>();
    auto* opt = app_->add_option(flag, *v, help);
    setters_.push_back([v, opt, key](json& j) {
      if (opt->count() > 0) j[key] = *v;
    });
  }

  CLI::App* app_;
  std::string config_;
  std::vector<std::function<void(json&)>> setters_;
};

}  // namespace

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Wavelet tokenization, Markov forecasting and evaluation of univariate time series", "wavetoken"};
  app.require_subcommand(1);
  std::string freq;
  std::vector<std::string> data;
  std::string out_path, codebook, model, tokens;
  bool use_all = false, future = false;
  std::string model_kind = "markov", name;
  std::vector<std::string> forecasts;
  std::size_t n_series = 100;
  double p_mixup = 0.9;
  AblateGrid grid;
  std::vector<std::string> families, thresholds;
  std::vector<int> levels, vocabs;

  auto data_opts = [&](CLI::App* c, bool required) {
    auto* o = c->add_option("--data", data, "dataset files (.csv or .jsonl, optionally .gz)");
    if (required) o->required();
    c->add_option("--freq", freq, "override the dataset frequency");
  };

  auto* fit = app.add_subcommand("fit-codebook", "fit the coefficient codebook on training windows");
  Knobs k_fit(fit);
  data_opts(fit, true);
  fit->add_option("--out", out_path, "codebook file")->required();
  fit->add_flag("--use-all", use_all, "do not hold out the last H points of each series");

  auto* tok = app.add_subcommand("tokenize", "write token records for every series");
  Knobs k_tok(tok);
  data_opts(tok, true);
  tok->add_option("--codebook", codebook, "codebook file")->required();
  tok->add_option("--out", out_path, "token records (.jsonl); stdout if omitted");

  auto* detok = app.add_subcommand("detokenize", "reconstruct series from token records");
  Knobs k_detok(detok);
  detok->add_option("--tokens", tokens, "token records")->required();
  detok->add_option("--codebook", codebook, "codebook file")->required();
  detok->add_option("--out", out_path, "dataset file")->required();

  auto* tr = app.add_subcommand("train", "train the Markov model on tokenized training windows");
  Knobs k_tr(tr);
  data_opts(tr, true);
  tr->add_option("--codebook", codebook, "codebook file")->required();
  tr->add_option("--out", out_path, "model file")->required();
  tr->add_flag("--use-all", use_all, "do not hold out the last H points of each series");

  auto* fc = app.add_subcommand("forecast", "sample forecasts for the last H points of each series");
  Knobs k_fc(fc);
  data_opts(fc, true);
  fc->add_option("--model-kind", model_kind, "markov or seasonal-naive")->check(CLI::IsMember({"markov", "seasonal-naive"}));
  fc->add_option("--codebook", codebook, "codebook file");
  fc->add_option("--model", model, "model file");
  fc->add_option("--name", name, "model label in the output");
  fc->add_option("--out", out_path, "forecast records (.jsonl); stdout if omitted");
  fc->add_flag("--future", future, "forecast beyond the end of each series");

  auto* ev = app.add_subcommand("eval", "score forecasts against held-out horizons");
  Knobs k_ev(ev);
  data_opts(ev, true);
  ev->add_option("--forecasts", forecasts, "forecast record files")->required();
  ev->add_option("--out", out_path, "metric table (.csv); stdout if omitted");

  auto* ab = app.add_subcommand("ablate", "sweep tokenizer knobs end to end");
  Knobs k_ab(ab);
  data_opts(ab, true);
  ab->add_option("--out", out_path, "sweep table (.csv); resumed if it exists")->required();
  ab->add_option("--families", families, "wavelet families")->delimiter(',');
  ab->add_option("--levels", levels, "decomposition levels")->delimiter(',');
  ab->add_option("--vocabs", vocabs, "vocabulary budgets")->delimiter(',');
  ab->add_option("--thresholds", thresholds, "thresholding methods")->delimiter(',');

  auto* sy = app.add_subcommand("synth", "generate a synthetic training corpus");
  Knobs k_sy(sy);
  sy->add_option("--series", n_series, "number of series");
  sy->add_option("--mixup", p_mixup, "probability of a mixup series");
  sy->add_option("--out", out_path, "dataset file")->required();

  std::vector<std::string> args(argv.rbegin(), argv.rend());
  if (!args.empty()) args.pop_back();  // program name
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  auto resolve = [](const Knobs& k, json* file = nullptr) {
    try {
      auto cfg = k.resolve(file);
      cfg.validate();
      return cfg;
    } catch (const Error& e) {
      throw Error(ErrorKind::invalid_argument, std::string("configuration: ") + e.what());
    }
  };
  return guarded(err, [&]() -> int {
    if (fit->parsed()) return fit_codebook({resolve(k_fit), data, out_path, use_all, freq}, out, err);
    if (tok->parsed()) return tokenize({resolve(k_tok), data, codebook, out_path, freq}, out, err);
    if (detok->parsed()) return detokenize({resolve(k_detok), tokens, codebook, out_path}, out, err);
    if (tr->parsed()) return train({resolve(k_tr), data, codebook, out_path, use_all, freq}, out, err);
    if (fc->parsed()) {
      if (model_kind == "markov" && (codebook.empty() || model.empty()))
        throw Error(ErrorKind::invalid_argument, "markov forecasts need --codebook and --model");
      return forecast({resolve(k_fc), data, model_kind, codebook, model, out_path, name, future, freq}, out, err);
    }
    if (ev->parsed()) return eval({resolve(k_ev), data, forecasts, out_path, freq}, out, err);
    if (ab->parsed()) {
      json file;
      AblateArgs a;
      a.cfg = resolve(k_ab, &file);
      if (file.is_object() && file.contains("grid")) a.grid = AblateGrid::from_json(file.at("grid"));
      if (!families.empty()) a.grid.families = families;
      if (!levels.empty()) a.grid.levels = levels;
      if (!vocabs.empty()) a.grid.vocab_budgets = vocabs;
      if (!thresholds.empty()) a.grid.thresholds = thresholds;
      a.data = data;
      a.out = out_path;
      a.freq = freq;
      return ablate(a, out, err);
    }
    if (sy->parsed()) return synth({resolve(k_sy), n_series, p_mixup, out_path}, out, err);
    return kUsage;
  });
}

}  // namespace wavetoken::cli
