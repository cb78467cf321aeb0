#pragma once

// Autoregressive categorical models over token ids, the training loss and
// constrained sampling of horizon coefficients.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "wavetoken/codebook.hpp"
#include "wavetoken/error.hpp"
#include "wavetoken/hash.hpp"
#include "wavetoken/parallel.hpp"
#include "wavetoken/random.hpp"
#include "wavetoken/tokenizer.hpp"

namespace wavetoken {

class SequenceModel {
 public:
  virtual ~SequenceModel() = default;
  virtual std::size_t vocab_size() const = 0;
  /// Probability vector over the vocabulary for the token following `history`.
  virtual std::vector<double> next_token_distribution(std::span<const TokenId> history) const = 0;
};

/// Additively smoothed order-k Markov chain. Histories are the last
/// min(k, t) tokens; an unseen history yields the uniform distribution and
/// the empty history yields the smoothed unigram distribution.
class MarkovModel final : public SequenceModel {
 public:
  using Counts = std::map<TokenId, std::uint64_t>;

  struct Row {
    Counts counts;
    std::uint64_t total = 0;

    void add(TokenId t) {
      ++counts[t];
      ++total;
    }
    bool operator==(const Row&) const = default;
  };

  MarkovModel(int order, double alpha, std::size_t vocab_size, TokenId pad_id = 0)
      : order_(order), alpha_(alpha), vocab_(vocab_size), pad_id_(pad_id) {
    if (order < 1) throw Error(ErrorKind::invalid_argument, "Markov order must be >= 1");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error(ErrorKind::invalid_argument, "smoothing must be > 0");
    if (vocab_size < 2) throw Error(ErrorKind::invalid_argument, "vocabulary must hold at least 2 tokens");
  }

  int order() const { return order_; }
  double alpha() const { return alpha_; }
  std::size_t vocab_size() const override { return vocab_; }
  TokenId pad_id() const { return pad_id_; }
  const Row& unigram() const { return unigram_; }
  const std::map<std::vector<TokenId>, Row>& table() const { return table_; }

  /// Accumulates counts from one token sequence; PAD is never a target.
  void observe(std::span<const TokenId> seq) {
    for (std::size_t t = 0; t < seq.size(); ++t) {
      check_token(seq[t]);
      if (seq[t] == pad_id_) continue;
      unigram_.add(seq[t]);
      if (t == 0) continue;
      const std::size_t h = std::min<std::size_t>(static_cast<std::size_t>(order_), t);
      table_[std::vector<TokenId>(seq.begin() + static_cast<std::ptrdiff_t>(t - h), seq.begin() + static_cast<std::ptrdiff_t>(t))]
          .add(seq[t]);
    }
  }

  std::vector<double> next_token_distribution(std::span<const TokenId> history) const override {
    const Row* row = &unigram_;
    static const Row kEmpty;
    if (!history.empty()) {
      const std::size_t h = std::min<std::size_t>(static_cast<std::size_t>(order_), history.size());
      const auto it = table_.find(std::vector<TokenId>(history.end() - static_cast<std::ptrdiff_t>(h), history.end()));
      row = it == table_.end() ? &kEmpty : &it->second;
    }
    const double denom = static_cast<double>(row->total) + alpha_ * static_cast<double>(vocab_);
    std::vector<double> p(vocab_, alpha_ / denom);
    for (const auto& [tok, c] : row->counts) p[static_cast<std::size_t>(tok)] = (static_cast<double>(c) + alpha_) / denom;
    return p;
  }

  bool operator==(const MarkovModel& o) const {
    return order_ == o.order_ && alpha_ == o.alpha_ && vocab_ == o.vocab_ && pad_id_ == o.pad_id_ &&
           unigram_ == o.unigram_ && table_ == o.table_;
  }

  nlohmann::json to_json(const nlohmann::json& meta = nlohmann::json::object()) const {
    auto row_json = [](const Row& r) {
      nlohmann::json a = nlohmann::json::array();
      for (const auto& [tok, c] : r.counts) a.push_back({tok, c});
      return a;
    };
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& [key, row] : table_) hist.push_back({key, row_json(row)});
    return {{"format", kFormat}, {"version", kVersion}, {"order", order_},       {"alpha", alpha_},
            {"vocab_size", vocab_},  {"pad_id", pad_id_},   {"meta", meta},         {"unigram", row_json(unigram_)},
            {"histories", hist}};
  }

  static MarkovModel from_json(const nlohmann::json& j) {
    try {
      if (!j.is_object() || j.value("format", "") != kFormat) throw Error(ErrorKind::format, "not a Markov model file");
      if (j.at("version").get<int>() != kVersion)
        throw Error(ErrorKind::version, "model version " + j.at("version").dump() + " is not supported");
      MarkovModel m(j.at("order").get<int>(), j.at("alpha").get<double>(), j.at("vocab_size").get<std::size_t>(),
                    j.at("pad_id").get<TokenId>());
      auto read_row = [&](const nlohmann::json& a) {
        Row r;
        for (const auto& e : a) {
          const auto tok = e.at(0).get<TokenId>();
          m.check_token(tok);
          const auto c = e.at(1).get<std::uint64_t>();
          r.counts[tok] = c;
          r.total += c;
        }
        return r;
      };
      m.unigram_ = read_row(j.at("unigram"));
      for (const auto& e : j.at("histories")) {
        auto key = e.at(0).get<std::vector<TokenId>>();
        if (key.empty() || key.size() > static_cast<std::size_t>(m.order_))
          throw Error(ErrorKind::inconsistent, "history length outside [1, order]");
        for (TokenId t : key) m.check_token(t);
        m.table_.emplace(std::move(key), read_row(e.at(1)));
      }
      return m;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::format, std::string("model file: ") + e.what());
    }
  }

  std::string serialize(const nlohmann::json& meta = nlohmann::json::object()) const { return to_json(meta).dump(); }

  std::string hash() const { return fingerprint(serialize()); }

  void save(const std::string& path, const nlohmann::json& meta = nlohmann::json::object()) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path);
    out << serialize(meta) << '\n';
    if (!out) throw Error(ErrorKind::io, "write failed for " + path);
  }

  /// Reads a model; `meta` (if given) receives the embedded metadata object.
  static MarkovModel load(const std::string& path, nlohmann::json* meta = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot read " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::format, path + ": " + e.what());
    }
    if (meta) *meta = j.value("meta", nlohmann::json::object());
    return from_json(j);
  }

 private:
  static constexpr std::string_view kFormat = "wavetoken-markov";
  static constexpr int kVersion = 1;

  void check_token(TokenId t) const {
    if (t < 0 || static_cast<std::size_t>(t) >= vocab_)
      throw Error(ErrorKind::invalid_argument, "token " + std::to_string(t) + " outside vocabulary of " +
                                                   std::to_string(vocab_));
  }

  int order_;
  double alpha_;
  std::size_t vocab_;
  TokenId pad_id_;
  Row unigram_;
  std::map<std::vector<TokenId>, Row> table_;
};

inline std::vector<TokenId> concat_tokens(const TokenStream& context, const TokenStream& horizon) {
  std::vector<TokenId> seq(context.tokens);
  seq.insert(seq.end(), horizon.tokens.begin(), horizon.tokens.end());
  return seq;
}

/// Counts over each concatenated context + horizon stream.
inline MarkovModel train_markov(const std::vector<std::pair<TokenStream, TokenStream>>& corpus, int order,
                                double alpha, std::size_t vocab_size, TokenId pad_id = 0) {
  if (corpus.empty()) throw Error(ErrorKind::invalid_argument, "cannot train on an empty corpus");
  MarkovModel m(order, alpha, vocab_size, pad_id);
  for (const auto& [ctx, hor] : corpus) m.observe(concat_tokens(ctx, hor));
  return m;
}

/// Mean negative log-likelihood of the horizon tokens (EOS included, PAD
/// targets skipped) given the context and the horizon prefix.
inline double cross_entropy(const SequenceModel& model, std::span<const TokenId> context,
                            std::span<const TokenId> horizon, TokenId pad_id = 0) {
  std::vector<TokenId> seq(context.begin(), context.end());
  seq.insert(seq.end(), horizon.begin(), horizon.end());
  double nll = 0.0;
  std::size_t n = 0;
  for (std::size_t t = context.size(); t < seq.size(); ++t) {
    if (seq[t] == pad_id) continue;
    const auto p = model.next_token_distribution(std::span<const TokenId>(seq).first(t));
    const double pt = p.at(static_cast<std::size_t>(seq[t]));
    nll += pt > 0.0 ? -std::log(pt) : std::numeric_limits<double>::infinity();
    ++n;
  }
  if (n == 0) throw Error(ErrorKind::degenerate, "horizon has no non-PAD targets");
  return nll / static_cast<double>(n);
}

inline double cross_entropy(const SequenceModel& model, const TokenStream& context, const TokenStream& horizon,
                            TokenId pad_id = 0) {
  return cross_entropy(model, std::span<const TokenId>(context.tokens), std::span<const TokenId>(horizon.tokens),
                       pad_id);
}

/// Draws one token from p with `banned` ids removed. Temperature 0 is greedy
/// (ties resolved to the smallest id).
inline TokenId draw_token(std::vector<double> p, std::span<const TokenId> banned, double temperature, Rng& rng) {
  for (TokenId b : banned)
    if (b >= 0 && static_cast<std::size_t>(b) < p.size()) p[static_cast<std::size_t>(b)] = 0.0;
  if (temperature <= 0.0) {
    return static_cast<TokenId>(std::max_element(p.begin(), p.end()) - p.begin());
  }
  if (temperature != 1.0) {
    const double peak = *std::max_element(p.begin(), p.end());
    for (auto& v : p) v = v > 0.0 ? std::exp(std::log(v / peak) / temperature) : 0.0;
  }
  double total = 0.0;
  for (double v : p) total += v;
  if (!(total > 0.0)) throw Error(ErrorKind::degenerate, "no admissible token to sample");
  const double u = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    acc += p[i];
    last = i;
    if (u < acc) return static_cast<TokenId>(i);
  }
  return static_cast<TokenId>(last);
}

struct ForecastSamples {
  std::vector<std::vector<double>> paths;
  std::vector<std::vector<TokenId>> tokens;

  bool operator==(const ForecastSamples&) const = default;
};

struct SamplingOptions {
  std::size_t n_samples = 20;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

/// Generates exactly sum(coefficient_layout(H)) tokens per sample with PAD and
/// EOS excluded, then inverts them under the context's scale.
inline ForecastSamples sample_forecast(const SequenceModel& model, const TokenStream& context, std::size_t horizon,
                                       const TokenizerConfig& cfg, const Codebook& cb, const SamplingOptions& opt) {
  if (model.vocab_size() != cb.vocab_size())
    throw Error(ErrorKind::inconsistent, "model vocabulary " + std::to_string(model.vocab_size()) +
                                             " does not match codebook vocabulary " + std::to_string(cb.vocab_size()));
  const auto f = get_family(cfg.family);
  const auto layout = coefficient_layout(horizon, f, cfg.level, cfg.boundary);
  std::size_t n_tokens = 0;
  for (auto l : layout) n_tokens += l;
  const TokenId banned[] = {cb.pad_id, cb.eos_id};

  ForecastSamples out;
  out.paths.resize(opt.n_samples);
  out.tokens.resize(opt.n_samples);
  std::vector<std::string> errors(opt.n_samples);
  parallel_for(opt.n_samples, opt.workers, [&](std::size_t s) {
    try {
      Rng rng(derive_seed(opt.seed, s));
      std::vector<TokenId> seq(context.tokens);
      seq.reserve(seq.size() + n_tokens);
      for (std::size_t i = 0; i < n_tokens; ++i)
        seq.push_back(draw_token(model.next_token_distribution(seq), banned, opt.temperature, rng));
      TokenStream ts;
      ts.tokens.assign(seq.end() - static_cast<std::ptrdiff_t>(n_tokens), seq.end());
      ts.segment_lengths = layout;
      ts.scale = context.scale;
      ts.family_name = cfg.family;
      ts.level = cfg.level;
      ts.boundary = cfg.boundary;
      ts.source_length = horizon;
      out.paths[s] = detokenize(ts, cb, f);
      out.tokens[s] = std::move(ts.tokens);
    } catch (const std::exception& e) {
      errors[s] = e.what();
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) throw Error(ErrorKind::inconsistent, "sampling failed: " + e);
  return out;
}

}  // namespace wavetoken
