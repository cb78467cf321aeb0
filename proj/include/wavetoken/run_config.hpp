#pragma once

// Run configuration shared by the command-line tools, with JSON round trip and
// stable fingerprints. Defaults: bior2.2, J = 1, 1024 tokens, no thresholding,
// C = 512, H = 64.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "wavetoken/codebook.hpp"
#include "wavetoken/error.hpp"
#include "wavetoken/hash.hpp"
#include "wavetoken/tokenizer.hpp"

namespace wavetoken {

struct RunConfig {
  TokenizerConfig tokenizer;
  int vocab_budget = 1024;
  double lo = -30.0;
  double hi = 30.0;
  Binning binning = Binning::uniform;
  std::size_t context = 512;
  std::size_t horizon = 64;
  /// Step between training windows cut from one series.
  std::size_t stride = 64;
  int order = 1;
  double alpha = 0.01;
  std::size_t n_samples = 20;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  /// Execution only; never part of a fingerprint.
  std::size_t workers = 1;

  bool operator==(const RunConfig&) const = default;

  /// Smallest window the configured transform accepts.
  std::size_t min_window() const {
    return (get_family(tokenizer.family).filter_length() - 1) << tokenizer.level;
  }

  void validate() const {
    auto bad = [](const std::string& what) { throw Error(ErrorKind::invalid_argument, what); };
    const auto f = get_family(tokenizer.family);
    if (tokenizer.level < 1) bad("level must be >= 1");
    tokenizer.threshold.validate();
    if (vocab_budget < 5) bad("vocabulary budget must be >= 5");
    if (!(lo < 0.0 && 0.0 < hi)) bad("bounds must satisfy lo < 0 < hi");
    if (horizon < 1 || context < 1) bad("context and horizon must be >= 1");
    if (max_level(horizon, f) < tokenizer.level)
      bad("horizon " + std::to_string(horizon) + " is too short for " + f.name + " at level " +
          std::to_string(tokenizer.level) + " (needs " + std::to_string(min_window()) + ")");
    if (max_level(context, f) < tokenizer.level)
      bad("context " + std::to_string(context) + " is too short for " + f.name + " at level " +
          std::to_string(tokenizer.level));
    if (stride < 1) bad("stride must be >= 1");
    if (order < 1) bad("model order must be >= 1");
    if (!(alpha > 0.0)) bad("smoothing must be > 0");
    if (n_samples < 1) bad("need at least one sample path");
    if (!(temperature >= 0.0)) bad("temperature must be >= 0");
    if (workers < 1) bad("workers must be >= 1");
  }

  nlohmann::ordered_json tokenizer_json() const {
    const auto& t = tokenizer.threshold;
    return {{"family", tokenizer.family},
            {"level", tokenizer.level},
            {"boundary", to_string(tokenizer.boundary)},
            {"threshold", to_string(t.method)},
            {"cdf_b", t.b},
            {"fdr_q", t.q},
            {"sigma_estimator", to_string(t.sigma_estimator)},
            {"cdf_exponent", to_string(t.cdf_exponent)},
            {"fdr_scope", to_string(t.fdr_scope)},
            {"vocab_budget", vocab_budget},
            {"lo", lo},
            {"hi", hi},
            {"binning", to_string(binning)}};
  }

  nlohmann::ordered_json to_json() const {
    auto j = tokenizer_json();
    j["context"] = context;
    j["horizon"] = horizon;
    j["stride"] = stride;
    j["order"] = order;
    j["alpha"] = alpha;
    j["n_samples"] = n_samples;
    j["temperature"] = temperature;
    j["seed"] = seed;
    j["workers"] = workers;
    return j;
  }

  /// Hash of everything that shapes the token alphabet and token streams.
  std::string tokenizer_fingerprint() const { return wavetoken::fingerprint(tokenizer_json().dump()); }

  /// Hash of every setting that affects outputs (workers excluded).
  std::string fingerprint() const {
    auto j = to_json();
    j.erase("workers");
    return wavetoken::fingerprint(j.dump());
  }

  /// Overrides fields present in `j`; unknown keys are rejected.
  void merge_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorKind::format, "config must be a JSON object");
    try {
      for (const auto& [key, v] : j.items()) {
        auto& t = tokenizer.threshold;
        if (key == "family") tokenizer.family = v.get<std::string>();
        else if (key == "level") tokenizer.level = v.get<int>();
        else if (key == "boundary") tokenizer.boundary = parse_boundary_mode(v.get<std::string>());
        else if (key == "threshold") t.method = parse_threshold_method(v.get<std::string>());
        else if (key == "cdf_b") t.b = v.get<double>();
        else if (key == "fdr_q") t.q = v.get<double>();
        else if (key == "sigma_estimator") t.sigma_estimator = parse_sigma_estimator(v.get<std::string>());
        else if (key == "cdf_exponent") t.cdf_exponent = parse_cdf_exponent(v.get<std::string>());
        else if (key == "fdr_scope") t.fdr_scope = parse_fdr_scope(v.get<std::string>());
        else if (key == "vocab_budget") vocab_budget = v.get<int>();
        else if (key == "lo") lo = v.get<double>();
        else if (key == "hi") hi = v.get<double>();
        else if (key == "binning") binning = parse_binning(v.get<std::string>());
        else if (key == "context") context = v.get<std::size_t>();
        else if (key == "horizon") horizon = v.get<std::size_t>();
        else if (key == "stride") stride = v.get<std::size_t>();
        else if (key == "order") order = v.get<int>();
        else if (key == "alpha") alpha = v.get<double>();
        else if (key == "n_samples") n_samples = v.get<std::size_t>();
        else if (key == "temperature") temperature = v.get<double>();
        else if (key == "seed") seed = v.get<std::uint64_t>();
        else if (key == "workers") workers = v.get<std::size_t>();
        else if (key == "grid") continue;  // read by the sweep command
        else throw Error(ErrorKind::format, "unknown config key '" + key + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::format, std::string("config: ") + e.what());
    }
  }

  static RunConfig from_json(const nlohmann::json& j) {
    RunConfig c;
    c.merge_json(j);
    return c;
  }
};

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, path + ": " + e.what());
  }
}

}  // namespace wavetoken
