#pragma once

// Batch front end: one function per subcommand plus the argv entry point.
// Every command returns a process exit code and writes progress to `out`,
// diagnostics to `err`.

#include <iosfwd>
#include <string>
#include <vector>

#include "wavetoken/run_config.hpp"

namespace wavetoken::cli {

enum ExitCode : int {
  kOk = 0,
  kPartial = 1,   // some series or cells failed, the rest completed
  kUsage = 2,     // bad flags, config or arguments
  kMismatch = 3,  // artifacts built under different settings
  kIo = 4,        // unreadable or malformed files
};

int exit_code_for(ErrorKind kind);

struct FitCodebookArgs {
  RunConfig cfg;
  std::vector<std::string> data;
  std::string out;
  /// Use every point of every series; otherwise the last H points are held out.
  bool use_all = false;
  std::string freq;
};

struct TokenizeArgs {
  RunConfig cfg;
  std::vector<std::string> data;
  std::string codebook;
  std::string out;
  std::string freq;
};

struct DetokenizeArgs {
  RunConfig cfg;
  std::string tokens;
  std::string codebook;
  std::string out;
};

struct TrainArgs {
  RunConfig cfg;
  std::vector<std::string> data;
  std::string codebook;
  std::string out;
  bool use_all = false;
  std::string freq;
};

struct ForecastArgs {
  RunConfig cfg;
  std::vector<std::string> data;
  /// "markov" (needs codebook and model) or "seasonal-naive".
  std::string model_kind = "markov";
  std::string codebook;
  std::string model;
  std::string out;
  /// Label written into each record; defaults to the model kind.
  std::string name;
  /// Forecast past the end of each series instead of its last H points.
  bool future = false;
  std::string freq;
};

struct EvalArgs {
  RunConfig cfg;
  std::vector<std::string> data;
  std::vector<std::string> forecasts;
  std::string out;
  std::string freq;
};

struct AblateGrid {
  std::vector<std::string> families;
  std::vector<int> levels;
  std::vector<int> vocab_budgets;
  std::vector<std::string> thresholds;

  /// Reads a "grid" object; missing knobs keep the base config value.
  static AblateGrid from_json(const nlohmann::json& j);
  std::size_t size() const { return families.size() * levels.size() * vocab_budgets.size() * thresholds.size(); }
};

struct AblateArgs {
  RunConfig cfg;
  AblateGrid grid;
  std::vector<std::string> data;
  std::string out;
  std::string freq;
};

struct SynthArgs {
  RunConfig cfg;
  std::size_t n_series = 100;
  double p_mixup = 0.9;
  std::string out;
};

int fit_codebook(const FitCodebookArgs& a, std::ostream& out, std::ostream& err);
int tokenize(const TokenizeArgs& a, std::ostream& out, std::ostream& err);
int detokenize(const DetokenizeArgs& a, std::ostream& out, std::ostream& err);
int train(const TrainArgs& a, std::ostream& out, std::ostream& err);
int forecast(const ForecastArgs& a, std::ostream& out, std::ostream& err);
int eval(const EvalArgs& a, std::ostream& out, std::ostream& err);
int ablate(const AblateArgs& a, std::ostream& out, std::ostream& err);
int synth(const SynthArgs& a, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches; usage errors map to kUsage.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace wavetoken::cli
