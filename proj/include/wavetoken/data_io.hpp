#pragma once

// Dataset ingestion and export: long CSV (item_id, timestamp, value) and
// JSONL (item_id, start, freq, target). Paths ending in ".gz" are read and
// written through zlib. Timestamps are ISO-8601 dates or date-times.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <zlib.h>

#include "json.hpp"
#include "wavetoken/error.hpp"
#include "wavetoken/time_series.hpp"

namespace wavetoken {

enum class DataFormat { long_csv, jsonl };

inline std::string to_string(DataFormat f) { return f == DataFormat::long_csv ? "long-csv" : "jsonl"; }

inline DataFormat parse_data_format(std::string_view s) {
  if (s == "long-csv" || s == "csv") return DataFormat::long_csv;
  if (s == "jsonl") return DataFormat::jsonl;
  throw Error(ErrorKind::invalid_argument, "unknown data format '" + std::string(s) + "'");
}

inline bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

/// Format from the file name: *.csv[.gz] or *.jsonl[.gz].
inline DataFormat format_from_path(std::string_view path) {
  std::string_view p = path;
  if (ends_with(p, ".gz")) p.remove_suffix(3);
  if (ends_with(p, ".csv")) return DataFormat::long_csv;
  if (ends_with(p, ".jsonl") || ends_with(p, ".json")) return DataFormat::jsonl;
  throw Error(ErrorKind::invalid_argument, "cannot infer data format from '" + std::string(path) + "'");
}

struct Dataset {
  std::string name;
  std::string freq;
  std::size_t prediction_length = 0;
  std::vector<TimeSeries> series;

  bool operator==(const Dataset&) const = default;
};

// ---------------------------------------------------------------------------
// File access

inline std::string read_text_file(const std::string& path) {
  if (ends_with(path, ".gz")) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw Error(ErrorKind::io, "cannot open " + path);
    std::string out;
    char buf[1 << 15];
    int n;
    while ((n = gzread(f, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
    const bool failed = n < 0;
    gzclose(f);
    if (failed) throw Error(ErrorKind::io, "corrupt gzip stream in " + path);
    return out;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, std::string_view text) {
  if (ends_with(path, ".gz")) {
    // Level 6, no timestamp or name in the header so output is reproducible.
    gzFile f = gzopen(path.c_str(), "wb6");
    if (!f) throw Error(ErrorKind::io, "cannot write " + path);
    const bool ok = text.empty() || gzwrite(f, text.data(), static_cast<unsigned>(text.size())) > 0;
    if (gzclose(f) != Z_OK || !ok) throw Error(ErrorKind::io, "write failed for " + path);
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorKind::io, "write failed for " + path);
}

// ---------------------------------------------------------------------------
// Timestamps

using Timestamp = std::chrono::sys_seconds;

inline std::optional<Timestamp> parse_timestamp(std::string_view s) {
  std::string str(s);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  int used = 0;
  if (std::sscanf(str.c_str(), "%d-%d-%d%n", &y, &mo, &d, &used) != 3) return std::nullopt;
  std::string_view rest = s.substr(static_cast<std::size_t>(used));
  if (!rest.empty() && (rest[0] == 'T' || rest[0] == ' ')) {
    std::string tail(rest.substr(1));
    int n2 = 0;
    if (std::sscanf(tail.c_str(), "%d:%d:%d%n", &h, &mi, &sec, &n2) == 3) {
    } else if (std::sscanf(tail.c_str(), "%d:%d%n", &h, &mi, &n2) == 2) {
      sec = 0;
    } else {
      return std::nullopt;
    }
    rest = std::string_view(rest).substr(1 + static_cast<std::size_t>(n2));
  }
  if (rest == "Z") rest = {};
  if (!rest.empty()) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0 || sec > 59) return std::nullopt;
  return Timestamp{std::chrono::sys_days{ymd}.time_since_epoch() + std::chrono::hours{h} +
                   std::chrono::minutes{mi} + std::chrono::seconds{sec}};
}

/// "YYYY-MM-DD" at midnight, "YYYY-MM-DD HH:MM:SS" otherwise.
inline std::string format_timestamp(Timestamp t) {
  const auto day = std::chrono::floor<std::chrono::days>(t);
  const std::chrono::year_month_day ymd{day};
  const std::chrono::hh_mm_ss hms{t - day};
  char buf[32];
  if (hms.to_duration().count() == 0) {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
  } else {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:%02d:%02d", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
  }
  return buf;
}

inline constexpr std::string_view kSupportedFreqs[] = {"H", "D", "W", "M", "Q", "Y"};

/// Canonical frequency tag, or empty if unsupported.
inline std::string canonical_freq(std::string_view f) {
  std::string s(f);
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (s == "1H" || s == "H") return "H";
  if (s == "1D" || s == "D") return "D";
  if (s == "1W" || s == "W" || s.starts_with("W-")) return "W";
  if (s == "M" || s == "MS" || s == "ME" || s == "1M") return "M";
  if (s == "Q" || s == "QS" || s == "QE" || s.starts_with("Q-")) return "Q";
  if (s == "Y" || s == "A" || s == "YS" || s == "AS" || s == "YE" || s.starts_with("A-") || s.starts_with("Y-"))
    return "Y";
  return "";
}

/// t advanced by n periods. Month-based steps keep the day of month, or stay
/// on the last day when t is a month end.
inline Timestamp add_periods(Timestamp t, std::string_view freq, long long n) {
  using namespace std::chrono;
  const std::string f = canonical_freq(freq);
  if (f == "H") return t + hours{n};
  if (f == "D") return t + days{n};
  if (f == "W") return t + days{7 * n};
  const long long months = f == "M" ? n : f == "Q" ? 3 * n : f == "Y" ? 12 * n : 0;
  if (months == 0 && n != 0) throw Error(ErrorKind::invalid_argument, "unsupported frequency '" + std::string(freq) + "'");
  const auto day = floor<std::chrono::days>(t);
  const auto tod = t - day;
  const year_month_day ymd{day};
  const bool month_end = year_month_day_last{ymd.year(), month_day_last{ymd.month()}}.day() == ymd.day();
  const auto ym = year_month{ymd.year(), ymd.month()} + std::chrono::months{months};
  const auto last = year_month_day_last{ym.year(), month_day_last{ym.month()}}.day();
  const auto dd = month_end ? last : std::min(ymd.day(), last);
  return Timestamp{sys_days{year_month_day{ym.year(), ym.month(), dd}}.time_since_epoch() + tod};
}

/// Number of periods from a to b, or nullopt if b is not on a's grid.
inline std::optional<long long> periods_between(Timestamp a, Timestamp b, std::string_view freq) {
  using namespace std::chrono;
  const std::string f = canonical_freq(freq);
  long long guess = 0;
  const auto secs = (b - a).count();
  if (f == "H") guess = secs / 3600;
  else if (f == "D") guess = secs / 86400;
  else if (f == "W") guess = secs / (7 * 86400);
  else {
    const year_month_day ya{floor<std::chrono::days>(a)}, yb{floor<std::chrono::days>(b)};
    const long long months = (static_cast<int>(yb.year()) - static_cast<int>(ya.year())) * 12LL +
                             (static_cast<long long>(static_cast<unsigned>(yb.month())) -
                              static_cast<unsigned>(ya.month()));
    const long long per = f == "M" ? 1 : f == "Q" ? 3 : f == "Y" ? 12 : 0;
    if (per == 0) return std::nullopt;
    if (months % per != 0) return std::nullopt;
    guess = months / per;
  }
  if (add_periods(a, f, guess) != b) return std::nullopt;
  return guess;
}

/// Coarsest supported frequency on whose grid every timestamp lies.
inline std::string infer_frequency(const std::vector<Timestamp>& sorted) {
  if (sorted.size() < 2) return "";
  std::string best;
  for (auto f : kSupportedFreqs) {
    bool fits = true;
    for (std::size_t i = 1; i < sorted.size() && fits; ++i) {
      const auto k = periods_between(sorted[i - 1], sorted[i], f);
      fits = k.has_value() && *k >= 1;
    }
    if (fits) best = f;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Parsing helpers

namespace detail {

/// Splits one CSV record; double quotes may wrap fields and escape quotes.
inline std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') cur += '"', ++i;
      else if (c == '"') quoted = false;
      else cur += c;
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_value(std::string_view s) {
  s = trim(s);
  if (s.empty() || s == "NaN" || s == "nan" || s == "NA" || s == "null") return kMissing;
  std::string str(s);
  char* end = nullptr;
  const double v = std::strtod(str.c_str(), &end);
  if (end != str.c_str() + str.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    const auto end = nl == std::string_view::npos ? text.size() : nl;
    lines.push_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  return lines;
}

inline std::string format_value(double v) {
  if (is_missing(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void settle_frequency(Dataset& ds, const std::string& freq_override, const std::string& source) {
  if (!freq_override.empty()) {
    const auto f = canonical_freq(freq_override);
    if (f.empty()) throw Error(ErrorKind::invalid_argument, "unsupported frequency '" + freq_override + "'");
    ds.freq = f;
  }
  for (auto& s : ds.series) {
    if (!ds.freq.empty() && !s.freq.empty() && s.freq != ds.freq && freq_override.empty())
      throw Error(ErrorKind::format, source + ": mixed frequencies '" + ds.freq + "' and '" + s.freq + "' (series " +
                                         s.id + ")");
    if (ds.freq.empty()) ds.freq = s.freq;
  }
  for (auto& s : ds.series) s.freq = ds.freq;
}

}  // namespace detail

inline Dataset parse_long_csv(std::string_view text, const std::string& source = "<csv>",
                              const std::string& freq_override = "") {
  const auto lines = detail::lines_of(text);
  if (lines.empty()) throw Error(ErrorKind::format, source + ": empty file");
  const auto header = detail::split_csv(lines[0]);
  int c_id = -1, c_ts = -1, c_val = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto h = detail::trim(header[i]);
    if (h == "item_id") c_id = static_cast<int>(i);
    else if (h == "timestamp") c_ts = static_cast<int>(i);
    else if (h == "value" || h == "target") c_val = static_cast<int>(i);
  }
  if (c_id < 0 || c_ts < 0 || c_val < 0)
    throw Error(ErrorKind::format, source + ":1: header must name item_id, timestamp and value");
  const auto width = static_cast<std::size_t>(std::max({c_id, c_ts, c_val})) + 1;

  struct Row {
    Timestamp ts;
    double value;
    std::size_t line;
  };
  std::map<std::string, std::vector<Row>> by_id;
  std::vector<std::string> order;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (detail::trim(lines[ln]).empty()) continue;
    const auto f = detail::split_csv(lines[ln]);
    const std::string where = source + ":" + std::to_string(ln + 1);
    if (f.size() < width) throw Error(ErrorKind::format, where + ": expected " + std::to_string(width) + " fields");
    const std::string id(detail::trim(f[static_cast<std::size_t>(c_id)]));
    if (id.empty()) throw Error(ErrorKind::format, where + ": empty item_id");
    const auto ts = parse_timestamp(detail::trim(f[static_cast<std::size_t>(c_ts)]));
    if (!ts) throw Error(ErrorKind::format, where + ": bad timestamp '" + f[static_cast<std::size_t>(c_ts)] + "'");
    const auto v = detail::parse_value(f[static_cast<std::size_t>(c_val)]);
    if (!v) throw Error(ErrorKind::format, where + ": bad value '" + f[static_cast<std::size_t>(c_val)] + "'");
    auto [it, fresh] = by_id.try_emplace(id);
    if (fresh) order.push_back(id);
    it->second.push_back({*ts, *v, ln + 1});
  }

  Dataset ds;
  ds.name = source;
  for (const auto& id : order) {
    auto rows = by_id[id];
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.ts < b.ts; });
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].ts == rows[i - 1].ts)
        throw Error(ErrorKind::format, source + ": duplicate timestamp " + format_timestamp(rows[i].ts) +
                                           " for item '" + id + "' on lines " + std::to_string(rows[i - 1].line) +
                                           " and " + std::to_string(rows[i].line));
    }
    TimeSeries s;
    s.id = id;
    s.start = format_timestamp(rows.front().ts);
    std::vector<Timestamp> stamps;
    for (const auto& r : rows) stamps.push_back(r.ts);
    s.freq = freq_override.empty() ? infer_frequency(stamps) : canonical_freq(freq_override);
    if (rows.size() > 1 && s.freq.empty())
      throw Error(ErrorKind::format, source + ": cannot infer a supported frequency for item '" + id + "'");
    if (rows.size() == 1) {
      s.values = {rows[0].value};
    } else {
      // Place observations on the regular grid; gaps become missing values.
      const auto span = periods_between(rows.front().ts, rows.back().ts, s.freq);
      if (!span) throw Error(ErrorKind::format, source + ": item '" + id + "' is not on a " + s.freq + " grid");
      s.values.assign(static_cast<std::size_t>(*span) + 1, kMissing);
      for (const auto& r : rows) {
        const auto k = periods_between(rows.front().ts, r.ts, s.freq);
        if (!k) throw Error(ErrorKind::format, source + ":" + std::to_string(r.line) + ": timestamp off the " + s.freq + " grid");
        s.values[static_cast<std::size_t>(*k)] = r.value;
      }
    }
    ds.series.push_back(std::move(s));
  }
  // Single-observation series take the dataset frequency.
  std::string common;
  for (const auto& s : ds.series)
    if (!s.freq.empty() && common.empty()) common = s.freq;
  for (auto& s : ds.series)
    if (s.freq.empty()) s.freq = common;
  detail::settle_frequency(ds, freq_override, source);
  return ds;
}

inline Dataset parse_jsonl(std::string_view text, const std::string& source = "<jsonl>",
                           const std::string& freq_override = "") {
  Dataset ds;
  ds.name = source;
  const auto lines = detail::lines_of(text);
  std::map<std::string, std::size_t> seen;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    if (detail::trim(lines[ln]).empty()) continue;
    const std::string where = source + ":" + std::to_string(ln + 1);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(lines[ln]);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::format, where + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("target") || !j["target"].is_array())
      throw Error(ErrorKind::format, where + ": record needs a 'target' array");
    TimeSeries s;
    s.id = j.contains("item_id") ? (j["item_id"].is_string() ? j["item_id"].get<std::string>() : j["item_id"].dump())
                                 : "series-" + std::to_string(ln + 1);
    if (auto [it, fresh] = seen.emplace(s.id, ln + 1); !fresh)
      throw Error(ErrorKind::format, where + ": duplicate item_id '" + s.id + "' (first on line " +
                                         std::to_string(it->second) + ")");
    if (j.contains("start")) {
      if (!j["start"].is_string()) throw Error(ErrorKind::format, where + ": 'start' must be a string");
      const auto ts = parse_timestamp(j["start"].get<std::string>());
      if (!ts) throw Error(ErrorKind::format, where + ": bad start '" + j["start"].get<std::string>() + "'");
      s.start = format_timestamp(*ts);
    }
    if (j.contains("freq")) {
      if (!j["freq"].is_string()) throw Error(ErrorKind::format, where + ": 'freq' must be a string");
      s.freq = canonical_freq(j["freq"].get<std::string>());
      if (s.freq.empty() && freq_override.empty())
        throw Error(ErrorKind::format, where + ": unsupported frequency '" + j["freq"].get<std::string>() + "'");
    }
    for (const auto& v : j["target"]) {
      if (v.is_null()) s.values.push_back(kMissing);
      else if (v.is_number()) s.values.push_back(v.get<double>());
      else if (v.is_string() && detail::parse_value(v.get<std::string>()))
        s.values.push_back(*detail::parse_value(v.get<std::string>()));
      else throw Error(ErrorKind::format, where + ": non-numeric target entry " + v.dump());
    }
    ds.series.push_back(std::move(s));
  }
  detail::settle_frequency(ds, freq_override, source);
  return ds;
}

inline Dataset load_dataset(const std::string& path, std::optional<DataFormat> format = std::nullopt,
                            const std::string& freq_override = "") {
  const auto fmt = format.value_or(format_from_path(path));
  const std::string text = read_text_file(path);
  return fmt == DataFormat::long_csv ? parse_long_csv(text, path, freq_override)
                                     : parse_jsonl(text, path, freq_override);
}

inline std::string to_long_csv(const Dataset& ds) {
  std::string out = "item_id,timestamp,value\n";
  for (const auto& s : ds.series) {
    const auto start = parse_timestamp(s.start);
    if (!start) throw Error(ErrorKind::invalid_argument, "series '" + s.id + "' needs a start timestamp for CSV export");
    if (canonical_freq(s.freq).empty())
      throw Error(ErrorKind::invalid_argument, "series '" + s.id + "' needs a frequency for CSV export");
    std::string id = s.id;
    if (id.find_first_of(",\"") != std::string::npos) {
      std::string q = "\"";
      for (char c : id) q += c == '"' ? std::string("\"\"") : std::string(1, c);
      id = q + "\"";
    }
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      out += id;
      out += ',';
      out += format_timestamp(add_periods(*start, s.freq, static_cast<long long>(i)));
      out += ',';
      out += detail::format_value(s.values[i]);
      out += '\n';
    }
  }
  return out;
}

inline std::string to_jsonl(const Dataset& ds) {
  std::string out;
  for (const auto& s : ds.series) {
    nlohmann::ordered_json j;
    j["item_id"] = s.id;
    if (!s.start.empty()) j["start"] = s.start;
    if (!s.freq.empty()) j["freq"] = s.freq;
    nlohmann::ordered_json target = nlohmann::ordered_json::array();
    for (double v : s.values) {
      if (is_missing(v)) target.push_back(nullptr);
      else target.push_back(v);
    }
    j["target"] = std::move(target);
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline void save_dataset(const std::string& path, const Dataset& ds, std::optional<DataFormat> format = std::nullopt) {
  const auto fmt = format.value_or(format_from_path(path));
  write_text_file(path, fmt == DataFormat::long_csv ? to_long_csv(ds) : to_jsonl(ds));
}

// ---------------------------------------------------------------------------
// Windowing

struct Split {
  /// Each series minus its last H points.
  std::vector<TimeSeries> train;
  /// Context (up to C points immediately before the horizon) and the last H points.
  std::vector<WindowPair> test;
  /// Ids of series too short to hold out H points.
  std::vector<std::string> skipped;
};

inline Split split_last_h(const Dataset& ds, std::size_t horizon, std::size_t context = 512) {
  if (horizon < 1) throw Error(ErrorKind::invalid_argument, "prediction length must be >= 1");
  Split out;
  for (const auto& s : ds.series) {
    if (s.values.size() <= horizon) {
      out.skipped.push_back(s.id);
      continue;
    }
    const std::size_t cut = s.values.size() - horizon;
    TimeSeries tr = s;
    tr.values.resize(cut);
    out.train.push_back(std::move(tr));
    WindowPair w;
    w.id = s.id;
    const std::size_t c0 = cut > context ? cut - context : 0;
    w.context.assign(s.values.begin() + static_cast<std::ptrdiff_t>(c0), s.values.begin() + static_cast<std::ptrdiff_t>(cut));
    w.horizon.assign(s.values.begin() + static_cast<std::ptrdiff_t>(cut), s.values.end());
    out.test.push_back(std::move(w));
  }
  return out;
}

/// Non-overlapping-horizon training pairs walking back from the end of each
/// series in steps of `stride`; contexts shorter than C are kept if at least
/// `min_context` long.
inline std::vector<WindowPair> training_windows(const std::vector<TimeSeries>& series, std::size_t context,
                                                std::size_t horizon, std::size_t stride, std::size_t min_context) {
  if (stride < 1) throw Error(ErrorKind::invalid_argument, "window stride must be >= 1");
  std::vector<WindowPair> out;
  for (const auto& s : series) {
    const std::size_t n = s.values.size();
    if (n < horizon + min_context) continue;
    std::size_t k = 0;
    for (std::size_t end = n; end >= horizon + min_context; end -= std::min(stride, end)) {
      const std::size_t cut = end - horizon;
      const std::size_t c0 = cut > context ? cut - context : 0;
      WindowPair w;
      w.id = s.id + "#" + std::to_string(k++);
      w.context.assign(s.values.begin() + static_cast<std::ptrdiff_t>(c0), s.values.begin() + static_cast<std::ptrdiff_t>(cut));
      w.horizon.assign(s.values.begin() + static_cast<std::ptrdiff_t>(cut), s.values.begin() + static_cast<std::ptrdiff_t>(end));
      out.push_back(std::move(w));
      if (end < stride) break;
    }
  }
  return out;
}

/// Dataset view of (context, horizon) pairs as contiguous series.
inline Dataset windows_to_dataset(const std::vector<WindowPair>& windows, const std::string& freq = "H",
                                  const std::string& start = "2000-01-01") {
  Dataset ds;
  ds.freq = freq;
  for (const auto& w : windows) {
    TimeSeries s;
    s.id = w.id;
    s.start = start;
    s.freq = freq;
    s.values = w.context;
    s.values.insert(s.values.end(), w.horizon.begin(), w.horizon.end());
    ds.series.push_back(std::move(s));
  }
  return ds;
}

}  // namespace wavetoken
