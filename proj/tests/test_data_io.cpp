#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "wavetoken/data_io.hpp"
#include "wavetoken/random.hpp"

using namespace wavetoken;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() /
          ("wavetoken_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()) + "_" + name))
      .string();
}

Dataset random_dataset(Rng& rng, const std::string& freq) {
  Dataset ds;
  ds.freq = freq;
  for (int i = 0; i < 4; ++i) {
    TimeSeries s;
    s.id = "item," + std::to_string(i);
    s.start = i % 2 ? "2021-01-31" : "2020-02-29";
    s.freq = freq;
    s.values.resize(static_cast<std::size_t>(rng.integer(1, 40)));
    for (auto& v : s.values) v = rng.bernoulli(0.1) ? kMissing : rng.normal(0, 1e3) / 7.0;
    s.values.front() = 1.0 / 3.0;  // keep the first stamp observed so CSV recovers the start
    s.values.back() = -2.0 / 3.0;
    ds.series.push_back(std::move(s));
  }
  return ds;
}

}  // namespace

TEST(Timestamps, ParseAndFormat) {
  EXPECT_EQ(format_timestamp(*parse_timestamp("2024-03-05")), "2024-03-05");
  EXPECT_EQ(format_timestamp(*parse_timestamp("2024-03-05T07:08:09Z")), "2024-03-05 07:08:09");
  EXPECT_EQ(format_timestamp(*parse_timestamp("2024-03-05 07:08")), "2024-03-05 07:08:00");
  EXPECT_FALSE(parse_timestamp("2024-02-30"));
  EXPECT_FALSE(parse_timestamp("2024-03-05 25:00:00"));
  EXPECT_FALSE(parse_timestamp("yesterday"));
  EXPECT_FALSE(parse_timestamp("2024-03-05x"));
}

TEST(Timestamps, CalendarSteps) {
  const auto jan31 = *parse_timestamp("2023-01-31");
  EXPECT_EQ(format_timestamp(add_periods(jan31, "M", 1)), "2023-02-28");
  EXPECT_EQ(format_timestamp(add_periods(jan31, "M", 2)), "2023-03-31");
  EXPECT_EQ(format_timestamp(add_periods(*parse_timestamp("2023-01-15"), "Q", 1)), "2023-04-15");
  EXPECT_EQ(format_timestamp(add_periods(*parse_timestamp("2020-02-29"), "Y", 1)), "2021-02-28");
  EXPECT_EQ(format_timestamp(add_periods(*parse_timestamp("2023-12-31 23:00:00"), "H", 2)), "2024-01-01 01:00:00");
  EXPECT_EQ(periods_between(jan31, *parse_timestamp("2023-06-30"), "M"), 5);
  EXPECT_FALSE(periods_between(jan31, *parse_timestamp("2023-06-15"), "M"));
}

TEST(Timestamps, FrequencyInference) {
  auto stamps = [](std::initializer_list<const char*> s) {
    std::vector<Timestamp> v;
    for (auto* x : s) v.push_back(*parse_timestamp(x));
    return v;
  };
  EXPECT_EQ(infer_frequency(stamps({"2020-01-01 00:00", "2020-01-01 01:00", "2020-01-01 03:00"})), "H");
  EXPECT_EQ(infer_frequency(stamps({"2020-01-01", "2020-01-02", "2020-01-05"})), "D");
  EXPECT_EQ(infer_frequency(stamps({"2020-01-05", "2020-01-12", "2020-01-26"})), "W");
  EXPECT_EQ(infer_frequency(stamps({"2020-01-31", "2020-02-29", "2020-03-31"})), "M");
  EXPECT_EQ(infer_frequency(stamps({"2020-01-01", "2020-04-01", "2020-10-01"})), "Q");
  EXPECT_EQ(infer_frequency(stamps({"2019-01-01", "2020-01-01"})), "Y");
  EXPECT_EQ(infer_frequency(stamps({"2020-01-01 00:00", "2020-01-01 00:30"})), "");
}

TEST(LongCsv, ThreeRowsOneSeries) {
  const auto ds = parse_long_csv("item_id,timestamp,value\na,2020-01-01,1\na,2020-01-02,2\na,2020-01-03,3\n");
  ASSERT_EQ(ds.series.size(), 1u);
  EXPECT_EQ(ds.series[0].values, (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(ds.series[0].start, "2020-01-01");
  EXPECT_EQ(ds.freq, "D");
}

TEST(LongCsv, UnsortedRowsAndGapsBecomeMissing) {
  const auto ds = parse_long_csv(
      "value,item_id,timestamp\n3,a,2020-01-04\n1,a,2020-01-01\n,a,2020-01-02\n7,b,2020-02-01\n8,b,2020-02-02\n");
  ASSERT_EQ(ds.series.size(), 2u);
  const auto& a = ds.series[0].values;
  ASSERT_EQ(a.size(), 4u);
  EXPECT_EQ(a[0], 1.0);
  EXPECT_TRUE(is_missing(a[1]));
  EXPECT_TRUE(is_missing(a[2]));
  EXPECT_EQ(a[3], 3.0);
  EXPECT_EQ(ds.series[0].observed_mask(), (std::vector<bool>{true, false, false, true}));
}

TEST(LongCsv, DuplicateTimestampNamesBothLines) {
  try {
    parse_long_csv("item_id,timestamp,value\na,2020-01-01,1\na,2020-01-02,2\na,2020-01-01,5\n", "f.csv");
    FAIL();
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("lines 2 and 4"), std::string::npos) << msg;
  }
}

TEST(LongCsv, MalformedRowsReportLineNumbers) {
  auto expect_line = [](const std::string& text, const std::string& tag) {
    try {
      parse_long_csv(text, "f.csv");
      FAIL() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::format);
      EXPECT_NE(std::string(e.what()).find(tag), std::string::npos) << e.what();
    }
  };
  expect_line("item_id,timestamp,value\na,2020-01-01,1\na,2020-01-02,abc\n", "f.csv:3");
  expect_line("item_id,timestamp,value\na,2020-13-01,1\n", "f.csv:2");
  expect_line("item_id,timestamp,value\na,2020-01-01\n", "f.csv:2");
  expect_line("id,timestamp,value\n", "f.csv:1");
}

TEST(LongCsv, MixedFrequenciesRejected) {
  EXPECT_THROW(parse_long_csv("item_id,timestamp,value\na,2020-01-01,1\na,2020-01-02,2\n"
                              "b,2020-01-01,1\nb,2020-02-01,2\nb,2020-03-01,2\n"),
               Error);
}

TEST(Jsonl, NullMarksMissing) {
  const auto ds = parse_jsonl("{\"start\": \"2020-01-01\", \"freq\": \"D\", \"target\": [1, null, 3]}\n");
  ASSERT_EQ(ds.series.size(), 1u);
  EXPECT_EQ(ds.series[0].observed_mask(), (std::vector<bool>{true, false, true}));
  EXPECT_EQ(ds.freq, "D");
}

TEST(Jsonl, Errors) {
  EXPECT_THROW(parse_jsonl("{\"target\": [1, \"x\"]}\n"), Error);
  EXPECT_THROW(parse_jsonl("{\"start\": \"2020-01-01\"}\n"), Error);
  EXPECT_THROW(parse_jsonl("not json\n"), Error);
  EXPECT_THROW(parse_jsonl("{\"freq\": \"D\", \"target\": [1]}\n{\"freq\": \"H\", \"target\": [1]}\n"), Error);
  EXPECT_THROW(parse_jsonl("{\"item_id\": \"a\", \"target\": [1]}\n{\"item_id\": \"a\", \"target\": [2]}\n"), Error);
}

TEST(RoundTrip, SaveThenLoadIsIdentity) {
  Rng rng(1);
  for (const auto* freq : {"H", "D", "W", "M", "Q", "Y"}) {
    const auto ds = random_dataset(rng, freq);
    for (const auto* ext : {".csv", ".jsonl", ".csv.gz", ".jsonl.gz"}) {
      const auto path = temp_path(std::string(freq) + ext);
      save_dataset(path, ds);
      auto back = load_dataset(path);
      std::filesystem::remove(path);
      back.name = ds.name;
      ASSERT_EQ(back.series.size(), ds.series.size());
      for (std::size_t i = 0; i < ds.series.size(); ++i) {
        // A single-point CSV series cannot carry its own frequency.
        EXPECT_EQ(back.series[i], ds.series[i]) << freq << ext << " series " << i;
      }
    }
  }
}

TEST(RoundTrip, GzipOutputIsReproducible) {
  Rng rng(2);
  const auto ds = random_dataset(rng, "D");
  const auto a = temp_path("a.jsonl.gz"), b = temp_path("b.jsonl.gz");
  save_dataset(a, ds);
  save_dataset(b, ds);
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  const std::string ca((std::istreambuf_iterator<char>(fa)), {}), cb((std::istreambuf_iterator<char>(fb)), {});
  EXPECT_EQ(ca, cb);
  std::filesystem::remove(a);
  std::filesystem::remove(b);
  EXPECT_THROW(load_dataset(temp_path("missing.csv")), Error);
}

TEST(Split, LastHHeldOut) {
  Dataset ds;
  TimeSeries s;
  s.id = "a";
  for (int i = 0; i < 100; ++i) s.values.push_back(i);
  ds.series.push_back(s);
  const auto sp = split_last_h(ds, 30);
  ASSERT_EQ(sp.test.size(), 1u);
  EXPECT_EQ(sp.test[0].context.size(), 70u);
  EXPECT_EQ(sp.test[0].horizon.size(), 30u);
  EXPECT_EQ(sp.test[0].horizon.front(), 70.0);
  EXPECT_EQ(sp.train[0].values.size(), 70u);
}

TEST(Split, ContextIsTheImmediatelyPrecedingWindow) {
  Dataset ds;
  TimeSeries s;
  s.id = "a";
  for (int i = 0; i < 600; ++i) s.values.push_back(i);
  ds.series.push_back(s);
  const auto sp = split_last_h(ds, 64, 512);
  EXPECT_EQ(sp.test[0].context.size(), 512u);
  EXPECT_EQ(sp.test[0].context.front(), 24.0);
  EXPECT_EQ(sp.test[0].context.back(), 535.0);
  EXPECT_EQ(sp.test[0].horizon.front(), 536.0);
}

TEST(Split, ShortSeriesSkipped) {
  Dataset ds;
  ds.series.push_back({"short", "", "", std::vector<double>(64, 1.0)});
  ds.series.push_back({"ok", "", "", std::vector<double>(65, 1.0)});
  const auto sp = split_last_h(ds, 64);
  EXPECT_EQ(sp.skipped, (std::vector<std::string>{"short"}));
  EXPECT_EQ(sp.test.size(), 1u);
}

TEST(Split, HorizonNeverOverlapsTrainView) {
  Rng rng(3);
  Dataset ds;
  for (int i = 0; i < 20; ++i) {
    TimeSeries s;
    s.id = std::to_string(i);
    s.values.resize(static_cast<std::size_t>(rng.integer(1, 300)));
    for (std::size_t t = 0; t < s.values.size(); ++t) s.values[t] = static_cast<double>(t);
    ds.series.push_back(s);
  }
  const auto sp = split_last_h(ds, 24, 100);
  for (std::size_t i = 0; i < sp.test.size(); ++i) {
    EXPECT_LT(sp.train[i].values.back(), sp.test[i].horizon.front());
    EXPECT_EQ(sp.test[i].context.back() + 1, sp.test[i].horizon.front());
  }
}

TEST(Windows, StridedTrainingPairs) {
  std::vector<TimeSeries> train{{"a", "", "", std::vector<double>(100, 0.0)}};
  for (std::size_t t = 0; t < 100; ++t) train[0].values[t] = static_cast<double>(t);
  const auto w = training_windows(train, 40, 10, 25, 20);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w[0].horizon.back(), 99.0);
  EXPECT_EQ(w[0].context.size(), 40u);
  EXPECT_EQ(w[1].horizon.back(), 74.0);
  EXPECT_EQ(w[2].horizon.back(), 49.0);
  EXPECT_EQ(w[2].context.size(), 40u);
}
