#include <cmath>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "dslob/dataset.hpp"
#include "support/tiny_config.hpp"

using namespace dslob;

namespace {

// Synthetic day: record i at i seconds, features drawn at random, mid a random walk.
DayFeatures synthetic_day(std::size_t n, std::int64_t index, Scenario sc, std::optional<SimTime> t_s,
                          std::uint64_t seed = 1) {
  RngStream rng(seed, {static_cast<std::uint64_t>(index), 0, Purpose::test});
  DayFeatures d;
  d.day_index = index;
  d.scenario = sc;
  d.t_s = t_s;
  double mid = 10000.0;
  for (std::size_t i = 0; i < n; ++i) {
    FeatureRecord r;
    r.time = static_cast<SimTime>(i) * kNanosPerSecond;
    for (auto& v : r.x) v = rng.normal(0.0, 1.0);
    r.x[5] = 7.0;  // constant column
    mid += rng.normal(0.0, 1.0);
    r.mid = mid;
    d.push(r);
  }
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Features, TwoLevelBookLayout) {
  OrderBook b;
  b.submit_limit({1, 1, Side::ask, OrderKind::limit, 101, 5, 0});
  b.submit_limit({2, 1, Side::ask, OrderKind::limit, 102, 3, 0});
  b.submit_limit({3, 1, Side::bid, OrderKind::limit, 99, 4, 0});
  b.submit_limit({4, 1, Side::bid, OrderKind::limit, 98, 6, 0});
  const auto r = extract_features(b.snapshot(11));
  const double head[] = {101, 5, 99, 4, 102, 3, 98, 6, 103, 0, 97, 0};
  for (std::size_t i = 0; i < 12; ++i) EXPECT_DOUBLE_EQ(r.x[i], head[i]) << i;
  EXPECT_EQ(r.x.size(), 40U);
  EXPECT_DOUBLE_EQ(r.mid, 100.0);
  EXPECT_EQ(r.time, 11);
  for (std::size_t lvl = 1; lvl < kBookDepth; ++lvl) {
    EXPECT_GT(r.x[4 * lvl], r.x[4 * (lvl - 1)]);          // asks ascend
    EXPECT_LT(r.x[4 * lvl + 2], r.x[4 * (lvl - 1) + 2]);  // bids descend
  }
}

TEST(Features, PaddedBestLevelIsDropped) {
  LobSnapshot s;
  for (std::size_t i = 0; i < kBookDepth; ++i) {
    s.asks.push_back({101 + static_cast<Price>(i), 0});
    s.bids.push_back({99 - static_cast<Price>(i), 1});
  }
  EXPECT_THROW(extract_features(s), SnapshotError);
  DayRecord r;
  r.snapshots = {s};
  EXPECT_EQ(day_features(r).dropped, 1U);
  EXPECT_EQ(day_features(r).size(), 0U);
}

TEST(Features, CsvRoundTripMatchesInMemory) {
  const auto cfg = oracle::tiny_config(1);
  DayOptions o;
  o.stop_at = 300 * kNanosPerSecond;
  const auto day = run_day(cfg, Scenario::ordinary, 0, o);
  const auto dir = oracle::scratch_dir("csv_roundtrip");
  write_day_csv(dir / "d.csv", day);
  const auto from_csv = read_day_csv(dir / "d.csv", manifest_entry(day));
  const auto direct = day_features(day);
  EXPECT_EQ(from_csv.times, direct.times);
  EXPECT_EQ(from_csv.x, direct.x);
  EXPECT_EQ(from_csv.mid, direct.mid);
}

TEST(Features, MalformedCsvRejected) {
  const auto dir = oracle::scratch_dir("csv_bad");
  {
    std::ofstream out(dir / "bad.csv");
    out << day_csv_header() << "\n1,2,3\n";
  }
  EXPECT_THROW(read_day_csv(dir / "bad.csv", ManifestEntry{}), DatasetError);
  {
    std::ofstream out(dir / "hdr.csv");
    out << "time,mid\n";
  }
  EXPECT_THROW(read_day_csv(dir / "hdr.csv", ManifestEntry{}), DatasetError);
}

TEST(Windows, CountFormula) {
  const auto d = synthetic_day(150, 0, Scenario::ordinary, std::nullopt);
  EXPECT_EQ(build_windows(d, 10).size(), 41U);
  EXPECT_EQ(build_windows(d, 50).size(), 1U);
  EXPECT_TRUE(build_windows(d, 51).empty());
  EXPECT_TRUE(build_windows(synthetic_day(99, 0, Scenario::ordinary, std::nullopt), 1).empty());
}

TEST(Windows, LabelAlignmentAndShape) {
  const auto d = synthetic_day(400, 0, Scenario::ordinary, std::nullopt);
  for (const auto& w : build_windows(d, 7)) {
    ASSERT_EQ(w.flat().size(), 4000U);
    ASSERT_EQ(w.y, d.mid[w.end + 7]);
    ASSERT_EQ(w.end_time, d.times[w.end]);
    ASSERT_EQ(w.row(99).data(), d.row(w.end).data());
    ASSERT_EQ(w.row(0).data(), d.row(w.end - 99).data());
    ASSERT_EQ(w.regime, Regime::no_shock);
  }
}

TEST(Windows, RegimeBoundary) {
  const SimTime ts = 250 * kNanosPerSecond;
  const auto d = synthetic_day(400, 1, Scenario::small, ts);
  const auto ws = build_windows(d, 10);
  bool seen_post = false;
  for (const auto& w : ws) {
    if (w.end_time == ts - kNanosPerSecond) {
      EXPECT_EQ(w.regime, Regime::pre_shock);
    }
    if (w.end_time == ts) {
      EXPECT_EQ(w.regime, Regime::post_shock);
    }
    if (seen_post) {  // monotone
      ASSERT_EQ(w.regime, Regime::post_shock);
    }
    seen_post = w.regime == Regime::post_shock;
    ASSERT_EQ(w.regime == Regime::post_shock, w.end_time >= ts);
  }
  // One nanosecond matters.
  auto d2 = d;
  d2.t_s = 200 * kNanosPerSecond + 1;
  for (const auto& w : build_windows(d2, 10)) {
    if (w.end_time == 200 * kNanosPerSecond) {
      EXPECT_EQ(w.regime, Regime::pre_shock);
    }
  }
}

TEST(Norm, TrainingFeaturesStandardized) {
  const auto d = synthetic_day(300, 0, Scenario::ordinary, std::nullopt);
  const auto ws = build_windows(d, 10);
  const auto stats = fit_norm(ws);
  EXPECT_DOUBLE_EQ(stats.std[5], stats.epsilon);
  const auto n = apply_norm(stats, d);
  const auto nws = build_windows(n, 10);
  // Column moments over every row of every training window.
  std::array<double, kFeatures> s{}, s2{};
  double rows = 0;
  for (const auto& w : nws) {
    for (std::size_t i = 0; i < kWindow; ++i) {
      const auto r = w.row(i);
      for (std::size_t k = 0; k < kFeatures; ++k) {
        s[k] += r[k];
        s2[k] += r[k] * r[k];
      }
      rows += 1;
    }
  }
  for (std::size_t k = 0; k < kFeatures; ++k) {
    EXPECT_NEAR(s[k] / rows, 0.0, 1e-9) << k;
    if (k == 5) {
      EXPECT_EQ(s2[k], 0.0);
    } else {
      EXPECT_NEAR(std::sqrt(s2[k] / rows), 1.0, 1e-9) << k;
    }
  }
  double ys = 0, ys2 = 0;
  for (const auto& w : nws) {
    ys += w.y;
    ys2 += w.y * w.y;
  }
  EXPECT_NEAR(ys / nws.size(), 0.0, 1e-9);
  EXPECT_NEAR(std::sqrt(ys2 / nws.size()), 1.0, 1e-9);
}

TEST(Norm, RoundTrip) {
  const auto d = synthetic_day(200, 0, Scenario::ordinary, std::nullopt);
  const auto stats = fit_norm(build_windows(d, 5));
  const auto back = invert_norm(stats, apply_norm(stats, d));
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    ASSERT_NEAR(back.x[i], d.x[i], 1e-9 * std::max(1.0, std::abs(d.x[i])));
  }
  for (std::size_t i = 0; i < d.mid.size(); ++i) ASSERT_NEAR(back.mid[i], d.mid[i], 1e-9 * std::abs(d.mid[i]));
  EXPECT_THROW(fit_norm({}), DatasetError);
  EXPECT_EQ(to_json(norm_from_json(to_json(stats))), to_json(stats));
}

TEST(Trend, Labels) {
  const std::vector<double> flat(20, 100.0);
  EXPECT_EQ(trend_label(flat, 3, 5, 0.001), Trend::stationary);
  const std::vector<double> up{100, 101, 101, 101};
  EXPECT_EQ(trend_label(up, 0, 3, 0.002), Trend::up);  // r = 0.01
  const std::vector<double> down{100, 99, 99, 99};
  EXPECT_EQ(trend_label(down, 0, 3, 0.002), Trend::down);
  EXPECT_EQ(trend_label(up, 0, 3, 0.02), Trend::stationary);
  EXPECT_THROW(trend_label(up, 1, 3, 0.002), std::out_of_range);
}

TEST(Splits, PartitionAndFilters) {
  std::vector<DayFeatures> days;
  days.push_back(synthetic_day(300, 0, Scenario::ordinary, std::nullopt));
  days.push_back(synthetic_day(300, 1, Scenario::ordinary, std::nullopt));
  days.push_back(synthetic_day(300, 2, Scenario::ordinary, std::nullopt));
  days.push_back(synthetic_day(300, 3, Scenario::small, 150 * kNanosPerSecond));
  days.push_back(synthetic_day(300, 4, Scenario::large, 180 * kNanosPerSecond));
  const auto roles = assign_day_roles(days, 0.2, 9);
  EXPECT_EQ(roles, assign_day_roles(days, 0.2, 9));
  EXPECT_EQ(std::count_if(roles.begin(), roles.end(), [](auto& r) { return r.second == DayRole::holdout; }), 1);
  EXPECT_EQ(roles.at(3), DayRole::shock);
  const auto s = make_splits(days, roles, 10);
  std::size_t total = 0;
  for (const auto& d : days) total += build_windows(d, 10).size();
  EXPECT_EQ(s.total(), total);
  for (const auto& w : s.train) ASSERT_EQ(roles.at(w.day_index), DayRole::train);
  for (const auto& w : s.test_large) ASSERT_TRUE(w.regime == Regime::post_shock && w.scenario == Scenario::large);
  for (const auto& w : s.test_small) ASSERT_TRUE(w.regime == Regime::post_shock && w.scenario == Scenario::small);
  for (const auto& w : s.test_iid) ASSERT_NE(w.regime, Regime::post_shock);
}

TEST(Splits, MissingScenarioIsAnError) {
  std::vector<DayFeatures> days;
  days.push_back(synthetic_day(300, 0, Scenario::ordinary, std::nullopt));
  days.push_back(synthetic_day(300, 1, Scenario::ordinary, std::nullopt));
  const auto roles = assign_day_roles(days, 0.5, 1);
  try {
    make_splits(days, roles, 10);
    FAIL() << "expected an error";
  } catch (const DatasetError& e) {
    EXPECT_NE(std::string(e.what()).find("test_small=0"), std::string::npos);
  }
}

TEST(Tensors, ExportReadBack) {
  std::vector<DayFeatures> days;
  days.push_back(synthetic_day(150, 0, Scenario::ordinary, std::nullopt));
  const auto ws = build_windows(days[0], 10);
  ASSERT_EQ(ws.size(), 41U);
  const auto dir = oracle::scratch_dir("tensors");
  ExportOptions opt;
  opt.trend_alpha = 1e-4;
  const auto info = export_split(dir, "train", ws, opt);
  nlohmann::json desc{{"format", "dslob-tensors"}, {"shape", {kWindow, kFeatures}}, {"splits", {{"train", info}}}};
  write_json_file(dir / "tensors.json", desc);
  const auto t = read_tensor_split(dir, "train");
  ASSERT_EQ(t.count, 41U);
  ASSERT_EQ(t.X.size(), 41U * 100 * 40);
  for (std::size_t n = 0; n < ws.size(); ++n) {
    const auto flat = ws[n].flat();
    for (std::size_t i = 0; i < flat.size(); ++i) {
      ASSERT_EQ(t.X[n * 4000 + i], static_cast<float>(flat[i]));
    }
    ASSERT_EQ(t.y[n], static_cast<float>(ws[n].y));
    ASSERT_EQ(t.day[n], 0);
    ASSERT_EQ(t.regime[n], 0);
    ASSERT_EQ(t.trend[n], static_cast<std::int8_t>(window_trend(ws[n], 10, 1e-4, NormStats::identity())));
  }
  // Little-endian float32, sample-major.
  const auto raw = slurp(dir / "train_X.f32");
  float first = 0;
  std::memcpy(&first, raw.data(), 4);
  EXPECT_EQ(first, static_cast<float>(ws[0].row(0)[0]));
  {
    std::ofstream out(dir / "train_y.f32", std::ios::binary | std::ios::trunc);
    out << "xx";
  }
  EXPECT_THROW(read_tensor_split(dir, "train"), DatasetError);
}

TEST(Tensors, StrideKeepsEveryNth) {
  const auto d = synthetic_day(150, 0, Scenario::ordinary, std::nullopt);
  const auto ws = build_windows(d, 10);
  const auto dir = oracle::scratch_dir("tensors_stride");
  ExportOptions opt;
  opt.stride = 10;
  EXPECT_EQ(export_split(dir, "s", ws, opt)["count"], 5);
}

TEST(Dataset, BuildAndReopen) {
  const auto root = oracle::scratch_dir("dataset_pipeline");
  generate_dataset(oracle::tiny_config(8, 4), root / "gen");
  DatasetOptions opt;
  opt.export_tensors = true;
  opt.export_stride = 50;
  opt.trend_alpha = 1e-4;
  const auto desc = build_dataset(root / "gen", root / "ds", opt);
  EXPECT_EQ(desc["source"], "../gen");
  const Dataset ds = open_dataset(root / "ds");
  EXPECT_EQ(split_counts_json(ds.splits), desc["counts"]);
  EXPECT_TRUE(ds.normalized);

  // Statistics come from the training windows only.
  DatasetOptions raw_opt;
  raw_opt.normalize = false;
  Dataset raw = assemble_dataset(root / "gen", raw_opt);
  std::vector<WindowSample> train;
  for (const auto& d : raw.days) {
    if (ds.roles.at(d.day_index) != DayRole::train) continue;
    for (const auto& w : build_windows(d, opt.horizon)) train.push_back(w);
  }
  EXPECT_EQ(to_json(fit_norm(train)), to_json(ds.stats));

  const auto t = read_tensor_split(root / "ds" / "tensors", "test_large");
  EXPECT_EQ(t.count, (ds.splits.test_large.size() + 49) / 50);
  for (const auto r : t.regime) EXPECT_EQ(r, static_cast<std::uint8_t>(Regime::post_shock));
  for (const auto s : t.scenario) EXPECT_EQ(s, static_cast<std::uint8_t>(Scenario::large));
}
