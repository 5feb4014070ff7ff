#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <exception>
#include <thread>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <functional>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dslob/order_book.hpp"
#include "dslob/rng.hpp"
#include "dslob/scenario.hpp"
#include "dslob/types.hpp"

namespace dslob {

inline constexpr std::size_t kFeatures = 4 * kBookDepth;  // 40
inline constexpr std::size_t kWindow = 100;

/// One LOB record as a model input row: index 4(i-1)+{0,1,2,3} holds
/// (ask price, ask volume, bid price, bid volume) of level i.
struct FeatureRecord {
  SimTime time{0};
  std::array<double, kFeatures> x{};
  double mid{0.0};
};

inline FeatureRecord extract_features(const LobSnapshot& snap) {
  if (snap.asks.size() < kBookDepth || snap.bids.size() < kBookDepth) {
    throw SnapshotError("snapshot shallower than 10 levels");
  }
  FeatureRecord r;
  r.time = snap.time;
  r.mid = mid_price(snap).cents();  // throws on a padded best level
  for (std::size_t i = 0; i < kBookDepth; ++i) {
    r.x[4 * i + 0] = static_cast<double>(snap.asks[i].price);
    r.x[4 * i + 1] = static_cast<double>(snap.asks[i].volume);
    r.x[4 * i + 2] = static_cast<double>(snap.bids[i].price);
    r.x[4 * i + 3] = static_cast<double>(snap.bids[i].volume);
  }
  return r;
}

/// Feature records of one day, stored row-major (records x 40) so that any
/// window of consecutive records is one contiguous block.
struct DayFeatures {
  std::int64_t day_index{0};
  Scenario scenario{Scenario::ordinary};
  std::optional<SimTime> t_s;
  std::vector<SimTime> times;
  std::vector<double> x;
  std::vector<double> mid;
  std::size_t dropped{0};

  std::size_t size() const noexcept { return times.size(); }
  std::span<const double> row(std::size_t i) const { return {x.data() + i * kFeatures, kFeatures}; }

  void push(const FeatureRecord& r) {
    times.push_back(r.time);
    x.insert(x.end(), r.x.begin(), r.x.end());
    mid.push_back(r.mid);
  }
};

inline DayFeatures day_features(const DayRecord& day) {
  DayFeatures f;
  f.day_index = day.day_index;
  f.scenario = day.scenario;
  if (day.shock) f.t_s = day.shock->t_s;
  for (const auto& s : day.snapshots) {
    try {
      f.push(extract_features(s));
    } catch (const SnapshotError&) {
      ++f.dropped;
    }
  }
  return f;
}

class DatasetError : public Error {
 public:
  using Error::Error;
};

inline DayFeatures read_day_csv(const fs::path& path, const ManifestEntry& meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open day file " + path.string());
  DayFeatures f;
  f.day_index = meta.day_index;
  f.scenario = meta.scenario;
  if (meta.shock) f.t_s = meta.shock->t_s;
  std::string line;
  if (!std::getline(in, line) || line != day_csv_header()) throw DatasetError("bad header in " + path.string());
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    FeatureRecord r;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    const auto bad = [&] { return DatasetError(path.string() + ":" + std::to_string(lineno) + ": malformed row"); };
    auto res = std::from_chars(p, end, r.time);
    if (res.ec != std::errc{}) throw bad();
    p = res.ptr;
    for (std::size_t k = 0; k <= kFeatures; ++k) {
      if (p == end || *p != ',') throw bad();
      ++p;
      double v = 0;
      res = std::from_chars(p, end, v);
      if (res.ec != std::errc{}) throw bad();
      p = res.ptr;
      if (k < kFeatures) {
        r.x[k] = v;
      } else {
        r.mid = v;
      }
    }
    if (p != end) throw bad();
    if (r.x[1] <= 0 || r.x[3] <= 0) {  // padded best level
      ++f.dropped;
      continue;
    }
    f.push(r);
  }
  return f;
}

// ---------------------------------------------------------------------------
// Windows

enum class Regime : std::uint8_t { no_shock = 0, pre_shock = 1, post_shock = 2 };

constexpr std::string_view to_string(Regime r) noexcept {
  switch (r) {
    case Regime::no_shock: return "no_shock";
    case Regime::pre_shock: return "pre_shock";
    case Regime::post_shock: return "post_shock";
  }
  return "?";
}

/// A 100 x 40 input window ending at record `end` of `day`, with the mid
/// `horizon` records later as label. The window is a view; `day` must
/// outlive it.
struct WindowSample {
  const DayFeatures* day{nullptr};
  std::size_t end{0};
  double y{0.0};
  std::int64_t day_index{0};
  Scenario scenario{Scenario::ordinary};
  Regime regime{Regime::no_shock};
  SimTime end_time{0};

  std::size_t first() const noexcept { return end + 1 - kWindow; }
  // Flattened rows, record-major: 4000 contiguous values.
  std::span<const double> flat() const { return {day->x.data() + first() * kFeatures, kWindow * kFeatures}; }
  std::span<const double> row(std::size_t i) const { return day->row(first() + i); }
  double last_mid() const { return day->mid[end]; }
};

inline Regime regime_of(const DayFeatures& day, SimTime end_time) {
  if (!day.t_s) return Regime::no_shock;
  return end_time >= *day.t_s ? Regime::post_shock : Regime::pre_shock;
}

// Stride-1 windows; a day shorter than window + horizon yields none.
inline std::vector<WindowSample> build_windows(const DayFeatures& day, std::size_t horizon) {
  std::vector<WindowSample> out;
  const std::size_t n = day.size();
  if (n < kWindow + horizon) return out;
  out.reserve(n - kWindow - horizon + 1);
  for (std::size_t end = kWindow - 1; end + horizon < n; ++end) {
    out.push_back(WindowSample{&day, end, day.mid[end + horizon], day.day_index, day.scenario,
                               regime_of(day, day.times[end]), day.times[end]});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Normalization

struct NormStats {
  std::array<double, kFeatures> mean{};
  std::array<double, kFeatures> std{};
  double y_mean{0.0};
  double y_std{1.0};
  double epsilon{1e-8};

  static NormStats identity() {
    NormStats s;
    s.mean.fill(0.0);
    s.std.fill(1.0);
    return s;
  }
};

/// Per-feature z-score statistics over every row of every training window
/// (a record shared by k windows counts k times), and over the labels.
/// Standard deviations below epsilon are replaced by epsilon.
inline NormStats fit_norm(std::span<const WindowSample> train, double epsilon = 1e-8) {
  if (train.empty()) throw DatasetError("fit_norm: empty training set");
  // Multiplicity of each record, per day; days in index order so sums are reproducible.
  const auto by_index = [](const DayFeatures* a, const DayFeatures* b) {
    return a->day_index != b->day_index ? a->day_index < b->day_index : std::less<>{}(a, b);
  };
  std::map<const DayFeatures*, std::vector<double>, decltype(by_index)> weight(by_index);
  for (const auto& w : train) {
    auto& v = weight[w.day];
    if (v.empty()) v.assign(w.day->size(), 0.0);
    for (std::size_t i = w.first(); i <= w.end; ++i) v[i] += 1.0;
  }
  NormStats s;
  s.epsilon = epsilon;
  std::array<double, kFeatures> sum{}, sumsq{};
  double total = 0.0;
  // Two passes (mean, then centered squares) for accuracy.
  for (const auto& [day, v] : weight) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i] == 0.0) continue;
      const auto r = day->row(i);
      for (std::size_t k = 0; k < kFeatures; ++k) sum[k] += v[i] * r[k];
      total += v[i];
    }
  }
  for (std::size_t k = 0; k < kFeatures; ++k) s.mean[k] = sum[k] / total;
  for (const auto& [day, v] : weight) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i] == 0.0) continue;
      const auto r = day->row(i);
      for (std::size_t k = 0; k < kFeatures; ++k) sumsq[k] += v[i] * (r[k] - s.mean[k]) * (r[k] - s.mean[k]);
    }
  }
  for (std::size_t k = 0; k < kFeatures; ++k) s.std[k] = std::max(std::sqrt(sumsq[k] / total), epsilon);

  double ys = 0.0;
  for (const auto& w : train) ys += w.y;
  s.y_mean = ys / static_cast<double>(train.size());
  double yss = 0.0;
  for (const auto& w : train) yss += (w.y - s.y_mean) * (w.y - s.y_mean);
  s.y_std = std::max(std::sqrt(yss / static_cast<double>(train.size())), epsilon);
  return s;
}

// Features by their column statistics, mids (and therefore labels) by the label statistics.
inline DayFeatures apply_norm(const NormStats& s, const DayFeatures& day) {
  DayFeatures out = day;
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t k = 0; k < kFeatures; ++k) {
      double& v = out.x[i * kFeatures + k];
      v = (v - s.mean[k]) / s.std[k];
    }
    out.mid[i] = (out.mid[i] - s.y_mean) / s.y_std;
  }
  return out;
}

inline DayFeatures invert_norm(const NormStats& s, const DayFeatures& day) {
  DayFeatures out = day;
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t k = 0; k < kFeatures; ++k) {
      double& v = out.x[i * kFeatures + k];
      v = v * s.std[k] + s.mean[k];
    }
    out.mid[i] = out.mid[i] * s.y_std + s.y_mean;
  }
  return out;
}

inline nlohmann::json to_json(const NormStats& s) {
  return nlohmann::json{{"feature_mean", s.mean}, {"feature_std", s.std}, {"y_mean", s.y_mean},
                        {"y_std", s.y_std},       {"epsilon", s.epsilon}};
}

inline NormStats norm_from_json(const nlohmann::json& j) {
  NormStats s;
  s.mean = j.at("feature_mean").get<std::array<double, kFeatures>>();
  s.std = j.at("feature_std").get<std::array<double, kFeatures>>();
  s.y_mean = j.at("y_mean").get<double>();
  s.y_std = j.at("y_std").get<double>();
  s.epsilon = j.at("epsilon").get<double>();
  return s;
}

// ---------------------------------------------------------------------------
// Trend labels

enum class Trend : std::int8_t { down = -1, stationary = 0, up = 1 };

/// Compares the mean of mid[t+1..t+h] with mid[t]: relative change above
/// alpha is up, below -alpha is down.
inline Trend trend_label(std::span<const double> mid, std::size_t t, std::size_t h, double alpha) {
  if (h == 0 || t + h >= mid.size()) throw std::out_of_range("trend_label: t + h outside the series");
  double m = 0.0;
  for (std::size_t i = t + 1; i <= t + h; ++i) m += mid[i];
  m /= static_cast<double>(h);
  const double r = (m - mid[t]) / mid[t];
  if (r > alpha) return Trend::up;
  if (r < -alpha) return Trend::down;
  return Trend::stationary;
}

// Trend of a window's label, computed on raw mids (the threshold is a relative change).
inline Trend window_trend(const WindowSample& w, std::size_t h, double alpha, const NormStats& s) {
  std::vector<double> mids(h + 1);
  for (std::size_t i = 0; i <= h; ++i) mids[i] = w.day->mid[w.end + i] * s.y_std + s.y_mean;
  return trend_label(mids, 0, h, alpha);
}

// ---------------------------------------------------------------------------
// Splits

enum class DayRole : std::uint8_t { train, holdout, shock };

struct Splits {
  std::vector<WindowSample> train;
  std::vector<WindowSample> test_iid;
  std::vector<WindowSample> test_small;
  std::vector<WindowSample> test_large;

  std::size_t total() const noexcept { return train.size() + test_iid.size() + test_small.size() + test_large.size(); }
};

/// Ordinary days are split into training and held-out days
/// (round(fraction * n), at least one when there are two or more ordinary
/// days and the fraction is positive), chosen deterministically from seed.
inline std::map<std::int64_t, DayRole> assign_day_roles(std::span<const DayFeatures> days, double holdout_fraction,
                                                        std::uint64_t seed) {
  std::map<std::int64_t, DayRole> roles;
  std::vector<std::int64_t> ordinary;
  for (const auto& d : days) {
    if (d.scenario == Scenario::ordinary) {
      ordinary.push_back(d.day_index);
    } else {
      roles[d.day_index] = DayRole::shock;
    }
  }
  std::sort(ordinary.begin(), ordinary.end());
  RngStream rng = derive_stream(seed, StreamId{0, 0, Purpose::split});
  for (std::size_t i = ordinary.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(ordinary[i - 1], ordinary[j]);
  }
  std::size_t n_hold = 0;
  if (holdout_fraction > 0.0 && ordinary.size() >= 2) {
    n_hold = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(holdout_fraction * static_cast<double>(ordinary.size()))), 1,
        ordinary.size() - 1);
  }
  for (std::size_t i = 0; i < ordinary.size(); ++i) roles[ordinary[i]] = i < n_hold ? DayRole::holdout : DayRole::train;
  return roles;
}

/// train: windows of training ordinary days. test_iid: held-out ordinary
/// days plus pre-shock windows of shock days. test_small / test_large:
/// post-shock windows of small / large shock days.
inline Splits make_splits(std::span<const DayFeatures> days, const std::map<std::int64_t, DayRole>& roles,
                          std::size_t horizon, bool require_all = true) {
  Splits s;
  for (const auto& d : days) {
    const auto it = roles.find(d.day_index);
    if (it == roles.end()) throw DatasetError("no split role for day " + std::to_string(d.day_index));
    for (const auto& w : build_windows(d, horizon)) {
      if (it->second == DayRole::train) {
        s.train.push_back(w);
      } else if (it->second == DayRole::holdout || w.regime != Regime::post_shock) {
        s.test_iid.push_back(w);
      } else if (w.scenario == Scenario::small) {
        s.test_small.push_back(w);
      } else {
        s.test_large.push_back(w);
      }
    }
  }
  if (require_all && (s.train.empty() || s.test_iid.empty() || s.test_small.empty() || s.test_large.empty())) {
    throw DatasetError("empty split: train=" + std::to_string(s.train.size()) +
                       " test_iid=" + std::to_string(s.test_iid.size()) +
                       " test_small=" + std::to_string(s.test_small.size()) +
                       " test_large=" + std::to_string(s.test_large.size()));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Tensor export
//
// Per split <name> in {train, test_iid, test_small, test_large}:
//   <name>_X.f32        float32 LE, [n, 100, 40], sample-major then record then feature
//   <name>_y.f32        float32 LE, [n]   label (mid at end + horizon)
//   <name>_last_mid.f32 float32 LE, [n]   mid of the window's last record
//   <name>_regime.u8    uint8,      [n]   0 no_shock, 1 pre_shock, 2 post_shock
//   <name>_scenario.u8  uint8,      [n]   0 ordinary, 1 small, 2 large
//   <name>_day.i32      int32 LE,   [n]   day index
//   <name>_trend.i8     int8,       [n]   -1/0/+1, only with a trend alpha
// tensors.json describes counts, shapes, byte sizes and FNV-1a 64 checksums.

namespace detail {

template <class T>
void put_le(std::string& buf, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  buf.append(bytes, sizeof(T));
}

class BinaryWriter {
 public:
  explicit BinaryWriter(const fs::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw DatasetError("cannot write " + path.string());
  }
  void write(const std::string& chunk) {
    out_.write(chunk.data(), static_cast<std::streamsize>(chunk.size()));
    hash_ = fnv1a64(chunk, hash_);
    bytes_ += chunk.size();
  }
  nlohmann::json finish() {
    out_.close();
    return nlohmann::json{{"path", path_.filename().string()}, {"bytes", bytes_}, {"fnv1a64", hex64(hash_)}};
  }

 private:
  fs::path path_;
  std::ofstream out_;
  std::uint64_t hash_{0xcbf29ce484222325ULL};
  std::uint64_t bytes_{0};
};

}  // namespace detail

struct ExportOptions {
  std::size_t stride{1};  // keep every stride-th window of each split
  std::optional<double> trend_alpha;
  std::size_t horizon{10};
  NormStats stats = NormStats::identity();  // to recover raw mids for trend labels
};

inline nlohmann::json export_split(const fs::path& dir, const std::string& name, std::span<const WindowSample> windows,
                                   const ExportOptions& opt) {
  using detail::put_le;
  detail::BinaryWriter fx(dir / (name + "_X.f32")), fy(dir / (name + "_y.f32")),
      fm(dir / (name + "_last_mid.f32")), fr(dir / (name + "_regime.u8")), fs_(dir / (name + "_scenario.u8")),
      fd(dir / (name + "_day.i32"));
  std::optional<detail::BinaryWriter> ft;
  if (opt.trend_alpha) ft.emplace(dir / (name + "_trend.i8"));
  std::size_t count = 0;
  std::string buf;
  for (std::size_t i = 0; i < windows.size(); i += std::max<std::size_t>(1, opt.stride)) {
    const auto& w = windows[i];
    buf.clear();
    for (const double v : w.flat()) put_le(buf, static_cast<float>(v));
    fx.write(buf);
    buf.clear();
    put_le(buf, static_cast<float>(w.y));
    fy.write(buf);
    buf.clear();
    put_le(buf, static_cast<float>(w.last_mid()));
    fm.write(buf);
    fr.write(std::string(1, static_cast<char>(w.regime)));
    fs_.write(std::string(1, static_cast<char>(w.scenario)));
    buf.clear();
    put_le(buf, static_cast<std::int32_t>(w.day_index));
    fd.write(buf);
    if (ft) {
      const auto t = window_trend(w, opt.horizon, *opt.trend_alpha, opt.stats);
      ft->write(std::string(1, static_cast<char>(static_cast<std::int8_t>(t))));
    }
    ++count;
  }
  nlohmann::json files{{"X", fx.finish()},       {"y", fy.finish()},        {"last_mid", fm.finish()},
                       {"regime", fr.finish()}, {"scenario", fs_.finish()}, {"day", fd.finish()}};
  if (ft) files["trend"] = ft->finish();
  return nlohmann::json{{"count", count}, {"files", files}};
}

// ---------------------------------------------------------------------------
// Dataset assembly

struct DatasetOptions {
  std::size_t horizon{10};
  bool normalize{true};
  std::optional<double> trend_alpha;
  double holdout_fraction{0.2};
  std::optional<std::uint64_t> split_seed;  // defaults to the manifest root seed
  bool export_tensors{false};
  std::size_t export_stride{1};
  unsigned parallel{1};
};

/// Days, split roles, statistics and splits of one dataset. Windows point
/// into `days`, so the object is move-only.
struct Dataset {
  fs::path source;
  Manifest manifest;
  std::vector<DayFeatures> days;
  std::map<std::int64_t, DayRole> roles;
  NormStats stats = NormStats::identity();
  bool normalized{false};
  std::size_t horizon{10};
  std::uint64_t split_seed{0};
  double holdout_fraction{0.2};
  Splits splits;

  Dataset() = default;
  Dataset(Dataset&&) = default;
  Dataset& operator=(Dataset&&) = default;
  Dataset(const Dataset&) = delete;
  Dataset& operator=(const Dataset&) = delete;
};

inline constexpr std::string_view to_string(DayRole r) noexcept {
  switch (r) {
    case DayRole::train: return "train";
    case DayRole::holdout: return "holdout";
    case DayRole::shock: return "shock";
  }
  return "?";
}

inline DayRole parse_day_role(std::string_view s) {
  if (s == "train") return DayRole::train;
  if (s == "holdout") return DayRole::holdout;
  if (s == "shock") return DayRole::shock;
  throw DatasetError("unknown day role '" + std::string(s) + "'");
}

// Reads every non-failed day of the manifest, in manifest order.
inline std::vector<DayFeatures> load_days(const fs::path& dir, const Manifest& m, unsigned parallel = 1) {
  std::vector<const ManifestEntry*> ok;
  for (const auto& e : m.days) {
    if (!e.failed) ok.push_back(&e);
  }
  std::vector<DayFeatures> days(ok.size());
  std::vector<std::exception_ptr> errors(ok.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < ok.size(); i = next++) {
      try {
        days[i] = read_day_csv(dir / ok[i]->file, *ok[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1U, std::min<unsigned>(parallel, static_cast<unsigned>(ok.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return days;
}

inline void normalize_in_place(const NormStats& s, std::vector<DayFeatures>& days) {
  for (auto& d : days) d = apply_norm(s, d);
}

/// Loads a generated directory, assigns split roles, fits normalization on
/// the training windows and rebuilds the splits in the normalized domain.
inline Dataset assemble_dataset(const fs::path& in_dir, const DatasetOptions& opt) {
  if (opt.horizon == 0) throw DatasetError("horizon must be at least 1");
  if (opt.holdout_fraction < 0.0 || opt.holdout_fraction >= 1.0) throw DatasetError("holdout fraction must be in [0, 1)");
  Dataset ds;
  ds.source = in_dir;
  ds.manifest = read_manifest(in_dir);
  ds.days = load_days(in_dir, ds.manifest, opt.parallel);
  ds.horizon = opt.horizon;
  ds.split_seed = opt.split_seed.value_or(ds.manifest.root_seed);
  ds.holdout_fraction = opt.holdout_fraction;
  ds.roles = assign_day_roles(ds.days, opt.holdout_fraction, ds.split_seed);
  ds.splits = make_splits(ds.days, ds.roles, opt.horizon);
  if (opt.normalize) {
    ds.stats = fit_norm(ds.splits.train);
    ds.splits = {};
    normalize_in_place(ds.stats, ds.days);
    ds.normalized = true;
    ds.splits = make_splits(ds.days, ds.roles, opt.horizon);
  }
  return ds;
}

inline nlohmann::json split_counts_json(const Splits& s) {
  return nlohmann::json{{"train", s.train.size()},
                        {"test_iid", s.test_iid.size()},
                        {"test_small", s.test_small.size()},
                        {"test_large", s.test_large.size()}};
}

inline nlohmann::json describe(const Dataset& ds, const fs::path& out_dir) {
  using nlohmann::json;
  json days = json::array();
  for (const auto& d : ds.days) {
    days.push_back(json{{"day_index", d.day_index},
                        {"scenario", std::string(to_string(d.scenario))},
                        {"role", std::string(to_string(ds.roles.at(d.day_index)))},
                        {"records", d.size()},
                        {"dropped", d.dropped},
                        {"windows", build_windows(d, ds.horizon).size()}});
  }
  const fs::path rel = fs::relative(fs::absolute(ds.source), fs::absolute(out_dir));
  return json{{"format", "dslob-dataset"},
              {"version", 1},
              {"source", rel.generic_string()},
              {"root_seed", ds.manifest.root_seed},
              {"config_fingerprint", ds.manifest.config_fingerprint},
              {"horizon", ds.horizon},
              {"window", kWindow},
              {"features", kFeatures},
              {"normalized", ds.normalized},
              {"domain", ds.normalized ? "normalized" : "raw"},
              {"stats", to_json(ds.stats)},
              {"split_seed", ds.split_seed},
              {"holdout_fraction", ds.holdout_fraction},
              {"counts", split_counts_json(ds.splits)},
              {"days", std::move(days)}};
}

/// Exports the four splits plus tensors.json into dir.
inline nlohmann::json export_tensors(const Dataset& ds, const fs::path& dir, const ExportOptions& opt) {
  fs::create_directories(dir);
  nlohmann::json splits;
  const std::pair<const char*, const std::vector<WindowSample>*> parts[] = {
      {"train", &ds.splits.train},
      {"test_iid", &ds.splits.test_iid},
      {"test_small", &ds.splits.test_small},
      {"test_large", &ds.splits.test_large}};
  for (const auto& [name, windows] : parts) splits[name] = export_split(dir, name, *windows, opt);
  nlohmann::json desc{{"format", "dslob-tensors"},
                      {"version", 1},
                      {"byte_order", "little"},
                      {"shape", {kWindow, kFeatures}},
                      {"layout", "sample-major, then record, then feature (index 4*(level-1)+{pa,va,pb,vb})"},
                      {"dtypes",
                       {{"X", "float32"},
                        {"y", "float32"},
                        {"last_mid", "float32"},
                        {"regime", "uint8"},
                        {"scenario", "uint8"},
                        {"day", "int32"},
                        {"trend", "int8"}}},
                      {"regime_codes", {"no_shock", "pre_shock", "post_shock"}},
                      {"scenario_codes", {"ordinary", "small", "large"}},
                      {"horizon", ds.horizon},
                      {"stride", std::max<std::size_t>(1, opt.stride)},
                      {"domain", ds.normalized ? "normalized" : "raw"},
                      {"trend_alpha", opt.trend_alpha ? nlohmann::json(*opt.trend_alpha) : nlohmann::json(nullptr)},
                      {"config_fingerprint", ds.manifest.config_fingerprint},
                      {"splits", splits}};
  write_json_file(dir / "tensors.json", desc);
  return desc;
}

// Implements the `dataset` command: dataset.json and, optionally, tensors.
inline nlohmann::json build_dataset(const fs::path& in_dir, const fs::path& out_dir, const DatasetOptions& opt) {
  Dataset ds = assemble_dataset(in_dir, opt);
  fs::create_directories(out_dir);
  nlohmann::json desc = describe(ds, out_dir);
  desc["trend_alpha"] = opt.trend_alpha ? nlohmann::json(*opt.trend_alpha) : nlohmann::json(nullptr);
  if (opt.trend_alpha) {
    // Class balance per split; labels are on the raw mid so the threshold is a relative change.
    nlohmann::json balance;
    const std::pair<const char*, const std::vector<WindowSample>*> parts[] = {
        {"train", &ds.splits.train},
        {"test_iid", &ds.splits.test_iid},
        {"test_small", &ds.splits.test_small},
        {"test_large", &ds.splits.test_large}};
    for (const auto& [name, windows] : parts) {
      std::array<std::size_t, 3> c{};
      for (const auto& w : *windows) {
        ++c[static_cast<std::size_t>(static_cast<int>(window_trend(w, ds.horizon, *opt.trend_alpha, ds.stats)) + 1)];
      }
      balance[name] = {{"down", c[0]}, {"stationary", c[1]}, {"up", c[2]}};
    }
    desc["trend_counts"] = balance;
  }
  if (opt.export_tensors) {
    export_tensors(ds, out_dir / "tensors", ExportOptions{opt.export_stride, opt.trend_alpha, ds.horizon, ds.stats});
    desc["tensors"] = "tensors/tensors.json";
  }
  write_json_file(out_dir / "dataset.json", desc);
  return desc;
}

/// Reopens a dataset written by build_dataset: reloads the source days,
/// applies the stored statistics and role assignment, and checks the split
/// counts against the descriptor.
inline Dataset open_dataset(const fs::path& dataset_dir, unsigned parallel = 1) {
  const auto j = read_json_file(dataset_dir / "dataset.json");
  if (j.value("format", "") != "dslob-dataset") throw DatasetError("not a dslob dataset: " + dataset_dir.string());
  Dataset ds;
  ds.source = dataset_dir / j.at("source").get<std::string>();
  ds.manifest = read_manifest(ds.source);
  if (ds.manifest.config_fingerprint != j.at("config_fingerprint").get<std::string>()) {
    throw DatasetError("source directory changed since the dataset was built");
  }
  ds.days = load_days(ds.source, ds.manifest, parallel);
  ds.horizon = j.at("horizon").get<std::size_t>();
  ds.split_seed = j.at("split_seed").get<std::uint64_t>();
  ds.holdout_fraction = j.at("holdout_fraction").get<double>();
  for (const auto& d : j.at("days")) {
    ds.roles[d.at("day_index").get<std::int64_t>()] = parse_day_role(d.at("role").get<std::string>());
  }
  ds.normalized = j.at("normalized").get<bool>();
  ds.stats = norm_from_json(j.at("stats"));
  if (ds.normalized) normalize_in_place(ds.stats, ds.days);
  ds.splits = make_splits(ds.days, ds.roles, ds.horizon);
  if (split_counts_json(ds.splits) != j.at("counts")) throw DatasetError("split counts differ from dataset.json");
  return ds;
}

// Reader for one exported split; verifies sizes and checksums against tensors.json.
struct TensorSplit {
  std::size_t count{0};
  std::vector<float> X;
  std::vector<float> y;
  std::vector<float> last_mid;
  std::vector<std::uint8_t> regime;
  std::vector<std::uint8_t> scenario;
  std::vector<std::int32_t> day;
  std::vector<std::int8_t> trend;
};

namespace detail {

template <class T>
std::vector<T> read_array(const fs::path& dir, const nlohmann::json& file, std::size_t expected_elems) {
  const fs::path path = dir / file.at("path").get<std::string>();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() != file.at("bytes").get<std::size_t>() || bytes.size() != expected_elems * sizeof(T)) {
    throw DatasetError("size mismatch in " + path.string());
  }
  if (hex64(fnv1a64(bytes)) != file.at("fnv1a64").get<std::string>()) throw DatasetError("checksum mismatch in " + path.string());
  std::vector<T> out(expected_elems);
  for (std::size_t i = 0; i < expected_elems; ++i) {
    char b[sizeof(T)];
    std::memcpy(b, bytes.data() + i * sizeof(T), sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    std::memcpy(&out[i], b, sizeof(T));
  }
  return out;
}

}  // namespace detail

inline TensorSplit read_tensor_split(const fs::path& dir, const std::string& name) {
  const auto desc = read_json_file(dir / "tensors.json");
  if (desc.value("format", "") != "dslob-tensors") throw DatasetError("not a dslob tensor export");
  if (desc.at("shape") != nlohmann::json{kWindow, kFeatures}) throw DatasetError("unexpected window shape");
  const auto& sp = desc.at("splits").at(name);
  const auto& files = sp.at("files");
  TensorSplit t;
  t.count = sp.at("count").get<std::size_t>();
  t.X = detail::read_array<float>(dir, files.at("X"), t.count * kWindow * kFeatures);
  t.y = detail::read_array<float>(dir, files.at("y"), t.count);
  t.last_mid = detail::read_array<float>(dir, files.at("last_mid"), t.count);
  t.regime = detail::read_array<std::uint8_t>(dir, files.at("regime"), t.count);
  t.scenario = detail::read_array<std::uint8_t>(dir, files.at("scenario"), t.count);
  t.day = detail::read_array<std::int32_t>(dir, files.at("day"), t.count);
  if (files.contains("trend")) t.trend = detail::read_array<std::int8_t>(dir, files.at("trend"), t.count);
  return t;
}

}  // namespace dslob
