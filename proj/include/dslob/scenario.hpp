#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dslob/config.hpp"
#include "dslob/market.hpp"
#include "dslob/rng.hpp"

namespace dslob {

namespace fs = std::filesystem;

struct ScenarioCounts {
  std::int64_t ordinary{0};
  std::int64_t small{0};
  std::int64_t large{0};

  std::int64_t total() const noexcept { return ordinary + small + large; }
  friend bool operator==(const ScenarioCounts&, const ScenarioCounts&) = default;
};

/// Largest-remainder apportionment of n_days over the mix. Equal remainders
/// are broken in the order ordinary, small, large.
inline ScenarioCounts scenario_counts(std::int64_t n_days, const ScenarioMix& mix) {
  const double shares[3] = {mix.ordinary * static_cast<double>(n_days), mix.small * static_cast<double>(n_days),
                            mix.large * static_cast<double>(n_days)};
  std::int64_t counts[3];
  double rem[3];
  std::int64_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    // Snap values within rounding noise of an integer before flooring.
    const double snapped = std::abs(shares[i] - std::round(shares[i])) < 1e-9 ? std::round(shares[i]) : shares[i];
    counts[i] = static_cast<std::int64_t>(std::floor(snapped));
    rem[i] = snapped - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  int order[3] = {0, 1, 2};
  std::stable_sort(order, order + 3, [&](int a, int b) { return rem[a] > rem[b] + 1e-12; });
  for (std::int64_t left = n_days - assigned, k = 0; left > 0; --left, ++k) ++counts[order[k % 3]];
  return {counts[0], counts[1], counts[2]};
}

// Scenario of every day, shuffled deterministically from the root seed.
inline std::vector<Scenario> assign_scenarios(const ScenarioConfig& cfg) {
  const ScenarioCounts c = scenario_counts(cfg.n_days, cfg.mix);
  std::vector<Scenario> out;
  out.reserve(static_cast<std::size_t>(cfg.n_days));
  out.insert(out.end(), static_cast<std::size_t>(c.ordinary), Scenario::ordinary);
  out.insert(out.end(), static_cast<std::size_t>(c.small), Scenario::small);
  out.insert(out.end(), static_cast<std::size_t>(c.large), Scenario::large);
  RngStream rng = derive_stream(cfg.root_seed, StreamId{0, 0, Purpose::assignment});
  for (std::size_t i = out.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(out[i - 1], out[j]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Day CSV: time,pa1,va1,pb1,vb1,...,pa10,va10,pb10,vb10,mid

inline std::string day_csv_header() {
  std::string h = "time";
  for (std::size_t i = 1; i <= kBookDepth; ++i) {
    const auto n = std::to_string(i);
    h += ",pa" + n + ",va" + n + ",pb" + n + ",vb" + n;
  }
  h += ",mid";
  return h;
}

namespace detail {
inline void append_int(std::string& out, std::int64_t v) {
  char buf[24];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, r.ptr);
}
}  // namespace detail

inline void write_day_csv(std::ostream& os, const std::vector<LobSnapshot>& snapshots) {
  std::string line;
  os << day_csv_header() << '\n';
  for (const auto& s : snapshots) {
    line.clear();
    detail::append_int(line, s.time);
    for (std::size_t i = 0; i < kBookDepth; ++i) {
      for (const auto v : {s.asks[i].price, s.asks[i].volume, s.bids[i].price, s.bids[i].volume}) {
        line += ',';
        detail::append_int(line, v);
      }
    }
    const std::int64_t half = mid_price(s).value;
    line += ',';
    detail::append_int(line, half / 2);
    line += half % 2 == 0 ? ".0" : ".5";
    line += '\n';
    os << line;
  }
}

inline void write_day_csv(const fs::path& path, const DayRecord& day) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_day_csv(out, day.snapshots);
}

inline std::string day_file_name(std::int64_t day_index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "day_%04lld.csv", static_cast<long long>(day_index));
  return buf;
}

// ---------------------------------------------------------------------------
// Manifest

struct ManifestEntry {
  std::int64_t day_index{0};
  Scenario scenario{Scenario::ordinary};
  std::uint64_t seed{0};
  std::string file;
  bool failed{false};
  std::string failure;
  std::size_t records{0};
  std::size_t skipped_snapshots{0};
  std::size_t value_arrivals{0};
  std::optional<ShockDraw> shock;
};

struct Manifest {
  std::uint64_t root_seed{0};
  std::int64_t n_days{0};
  ScenarioCounts counts;
  std::string config_fingerprint;
  double session_length{0.0};
  double snapshot_period{0.0};
  std::vector<ManifestEntry> days;
};

inline constexpr const char* kRoundingRule = "largest-remainder; ties broken ordinary, small, large";

inline nlohmann::json to_json(const Manifest& m) {
  using nlohmann::json;
  json days = json::array();
  for (const auto& d : m.days) {
    json e{{"day_index", d.day_index},
           {"scenario", std::string(to_string(d.scenario))},
           {"seed", d.seed},
           {"file", d.file},
           {"status", d.failed ? "failed" : "ok"},
           {"records", d.records},
           {"skipped_snapshots", d.skipped_snapshots},
           {"value_arrivals", d.value_arrivals}};
    if (d.failed) e["failure"] = d.failure;
    if (d.shock) {
      e["t_s"] = d.shock->t_s;
      e["direction"] = d.shock->direction;
      e["magnitude"] = d.shock->magnitude;
    } else {
      e["t_s"] = nullptr;
      e["direction"] = nullptr;
      e["magnitude"] = nullptr;
    }
    days.push_back(std::move(e));
  }
  return json{{"format", "dslob-manifest"},
              {"version", 1},
              {"root_seed", m.root_seed},
              {"n_days", m.n_days},
              {"rounding", kRoundingRule},
              {"counts", {{"ordinary", m.counts.ordinary}, {"small", m.counts.small}, {"large", m.counts.large}}},
              {"config_fingerprint", m.config_fingerprint},
              {"session_length_s", m.session_length},
              {"snapshot_period_s", m.snapshot_period},
              {"time_unit", "ns"},
              {"price_unit", "cents"},
              {"days", std::move(days)}};
}

inline Manifest manifest_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "dslob-manifest") throw std::runtime_error("not a dslob manifest");
  Manifest m;
  m.root_seed = j.at("root_seed").get<std::uint64_t>();
  m.n_days = j.at("n_days").get<std::int64_t>();
  const auto& c = j.at("counts");
  m.counts = {c.at("ordinary").get<std::int64_t>(), c.at("small").get<std::int64_t>(), c.at("large").get<std::int64_t>()};
  m.config_fingerprint = j.at("config_fingerprint").get<std::string>();
  m.session_length = j.at("session_length_s").get<double>();
  m.snapshot_period = j.at("snapshot_period_s").get<double>();
  for (const auto& e : j.at("days")) {
    ManifestEntry d;
    d.day_index = e.at("day_index").get<std::int64_t>();
    d.scenario = parse_scenario(e.at("scenario").get<std::string>());
    d.seed = e.at("seed").get<std::uint64_t>();
    d.file = e.at("file").get<std::string>();
    d.failed = e.at("status").get<std::string>() != "ok";
    d.failure = e.value("failure", "");
    d.records = e.at("records").get<std::size_t>();
    d.skipped_snapshots = e.at("skipped_snapshots").get<std::size_t>();
    d.value_arrivals = e.at("value_arrivals").get<std::size_t>();
    if (!e.at("t_s").is_null()) {
      d.shock = ShockDraw{e.at("t_s").get<SimTime>(), e.at("direction").get<int>(), e.at("magnitude").get<double>()};
    }
    m.days.push_back(std::move(d));
  }
  return m;
}

inline void write_json_file(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return nlohmann::json::parse(in);
}

inline Manifest read_manifest(const fs::path& dir) { return manifest_from_json(read_json_file(dir / "manifest.json")); }

inline ManifestEntry manifest_entry(const DayRecord& r) {
  ManifestEntry e;
  e.day_index = r.day_index;
  e.scenario = r.scenario;
  e.seed = r.seed;
  e.file = day_file_name(r.day_index);
  e.failed = r.failed;
  e.failure = r.failure;
  e.records = r.snapshots.size();
  e.skipped_snapshots = r.stats.skipped_snapshots;
  e.value_arrivals = r.stats.value_arrivals.size();
  e.shock = r.shock;
  return e;
}

// ---------------------------------------------------------------------------
// Generation

struct GenerateOptions {
  unsigned parallel{1};
  // Called once per finished day (serialized); may be empty.
  std::function<void(const DayRecord&)> on_day;
};

/// Runs every day of the configuration, in parallel if requested, handing
/// each record to `sink` (called concurrently from worker threads). Returns
/// manifest entries in day order. A day that throws is reported as failed.
template <class Sink>
std::vector<ManifestEntry> run_days(const ScenarioConfig& cfg, unsigned parallel, Sink&& sink) {
  cfg.validate();
  const std::vector<Scenario> scenarios = assign_scenarios(cfg);
  std::vector<ManifestEntry> entries(scenarios.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < scenarios.size(); i = next++) {
      const auto day = static_cast<std::int64_t>(i);
      try {
        DayRecord r = run_day(cfg, scenarios[i], day);
        entries[i] = manifest_entry(r);
        sink(r);
      } catch (const std::exception& e) {
        ManifestEntry& f = entries[i];
        f.day_index = day;
        f.scenario = scenarios[i];
        f.seed = day_seed(cfg.root_seed, static_cast<std::uint64_t>(day));
        f.file = day_file_name(day);
        f.failed = true;
        f.failure = e.what();
      }
    }
  };
  const unsigned n_threads = std::max(1U, std::min<unsigned>(parallel, static_cast<unsigned>(scenarios.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  return entries;
}

inline Manifest make_manifest(const ScenarioConfig& cfg, std::vector<ManifestEntry> entries) {
  Manifest m;
  m.root_seed = cfg.root_seed;
  m.n_days = cfg.n_days;
  m.counts = scenario_counts(cfg.n_days, cfg.mix);
  m.config_fingerprint = config_fingerprint(cfg);
  m.session_length = cfg.session_length;
  m.snapshot_period = cfg.snapshot_period;
  m.days = std::move(entries);
  return m;
}

/// Simulates the whole dataset into out_dir: one CSV per day, manifest.json
/// and the effective config.json.
inline Manifest generate_dataset(const ScenarioConfig& cfg, const fs::path& out_dir, const GenerateOptions& opts = {}) {
  fs::create_directories(out_dir);
  std::mutex mu;
  auto entries = run_days(cfg, opts.parallel, [&](const DayRecord& r) {
    if (!r.failed) write_day_csv(out_dir / day_file_name(r.day_index), r);
    if (opts.on_day) {
      const std::lock_guard lock(mu);
      opts.on_day(r);
    }
  });
  Manifest m = make_manifest(cfg, std::move(entries));
  write_json_file(out_dir / "config.json", to_json(cfg));
  write_json_file(out_dir / "manifest.json", to_json(m));
  return m;
}

}  // namespace dslob
