#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "dslob/agents.hpp"
#include "dslob/fundamental.hpp"
#include "dslob/types.hpp"

namespace dslob {

struct ScenarioMix {
  double ordinary{0.5};
  double small{0.25};
  double large{0.25};
};

struct ScenarioParams {
  double theta{1e-12};
  std::optional<ShockSpec> shock;
};

/// Everything needed to generate one dataset. Defaults: 365 days, 50/25/25
/// mix, 50 noise, 100 value, 10 momentum agents and one market maker.
struct ScenarioConfig {
  std::int64_t n_days{365};
  std::uint64_t root_seed{1};
  ScenarioMix mix;

  double session_length{23400.0};  // seconds
  double snapshot_period{1.0};     // seconds
  double warmup{300.0};            // seconds simulated before recording starts

  double mu{100000.0};
  double sigma2{1e-12};

  std::size_t n_noise{50};
  std::size_t n_value{100};
  std::size_t n_momentum{10};
  std::size_t n_mm{1};

  NoiseAgentCfg noise;
  ValueAgentCfg value;
  MomentumAgentCfg momentum;
  MarketMakerCfg market_maker;

  ScenarioParams ordinary{1e-12, std::nullopt};
  ScenarioParams small{1e-12, ShockSpec{200.0, 400.0, kNanosPerHour, 2 * kNanosPerHour, 2.0, 1e-12}};
  ScenarioParams large{5e-13, ShockSpec{400.0, 1600.0, kNanosPerHour, 2 * kNanosPerHour, 3.0, 5e-13}};

  const ScenarioParams& params(Scenario s) const {
    switch (s) {
      case Scenario::ordinary: return ordinary;
      case Scenario::small: return small;
      case Scenario::large: return large;
    }
    return ordinary;
  }

  OuParams ou(Scenario s) const { return OuParams{mu, sigma2, params(s).theta}; }

  SimTime session_ns() const { return seconds_to_ns(session_length); }
  SimTime snapshot_period_ns() const { return seconds_to_ns(snapshot_period); }
  SimTime warmup_ns() const { return seconds_to_ns(warmup); }

  void validate() const {
    const auto fail = [](const std::string& what) { throw std::invalid_argument("invalid config: " + what); };
    if (n_days < 0) fail("n_days must be >= 0");
    if (mix.ordinary < 0 || mix.small < 0 || mix.large < 0) fail("mix fractions must be >= 0");
    if (std::abs(mix.ordinary + mix.small + mix.large - 1.0) > 1e-9) fail("mix must sum to 1");
    if (!(session_length > 0) || !(snapshot_period > 0) || warmup < 0 || warmup >= session_length) {
      fail("session timing");
    }
    if (sigma2 < 0) fail("sigma2 must be >= 0");
    noise.validate();
    value.validate();
    momentum.validate();
    market_maker.validate();
    for (const Scenario s : {Scenario::ordinary, Scenario::small, Scenario::large}) {
      const auto& p = params(s);
      if (p.theta < 0) fail("theta must be >= 0");
      if (s != Scenario::ordinary && !p.shock) fail(std::string(to_string(s)) + " scenario needs a shock");
      if (p.shock) {
        p.shock->validate();
        if (p.shock->t_s_high >= session_ns()) fail("shock window must end before the session closes");
      }
    }
    if (ordinary.shock) fail("ordinary scenario must not define a shock");
  }
};

namespace detail {

using nlohmann::json;

inline void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw std::invalid_argument("config: '" + where + "' must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!ok.contains(k)) throw std::invalid_argument("config: unknown key '" + k + "' in " + where);
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (const auto it = j.find(key); it != j.end() && !it->is_null()) out = it->template get<T>();
}

inline json shock_to_json(const ShockSpec& s) {
  return json{{"mu_s", s.mu_s},
              {"sigma_s2", s.sigma_s2},
              {"A_s", s.A_s},
              {"theta_s", s.theta_s},
              {"T_s_low_s", ns_to_seconds(s.t_s_low)},
              {"T_s_high_s", ns_to_seconds(s.t_s_high)}};
}

inline ShockSpec shock_from_json(const json& j, ShockSpec s) {
  check_keys(j, "shock", {"mu_s", "sigma_s2", "A_s", "theta_s", "T_s_low_s", "T_s_high_s"});
  read(j, "mu_s", s.mu_s);
  read(j, "sigma_s2", s.sigma_s2);
  read(j, "A_s", s.A_s);
  read(j, "theta_s", s.theta_s);
  double lo = ns_to_seconds(s.t_s_low);
  double hi = ns_to_seconds(s.t_s_high);
  read(j, "T_s_low_s", lo);
  read(j, "T_s_high_s", hi);
  s.t_s_low = seconds_to_ns(lo);
  s.t_s_high = seconds_to_ns(hi);
  return s;
}

inline json scenario_to_json(const ScenarioParams& p) {
  json j{{"theta", p.theta}};
  if (p.shock) j["shock"] = shock_to_json(*p.shock);
  return j;
}

inline ScenarioParams scenario_from_json(const json& j, ScenarioParams p, const std::string& where) {
  check_keys(j, where, {"theta", "shock"});
  read(j, "theta", p.theta);
  if (const auto it = j.find("shock"); it != j.end()) {
    if (it->is_null()) {
      p.shock.reset();
    } else {
      p.shock = shock_from_json(*it, p.shock.value_or(ShockSpec{}));
    }
  }
  return p;
}

}  // namespace detail

inline nlohmann::json to_json(const ScenarioConfig& c) {
  using nlohmann::json;
  json value{{"lambda_bar", c.value.lambda_bar},
             {"sigma_y2", c.value.obs.sigma_y2},
             {"order_size", c.value.order_size},
             {"deadband", c.value.deadband},
             {"prior_variance", c.value.prior_variance ? json(*c.value.prior_variance) : json(nullptr)}};
  return json{
      {"n_days", c.n_days},
      {"root_seed", c.root_seed},
      {"mix", {{"ordinary", c.mix.ordinary}, {"small", c.mix.small}, {"large", c.mix.large}}},
      {"session",
       {{"length_s", c.session_length}, {"snapshot_period_s", c.snapshot_period}, {"warmup_s", c.warmup}}},
      {"fundamental", {{"mu", c.mu}, {"sigma2", c.sigma2}}},
      {"agents",
       {{"N_noise", c.n_noise},
        {"N_value", c.n_value},
        {"N_momentum", c.n_momentum},
        {"N_MM", c.n_mm},
        {"noise",
         {{"interarrival_low", c.noise.interarrival_low},
          {"interarrival_high", c.noise.interarrival_high},
          {"interarrival_tick_ns", c.noise.interarrival_tick},
          {"size_low", c.noise.size_low},
          {"size_high", c.noise.size_high},
          {"price_spread_ticks", c.noise.price_spread_ticks}}},
        {"value", value},
        {"momentum",
         {{"T_min", c.momentum.t_min},
          {"T_max", c.momentum.t_max},
          {"T_MOM", c.momentum.wake_period},
          {"size_low", c.momentum.size_low},
          {"size_high", c.momentum.size_high}}},
        {"market_maker",
         {{"T_MM", c.market_maker.wake_period},
          {"num_levels", c.market_maker.num_levels},
          {"level_size", c.market_maker.level_size},
          {"tick_offset", c.market_maker.tick_offset}}}}},
      {"scenarios",
       {{"ordinary", detail::scenario_to_json(c.ordinary)},
        {"small", detail::scenario_to_json(c.small)},
        {"large", detail::scenario_to_json(c.large)}}}};
}

// Missing keys keep their defaults; unknown keys are rejected.
inline ScenarioConfig config_from_json(const nlohmann::json& j) {
  using detail::check_keys;
  using detail::read;
  ScenarioConfig c;
  check_keys(j, "root", {"n_days", "root_seed", "mix", "session", "fundamental", "agents", "scenarios"});
  read(j, "n_days", c.n_days);
  read(j, "root_seed", c.root_seed);
  if (const auto it = j.find("mix"); it != j.end()) {
    check_keys(*it, "mix", {"ordinary", "small", "large"});
    read(*it, "ordinary", c.mix.ordinary);
    read(*it, "small", c.mix.small);
    read(*it, "large", c.mix.large);
  }
  if (const auto it = j.find("session"); it != j.end()) {
    check_keys(*it, "session", {"length_s", "snapshot_period_s", "warmup_s"});
    read(*it, "length_s", c.session_length);
    read(*it, "snapshot_period_s", c.snapshot_period);
    read(*it, "warmup_s", c.warmup);
  }
  if (const auto it = j.find("fundamental"); it != j.end()) {
    check_keys(*it, "fundamental", {"mu", "sigma2"});
    read(*it, "mu", c.mu);
    read(*it, "sigma2", c.sigma2);
  }
  if (const auto it = j.find("agents"); it != j.end()) {
    const auto& a = *it;
    check_keys(a, "agents", {"N_noise", "N_value", "N_momentum", "N_MM", "noise", "value", "momentum", "market_maker"});
    read(a, "N_noise", c.n_noise);
    read(a, "N_value", c.n_value);
    read(a, "N_momentum", c.n_momentum);
    read(a, "N_MM", c.n_mm);
    if (const auto n = a.find("noise"); n != a.end()) {
      check_keys(*n, "agents.noise",
                 {"interarrival_low", "interarrival_high", "interarrival_tick_ns", "size_low", "size_high",
                  "price_spread_ticks"});
      read(*n, "interarrival_low", c.noise.interarrival_low);
      read(*n, "interarrival_high", c.noise.interarrival_high);
      read(*n, "interarrival_tick_ns", c.noise.interarrival_tick);
      read(*n, "size_low", c.noise.size_low);
      read(*n, "size_high", c.noise.size_high);
      read(*n, "price_spread_ticks", c.noise.price_spread_ticks);
    }
    if (const auto v = a.find("value"); v != a.end()) {
      check_keys(*v, "agents.value", {"lambda_bar", "sigma_y2", "order_size", "deadband", "prior_variance"});
      read(*v, "lambda_bar", c.value.lambda_bar);
      read(*v, "sigma_y2", c.value.obs.sigma_y2);
      read(*v, "order_size", c.value.order_size);
      read(*v, "deadband", c.value.deadband);
      if (const auto pv = v->find("prior_variance"); pv != v->end() && !pv->is_null()) {
        c.value.prior_variance = pv->get<double>();
      }
    }
    if (const auto m = a.find("momentum"); m != a.end()) {
      check_keys(*m, "agents.momentum", {"T_min", "T_max", "T_MOM", "size_low", "size_high"});
      read(*m, "T_min", c.momentum.t_min);
      read(*m, "T_max", c.momentum.t_max);
      read(*m, "T_MOM", c.momentum.wake_period);
      read(*m, "size_low", c.momentum.size_low);
      read(*m, "size_high", c.momentum.size_high);
    }
    if (const auto mm = a.find("market_maker"); mm != a.end()) {
      check_keys(*mm, "agents.market_maker", {"T_MM", "num_levels", "level_size", "tick_offset"});
      read(*mm, "T_MM", c.market_maker.wake_period);
      read(*mm, "num_levels", c.market_maker.num_levels);
      read(*mm, "level_size", c.market_maker.level_size);
      read(*mm, "tick_offset", c.market_maker.tick_offset);
    }
  }
  if (const auto it = j.find("scenarios"); it != j.end()) {
    check_keys(*it, "scenarios", {"ordinary", "small", "large"});
    if (const auto s = it->find("ordinary"); s != it->end())
      c.ordinary = detail::scenario_from_json(*s, c.ordinary, "scenarios.ordinary");
    if (const auto s = it->find("small"); s != it->end())
      c.small = detail::scenario_from_json(*s, c.small, "scenarios.small");
    if (const auto s = it->find("large"); s != it->end())
      c.large = detail::scenario_from_json(*s, c.large, "scenarios.large");
  }
  c.validate();
  return c;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  return config_from_json(nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true));
}

// 64-bit FNV-1a, used for fingerprints and export checksums.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

inline std::string config_fingerprint(const ScenarioConfig& c) { return hex64(fnv1a64(to_json(c).dump())); }

}  // namespace dslob
