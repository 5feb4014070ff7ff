#pragma once

#include <cmath>
#include <deque>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dslob/agents.hpp"
#include "dslob/config.hpp"
#include "dslob/fundamental.hpp"
#include "dslob/kernel.hpp"
#include "dslob/order_book.hpp"
#include "dslob/rng.hpp"

namespace dslob {

struct Wakeup {};
struct SubmitOrder {
  Order order;
};
struct CancelOrder {
  OrderId id{0};
};
struct ShockArrival {};
struct RecordSnapshot {};

struct MarketMessage {
  std::variant<Wakeup, SubmitOrder, CancelOrder, ShockArrival, RecordSnapshot> body;
};

inline std::string_view payload_kind(const MarketMessage& m) {
  static constexpr std::string_view names[] = {"wakeup", "order", "cancel", "shock", "record"};
  return names[m.body.index()];
}

inline constexpr TargetId kExchangeTarget = 0;
inline constexpr TargetId kFundamentalTarget = 0xFFFFFFFEU;

enum class AgentKind : std::uint8_t { market_maker, noise, value, momentum };

enum class LogAction : std::uint8_t { limit, market, cancel };

struct OrderLogEntry {
  SimTime time{0};
  LogAction action{LogAction::limit};
  OrderId id{0};
  AgentId agent{0};
  Side side{Side::bid};
  Price price{0};
  Volume size{0};
};

struct DayStats {
  std::uint64_t events{0};
  std::uint64_t orders{0};
  std::uint64_t cancels{0};
  std::uint64_t fills{0};
  Volume traded_volume{0};
  std::size_t skipped_snapshots{0};
  std::vector<SimTime> value_arrivals;
};

/// Output of one simulated trading day.
struct DayRecord {
  std::int64_t day_index{0};
  Scenario scenario{Scenario::ordinary};
  std::uint64_t seed{0};
  std::optional<ShockDraw> shock;
  std::vector<LobSnapshot> snapshots;
  bool failed{false};
  std::string failure;
  DayStats stats;
  // Audit trail, filled only when requested. snapshot_log_index[k] is the
  // number of log entries applied before snapshot k was taken.
  std::vector<OrderLogEntry> order_log;
  std::vector<std::size_t> snapshot_log_index;
  EventTrace trace;
};

struct DayOptions {
  bool record_order_log{false};
  bool record_trace{false};
  // Stops the simulation early (ns); defaults to the session length.
  std::optional<SimTime> stop_at;
};

/// One trading day: a fresh book, one exchange, the background agent
/// population and the latent fundamental, all driven by a single kernel.
class MarketDay {
 public:
  using Kernel = EventKernel<MarketMessage>;

  MarketDay(const ScenarioConfig& cfg, Scenario scenario, std::int64_t day_index, DayOptions opts = {})
      : day_index_(day_index),
        cfg_(cfg),
        opts_(opts),
        kernel_(opts.record_trace),
        fundamental_(FundamentalState::at_mean(cfg.ou(scenario))),
        fundamental_rng_(stream(0, Purpose::fundamental)),
        last_mid_(HalfCents::from_cents(static_cast<Price>(std::llround(cfg.mu)))) {
    cfg_.validate();
    record_.day_index = day_index;
    record_.scenario = scenario;
    record_.seed = day_seed(cfg.root_seed, static_cast<std::uint64_t>(day_index));
    session_end_ = opts.stop_at.value_or(cfg.session_ns());

    if (const auto& spec = cfg.params(scenario).shock) {
      RngStream shock_rng = stream(0, Purpose::shock);
      record_.shock = draw_shock(*spec, shock_rng);
    }
    build_population();
  }

  DayRecord run() && {
    record_.trace = kernel_.run_until(session_end_ - 1, [this](Kernel::Event& ev, Kernel& k) { dispatch(ev, k); });
    record_.stats.events = kernel_.delivered();
    if (record_.snapshots.empty()) {
      record_.failed = true;
      record_.failure = "no valid snapshot recorded";
    }
    return std::move(record_);
  }

 private:
  struct MarketMakerState {
    AgentId id;
    std::vector<OrderId> live_quotes;
  };
  struct NoiseState {
    AgentId id;
    RngStream rng;
  };
  struct ValueState {
    AgentId id;
    RngStream obs_rng;
    std::vector<SimTime> arrivals;
    std::size_t next{0};
    Gaussian belief;
    SimTime last_update{0};
  };
  struct MomentumState {
    AgentId id;
    RngStream rng;
    std::deque<double> history;
  };

  RngStream stream(AgentId agent, Purpose purpose) const {
    return derive_stream(cfg_.root_seed, StreamId{static_cast<std::uint64_t>(day_index_), agent, purpose});
  }

  void schedule_if_open(SimTime t, TargetId target, MarketMessage msg) {
    if (t < session_end_) kernel_.schedule(t, target, std::move(msg));
  }

  void build_population() {
    const OuParams ou = cfg_.ou(record_.scenario);
    AgentId next_id = 1;
    const auto add = [&](AgentKind kind, std::size_t index) {
      roster_.push_back({kind, index});
      return next_id++;
    };
    roster_.push_back({AgentKind::market_maker, 0});  // slot 0 is the exchange, never dispatched

    if (record_.shock) schedule_if_open(record_.shock->t_s, kFundamentalTarget, {ShockArrival{}});
    schedule_if_open(cfg_.warmup_ns(), kExchangeTarget, {RecordSnapshot{}});

    for (std::size_t i = 0; i < cfg_.n_mm; ++i) {
      const AgentId id = add(AgentKind::market_maker, makers_.size());
      makers_.push_back({id, {}});
      schedule_if_open(0, id, {Wakeup{}});
    }
    for (std::size_t i = 0; i < cfg_.n_noise; ++i) {
      const AgentId id = add(AgentKind::noise, noise_.size());
      noise_.push_back({id, stream(id, Purpose::orders)});
      const SimTime first =
          noise_.back().rng.uniform_int(cfg_.noise.interarrival_low, cfg_.noise.interarrival_high) *
          cfg_.noise.interarrival_tick;
      schedule_if_open(first, id, {Wakeup{}});
    }

    const double prior_var =
        cfg_.value.prior_variance.value_or(ou.theta > 0.0 ? ou.sigma_x2 / (2.0 * ou.theta) : 0.0);
    const double lambda_per_ns = cfg_.value.lambda_bar / static_cast<double>(kNanosPerSecond);
    ArrivalIntensity intensity{lambda_per_ns, 0.0, 0.0, std::nullopt};
    if (record_.shock) {
      const auto& spec = *cfg_.params(record_.scenario).shock;
      intensity = ArrivalIntensity{lambda_per_ns, spec.A_s, spec.theta_s, record_.shock->t_s};
    }
    for (std::size_t i = 0; i < cfg_.n_value; ++i) {
      const AgentId id = add(AgentKind::value, value_.size());
      RngStream arrival_rng = stream(id, Purpose::arrivals);
      value_.push_back(ValueState{id, stream(id, Purpose::observation),
                                  sample_arrivals(0, session_end_, intensity, arrival_rng), 0,
                                  Gaussian{cfg_.mu, prior_var}, 0});
      if (!value_.back().arrivals.empty()) schedule_if_open(value_.back().arrivals.front(), id, {Wakeup{}});
    }

    const SimTime mom_period = seconds_to_ns(cfg_.momentum.wake_period);
    for (std::size_t i = 0; i < cfg_.n_momentum; ++i) {
      const AgentId id = add(AgentKind::momentum, momentum_.size());
      momentum_.push_back({id, stream(id, Purpose::orders), {}});
      RngStream phase_rng = stream(id, Purpose::arrivals);
      schedule_if_open(phase_rng.uniform_int(0, mom_period - 1), id, {Wakeup{}});
    }
  }

  void dispatch(Kernel::Event& ev, Kernel& k) {
    const SimTime now = ev.time;
    std::visit(
        [&](auto& msg) {
          using T = std::decay_t<decltype(msg)>;
          if constexpr (std::is_same_v<T, Wakeup>) {
            wake(ev.target, now);
          } else if constexpr (std::is_same_v<T, SubmitOrder>) {
            execute(msg.order);
          } else if constexpr (std::is_same_v<T, CancelOrder>) {
            if (book_.cancel(msg.id)) {
              ++record_.stats.cancels;
              if (opts_.record_order_log) record_.order_log.push_back({now, LogAction::cancel, msg.id, 0, Side::bid, 0, 0});
            }
          } else if constexpr (std::is_same_v<T, ShockArrival>) {
            fundamental_.value_at(now, fundamental_rng_);
            fundamental_ = apply_shock(std::move(fundamental_), *record_.shock);
          } else if constexpr (std::is_same_v<T, RecordSnapshot>) {
            record(now);
            schedule_if_open(now + cfg_.snapshot_period_ns(), kExchangeTarget, {RecordSnapshot{}});
          }
        },
        ev.payload.body);
    (void)k;
  }

  void submit(AgentId agent, const OrderIntent& intent, SimTime now) {
    Order o{next_order_id_++, agent, intent.side, intent.kind, intent.price, intent.size, now};
    kernel_.schedule(now, kExchangeTarget, {SubmitOrder{o}});
  }

  void execute(const Order& o) {
    ++record_.stats.orders;
    std::size_t n_fills = 0;
    Volume traded = 0;
    if (o.kind == OrderKind::limit) {
      const auto r = book_.submit_limit(o);
      n_fills = r.fills.size();
      for (const auto& f : r.fills) traded += f.size;
    } else {
      const auto fills = book_.submit_market(o);
      n_fills = fills.size();
      for (const auto& f : fills) traded += f.size;
    }
    record_.stats.fills += n_fills;
    record_.stats.traded_volume += traded;
    if (opts_.record_order_log) {
      record_.order_log.push_back({o.entry_time, o.kind == OrderKind::limit ? LogAction::limit : LogAction::market,
                                   o.id, o.agent_id, o.side, o.price, o.size});
    }
    if (const auto m = book_.mid()) last_mid_ = *m;
  }

  void record(SimTime now) {
    try {
      record_.snapshots.push_back(book_.snapshot(now));
      if (opts_.record_order_log) record_.snapshot_log_index.push_back(record_.order_log.size());
    } catch (const SnapshotError&) {
      ++record_.stats.skipped_snapshots;
    }
  }

  void wake(TargetId id, SimTime now) {
    const auto [kind, index] = roster_.at(id);
    switch (kind) {
      case AgentKind::market_maker: wake_market_maker(makers_[index], now); break;
      case AgentKind::noise: wake_noise(noise_[index], now); break;
      case AgentKind::value: wake_value(value_[index], now); break;
      case AgentKind::momentum: wake_momentum(momentum_[index], now); break;
    }
  }

  void wake_market_maker(MarketMakerState& mm, SimTime now) {
    for (const OrderId id : mm.live_quotes) kernel_.schedule(now, kExchangeTarget, {CancelOrder{id}});
    mm.live_quotes.clear();
    const HalfCents mid = book_.mid().value_or(last_mid_);
    for (const auto& q : mm_quotes(mid, cfg_.market_maker)) {
      mm.live_quotes.push_back(next_order_id_);
      submit(mm.id, q, now);
    }
    schedule_if_open(now + seconds_to_ns(cfg_.market_maker.wake_period), mm.id, {Wakeup{}});
  }

  void wake_noise(NoiseState& agent, SimTime now) {
    const NoiseAction a = noise_action(cfg_.noise, top_of(book_), last_mid_, agent.rng);
    submit(agent.id, a.order, now);
    schedule_if_open(now + a.next_wakeup_delay, agent.id, {Wakeup{}});
  }

  void wake_value(ValueState& agent, SimTime now) {
    record_.stats.value_arrivals.push_back(now);
    const double x = fundamental_.value_at(now, fundamental_rng_);
    const double y = observe(x, cfg_.value.obs, agent.obs_rng);
    agent.belief = value_belief_update(agent.belief, now - agent.last_update, fundamental_.ou, y, cfg_.value.obs);
    agent.last_update = now;
    if (const auto intent = value_decide(agent.belief.mean, top_of(book_), cfg_.value)) submit(agent.id, *intent, now);
    if (++agent.next < agent.arrivals.size()) schedule_if_open(agent.arrivals[agent.next], agent.id, {Wakeup{}});
  }

  void wake_momentum(MomentumState& agent, SimTime now) {
    if (const auto mid = book_.mid()) {
      agent.history.push_back(mid->cents());
      if (agent.history.size() > cfg_.momentum.t_max) agent.history.pop_front();
      const std::vector<double> h(agent.history.begin(), agent.history.end());
      const Signal s = momentum_signal(h, cfg_.momentum.t_min, cfg_.momentum.t_max);
      if (s != Signal::none) {
        const Volume size = agent.rng.uniform_int(cfg_.momentum.size_low, cfg_.momentum.size_high);
        submit(agent.id, OrderIntent{s == Signal::buy ? Side::bid : Side::ask, OrderKind::market, 0, size}, now);
      }
    }
    schedule_if_open(now + seconds_to_ns(cfg_.momentum.wake_period), agent.id, {Wakeup{}});
  }

  std::int64_t day_index_;
  ScenarioConfig cfg_;
  DayOptions opts_;
  Kernel kernel_;
  OrderBook book_;
  FundamentalState fundamental_;
  RngStream fundamental_rng_;
  HalfCents last_mid_;
  SimTime session_end_{0};
  OrderId next_order_id_{1};
  DayRecord record_;

  std::vector<std::pair<AgentKind, std::size_t>> roster_;
  std::vector<MarketMakerState> makers_;
  std::vector<NoiseState> noise_;
  std::vector<ValueState> value_;
  std::vector<MomentumState> momentum_;
};

inline DayRecord run_day(const ScenarioConfig& cfg, Scenario scenario, std::int64_t day_index, DayOptions opts = {}) {
  return MarketDay(cfg, scenario, day_index, opts).run();
}

}  // namespace dslob
