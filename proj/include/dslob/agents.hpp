#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "dslob/fundamental.hpp"
#include "dslob/order_book.hpp"
#include "dslob/rng.hpp"
#include "dslob/types.hpp"

namespace dslob {

struct OrderIntent {
  Side side{Side::bid};
  OrderKind kind{OrderKind::limit};
  Price price{0};
  Volume size{0};

  friend bool operator==(const OrderIntent&, const OrderIntent&) = default;
};

// Top of book as seen by an agent at wakeup.
struct BookTop {
  std::optional<Price> bid;
  std::optional<Price> ask;

  std::optional<HalfCents> mid() const {
    if (!bid || !ask) return std::nullopt;
    return HalfCents{*bid + *ask};
  }
  std::optional<Price> best(Side s) const { return s == Side::bid ? bid : ask; }
};

inline BookTop top_of(const OrderBook& book) { return BookTop{book.best_bid(), book.best_ask()}; }

// ---------------------------------------------------------------------------
// Noise agents

struct NoiseAgentCfg {
  std::int64_t interarrival_low{1};
  std::int64_t interarrival_high{100};
  SimTime interarrival_tick{1'000'000};  // ns per interarrival unit
  Volume size_low{1};
  Volume size_high{2};
  std::int64_t price_spread_ticks{5};

  void validate() const {
    if (interarrival_low <= 0 || interarrival_low > interarrival_high || interarrival_tick <= 0 ||
        size_low <= 0 || size_low > size_high || price_spread_ticks < 0) {
      throw std::invalid_argument("invalid noise agent configuration");
    }
  }
};

struct NoiseAction {
  SimTime next_wakeup_delay{0};
  OrderIntent order;
};

/// Random-direction, random-size limit order placed around the same-side
/// best price. With one side empty the opposite best (one tick away) is the
/// anchor; with both empty, the last known mid one tick away.
inline NoiseAction noise_action(const NoiseAgentCfg& cfg, const BookTop& top, HalfCents last_mid,
                                RngStream& rng) {
  NoiseAction a;
  const Side side = rng.bernoulli(0.5) ? Side::bid : Side::ask;
  const Volume size = rng.uniform_int(cfg.size_low, cfg.size_high);
  const std::int64_t offset = rng.uniform_int(-cfg.price_spread_ticks, cfg.price_spread_ticks);
  const std::int64_t delay_units = rng.uniform_int(cfg.interarrival_low, cfg.interarrival_high);

  Price anchor = 0;
  if (const auto same = top.best(side)) {
    anchor = *same;
  } else if (const auto other = top.best(opposite(side))) {
    anchor = side == Side::bid ? *other - 1 : *other + 1;
  } else {
    anchor = side == Side::bid ? last_mid.ceil_cents() - 1 : last_mid.floor_cents() + 1;
  }
  a.order = OrderIntent{side, OrderKind::limit, std::max<Price>(1, anchor + offset), size};
  a.next_wakeup_delay = delay_units * cfg.interarrival_tick;
  return a;
}

// ---------------------------------------------------------------------------
// Value agents

struct Gaussian {
  double mean{0.0};
  double variance{0.0};
};

struct ValueAgentCfg {
  double lambda_bar{0.005};  // arrivals per second
  ObservationParams obs{1.0};
  Volume order_size{2000};
  double deadband{0.0};  // cents
  std::optional<double> prior_variance;  // defaults to the OU stationary variance

  void validate() const {
    if (!(lambda_bar > 0.0) || obs.sigma_y2 < 0.0 || order_size <= 0 || deadband < 0.0 ||
        (prior_variance && *prior_variance < 0.0)) {
      throw std::invalid_argument("invalid value agent configuration");
    }
  }
};

/// One predict/correct cycle of the agent's Gaussian belief about the latent
/// value: propagate through the OU transition for dt, then condition on the
/// observation y with noise variance sigma_y2 (infinite variance = no update).
inline Gaussian value_belief_update(const Gaussian& belief, SimTime dt, const OuParams& ou, double y,
                                    const ObservationParams& obs) {
  if (belief.variance < 0.0 || obs.sigma_y2 < 0.0) throw std::invalid_argument("negative variance");
  const OuMoments m = ou_moments(belief.mean, dt, ou);
  const double decay2 = ou.theta == 0.0 ? 1.0 : std::exp(-2.0 * ou.theta * static_cast<double>(dt));
  Gaussian prior{m.mean, belief.variance * decay2 + m.variance};
  if (obs.sigma_y2 == 0.0) return Gaussian{y, 0.0};
  if (std::isinf(obs.sigma_y2)) return prior;
  const double gain = prior.variance / (prior.variance + obs.sigma_y2);
  return Gaussian{prior.mean + gain * (y - prior.mean), prior.variance * obs.sigma_y2 / (prior.variance + obs.sigma_y2)};
}

/// Buy at the best ask when the estimate is above the mid, sell at the best
/// bid when below; nothing inside the deadband or when the needed side is empty.
inline std::optional<OrderIntent> value_decide(double posterior_mean, const BookTop& top,
                                               const ValueAgentCfg& cfg) {
  const auto mid = top.mid();
  if (!mid) return std::nullopt;
  const double m = mid->cents();
  if (posterior_mean > m + cfg.deadband) return OrderIntent{Side::bid, OrderKind::limit, *top.ask, cfg.order_size};
  if (posterior_mean < m - cfg.deadband) return OrderIntent{Side::ask, OrderKind::limit, *top.bid, cfg.order_size};
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Momentum agents

struct MomentumAgentCfg {
  std::size_t t_min{20};
  std::size_t t_max{50};
  double wake_period{1.0};  // seconds
  Volume size_low{1};
  Volume size_high{50};

  void validate() const {
    if (t_min == 0 || t_min >= t_max || !(wake_period > 0.0) || size_low <= 0 || size_low > size_high) {
      throw std::invalid_argument("invalid momentum agent configuration");
    }
  }
};

enum class Signal : std::uint8_t { none, buy, sell };

// Short moving average against long moving average of the most recent mids.
inline Signal momentum_signal(std::span<const double> history, std::size_t t_min, std::size_t t_max) {
  if (t_min == 0 || t_min >= t_max || history.size() < t_max) return Signal::none;
  const auto tail_mean = [&](std::size_t n) {
    const auto tail = history.last(n);
    return std::accumulate(tail.begin(), tail.end(), 0.0) / static_cast<double>(n);
  };
  const double short_ma = tail_mean(t_min);
  const double long_ma = tail_mean(t_max);
  if (short_ma > long_ma) return Signal::buy;
  if (short_ma < long_ma) return Signal::sell;
  return Signal::none;
}

// ---------------------------------------------------------------------------
// Market maker

struct MarketMakerCfg {
  double wake_period{5.0};  // seconds
  std::size_t num_levels{10};
  Volume level_size{100};
  Price tick_offset{1};

  void validate() const {
    if (!(wake_period > 0.0) || num_levels < 1 || level_size < 1 || tick_offset < 1) {
      throw std::invalid_argument("invalid market maker configuration");
    }
  }
};

/// Symmetric ladder around the mid: bids at ceil(mid) - k*offset and asks at
/// floor(mid) + k*offset for k = 1..num_levels. Bids first, nearest first.
inline std::vector<OrderIntent> mm_quotes(HalfCents mid, const MarketMakerCfg& cfg) {
  std::vector<OrderIntent> out;
  out.reserve(2 * cfg.num_levels);
  for (std::size_t k = 1; k <= cfg.num_levels; ++k) {
    out.push_back({Side::bid, OrderKind::limit, mid.ceil_cents() - cfg.tick_offset * static_cast<Price>(k),
                   cfg.level_size});
  }
  for (std::size_t k = 1; k <= cfg.num_levels; ++k) {
    out.push_back({Side::ask, OrderKind::limit, mid.floor_cents() + cfg.tick_offset * static_cast<Price>(k),
                   cfg.level_size});
  }
  return out;
}

}  // namespace dslob
