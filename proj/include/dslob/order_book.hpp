#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <list>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dslob/types.hpp"

namespace dslob {

inline constexpr std::size_t kBookDepth = 10;

enum class OrderKind : std::uint8_t { limit, market };

struct Order {
  OrderId id{0};
  AgentId agent_id{0};
  Side side{Side::bid};
  OrderKind kind{OrderKind::limit};
  Price price{0};  // ignored for market orders
  Volume size{0};
  SimTime entry_time{0};
};

struct Fill {
  OrderId taker_order_id{0};
  OrderId maker_order_id{0};
  AgentId taker_agent_id{0};
  AgentId maker_agent_id{0};
  Price price{0};
  Volume size{0};
  SimTime time{0};

  friend bool operator==(const Fill&, const Fill&) = default;
};

struct LimitResult {
  std::vector<Fill> fills;
  Volume rested{0};
};

struct RestingOrder {
  OrderId id{0};
  AgentId agent_id{0};
  Price price{0};
  Volume size{0};
  SimTime entry_time{0};

  friend bool operator==(const RestingOrder&, const RestingOrder&) = default;
};

struct PriceLevel {
  Price price{0};
  Volume volume{0};

  friend bool operator==(const PriceLevel&, const PriceLevel&) = default;
};

/// Depth view of the book. Asks ascend and bids descend from the touch;
/// levels past the real depth are padded one tick outward with volume 0.
struct LobSnapshot {
  SimTime time{0};
  std::vector<PriceLevel> asks;
  std::vector<PriceLevel> bids;

  friend bool operator==(const LobSnapshot&, const LobSnapshot&) = default;
};

class OrderError : public Error {
 public:
  using Error::Error;
};

class SnapshotError : public Error {
 public:
  using Error::Error;
};

// Exact mid of the best levels. Throws when either best level is padded.
inline HalfCents mid_price(const LobSnapshot& snap) {
  if (snap.asks.empty() || snap.bids.empty() || snap.asks.front().volume <= 0 ||
      snap.bids.front().volume <= 0) {
    throw SnapshotError("mid-price undefined: best level is padded");
  }
  return HalfCents{snap.asks.front().price + snap.bids.front().price};
}

/// Price-time priority limit order book with FIFO queues per price level.
class OrderBook {
 public:
  LimitResult submit_limit(const Order& order) {
    if (order.kind != OrderKind::limit) throw OrderError("submit_limit called with a market order");
    if (order.price <= 0) throw OrderError("limit price must be positive");
    validate(order);
    LimitResult result;
    const Volume remaining = order.side == Side::bid ? match(asks_, order, &result.fills)
                                                     : match(bids_, order, &result.fills);
    if (remaining > 0) {
      rest(order, remaining);
      result.rested = remaining;
    }
    return result;
  }

  // Unfilled remainder of a market order is discarded.
  std::vector<Fill> submit_market(const Order& order) {
    if (order.kind != OrderKind::market) throw OrderError("submit_market called with a limit order");
    validate(order);
    std::vector<Fill> fills;
    if (order.side == Side::bid) {
      match(asks_, order, &fills);
    } else {
      match(bids_, order, &fills);
    }
    return fills;
  }

  bool cancel(OrderId id) {
    const auto it = index_.find(id);
    if (it == index_.end()) return false;
    const Locator loc = it->second;
    index_.erase(it);
    if (loc.side == Side::bid) {
      remove(bids_, loc);
    } else {
      remove(asks_, loc);
    }
    return true;
  }

  std::optional<Price> best_bid() const {
    if (bids_.empty()) return std::nullopt;
    return bids_.begin()->first;
  }
  std::optional<Price> best_ask() const {
    if (asks_.empty()) return std::nullopt;
    return asks_.begin()->first;
  }
  std::optional<Price> best(Side side) const { return side == Side::bid ? best_bid() : best_ask(); }

  std::optional<HalfCents> mid() const {
    if (bids_.empty() || asks_.empty()) return std::nullopt;
    return HalfCents{bids_.begin()->first + asks_.begin()->first};
  }

  Volume volume_at(Side side, Price price) const {
    if (side == Side::bid) {
      const auto it = bids_.find(price);
      return it == bids_.end() ? 0 : it->second.total_volume;
    }
    const auto it = asks_.find(price);
    return it == asks_.end() ? 0 : it->second.total_volume;
  }

  bool is_resting(OrderId id) const { return index_.contains(id); }
  std::size_t resting_count() const noexcept { return index_.size(); }
  std::size_t level_count(Side side) const noexcept {
    return side == Side::bid ? bids_.size() : asks_.size();
  }

  // All resting orders of one side in matching priority.
  std::vector<RestingOrder> resting_orders(Side side) const {
    std::vector<RestingOrder> out;
    const auto collect = [&out](const auto& levels) {
      for (const auto& [price, level] : levels) {
        for (const auto& o : level.queue) out.push_back(o);
      }
    };
    if (side == Side::bid) {
      collect(bids_);
    } else {
      collect(asks_);
    }
    return out;
  }

  LobSnapshot snapshot(SimTime time, std::size_t depth = kBookDepth) const {
    if (bids_.empty() || asks_.empty()) {
      throw SnapshotError("snapshot undefined: one side of the book is empty");
    }
    LobSnapshot snap;
    snap.time = time;
    snap.asks = levels_of(asks_, depth, +1);
    snap.bids = levels_of(bids_, depth, -1);
    return snap;
  }

 private:
  struct Level {
    std::list<RestingOrder> queue;
    Volume total_volume{0};
  };
  using BidLevels = std::map<Price, Level, std::greater<>>;
  using AskLevels = std::map<Price, Level, std::less<>>;

  struct Locator {
    Side side;
    Price price;
    std::list<RestingOrder>::iterator pos;
  };

  void validate(const Order& order) {
    if (order.size <= 0) throw OrderError("order size must be positive");
    if (!seen_ids_.insert(order.id).second) {
      throw OrderError("duplicate order id " + std::to_string(order.id));
    }
  }

  static bool crosses(const Order& taker, Price resting_price) {
    if (taker.kind == OrderKind::market) return true;
    return taker.side == Side::bid ? resting_price <= taker.price : resting_price >= taker.price;
  }

  // Consumes the opposite side; returns the unfilled size.
  template <class Levels>
  Volume match(Levels& levels, const Order& taker, std::vector<Fill>* fills) {
    Volume remaining = taker.size;
    while (remaining > 0 && !levels.empty()) {
      auto level_it = levels.begin();
      if (!crosses(taker, level_it->first)) break;
      Level& level = level_it->second;
      while (remaining > 0 && !level.queue.empty()) {
        RestingOrder& maker = level.queue.front();
        const Volume qty = std::min(remaining, maker.size);
        fills->push_back(Fill{taker.id, maker.id, taker.agent_id, maker.agent_id, maker.price, qty,
                              taker.entry_time});
        remaining -= qty;
        maker.size -= qty;
        level.total_volume -= qty;
        if (maker.size == 0) {
          index_.erase(maker.id);
          level.queue.pop_front();
        }
      }
      if (level.queue.empty()) levels.erase(level_it);
    }
    return remaining;
  }

  void rest(const Order& order, Volume size) {
    const RestingOrder entry{order.id, order.agent_id, order.price, size, order.entry_time};
    const auto place = [&](auto& levels) {
      Level& level = levels[order.price];
      level.queue.push_back(entry);
      level.total_volume += size;
      index_.emplace(order.id, Locator{order.side, order.price, std::prev(level.queue.end())});
    };
    if (order.side == Side::bid) {
      place(bids_);
    } else {
      place(asks_);
    }
  }

  template <class Levels>
  static void remove(Levels& levels, const Locator& loc) {
    const auto it = levels.find(loc.price);
    Level& level = it->second;
    level.total_volume -= loc.pos->size;
    level.queue.erase(loc.pos);
    if (level.queue.empty()) levels.erase(it);
  }

  template <class Levels>
  static std::vector<PriceLevel> levels_of(const Levels& levels, std::size_t depth, Price step) {
    std::vector<PriceLevel> out;
    out.reserve(depth);
    for (auto it = levels.begin(); it != levels.end() && out.size() < depth; ++it) {
      out.push_back(PriceLevel{it->first, it->second.total_volume});
    }
    while (out.size() < depth) out.push_back(PriceLevel{out.back().price + step, 0});
    return out;
  }

  BidLevels bids_;
  AskLevels asks_;
  std::unordered_map<OrderId, Locator> index_;
  std::unordered_set<OrderId> seen_ids_;
};

}  // namespace dslob
