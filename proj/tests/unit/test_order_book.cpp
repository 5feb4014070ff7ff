#include <map>
#include <vector>

#include <gtest/gtest.h>

#include "dslob/order_book.hpp"
#include "support/reference_book.hpp"

using namespace dslob;

namespace {

Order limit(OrderId id, Side side, Price price, Volume size, SimTime t = 0) {
  return Order{id, static_cast<AgentId>(id), side, OrderKind::limit, price, size, t};
}
Order market(OrderId id, Side side, Volume size, SimTime t = 0) {
  return Order{id, static_cast<AgentId>(id), side, OrderKind::market, 0, size, t};
}

}  // namespace

TEST(OrderBook, RestsWhenNotCrossing) {
  OrderBook b;
  EXPECT_EQ(b.submit_limit(limit(1, Side::bid, 99, 5)).rested, 5);
  EXPECT_EQ(b.submit_limit(limit(2, Side::ask, 101, 3)).rested, 3);
  EXPECT_EQ(b.best_bid(), 99);
  EXPECT_EQ(b.best_ask(), 101);
  EXPECT_EQ(b.mid()->value, 200);
  EXPECT_DOUBLE_EQ(b.mid()->cents(), 100.0);
}

TEST(OrderBook, PricePriorityThenTime) {
  OrderBook b;
  b.submit_limit(limit(1, Side::ask, 101, 5));
  b.submit_limit(limit(2, Side::ask, 100, 5));
  b.submit_limit(limit(3, Side::ask, 100, 5));
  const auto r = b.submit_limit(limit(4, Side::bid, 101, 12));
  ASSERT_EQ(r.fills.size(), 3U);
  EXPECT_EQ(r.fills[0].maker_order_id, 2U);
  EXPECT_EQ(r.fills[1].maker_order_id, 3U);
  EXPECT_EQ(r.fills[2].maker_order_id, 1U);
  EXPECT_EQ(r.fills[2].size, 2);
  EXPECT_EQ(r.fills[2].price, 101);
  EXPECT_EQ(r.rested, 0);
  EXPECT_EQ(b.volume_at(Side::ask, 101), 3);
}

TEST(OrderBook, FillsAtMakerPrice) {
  OrderBook b;
  b.submit_limit(limit(1, Side::bid, 99, 5));
  const auto r = b.submit_limit(limit(2, Side::ask, 90, 2));
  ASSERT_EQ(r.fills.size(), 1U);
  EXPECT_EQ(r.fills[0].price, 99);
}

TEST(OrderBook, MarketRemainderDiscarded) {
  OrderBook b;
  b.submit_limit(limit(1, Side::ask, 101, 3));
  const auto fills = b.submit_market(market(2, Side::bid, 10));
  ASSERT_EQ(fills.size(), 1U);
  EXPECT_EQ(fills[0].size, 3);
  EXPECT_FALSE(b.best_ask());
  EXPECT_FALSE(b.best_bid());
  EXPECT_TRUE(b.submit_market(market(3, Side::bid, 1)).empty());
}

TEST(OrderBook, CancelRemovesAndReports) {
  OrderBook b;
  b.submit_limit(limit(1, Side::bid, 99, 5));
  b.submit_limit(limit(2, Side::bid, 99, 4));
  EXPECT_TRUE(b.cancel(1));
  EXPECT_FALSE(b.cancel(1));
  EXPECT_FALSE(b.cancel(42));
  EXPECT_EQ(b.volume_at(Side::bid, 99), 4);
  EXPECT_TRUE(b.cancel(2));
  EXPECT_EQ(b.level_count(Side::bid), 0U);
  EXPECT_EQ(b.resting_count(), 0U);
}

TEST(OrderBook, RejectsBadOrders) {
  OrderBook b;
  EXPECT_THROW(b.submit_limit(limit(1, Side::bid, 0, 5)), OrderError);
  EXPECT_THROW(b.submit_limit(limit(2, Side::bid, 99, 0)), OrderError);
  b.submit_limit(limit(3, Side::bid, 99, 1));
  EXPECT_THROW(b.submit_limit(limit(3, Side::bid, 98, 1)), OrderError);
  EXPECT_THROW(b.submit_limit(market(4, Side::bid, 1)), OrderError);
  EXPECT_THROW(b.submit_market(limit(5, Side::bid, 99, 1)), OrderError);
}

TEST(OrderBook, SnapshotPadsOutward) {
  OrderBook b;
  b.submit_limit(limit(1, Side::ask, 101, 5));
  b.submit_limit(limit(2, Side::ask, 102, 3));
  b.submit_limit(limit(3, Side::bid, 99, 4));
  b.submit_limit(limit(4, Side::bid, 98, 6));
  const auto s = b.snapshot(7);
  ASSERT_EQ(s.asks.size(), kBookDepth);
  ASSERT_EQ(s.bids.size(), kBookDepth);
  EXPECT_EQ(s.asks[0], (PriceLevel{101, 5}));
  EXPECT_EQ(s.asks[1], (PriceLevel{102, 3}));
  EXPECT_EQ(s.asks[2], (PriceLevel{103, 0}));
  EXPECT_EQ(s.asks[9], (PriceLevel{110, 0}));
  EXPECT_EQ(s.bids[0], (PriceLevel{99, 4}));
  EXPECT_EQ(s.bids[1], (PriceLevel{98, 6}));
  EXPECT_EQ(s.bids[2], (PriceLevel{97, 0}));
  EXPECT_EQ(mid_price(s).value, 200);
}

TEST(OrderBook, SnapshotNeedsBothSides) {
  OrderBook b;
  b.submit_limit(limit(1, Side::ask, 101, 5));
  EXPECT_THROW(b.snapshot(0), SnapshotError);
}

TEST(OrderBook, HalfCentMid) {
  OrderBook b;
  b.submit_limit(limit(1, Side::ask, 102, 5));
  b.submit_limit(limit(2, Side::bid, 99, 5));
  const auto m = *b.mid();
  EXPECT_DOUBLE_EQ(m.cents(), 100.5);
  EXPECT_EQ(m.ceil_cents(), 101);
  EXPECT_EQ(m.floor_cents(), 100);
}

TEST(OrderBook, MatchesReferenceOnRandomStreams) {
  for (std::uint64_t s = 0; s < 300; ++s) {
    RngStream rng(s, {0, 0, Purpose::test});
    const auto ops = oracle::random_stream(rng, 50);
    ASSERT_EQ(oracle::compare_on_stream(ops), "") << "stream " << s;
  }
}

TEST(OrderBook, InvariantsUnderRandomLoad) {
  RngStream rng(77, {0, 0, Purpose::test});
  OrderBook b;
  const auto ops = oracle::random_stream(rng, 5000);
  for (const auto& op : ops) {
    try {
      if (op.kind == oracle::OpKind::cancel) {
        b.cancel(op.order.id);
      } else if (op.kind == oracle::OpKind::limit) {
        b.submit_limit(op.order);
      } else {
        b.submit_market(op.order);
      }
    } catch (const OrderError&) {
    }
    // Never crossed; per-level volume equals the sum of its orders.
    if (b.best_bid() && b.best_ask()) {
      ASSERT_LT(*b.best_bid(), *b.best_ask());
    }
    for (const Side side : {Side::bid, Side::ask}) {
      std::map<Price, Volume> sums;
      for (const auto& o : b.resting_orders(side)) {
        ASSERT_GT(o.size, 0);
        sums[o.price] += o.size;
      }
      for (const auto& [p, v] : sums) ASSERT_EQ(b.volume_at(side, p), v);
      ASSERT_EQ(sums.size(), b.level_count(side));
    }
  }
}

TEST(OrderBook, VolumeConservation) {
  // Every fill consumes its size once from the taker and once from a maker.
  OrderBook b;
  RngStream rng(5, {0, 0, Purpose::test});
  Volume submitted = 0, filled = 0, cancelled = 0;
  std::vector<OrderId> ids;
  for (OrderId id = 1; id <= 3000; ++id) {
    if (rng.bernoulli(0.1) && !ids.empty()) {
      const OrderId victim = ids[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(ids.size()) - 1))];
      const auto before = b.resting_orders(Side::bid);
      const auto before_a = b.resting_orders(Side::ask);
      Volume size = 0;
      for (const auto& o : before) size += o.id == victim ? o.size : 0;
      for (const auto& o : before_a) size += o.id == victim ? o.size : 0;
      if (b.cancel(victim)) cancelled += size;
      continue;
    }
    const Order o = limit(id, rng.bernoulli(0.5) ? Side::bid : Side::ask, rng.uniform_int(95, 105), rng.uniform_int(1, 9));
    submitted += o.size;
    for (const auto& f : b.submit_limit(o).fills) filled += f.size;
    ids.push_back(id);
  }
  Volume resting = 0;
  for (const Side s : {Side::bid, Side::ask}) {
    for (const auto& o : b.resting_orders(s)) resting += o.size;
  }
  EXPECT_EQ(submitted, resting + 2 * filled + cancelled);
}
