#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "dslob/kernel.hpp"
#include "dslob/market.hpp"
#include "dslob/rng.hpp"

using namespace dslob;

namespace {

struct Ping {
  int tag{0};
};
std::string_view payload_kind(const Ping&) { return "ping"; }

using Kernel = EventKernel<Ping>;

}  // namespace

TEST(Kernel, DeliversInTimeOrder) {
  Kernel k;
  k.schedule(30, 1, {3});
  k.schedule(10, 1, {1});
  k.schedule(20, 1, {2});
  std::vector<int> got;
  k.run_until(100, [&](Kernel::Event& ev, Kernel&) { got.push_back(ev.payload.tag); });
  EXPECT_EQ(got, (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(k.now(), 100);
  EXPECT_EQ(k.delivered(), 3U);
}

TEST(Kernel, SameTimeIsFifo) {
  Kernel k;
  for (int i = 0; i < 50; ++i) k.schedule(5, static_cast<TargetId>(i % 3), {i});
  std::vector<int> got;
  k.run_until(5, [&](Kernel::Event& ev, Kernel&) { got.push_back(ev.payload.tag); });
  for (int i = 0; i < 50; ++i) EXPECT_EQ(got[static_cast<std::size_t>(i)], i);
}

TEST(Kernel, HandlerScheduledSameTimeRunsAfterQueued) {
  Kernel k;
  k.schedule(0, 0, {1});
  k.schedule(0, 0, {2});
  std::vector<int> got;
  k.run_until(0, [&](Kernel::Event& ev, Kernel& kk) {
    got.push_back(ev.payload.tag);
    if (ev.payload.tag == 1) kk.schedule(0, 0, {3});
  });
  EXPECT_EQ(got, (std::vector<int>{1, 2, 3}));
}

TEST(Kernel, PastSchedulingThrows) {
  Kernel k;
  k.schedule(10, 0, {});
  k.run_until(10, [](Kernel::Event&, Kernel&) {});
  EXPECT_THROW(k.schedule(9, 0, {}), ScheduleError);
  EXPECT_NO_THROW(k.schedule(10, 0, {}));
}

TEST(Kernel, EventsAfterHorizonStayPending) {
  Kernel k;
  k.schedule(5, 0, {});
  k.schedule(15, 0, {});
  k.run_until(10, [](Kernel::Event&, Kernel&) {});
  EXPECT_EQ(k.pending(), 1U);
  EXPECT_EQ(k.now(), 10);
}

TEST(Kernel, PeriodicWakeupCount) {
  // A 5 s periodic agent over a 60 s session wakes at 0, 5, ..., 55.
  Kernel k(true);
  const SimTime period = 5 * kNanosPerSecond;
  const SimTime end = 60 * kNanosPerSecond;
  k.schedule(0, 7, {});
  int wakeups = 0;
  const auto trace = k.run_until(end - 1, [&](Kernel::Event& ev, Kernel& kk) {
    ++wakeups;
    if (ev.time + period < end) kk.schedule(ev.time + period, ev.target, {});
  });
  EXPECT_EQ(wakeups, 12);
  ASSERT_EQ(trace.size(), 12U);
  EXPECT_EQ(trace.back().time, 55 * kNanosPerSecond);
}

TEST(Kernel, RandomScheduleIsTotallyOrdered) {
  RngStream rng(9, {0, 0, Purpose::test});
  Kernel k(true);
  for (int i = 0; i < 2000; ++i) k.schedule(rng.uniform_int(0, 100), static_cast<TargetId>(i), {i});
  const auto trace = k.run_until(100, [](Kernel::Event&, Kernel&) {});
  ASSERT_EQ(trace.size(), 2000U);
  for (std::size_t i = 1; i < trace.size(); ++i) {
    const auto& a = trace[i - 1];
    const auto& b = trace[i];
    ASSERT_TRUE(a.time < b.time || (a.time == b.time && a.seq < b.seq));
  }
}

TEST(Kernel, MarketTraceIsDeterministic) {
  ScenarioConfig cfg;
  cfg.n_days = 1;
  DayOptions opts;
  opts.record_trace = true;
  opts.stop_at = 30 * kNanosPerSecond;
  const auto a = run_day(cfg, Scenario::ordinary, 0, opts);
  const auto b = run_day(cfg, Scenario::ordinary, 0, opts);
  ASSERT_FALSE(a.trace.empty());
  std::ostringstream sa, sb;
  write_trace(sa, a.trace);
  write_trace(sb, b.trace);
  EXPECT_EQ(sa.str(), sb.str());
  const auto c = run_day(cfg, Scenario::ordinary, 1, opts);
  std::ostringstream sc;
  write_trace(sc, c.trace);
  EXPECT_NE(sa.str(), sc.str());
}

TEST(Kernel, TraceLineFormat) {
  std::ostringstream os;
  write_trace(os, {{TraceEntry{12, 3, 4, "wakeup"}}});
  EXPECT_EQ(os.str(), "12,3,4,wakeup\n");
}
