#pragma once

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dslob/types.hpp"

namespace dslob {

using TargetId = std::uint32_t;

// A payload type must name its kind for the audit trace (found by ADL).
template <class P>
concept KernelPayload = std::movable<P> && requires(const P& p) {
  { payload_kind(p) } -> std::convertible_to<std::string_view>;
};

class ScheduleError : public Error {
 public:
  using Error::Error;
};

struct TraceEntry {
  SimTime time{0};
  std::uint64_t seq{0};
  TargetId target{0};
  std::string_view kind;

  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

using EventTrace = std::vector<TraceEntry>;

// One record per line: time,seq,target,payload_kind
inline void write_trace(std::ostream& os, const EventTrace& trace) {
  for (const auto& e : trace) os << e.time << ',' << e.seq << ',' << e.target << ',' << e.kind << '\n';
}

/// Single-threaded discrete-event scheduler.
///
/// Events are delivered in (time, seq) order where seq is the insertion
/// counter, so events scheduled for the same instant arrive in the order they
/// were scheduled. Handlers may schedule further events at or after now().
template <KernelPayload Payload>
class EventKernel {
 public:
  struct Event {
    SimTime time{0};
    std::uint64_t seq{0};
    TargetId target{0};
    Payload payload;
  };

  explicit EventKernel(bool record_trace = false) : record_trace_(record_trace) {}

  SimTime now() const noexcept { return now_; }
  std::size_t pending() const noexcept { return heap_.size(); }
  std::uint64_t delivered() const noexcept { return delivered_; }

  // Returns the sequence number assigned to the event.
  std::uint64_t schedule(SimTime time, TargetId target, Payload payload) {
    if (time < now_) {
      throw ScheduleError("event scheduled in the past: t=" + std::to_string(time) +
                          " < now=" + std::to_string(now_));
    }
    const std::uint64_t seq = next_seq_++;
    heap_.push_back(Event{time, seq, target, std::move(payload)});
    std::push_heap(heap_.begin(), heap_.end(), later);
    return seq;
  }

  /// Delivers every event with time <= t_end to `handler(event, kernel)` and
  /// leaves the clock at t_end. Returns the trace of this call's deliveries
  /// when tracing is enabled.
  template <class Handler>
  EventTrace run_until(SimTime t_end, Handler&& handler) {
    EventTrace trace;
    while (!heap_.empty() && heap_.front().time <= t_end) {
      std::pop_heap(heap_.begin(), heap_.end(), later);
      Event ev = std::move(heap_.back());
      heap_.pop_back();
      now_ = ev.time;
      ++delivered_;
      if (record_trace_) trace.push_back(TraceEntry{ev.time, ev.seq, ev.target, payload_kind(ev.payload)});
      handler(ev, *this);
    }
    if (t_end > now_) now_ = t_end;
    return trace;
  }

 private:
  static bool later(const Event& a, const Event& b) noexcept {
    return a.time != b.time ? a.time > b.time : a.seq > b.seq;
  }

  std::vector<Event> heap_;
  SimTime now_{0};
  std::uint64_t next_seq_{0};
  std::uint64_t delivered_{0};
  bool record_trace_{false};
};

}  // namespace dslob
