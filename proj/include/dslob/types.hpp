#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dslob {

// Kernel time: integer nanoseconds since market open.
using SimTime = std::int64_t;
// Prices are integer cents (tick = 1 cent).
using Price = std::int64_t;
using Volume = std::int64_t;
using OrderId = std::uint64_t;
using AgentId = std::uint32_t;

inline constexpr SimTime kNanosPerSecond = 1'000'000'000;
inline constexpr SimTime kNanosPerMinute = 60 * kNanosPerSecond;
inline constexpr SimTime kNanosPerHour = 60 * kNanosPerMinute;

constexpr SimTime seconds_to_ns(double s) noexcept {
  return static_cast<SimTime>(s * static_cast<double>(kNanosPerSecond));
}
constexpr double ns_to_seconds(SimTime t) noexcept {
  return static_cast<double>(t) / static_cast<double>(kNanosPerSecond);
}

enum class Side : std::uint8_t { bid, ask };

constexpr Side opposite(Side s) noexcept { return s == Side::bid ? Side::ask : Side::bid; }
constexpr std::string_view to_string(Side s) noexcept { return s == Side::bid ? "bid" : "ask"; }

// Mid-prices are kept exact as a count of half cents: ask + bid.
struct HalfCents {
  std::int64_t value{0};

  constexpr double cents() const noexcept { return static_cast<double>(value) / 2.0; }
  // Smallest integer price >= mid and largest <= mid.
  constexpr Price ceil_cents() const noexcept { return value >= 0 ? (value + 1) / 2 : value / 2; }
  constexpr Price floor_cents() const noexcept { return value >= 0 ? value / 2 : (value - 1) / 2; }
  static constexpr HalfCents from_cents(Price p) noexcept { return HalfCents{2 * p}; }

  friend constexpr auto operator<=>(HalfCents, HalfCents) = default;
};

enum class Scenario : std::uint8_t { ordinary, small, large };

constexpr std::string_view to_string(Scenario s) noexcept {
  switch (s) {
    case Scenario::ordinary: return "ordinary";
    case Scenario::small: return "small";
    case Scenario::large: return "large";
  }
  return "?";
}

inline Scenario parse_scenario(std::string_view s) {
  if (s == "ordinary") return Scenario::ordinary;
  if (s == "small") return Scenario::small;
  if (s == "large") return Scenario::large;
  throw std::invalid_argument("unknown scenario '" + std::string(s) + "'");
}

// Base class for errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dslob
