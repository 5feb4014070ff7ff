#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace dslob {

// Purpose tags keep the draws of different consumers in disjoint streams.
enum class Purpose : std::uint64_t {
  kernel = 1,
  arrivals = 2,
  observation = 3,
  orders = 4,
  shock = 5,
  fundamental = 6,
  assignment = 7,
  split = 8,
  test = 99,
};

struct StreamId {
  std::uint64_t day{0};
  std::uint64_t agent{0};
  Purpose purpose{Purpose::kernel};
};

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) noexcept {
  return splitmix64(h ^ splitmix64(v + 0x632BE59BD9B4E019ULL));
}

// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
constexpr std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                     std::array<std::uint32_t, 2> key) noexcept {
  constexpr std::uint32_t m0 = 0xD2511F53U;
  constexpr std::uint32_t m1 = 0xCD9E8D57U;
  constexpr std::uint32_t w0 = 0x9E3779B9U;
  constexpr std::uint32_t w1 = 0xBB67AE85U;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(m0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(m1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += w0;
    key[1] += w1;
  }
  return ctr;
}

}  // namespace detail

/// Counter-based random stream keyed by (root seed, stream id).
///
/// The n-th 64-bit draw is a pure function of the key and n, so streams can be
/// created in any order and on any thread without affecting each other. All
/// distributions below are implemented here rather than through <random> so
/// the draws do not depend on the standard library vendor.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t root_seed, StreamId id) noexcept {
    std::uint64_t h = detail::splitmix64(root_seed);
    h = detail::hash_combine(h, id.day);
    h = detail::hash_combine(h, id.agent);
    h = detail::hash_combine(h, static_cast<std::uint64_t>(id.purpose));
    key_ = {static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
    const std::uint64_t tag = detail::hash_combine(h, 0xA5A5A5A5ULL);
    tag_ = {static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32)};
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return next_u64(); }

  std::uint64_t next_u64() noexcept {
    if (buffered_ == 0) {
      const auto block = detail::philox4x32_10(
          {static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32), tag_[0],
           tag_[1]},
          key_);
      ++counter_;
      buffer_[0] = (static_cast<std::uint64_t>(block[1]) << 32) | block[0];
      buffer_[1] = (static_cast<std::uint64_t>(block[3]) << 32) | block[2];
      buffered_ = 2;
    }
    return buffer_[2 - buffered_--];
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }

  // Uniform integer on the closed range [lo, hi] (Lemire's unbiased multiply-shift).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept {
    const auto range = static_cast<std::uint64_t>(hi - lo) + 1;
    if (range == 0) return static_cast<std::int64_t>(next_u64());  // full 64-bit span
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * range;
    auto low = static_cast<std::uint64_t>(m);
    if (low < range) {
      const std::uint64_t threshold = (0 - range) % range;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(next_u64()) * range;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return lo + static_cast<std::int64_t>(m >> 64);
  }

  bool bernoulli(double p) noexcept { return uniform01() < p; }

  // Box-Muller; the paired variate is cached.
  double standard_normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
  }

  double normal(double mean, double stddev) noexcept { return mean + stddev * standard_normal(); }

  // Exponential with the given rate (mean 1/rate).
  double exponential(double rate) noexcept { return -std::log1p(-uniform01()) / rate; }

  std::uint64_t draws_consumed() const noexcept { return 2 * counter_ - buffered_; }

 private:
  std::array<std::uint32_t, 2> key_{};
  std::array<std::uint32_t, 2> tag_{};
  std::uint64_t counter_{0};
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_{0};
  double spare_{0.0};
  bool has_spare_{false};
};

inline RngStream derive_stream(std::uint64_t root_seed, StreamId id) noexcept {
  return RngStream(root_seed, id);
}

// Stable 64-bit seed for one simulated day, as recorded in the manifest.
inline std::uint64_t day_seed(std::uint64_t root_seed, std::uint64_t day_index) noexcept {
  return detail::hash_combine(detail::splitmix64(root_seed), day_index);
}

}  // namespace dslob
