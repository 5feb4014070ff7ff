#pragma once

#include <cmath>
#include <concepts>
#include <optional>
#include <string>
#include <vector>

#include "dslob/rng.hpp"
#include "dslob/types.hpp"

namespace dslob {

// Mean-reverting latent value. Rates are per kernel nanosecond.
struct OuParams {
  double mu{100000.0};     // long-run mean, cents
  double sigma_x2{1e-12};  // variance rate, cents^2 / ns
  double theta{1e-12};     // mean-reversion rate, 1 / ns
};

struct ObservationParams {
  double sigma_y2{0.0};  // observation noise variance, cents^2
};

struct ShockSpec {
  double mu_s{200.0};
  double sigma_s2{400.0};
  SimTime t_s_low{kNanosPerHour};
  SimTime t_s_high{2 * kNanosPerHour};
  double A_s{2.0};
  double theta_s{1e-12};  // arrival-rate decay, 1 / ns

  void validate() const {
    if (mu_s < 0 || sigma_s2 < 0 || A_s < 0 || theta_s < 0 || t_s_low > t_s_high || t_s_low < 0) {
      throw std::invalid_argument("invalid shock parameters");
    }
  }
};

struct ShockDraw {
  SimTime t_s{0};
  int direction{1};  // -1 or +1
  double magnitude{0.0};

  friend bool operator==(const ShockDraw&, const ShockDraw&) = default;
};

// Transition moments over a step of dt nanoseconds.
struct OuMoments {
  double mean{0.0};
  double variance{0.0};
};

inline OuMoments ou_moments(double x, SimTime dt, const OuParams& p) {
  if (dt < 0) throw std::invalid_argument("negative OU time step");
  const auto delta = static_cast<double>(dt);
  if (p.theta == 0.0) return {x, p.sigma_x2 * delta};
  const double decay = std::exp(-p.theta * delta);
  const double var = p.sigma_x2 / (2.0 * p.theta) * -std::expm1(-2.0 * p.theta * delta);
  return {p.mu + (x - p.mu) * decay, var};
}

// Exact draw from the OU transition density; no discretization error.
inline double ou_step(double x, SimTime dt, const OuParams& p, RngStream& rng) {
  const OuMoments m = ou_moments(x, dt, p);
  if (dt == 0) return x;
  return m.variance > 0.0 ? rng.normal(m.mean, std::sqrt(m.variance)) : m.mean;
}

inline double observe(double x, const ObservationParams& obs, RngStream& rng) {
  return obs.sigma_y2 > 0.0 ? rng.normal(x, std::sqrt(obs.sigma_y2)) : x;
}

inline double draw_shock_magnitude(const ShockSpec& spec, int direction, RngStream& rng) {
  const double mean = direction * spec.mu_s;
  return spec.sigma_s2 > 0.0 ? rng.normal(mean, std::sqrt(spec.sigma_s2)) : mean;
}

inline ShockDraw draw_shock(const ShockSpec& spec, RngStream& rng) {
  spec.validate();
  ShockDraw d;
  d.t_s = rng.uniform_int(spec.t_s_low, spec.t_s_high);
  d.direction = rng.bernoulli(0.5) ? 1 : -1;
  d.magnitude = draw_shock_magnitude(spec, d.direction, rng);
  return d;
}

class FundamentalError : public Error {
 public:
  using Error::Error;
};

/// Latent value path of one trading day, advanced lazily.
struct FundamentalState {
  OuParams ou;
  double x{0.0};
  SimTime time{0};
  std::optional<ShockDraw> shock;  // set once the day's shock has been applied

  static FundamentalState at_mean(const OuParams& p) { return FundamentalState{p, p.mu, 0, std::nullopt}; }

  // Steps the latent value forward to t (no-op when t == time).
  double value_at(SimTime t, RngStream& rng) {
    if (t < time) throw FundamentalError("fundamental queried in the past");
    x = ou_step(x, t - time, ou, rng);
    time = t;
    return x;
  }
};

// Additive jump of the latent value. The long-run mean is untouched, so the
// displacement decays at the OU reversion rate.
inline FundamentalState apply_shock(FundamentalState state, const ShockDraw& draw) {
  if (state.shock) throw FundamentalError("shock already applied on this day");
  if (state.time != draw.t_s) {
    throw FundamentalError("shock applied at t=" + std::to_string(state.time) +
                           " but scheduled for t=" + std::to_string(draw.t_s));
  }
  state.x += draw.magnitude;
  state.shock = draw;
  return state;
}

/// Value-agent arrival intensity: lambda_bar before the shock, then
/// lambda_bar * (1 + A_s * exp(-theta_s (t - t_s))). Rates are per nanosecond.
struct ArrivalIntensity {
  double lambda_bar{0.0};
  double A_s{0.0};
  double theta_s{0.0};
  std::optional<SimTime> t_s;

  double operator()(SimTime t) const noexcept {
    if (!t_s || t < *t_s) return lambda_bar;
    return lambda_bar * (1.0 + A_s * std::exp(-theta_s * static_cast<double>(t - *t_s)));
  }
  double upper_bound() const noexcept { return t_s ? lambda_bar * (1.0 + A_s) : lambda_bar; }
};

inline double arrival_rate(SimTime t, const ShockSpec& spec, std::optional<SimTime> t_s, double lambda_bar) {
  if (!(lambda_bar > 0.0)) throw std::invalid_argument("lambda_bar must be positive");
  return ArrivalIntensity{lambda_bar, spec.A_s, spec.theta_s, t_s}(t);
}

template <class F>
concept RateFunction = std::invocable<const F&, SimTime> &&
                       std::convertible_to<std::invoke_result_t<const F&, SimTime>, double>;

/// Non-homogeneous Poisson arrivals on [t0, t1) by thinning: candidates come
/// from a homogeneous process at `bound` (per ns) and are kept with
/// probability rate(t) / bound. Output is sorted.
template <RateFunction F>
std::vector<SimTime> sample_arrivals(SimTime t0, SimTime t1, const F& rate, double bound, RngStream& rng) {
  if (t1 < t0) throw std::invalid_argument("sample_arrivals: t1 < t0");
  std::vector<SimTime> out;
  if (!(bound > 0.0)) return out;
  double t = static_cast<double>(t0);
  const auto end = static_cast<double>(t1);
  for (;;) {
    t += rng.exponential(bound);
    if (t >= end) break;
    const auto ti = static_cast<SimTime>(t);
    if (rng.uniform01() * bound < rate(ti)) out.push_back(ti);
  }
  return out;
}

inline std::vector<SimTime> sample_arrivals(SimTime t0, SimTime t1, const ArrivalIntensity& rate, RngStream& rng) {
  return sample_arrivals(t0, t1, rate, rate.upper_bound(), rng);
}

}  // namespace dslob
