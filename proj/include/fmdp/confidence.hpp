#pragma once

// Time-uniform confidence thresholds and the per-entry confidence intervals
// built from them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "fmdp/errors.hpp"

namespace fmdp {

inline constexpr double kPeelingEta = 1.12;

struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  bool contains(double q) const { return lo <= q && q <= hi; }
  double width() const { return hi - lo; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

namespace detail {

inline void check_delta(double delta, const char* where) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw precondition_error(std::string(where) + ": delta must lie in (0,1), got " + std::to_string(delta));
  }
}

inline void check_count(double n, const char* where) {
  if (!(n >= 1.0)) throw precondition_error(std::string(where) + ": count must be >= 1");
}

}  // namespace detail

/// Peeling threshold eta * log(log(n) log(eta n) / (log^2(eta) delta)).
/// Both inner logarithms are floored at 1, which only affects n <= 2.
inline double beta(double n, double delta) {
  detail::check_count(n, "beta");
  detail::check_delta(delta, "beta");
  const double eta = kPeelingEta;
  const double l1 = std::max(std::log(n), 1.0);
  const double l2 = std::max(std::log(eta * n), 1.0);
  const double le = std::log(eta);
  return eta * std::log(l1 * l2 / (le * le * delta));
}

/// Laplace-method threshold sqrt(2 (1 + 1/n) log(sqrt(n+1) / delta) / n).
inline double beta_prime(double n, double delta) {
  detail::check_count(n, "beta_prime");
  detail::check_delta(delta, "beta_prime");
  return std::sqrt(2.0 * (1.0 + 1.0 / n) * std::log(std::sqrt(n + 1.0) / delta) / n);
}

/// How the Hoeffding-Laplace and empirical-Bernstein widths are combined.
/// `paper_max` takes the larger of the two, `tight_min` the smaller.
enum class RewardBonus { paper_max, tight_min };

inline double reward_half_width(double variance, double n, double delta, RewardBonus mode) {
  const double hoeffding = 0.5 * beta_prime(n, delta);
  const double b = beta(n, delta);
  const double bernstein = std::sqrt(2.0 * variance * b / n) + 7.0 * b / (3.0 * n);
  return mode == RewardBonus::paper_max ? std::max(hoeffding, bernstein) : std::min(hoeffding, bernstein);
}

/// Reward-mean interval around an empirical mean with empirical variance.
inline Interval reward_interval(double mean, double variance, double n, double delta,
                                RewardBonus mode = RewardBonus::paper_max) {
  if (!(mean >= 0.0 && mean <= 1.0)) throw precondition_error("reward_interval: mean outside [0,1]");
  if (!(variance >= 0.0 && variance <= 0.25)) {
    throw precondition_error("reward_interval: variance outside [0,0.25]");
  }
  detail::check_count(n, "reward_interval");
  const double w = reward_half_width(variance, n, delta, mode);
  return {std::max(0.0, mean - w), std::min(1.0, mean + w)};
}

/// Slack of the Bernstein membership test at q:
/// sqrt(2 q (1-q) b / n) + b / (3n) - |p_hat - q|, nonnegative iff q is in the set.
inline double bernstein_slack(double p_hat, double n, double b, double q) {
  return std::sqrt(2.0 * q * (1.0 - q) * b / n) + b / (3.0 * n) - std::abs(p_hat - q);
}

inline bool bernstein_contains(double p_hat, double n, double b, double q) {
  return bernstein_slack(p_hat, n, b, q) >= 0.0;
}

/// {q in [0,1] : |p_hat - q| <= sqrt(2 q (1-q) b / n) + b / (3n)} for a given
/// threshold b. The set is an interval containing p_hat; each endpoint is
/// found by bisection down to adjacent doubles and lies on the feasible side.
inline Interval bernstein_interval_with_threshold(double p_hat, double n, double b) {
  if (!(p_hat >= 0.0 && p_hat <= 1.0)) throw precondition_error("bernstein_interval: p_hat outside [0,1]");
  detail::check_count(n, "bernstein_interval");
  auto boundary = [&](double inside, double outside) {
    // slack(inside) >= 0 > slack(outside)
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (inside + outside);
      if (mid == inside || mid == outside) break;
      if (bernstein_contains(p_hat, n, b, mid)) {
        inside = mid;
      } else {
        outside = mid;
      }
    }
    return inside;
  };
  Interval out;
  out.lo = bernstein_contains(p_hat, n, b, 0.0) ? 0.0 : boundary(p_hat, 0.0);
  out.hi = bernstein_contains(p_hat, n, b, 1.0) ? 1.0 : boundary(p_hat, 1.0);
  return out;
}

inline Interval bernstein_interval(double p_hat, double n, double delta) {
  return bernstein_interval_with_threshold(p_hat, n, beta(n, delta));
}

enum class L1Variant { weissman_union, laplace };

/// L1 radius of an empirical distribution over `support` outcomes.
/// weissman_union: sqrt((2/n) (S ln 2 + ln(t (t+1) / delta))) at time t;
/// laplace: sqrt((2/n) (1 + 1/n) (S ln 2 + ln(sqrt(n+1) / delta))).
inline double l1_radius(double n, double support, double delta, L1Variant variant, double t = 1.0) {
  detail::check_count(n, "l1_radius");
  detail::check_delta(delta, "l1_radius");
  if (!(support >= 1.0)) throw precondition_error("l1_radius: support size must be >= 1");
  const double ln2 = std::log(2.0);
  if (variant == L1Variant::weissman_union) {
    if (!(t >= 1.0)) throw precondition_error("l1_radius: time must be >= 1");
    return std::sqrt((2.0 / n) * (support * ln2 + std::log(t * (t + 1.0) / delta)));
  }
  return std::sqrt((2.0 / n) * (1.0 + 1.0 / n) * (support * ln2 + std::log(std::sqrt(n + 1.0) / delta)));
}

}  // namespace fmdp
