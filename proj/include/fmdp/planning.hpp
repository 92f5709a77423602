#pragma once

// Extended value iteration over a set of plausible factored models described
// by per-entry confidence intervals.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fmdp/confidence.hpp"
#include "fmdp/core.hpp"
#include "fmdp/errors.hpp"

namespace fmdp {

/// Per-entry intervals for every transition factor row and every reward
/// factor row: transitions[i][x * S_i + y], rewards[i][x].
struct ConfidenceModel {
  FactoredStructure structure;
  std::vector<std::vector<Interval>> transitions;
  std::vector<std::vector<Interval>> rewards;
  Index time = 1;
  double reward_scale = 1.0;  // multiplies reward upper bounds (flat learners of a sum of l rewards)

  std::span<const Interval> transition_row(std::size_t i, Index x) const {
    const Index width = structure.factor_size(i);
    return {transitions[i].data() + x * width, width};
  }

  void validate() const {
    const auto& g = structure;
    if (transitions.size() != g.num_state_factors() || rewards.size() != g.num_reward_factors()) {
      throw structural_error("confidence model: factor counts do not match the structure");
    }
    for (std::size_t i = 0; i < transitions.size(); ++i) {
      if (transitions[i].size() != g.transition_rows(i) * g.factor_size(i)) {
        throw structural_error("confidence model: transition factor " + std::to_string(i) + " has wrong shape");
      }
    }
    for (std::size_t i = 0; i < rewards.size(); ++i) {
      if (rewards[i].size() != g.reward_rows(i)) {
        throw structural_error("confidence model: reward factor " + std::to_string(i) + " has wrong shape");
      }
    }
    auto check = [](const Interval& iv) {
      if (!(0.0 <= iv.lo && iv.lo <= iv.hi && iv.hi <= 1.0)) {
        throw structural_error("confidence model: interval outside 0 <= lo <= hi <= 1");
      }
    };
    for (const auto& t : transitions) std::for_each(t.begin(), t.end(), check);
    for (const auto& r : rewards) std::for_each(r.begin(), r.end(), check);
  }
};

/// Point intervals at the true parameters of `model`.
inline ConfidenceModel exact_confidence_model(const FactoredMdp& model) {
  ConfidenceModel out;
  out.structure = model.structure();
  for (const auto& f : model.transitions()) {
    std::vector<Interval> t(f.table.size());
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = {f.table[k], f.table[k]};
    out.transitions.push_back(std::move(t));
  }
  for (const auto& r : model.rewards()) {
    std::vector<Interval> v(r.means.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = {r.means[k], r.means[k]};
    out.rewards.push_back(std::move(v));
  }
  return out;
}

/// States sorted by value, largest first; equal values keep index order.
inline void descending_order(std::span<const double> u, std::vector<Index>& order) {
  order.resize(u.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return u[a] > u[b]; });
}

/// Greedy optimistic distribution over joint states. The caps are the
/// products of per-factor bounds, `bound(i, y)` returning the interval of
/// factor i at value y. Starts from the lower-bound products and raises
/// entries in `order` towards their upper-bound products until the mass
/// reaches one. Returns sum_j q(j) u(j); `feasible` is cleared when the caps
/// cannot produce a unit mass and the deficit had to be spread.
/// Greedy fill of q, which holds the lower-bound products on entry, towards
/// the caps `ucb`.
inline double greedy_fill(std::span<const Index> order, std::span<const double> u, std::span<double> q,
                          std::span<const double> ucb, bool& feasible) {
  const std::size_t S = q.size();
  feasible = true;
  double total = 0.0;
  for (std::size_t j = 0; j < S; ++j) total += q[j];
  if (total > 1.0 + 1e-9) {
    for (std::size_t j = 0; j < S; ++j) q[j] /= total;
    total = 1.0;
    feasible = false;
  }
  for (Index j : order) {
    if (total >= 1.0) break;
    const double add = std::min(ucb[j] - q[j], 1.0 - total);
    if (add > 0.0) {
      q[j] += add;
      total += add;
    }
  }
  if (total < 1.0 - 1e-12) {
    feasible = false;
    const double deficit = 1.0 - total;
    double cap_mass = 0.0;
    for (std::size_t j = 0; j < S; ++j) cap_mass += ucb[j];
    for (std::size_t j = 0; j < S; ++j) {
      q[j] += cap_mass > 0.0 ? deficit * ucb[j] / cap_mass : deficit / static_cast<double>(S);
    }
  }
  double value = 0.0;
  for (std::size_t j = 0; j < S; ++j) value += q[j] * u[j];
  return value;
}

template <class Bound>
double inner_maximization_into(std::span<const Index> sizes, std::span<const Index> order,
                               std::span<const double> u, Bound&& bound, std::span<double> q,
                               std::span<double> ucb, bool& feasible) {
  expand_product(sizes, [&](std::size_t i, Index y) { return bound(i, y).lo; }, q);
  expand_product(sizes, [&](std::size_t i, Index y) { return bound(i, y).hi; }, ucb);
  return greedy_fill(order, u, q, ucb, feasible);
}

struct InnerMaxResult {
  std::vector<double> q;
  double value = 0.0;
  bool feasible = true;
};

/// `bounds[i]` holds the S_i intervals of factor i for one transition row.
inline InnerMaxResult inner_maximization(std::span<const double> u, std::span<const Index> factor_sizes,
                                         const std::vector<std::vector<Interval>>& bounds) {
  Index S = 1;
  if (bounds.size() != factor_sizes.size()) throw structural_error("inner_maximization: factor count mismatch");
  for (std::size_t i = 0; i < factor_sizes.size(); ++i) {
    if (bounds[i].size() != factor_sizes[i]) throw structural_error("inner_maximization: bound width mismatch");
    S *= factor_sizes[i];
  }
  if (u.size() != S) throw structural_error("inner_maximization: value vector has wrong length");
  std::vector<Index> order;
  descending_order(u, order);
  InnerMaxResult out;
  out.q.resize(S);
  std::vector<double> ucb(S);
  out.value = inner_maximization_into(
      factor_sizes, order, u, [&](std::size_t i, Index y) -> const Interval& { return bounds[i][y]; }, out.q,
      ucb, out.feasible);
  return out;
}

inline constexpr Index kMaxCachedCapEntries = 4'000'000;

struct OptimisticPlan {
  std::vector<Index> policy;
  double gain = 0.0;
  std::vector<double> values;
  std::size_t iterations = 0;
  double epsilon = 0.0;
  double span = 0.0;
  std::size_t infeasible_rows = 0;  // inner maximizations that needed the deficit fallback
};

/// Extended value iteration: u_{n+1}(s) = max_a mu+(s,a) + max_q q.u_n with
/// mu+ the sum of reward upper bounds and q from the inner maximization.
/// Stops at span(u_{n+1} - u_n) <= epsilon; the gain is the midpoint of the
/// last difference and ties in the policy go to the smallest action index.
inline OptimisticPlan evi(const ConfidenceModel& bounds, const ScopeIndex& index, double epsilon,
                          std::size_t max_iter = 1'000'000) {
  if (!(epsilon > 0.0)) throw precondition_error("evi: epsilon must be positive");
  const auto& g = bounds.structure;
  const Index S = g.num_states();
  const Index A = g.num_actions();
  const std::size_t m = g.num_state_factors();
  const auto& sizes = g.state_factor_sizes();

  std::vector<double> reward_ub(S * A, 0.0);
  for (Index pair = 0; pair < S * A; ++pair) {
    double mu = 0.0;
    for (std::size_t i = 0; i < g.num_reward_factors(); ++i) mu += bounds.rewards[i][index.reward_row(i, pair)].hi;
    reward_ub[pair] = mu * bounds.reward_scale;
  }
  // Offset of each pair's row in every transition factor's bound table.
  std::vector<Index> row_offset(S * A * m);
  for (Index pair = 0; pair < S * A; ++pair) {
    for (std::size_t i = 0; i < m; ++i) row_offset[pair * m + i] = index.transition_row(i, pair) * sizes[i];
  }

  // The caps do not change across sweeps; tabulate them once when they fit.
  const bool cached = S * A * S <= kMaxCachedCapEntries;
  std::vector<double> lcb_table, ucb_table;
  if (cached) {
    lcb_table.resize(S * A * S);
    ucb_table.resize(S * A * S);
    for (Index pair = 0; pair < S * A; ++pair) {
      const Index* off = row_offset.data() + pair * m;
      std::span<double> lo_row(lcb_table.data() + pair * S, S), hi_row(ucb_table.data() + pair * S, S);
      expand_product(sizes, [&](std::size_t i, Index y) { return bounds.transitions[i][off[i] + y].lo; }, lo_row);
      expand_product(sizes, [&](std::size_t i, Index y) { return bounds.transitions[i][off[i] + y].hi; }, hi_row);
    }
  }

  std::vector<double> u(S, 0.0), next(S, 0.0), q(S), ucb(S);
  std::vector<Index> order;
  OptimisticPlan plan;
  plan.epsilon = epsilon;
  plan.policy.assign(S, 0);
  double sp = std::numeric_limits<double>::infinity();
  for (std::size_t n = 1; n <= max_iter; ++n) {
    descending_order(u, order);
    std::size_t infeasible = 0;
    for (Index s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      Index best_a = 0;
      for (Index a = 0; a < A; ++a) {
        const Index pair = s + S * a;
        const Index* off = row_offset.data() + pair * m;
        bool feasible = true;
        double v = reward_ub[pair];
        if (cached) {
          std::copy_n(lcb_table.data() + pair * S, S, q.data());
          v += greedy_fill(order, u, q, std::span<const double>(ucb_table.data() + pair * S, S), feasible);
        } else {
          v += inner_maximization_into(
              sizes, order, u,
              [&](std::size_t i, Index y) -> const Interval& { return bounds.transitions[i][off[i] + y]; }, q, ucb,
              feasible);
        }
        if (!feasible) ++infeasible;
        if (v > best) {
          best = v;
          best_a = a;
        }
      }
      next[s] = best;
      plan.policy[s] = best_a;
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double base = lo;
    for (Index s = 0; s < S; ++s) {
      const double d = next[s] - u[s];
      lo = std::min(lo, d);
      hi = std::max(hi, d);
      base = std::min(base, next[s]);
    }
    sp = hi - lo;
    for (Index s = 0; s < S; ++s) u[s] = next[s] - base;
    if (sp <= epsilon) {
      plan.gain = 0.5 * (hi + lo);
      plan.values = u;
      plan.iterations = n;
      plan.span = sp;
      plan.infeasible_rows = infeasible;
      return plan;
    }
  }
  throw convergence_error("evi: span " + std::to_string(sp) + " > epsilon " + std::to_string(epsilon) +
                          " after " + std::to_string(max_iter) + " iterations");
}

inline OptimisticPlan evi(const ConfidenceModel& bounds, double epsilon, std::size_t max_iter = 1'000'000) {
  bounds.validate();
  return evi(bounds, ScopeIndex(bounds.structure), epsilon, max_iter);
}

}  // namespace fmdp
