#pragma once

// Exact planning on a known model: optimal gain, hitting times, diameter,
// factored diameter and the Cartesian value-iteration decomposition.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "fmdp/core.hpp"
#include "fmdp/errors.hpp"

namespace fmdp {

inline double span_of(std::span<const double> v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

struct GainResult {
  double gain = 0.0;
  std::vector<double> bias;          // last iterate, min-subtracted
  std::vector<Index> policy;         // greedy w.r.t. the last iterate
  std::size_t iterations = 0;
  double span = 0.0;                 // span of the last difference vector
};

/// Undiscounted value iteration u_{n+1}(s) = max_a r(s,a) + P(.|s,a) u_n,
/// stopped once span(u_{n+1} - u_n) <= span_tol. The gain is the midpoint of
/// the final difference vector, so it is within span_tol / 2 of g*.
inline GainResult average_reward_vi(const FlatMdp& mdp, double span_tol = 1e-8,
                                    std::size_t max_iter = 1'000'000) {
  const Index S = mdp.num_states;
  const Index A = mdp.num_actions;
  std::vector<double> u(S, 0.0);
  std::vector<double> next(S, 0.0);
  std::vector<double> diff(S, 0.0);
  GainResult out;
  out.policy.assign(S, 0);
  double sp = std::numeric_limits<double>::infinity();
  for (std::size_t n = 1; n <= max_iter; ++n) {
    for (Index s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      Index best_a = 0;
      for (Index a = 0; a < A; ++a) {
        const auto row = mdp.p(s, a);
        double v = mdp.r(s, a);
        for (Index y = 0; y < S; ++y) v += row[y] * u[y];
        if (v > best) {
          best = v;
          best_a = a;
        }
      }
      next[s] = best;
      out.policy[s] = best_a;
    }
    for (Index s = 0; s < S; ++s) diff[s] = next[s] - u[s];
    const auto [lo, hi] = std::minmax_element(diff.begin(), diff.end());
    sp = *hi - *lo;
    const double base = *std::min_element(next.begin(), next.end());
    for (Index s = 0; s < S; ++s) u[s] = next[s] - base;
    if (sp <= span_tol) {
      out.gain = 0.5 * (*hi + *lo);
      out.bias = u;
      out.iterations = n;
      out.span = sp;
      return out;
    }
  }
  throw convergence_error("average_reward_vi: span " + std::to_string(sp) + " > " +
                          std::to_string(span_tol) + " after " + std::to_string(max_iter) +
                          " iterations");
}

namespace detail {

/// Nonzero entries of every (s, a) row of a flat model.
struct SparseRows {
  std::vector<std::size_t> offsets;  // (s * A + a) -> start in cols/probs
  std::vector<Index> cols;
  std::vector<double> probs;

  explicit SparseRows(const FlatMdp& mdp) {
    const Index S = mdp.num_states;
    const Index A = mdp.num_actions;
    offsets.reserve(S * A + 1);
    offsets.push_back(0);
    for (Index s = 0; s < S; ++s) {
      for (Index a = 0; a < A; ++a) {
        const auto row = mdp.p(s, a);
        for (Index y = 0; y < S; ++y) {
          if (row[y] > 0.0) {
            cols.push_back(y);
            probs.push_back(row[y]);
          }
        }
        offsets.push_back(cols.size());
      }
    }
  }
};

inline std::vector<double> hitting_times(const FlatMdp& mdp, const SparseRows& rows, Index target,
                                         double tol, std::size_t max_iter) {
  const Index S = mdp.num_states;
  const Index A = mdp.num_actions;
  if (target >= S) throw structural_error("min_hitting_times: target out of range");

  // Backward reachability on the support graph.
  std::vector<std::vector<Index>> preds(S);
  for (Index s = 0; s < S; ++s) {
    for (Index a = 0; a < A; ++a) {
      const std::size_t k = s * A + a;
      for (std::size_t e = rows.offsets[k]; e < rows.offsets[k + 1]; ++e) preds[rows.cols[e]].push_back(s);
    }
  }
  std::vector<char> seen(S, 0);
  std::deque<Index> queue{target};
  seen[target] = 1;
  while (!queue.empty()) {
    const Index y = queue.front();
    queue.pop_front();
    for (Index s : preds[y]) {
      if (!seen[s]) {
        seen[s] = 1;
        queue.push_back(s);
      }
    }
  }
  for (Index s = 0; s < S; ++s) {
    if (!seen[s]) {
      throw unreachable_error("min_hitting_times: target " + std::to_string(target) +
                              " unreachable from state " + std::to_string(s));
    }
  }

  // Gauss-Seidel sweeps of h(s) = 1 + min_a sum_{y != target} P(y|s,a) h(y).
  std::vector<double> h(S, 0.0);
  for (std::size_t n = 0; n < max_iter; ++n) {
    double change = 0.0;
    for (Index s = 0; s < S; ++s) {
      if (s == target) continue;
      double best = std::numeric_limits<double>::infinity();
      for (Index a = 0; a < A; ++a) {
        const std::size_t k = s * A + a;
        double v = 1.0;
        for (std::size_t e = rows.offsets[k]; e < rows.offsets[k + 1]; ++e) {
          v += rows.probs[e] * h[rows.cols[e]];
        }
        best = std::min(best, v);
      }
      change = std::max(change, std::abs(best - h[s]));
      h[s] = best;
    }
    if (change <= tol) return h;
    if (*std::max_element(h.begin(), h.end()) > 1e9) break;
  }
  throw unreachable_error("min_hitting_times: no convergence for target " + std::to_string(target) +
                          " (hitting times exceed bound or iteration cap)");
}

}  // namespace detail

/// min over policies of E[T(s, target)] for every s; h(target) = 0.
inline std::vector<double> min_hitting_times(const FlatMdp& mdp, Index target, double tol = 1e-11,
                                             std::size_t max_iter = 10'000'000) {
  const detail::SparseRows rows(mdp);
  return detail::hitting_times(mdp, rows, target, tol, max_iter);
}

/// Bellman residual of a hitting-time vector (0 at a fixed point).
inline double hitting_time_residual(const FlatMdp& mdp, Index target, std::span<const double> h) {
  double worst = std::abs(h[target]);
  for (Index s = 0; s < mdp.num_states; ++s) {
    if (s == target) continue;
    double best = std::numeric_limits<double>::infinity();
    for (Index a = 0; a < mdp.num_actions; ++a) {
      const auto row = mdp.p(s, a);
      double v = 1.0;
      for (Index y = 0; y < mdp.num_states; ++y) {
        if (y != target) v += row[y] * h[y];
      }
      best = std::min(best, v);
    }
    worst = std::max(worst, std::abs(best - h[s]));
  }
  return worst;
}

/// H(s1, s2) = min_pi E[T(s1, s2)], stored row-major by s1, zero diagonal.
struct HittingTable {
  Index num_states = 0;
  std::vector<double> times;

  double operator()(Index from, Index to) const { return times[from * num_states + to]; }
};

inline HittingTable pairwise_hitting_times(const FlatMdp& mdp, unsigned workers = 0) {
  const Index S = mdp.num_states;
  const detail::SparseRows rows(mdp);
  HittingTable table{S, std::vector<double>(S * S, 0.0)};
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<Index>(workers, S));

  std::vector<std::string> errors(workers);
  auto job = [&](unsigned w) {
    try {
      for (Index target = w; target < S; target += workers) {
        const auto h = detail::hitting_times(mdp, rows, target, 1e-11, 10'000'000);
        for (Index s = 0; s < S; ++s) table.times[s * S + target] = h[s];
      }
    } catch (const std::exception& e) {
      errors[w] = e.what();
    }
  };
  if (workers <= 1) {
    job(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(job, w);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw unreachable_error(e);
  }
  return table;
}

/// D(M) = max_{s != s'} min_pi E[T(s, s')]; 0 for a single state.
inline double diameter(const HittingTable& table) {
  return table.times.empty() ? 0.0 : *std::max_element(table.times.begin(), table.times.end());
}

inline double diameter(const FlatMdp& mdp) { return diameter(pairwise_hitting_times(mdp)); }

/// Split of a transition row x in X[Z_i^p] into its state part and action part.
struct ScopeSplit {
  std::vector<std::size_t> state_factors;   // scope members < m
  Index state_values = 1;                   // |S[Z_i^p]|
  Index action_values = 1;                  // |A[Z_i^p]|
};

inline ScopeSplit split_scope(const FactoredStructure& g, const Scope& z) {
  ScopeSplit out;
  for (std::size_t j : z) {
    if (j < g.num_state_factors()) {
      out.state_factors.push_back(j);
      out.state_values *= g.factor_size(j);
    } else {
      out.action_values *= g.factor_size(j);
    }
  }
  return out;
}

/// K_{i,x} = |supp P_i(.|x)| with an exact zero test.
inline Index support_size(const TransitionFactor& f, Index row) {
  Index k = 0;
  for (double p : f.row(row)) k += p > 0.0 ? 1 : 0;
  return k;
}

/// D_{i,y}: the largest pairwise hitting time among states whose i-th
/// component lies in the union over actions of supp P_i(.|y, a).
inline double factored_diameter(const FactoredMdp& model, const HittingTable& table, std::size_t i,
                                Index y) {
  const auto& g = model.structure();
  if (i >= g.num_state_factors()) throw structural_error("factored_diameter: factor out of range");
  const auto split = split_scope(g, g.transition_scope(i));
  if (y >= split.state_values) throw structural_error("factored_diameter: y out of range");
  const auto& f = model.transition(i);

  std::vector<char> in_support(f.width, 0);
  for (Index a = 0; a < split.action_values; ++a) {
    const auto row = f.row(y + split.state_values * a);
    for (Index v = 0; v < f.width; ++v) {
      if (row[v] > 0.0) in_support[v] = 1;
    }
  }
  std::vector<Index> members;
  for (Index s = 0; s < g.num_states(); ++s) {
    if (in_support[model.index().state_component(s, i)]) members.push_back(s);
  }
  double worst = 0.0;
  for (Index s1 : members) {
    for (Index s2 : members) worst = std::max(worst, table(s1, s2));
  }
  return worst;
}

struct DiameterReport {
  double diameter = 0.0;
  std::vector<std::vector<double>> factored;     // [i][y], y in S[Z_i^p]
  std::vector<std::vector<Index>> support_sizes;  // [i][x], x in X[Z_i^p]

  /// D_{i,s} for the state part of transition row x of factor i.
  double factored_at_row(const FactoredStructure& g, std::size_t i, Index x) const {
    const auto split = split_scope(g, g.transition_scope(i));
    return factored[i][x % split.state_values];
  }
};

inline DiameterReport diameter_report(const FactoredMdp& model, unsigned workers = 0) {
  const auto table = pairwise_hitting_times(flatten(model), workers);
  const auto& g = model.structure();
  DiameterReport out;
  out.diameter = diameter(table);
  for (std::size_t i = 0; i < g.num_state_factors(); ++i) {
    const auto split = split_scope(g, g.transition_scope(i));
    std::vector<double> di(split.state_values);
    for (Index y = 0; y < split.state_values; ++y) di[y] = factored_diameter(model, table, i, y);
    out.factored.push_back(std::move(di));
    std::vector<Index> ki(model.transition(i).rows);
    for (Index x = 0; x < ki.size(); ++x) ki[x] = support_size(model.transition(i), x);
    out.support_sizes.push_back(std::move(ki));
  }
  return out;
}

/// c(M) = l * sqrt(sum_i sum_{x=(s,a)} D_{i,s}^2 (K_{i,x} - 1)) + sum_i sqrt|X[Z_i^r]| + D.
inline double theorem1_constant(const FactoredMdp& model, const DiameterReport& report) {
  const auto& g = model.structure();
  double inner = 0.0;
  for (std::size_t i = 0; i < g.num_state_factors(); ++i) {
    for (Index x = 0; x < report.support_sizes[i].size(); ++x) {
      const double d = report.factored_at_row(g, i, x);
      inner += d * d * static_cast<double>(report.support_sizes[i][x] - 1);
    }
  }
  double reward_term = 0.0;
  for (std::size_t i = 0; i < g.num_reward_factors(); ++i) {
    reward_term += std::sqrt(static_cast<double>(g.reward_rows(i)));
  }
  return static_cast<double>(g.num_reward_factors()) * std::sqrt(inner) + reward_term + report.diameter;
}

// ---------------------------------------------------------------------------
// Cartesian products

/// Connected components of the factor graph induced by all scopes. Each
/// component is one base MDP; components are listed by smallest factor index.
inline std::vector<std::vector<std::size_t>> cartesian_components(const FactoredStructure& g) {
  const std::size_t n = g.num_factors();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  auto unite = [&](const Scope& z) {
    for (std::size_t k = 1; k < z.size(); ++k) parent[find(z[k])] = find(z[0]);
  };
  for (const auto& z : g.transition_scopes()) unite(z);
  for (const auto& z : g.reward_scopes()) unite(z);

  std::vector<std::vector<std::size_t>> out;
  std::vector<std::ptrdiff_t> slot(n, -1);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t r = find(j);
    if (slot[r] < 0) {
      slot[r] = static_cast<std::ptrdiff_t>(out.size());
      out.emplace_back();
    }
    out[slot[r]].push_back(j);
  }
  return out;
}

struct CartesianViResult {
  std::vector<std::vector<std::size_t>> components;
  std::vector<FlatMdp> bases;
  std::vector<std::vector<double>> base_values;  // u_n^{(i)} per base
  std::vector<double> joint;                     // u_n on the joint model
  std::vector<double> summed;                    // sum_i u_n^{(i)}(s[i])
  double max_discrepancy = 0.0;                  // over every iterate 1..n
};

/// Runs n sweeps of plain (un-centred) value iteration from u_0 = 0 on the
/// joint model and on each base MDP and compares u_n(s) with
/// sum_i u_n^{(i)}(s[i]) at every iterate.
inline CartesianViResult cartesian_vi(const FactoredMdp& model, std::size_t n, std::size_t min_bases = 1) {
  const auto& g = model.structure();
  const std::size_t m = g.num_state_factors();
  CartesianViResult out;
  out.components = cartesian_components(g);
  if (out.components.size() < min_bases) {
    throw precondition_error("cartesian_vi: structure splits into " +
                             std::to_string(out.components.size()) + " base MDPs, expected at least " +
                             std::to_string(min_bases));
  }

  const FlatMdp joint = flatten(model);
  const auto& idx = model.index();

  // Base state of every joint state, per component.
  std::vector<std::vector<Index>> base_state_of(out.components.size(), std::vector<Index>(g.num_states()));
  std::vector<Value> x(g.num_factors(), 0);

  for (std::size_t b = 0; b < out.components.size(); ++b) {
    const auto& comp = out.components[b];
    std::vector<std::size_t> sf, af;
    std::vector<Index> ss, as;
    for (std::size_t j : comp) {
      if (j < m) {
        sf.push_back(j);
        ss.push_back(g.factor_size(j));
      } else {
        af.push_back(j);
        as.push_back(g.factor_size(j));
      }
    }
    const MixedRadix scodec(ss), acodec(as);
    FlatMdp base = FlatMdp::make(scodec.size(), acodec.size());
    std::vector<Value> sv(sf.size()), av(af.size()), yv(sf.size());
    for (Index s = 0; s < scodec.size(); ++s) {
      scodec.decode_into(s, sv);
      for (Index a = 0; a < acodec.size(); ++a) {
        acodec.decode_into(a, av);
        std::fill(x.begin(), x.end(), 0);
        for (std::size_t k = 0; k < sf.size(); ++k) x[sf[k]] = sv[k];
        for (std::size_t k = 0; k < af.size(); ++k) x[af[k]] = av[k];
        const Index pair = g.pair_codec().encode(x);
        for (Index y = 0; y < scodec.size(); ++y) {
          scodec.decode_into(y, yv);
          double p = 1.0;
          for (std::size_t k = 0; k < sf.size(); ++k) {
            p *= model.transition(sf[k])(idx.transition_row(sf[k], pair), yv[k]);
          }
          base.transitions[(s * base.num_actions + a) * base.num_states + y] = p;
        }
        double r = 0.0;
        for (std::size_t i = 0; i < g.num_reward_factors(); ++i) {
          const auto& z = g.reward_scope(i);
          if (std::find(comp.begin(), comp.end(), z.front()) != comp.end()) {
            r += model.reward(i).means[idx.reward_row(i, pair)];
          }
        }
        base.rewards[s * base.num_actions + a] = r;
      }
    }
    for (Index s = 0; s < g.num_states(); ++s) {
      Index code = 0, stride = 1;
      for (std::size_t k = 0; k < sf.size(); ++k) {
        code += idx.state_component(s, sf[k]) * stride;
        stride *= ss[k];
      }
      base_state_of[b][s] = code;
    }
    out.bases.push_back(std::move(base));
  }

  auto sweep = [](const FlatMdp& mdp, const std::vector<double>& u) {
    std::vector<double> next(mdp.num_states);
    for (Index s = 0; s < mdp.num_states; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (Index a = 0; a < mdp.num_actions; ++a) {
        const auto row = mdp.p(s, a);
        double v = mdp.r(s, a);
        for (Index y = 0; y < mdp.num_states; ++y) v += row[y] * u[y];
        best = std::max(best, v);
      }
      next[s] = best;
    }
    return next;
  };

  out.joint.assign(g.num_states(), 0.0);
  out.base_values.clear();
  for (const auto& base : out.bases) out.base_values.emplace_back(base.num_states, 0.0);
  out.summed.assign(g.num_states(), 0.0);
  for (std::size_t it = 0; it < n; ++it) {
    out.joint = sweep(joint, out.joint);
    for (std::size_t b = 0; b < out.bases.size(); ++b) out.base_values[b] = sweep(out.bases[b], out.base_values[b]);
    for (Index s = 0; s < g.num_states(); ++s) {
      double sum = 0.0;
      for (std::size_t b = 0; b < out.bases.size(); ++b) sum += out.base_values[b][base_state_of[b][s]];
      out.summed[s] = sum;
      out.max_discrepancy = std::max(out.max_discrepancy, std::abs(sum - out.joint[s]));
    }
  }
  return out;
}

}  // namespace fmdp
