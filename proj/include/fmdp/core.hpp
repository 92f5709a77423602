#pragma once

// Factored MDP representation: mixed-radix codecs, scopes, per-factor tables,
// sampling and flattening to a tabular model.
//
// Every table in the library is indexed by the least-significant-first
// mixed-radix codec: for sizes (n0, n1, ...) the tuple (v0, v1, ...) maps to
// v0 + n0 * (v1 + n1 * (...)). A joint pair x = (s, a) therefore has index
// s + S * a where s and a are the joint state and joint action indices.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fmdp/errors.hpp"
#include "fmdp/rng.hpp"

namespace fmdp {

using Index = std::uint64_t;
using Value = std::uint32_t;
using Scope = std::vector<std::size_t>;

/// Entry budget for any dense table built from a factored model.
inline constexpr Index kMaxDenseEntries = 100'000'000;

namespace detail {

inline Index checked_mul(Index a, Index b) {
  if (a != 0 && b > std::numeric_limits<Index>::max() / a) {
    throw structural_error("cardinality overflows 64 bits");
  }
  return a * b;
}

inline std::string scope_string(const Scope& z) {
  std::string out = "{";
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (k) out += ",";
    out += std::to_string(z[k]);
  }
  return out + "}";
}

}  // namespace detail

/// Least-significant-first mixed-radix codec over a list of positive radices.
class MixedRadix {
 public:
  MixedRadix() = default;

  explicit MixedRadix(std::vector<Index> radices) : radices_(std::move(radices)) {
    for (Index r : radices_) {
      if (r == 0) throw structural_error("mixed-radix codec: radix must be positive");
      size_ = detail::checked_mul(size_, r);
    }
  }

  std::size_t rank() const { return radices_.size(); }
  Index size() const { return size_; }
  Index radix(std::size_t k) const { return radices_.at(k); }
  const std::vector<Index>& radices() const { return radices_; }

  Index encode(std::span<const Value> values) const {
    if (values.size() != radices_.size()) {
      throw structural_error("mixed-radix encode: expected " + std::to_string(radices_.size()) +
                             " components, got " + std::to_string(values.size()));
    }
    Index code = 0;
    Index stride = 1;
    for (std::size_t k = 0; k < radices_.size(); ++k) {
      if (values[k] >= radices_[k]) {
        throw structural_error("mixed-radix encode: component " + std::to_string(k) + " = " +
                               std::to_string(values[k]) + " out of range " +
                               std::to_string(radices_[k]));
      }
      code += values[k] * stride;
      stride *= radices_[k];
    }
    return code;
  }

  void decode_into(Index code, std::span<Value> out) const {
    if (code >= size_) {
      throw structural_error("mixed-radix decode: code " + std::to_string(code) +
                             " out of range " + std::to_string(size_));
    }
    for (std::size_t k = 0; k < radices_.size(); ++k) {
      out[k] = static_cast<Value>(code % radices_[k]);
      code /= radices_[k];
    }
  }

  std::vector<Value> decode(Index code) const {
    std::vector<Value> out(radices_.size());
    decode_into(code, out);
    return out;
  }

  friend bool operator==(const MixedRadix&, const MixedRadix&) = default;

 private:
  std::vector<Index> radices_;
  Index size_ = 1;
};

/// DBN structure: factor cardinalities and the transition / reward scopes.
/// Factors 0..m-1 are state factors, m..n-1 action factors.
class FactoredStructure {
 public:
  FactoredStructure() = default;

  FactoredStructure(std::vector<Index> state_factor_sizes, std::vector<Index> action_factor_sizes,
                    std::vector<Scope> transition_scopes, std::vector<Scope> reward_scopes)
      : state_sizes_(std::move(state_factor_sizes)),
        action_sizes_(std::move(action_factor_sizes)),
        transition_scopes_(std::move(transition_scopes)),
        reward_scopes_(std::move(reward_scopes)) {
    if (state_sizes_.empty()) throw structural_error("structure needs at least one state factor");
    if (transition_scopes_.size() != state_sizes_.size()) {
      throw structural_error("structure: " + std::to_string(transition_scopes_.size()) +
                             " transition scopes for " + std::to_string(state_sizes_.size()) +
                             " state factors");
    }
    if (reward_scopes_.empty()) throw structural_error("structure needs at least one reward scope");

    std::vector<Index> all = state_sizes_;
    all.insert(all.end(), action_sizes_.begin(), action_sizes_.end());
    pair_codec_ = MixedRadix(all);
    state_codec_ = MixedRadix(state_sizes_);
    action_codec_ = MixedRadix(action_sizes_);

    for (const auto& z : transition_scopes_) validate_scope(z);
    for (const auto& z : reward_scopes_) validate_scope(z);
  }

  std::size_t num_state_factors() const { return state_sizes_.size(); }
  std::size_t num_action_factors() const { return action_sizes_.size(); }
  std::size_t num_factors() const { return state_sizes_.size() + action_sizes_.size(); }
  std::size_t num_reward_factors() const { return reward_scopes_.size(); }

  Index factor_size(std::size_t j) const { return pair_codec_.radix(j); }
  const std::vector<Index>& state_factor_sizes() const { return state_sizes_; }
  const std::vector<Index>& action_factor_sizes() const { return action_sizes_; }
  const std::vector<Index>& factor_sizes() const { return pair_codec_.radices(); }

  const Scope& transition_scope(std::size_t i) const { return transition_scopes_.at(i); }
  const Scope& reward_scope(std::size_t i) const { return reward_scopes_.at(i); }
  const std::vector<Scope>& transition_scopes() const { return transition_scopes_; }
  const std::vector<Scope>& reward_scopes() const { return reward_scopes_; }

  Index num_states() const { return state_codec_.size(); }
  Index num_actions() const { return action_codec_.size(); }
  Index num_pairs() const { return pair_codec_.size(); }

  const MixedRadix& state_codec() const { return state_codec_; }
  const MixedRadix& action_codec() const { return action_codec_; }
  const MixedRadix& pair_codec() const { return pair_codec_; }

  Index pair_index(Index s, Index a) const { return s + num_states() * a; }

  /// |X[Z]|.
  Index scope_size(const Scope& z) const {
    Index out = 1;
    for (std::size_t j : z) out = detail::checked_mul(out, factor_size(j));
    return out;
  }

  MixedRadix scope_codec(const Scope& z) const {
    std::vector<Index> r;
    r.reserve(z.size());
    for (std::size_t j : z) r.push_back(factor_size(j));
    return MixedRadix(std::move(r));
  }

  Index transition_rows(std::size_t i) const { return scope_size(transition_scope(i)); }
  Index reward_rows(std::size_t i) const { return scope_size(reward_scope(i)); }

  void validate_scope(const Scope& z) const {
    if (z.empty()) throw structural_error("scope must be nonempty");
    for (std::size_t k = 0; k < z.size(); ++k) {
      if (z[k] >= num_factors()) {
        throw structural_error("scope " + detail::scope_string(z) + ": index " +
                               std::to_string(z[k]) + " >= n = " + std::to_string(num_factors()));
      }
      if (k && z[k] <= z[k - 1]) {
        throw structural_error("scope " + detail::scope_string(z) +
                               " must be sorted and duplicate-free");
      }
    }
    (void)scope_size(z);
  }

  friend bool operator==(const FactoredStructure&, const FactoredStructure&) = default;

 private:
  std::vector<Index> state_sizes_;
  std::vector<Index> action_sizes_;
  std::vector<Scope> transition_scopes_;
  std::vector<Scope> reward_scopes_;
  MixedRadix pair_codec_;
  MixedRadix state_codec_;
  MixedRadix action_codec_;
};

/// x[Z] as both the component tuple and its index within X[Z].
struct ScopedValue {
  std::vector<Value> values;
  Index index = 0;
};

inline ScopedValue project(const FactoredStructure& g, std::span<const Value> pair, const Scope& z) {
  if (pair.size() != g.num_factors()) {
    throw structural_error("project: pair has " + std::to_string(pair.size()) +
                           " components, structure has " + std::to_string(g.num_factors()));
  }
  g.validate_scope(z);
  ScopedValue out;
  Index stride = 1;
  for (std::size_t j : z) {
    if (pair[j] >= g.factor_size(j)) {
      throw structural_error("project: component " + std::to_string(j) + " out of range");
    }
    out.values.push_back(pair[j]);
    out.index += pair[j] * stride;
    stride *= g.factor_size(j);
  }
  return out;
}

/// Precomputed row lookups for every joint pair: the transition / reward row
/// index of each factor, and each joint state's components.
class ScopeIndex {
 public:
  ScopeIndex() = default;

  explicit ScopeIndex(const FactoredStructure& g) {
    const Index pairs = g.num_pairs();
    const std::size_t m = g.num_state_factors();
    const std::size_t l = g.num_reward_factors();
    if (detail::checked_mul(pairs, m + l) > kMaxDenseEntries) {
      throw capacity_error("scope index: " + std::to_string(pairs) + " pairs exceed the dense guard");
    }
    num_pairs_ = pairs;
    num_states_ = g.num_states();
    m_ = m;
    l_ = l;
    transition_rows_.resize(pairs * m);
    reward_rows_.resize(pairs * l);
    state_components_.resize(num_states_ * m);

    std::vector<Value> x(g.num_factors());
    for (Index code = 0; code < pairs; ++code) {
      g.pair_codec().decode_into(code, x);
      for (std::size_t i = 0; i < m; ++i) {
        transition_rows_[i * pairs + code] = row_of(g, x, g.transition_scope(i));
      }
      for (std::size_t i = 0; i < l; ++i) {
        reward_rows_[i * pairs + code] = row_of(g, x, g.reward_scope(i));
      }
      if (code < num_states_) {
        for (std::size_t i = 0; i < m; ++i) state_components_[code * m + i] = x[i];
      }
    }
  }

  Index transition_row(std::size_t i, Index pair) const { return transition_rows_[i * num_pairs_ + pair]; }
  Index reward_row(std::size_t i, Index pair) const { return reward_rows_[i * num_pairs_ + pair]; }
  Value state_component(Index s, std::size_t i) const { return state_components_[s * m_ + i]; }
  std::span<const Value> state_components(Index s) const {
    return {state_components_.data() + s * m_, m_};
  }

 private:
  static Index row_of(const FactoredStructure& g, std::span<const Value> x, const Scope& z) {
    Index idx = 0;
    Index stride = 1;
    for (std::size_t j : z) {
      idx += x[j] * stride;
      stride *= g.factor_size(j);
    }
    return idx;
  }

  Index num_pairs_ = 0;
  Index num_states_ = 0;
  std::size_t m_ = 0;
  std::size_t l_ = 0;
  std::vector<Index> transition_rows_;
  std::vector<Index> reward_rows_;
  std::vector<Value> state_components_;
};

/// P_i(. | x[Z_i^p]) as a dense |X[Z_i^p]| x S_i table.
struct TransitionFactor {
  std::size_t factor = 0;
  Index rows = 0;
  Index width = 0;
  std::vector<double> table;

  std::span<const double> row(Index x) const { return {table.data() + x * width, width}; }
  double operator()(Index x, Index y) const { return table[x * width + y]; }
};

enum class RewardKind { bernoulli, constant };

/// R_i(x[Z_i^r]) as a per-row distribution with mean in [0, 1].
struct RewardFactor {
  std::size_t factor = 0;
  std::vector<double> means;
  std::vector<RewardKind> kinds;

  double sample(Index row, SplitMix64& rng) const {
    const double mu = means[row];
    if (kinds[row] == RewardKind::constant) return mu;
    return rng.bernoulli(mu) ? 1.0 : 0.0;
  }
};

/// M = ({P_i}, {R_i}; G). Immutable after construction.
class FactoredMdp {
 public:
  FactoredMdp(FactoredStructure structure, std::vector<TransitionFactor> transitions,
              std::vector<RewardFactor> rewards)
      : structure_(std::move(structure)),
        transitions_(std::move(transitions)),
        rewards_(std::move(rewards)) {
    const auto& g = structure_;
    if (transitions_.size() != g.num_state_factors()) {
      throw structural_error("model: expected " + std::to_string(g.num_state_factors()) +
                             " transition factors, got " + std::to_string(transitions_.size()));
    }
    if (rewards_.size() != g.num_reward_factors()) {
      throw structural_error("model: expected " + std::to_string(g.num_reward_factors()) +
                             " reward factors, got " + std::to_string(rewards_.size()));
    }
    for (std::size_t i = 0; i < transitions_.size(); ++i) {
      auto& f = transitions_[i];
      f.factor = i;
      const Index rows = g.transition_rows(i);
      const Index width = g.factor_size(i);
      if (f.rows != rows || f.width != width || f.table.size() != rows * width) {
        throw structural_error("transition factor " + std::to_string(i) + ": table shape must be " +
                               std::to_string(rows) + " x " + std::to_string(width));
      }
      for (Index x = 0; x < rows; ++x) {
        double sum = 0.0;
        for (double p : f.row(x)) {
          if (!(p >= 0.0 && p <= 1.0)) {
            throw structural_error("transition factor " + std::to_string(i) +
                                   ": probability outside [0,1]");
          }
          sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12) {
          throw structural_error("transition factor " + std::to_string(i) + " row " +
                                 std::to_string(x) + " sums to " + std::to_string(sum));
        }
      }
    }
    for (std::size_t i = 0; i < rewards_.size(); ++i) {
      auto& r = rewards_[i];
      r.factor = i;
      const Index rows = g.reward_rows(i);
      if (r.kinds.empty()) r.kinds.assign(r.means.size(), RewardKind::bernoulli);
      if (r.means.size() != rows || r.kinds.size() != rows) {
        throw structural_error("reward factor " + std::to_string(i) + ": expected " +
                               std::to_string(rows) + " rows");
      }
      for (double mu : r.means) {
        if (!(mu >= 0.0 && mu <= 1.0)) {
          throw structural_error("reward factor " + std::to_string(i) + ": mean outside [0,1]");
        }
      }
    }
    index_ = ScopeIndex(structure_);
  }

  const FactoredStructure& structure() const { return structure_; }
  const TransitionFactor& transition(std::size_t i) const { return transitions_.at(i); }
  const RewardFactor& reward(std::size_t i) const { return rewards_.at(i); }
  const std::vector<TransitionFactor>& transitions() const { return transitions_; }
  const std::vector<RewardFactor>& rewards() const { return rewards_; }
  const ScopeIndex& index() const { return index_; }

  Index num_states() const { return structure_.num_states(); }
  Index num_actions() const { return structure_.num_actions(); }

  /// Sum over reward factors of the mean reward at pair x (in [0, l]).
  double mean_reward(Index pair) const {
    double mu = 0.0;
    for (std::size_t i = 0; i < rewards_.size(); ++i) mu += rewards_[i].means[index_.reward_row(i, pair)];
    return mu;
  }

 private:
  FactoredStructure structure_;
  std::vector<TransitionFactor> transitions_;
  std::vector<RewardFactor> rewards_;
  ScopeIndex index_;
};

/// Expands prod_i f_i(s[i]) over all joint states in codec order, where
/// `factor_value(i, y)` returns the per-factor term. `out` must have size S.
template <class FactorValue>
void expand_product(std::span<const Index> sizes, FactorValue&& factor_value, std::span<double> out) {
  Index filled = 1;
  out[0] = 1.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const Index width = sizes[i];
    // Highest digit block first so the source block is not overwritten.
    for (Index y = width; y-- > 0;) {
      const double w = factor_value(i, y);
      double* dst = out.data() + y * filled;
      for (Index k = 0; k < filled; ++k) dst[k] = out[k] * w;
    }
    filled *= width;
  }
}

/// P(. | x) = prod_i P_i(s[i] | x[Z_i^p]) over all S joint states.
inline std::vector<double> joint_transition(const FactoredMdp& model, Index pair) {
  const auto& g = model.structure();
  if (pair >= g.num_pairs()) throw structural_error("joint_transition: pair index out of range");
  std::vector<double> out(g.num_states());
  const auto& idx = model.index();
  expand_product(
      g.state_factor_sizes(),
      [&](std::size_t i, Index y) { return model.transition(i)(idx.transition_row(i, pair), y); }, out);
  return out;
}

inline std::vector<double> joint_transition(const FactoredMdp& model, std::span<const Value> pair) {
  return joint_transition(model, model.structure().pair_codec().encode(pair));
}

struct StepResult {
  Index next_state = 0;
  std::vector<double> rewards;
  double collapsed_reward = 0.0;  // r^col = sum of the per-factor rewards
};

/// Draws s' factor by factor and one reward per reward factor.
inline void sample_step(const FactoredMdp& model, Index state, Index action, SplitMix64& rng,
                        StepResult& out) {
  const auto& g = model.structure();
  const auto& idx = model.index();
  const Index pair = g.pair_index(state, action);
  Index next = 0;
  Index stride = 1;
  for (std::size_t i = 0; i < g.num_state_factors(); ++i) {
    const auto row = model.transition(i).row(idx.transition_row(i, pair));
    const double u = rng.uniform();
    double acc = 0.0;
    Index y = 0;
    Index last_positive = 0;
    for (; y < row.size(); ++y) {
      if (row[y] > 0.0) last_positive = y;
      acc += row[y];
      if (u < acc) break;
    }
    if (y == row.size()) y = last_positive;  // rounding: u landed past the cumulative sum
    next += y * stride;
    stride *= row.size();
  }
  out.next_state = next;
  out.rewards.resize(g.num_reward_factors());
  out.collapsed_reward = 0.0;
  for (std::size_t i = 0; i < g.num_reward_factors(); ++i) {
    out.rewards[i] = model.reward(i).sample(idx.reward_row(i, pair), rng);
    out.collapsed_reward += out.rewards[i];
  }
}

inline StepResult sample_step(const FactoredMdp& model, Index state, Index action, SplitMix64& rng) {
  const auto& g = model.structure();
  if (state >= g.num_states() || action >= g.num_actions()) {
    throw structural_error("sample_step: state or action out of range");
  }
  StepResult out;
  sample_step(model, state, action, rng, out);
  return out;
}

inline StepResult sample_step(const FactoredMdp& model, std::span<const Value> state,
                              std::span<const Value> action, SplitMix64& rng) {
  const auto& g = model.structure();
  return sample_step(model, g.state_codec().encode(state), g.action_codec().encode(action), rng);
}

/// Tabular model: P(s'|s,a) at ((s * A) + a) * S + s', mean reward at s * A + a.
struct FlatMdp {
  Index num_states = 0;
  Index num_actions = 0;
  std::vector<double> transitions;
  std::vector<double> rewards;

  std::span<const double> p(Index s, Index a) const {
    return {transitions.data() + (s * num_actions + a) * num_states, num_states};
  }
  double r(Index s, Index a) const { return rewards[s * num_actions + a]; }

  static FlatMdp make(Index states, Index actions) {
    if (detail::checked_mul(detail::checked_mul(states, actions), states) > kMaxDenseEntries) {
      throw capacity_error("flat model with S=" + std::to_string(states) + ", A=" +
                           std::to_string(actions) + " exceeds the dense guard");
    }
    FlatMdp out;
    out.num_states = states;
    out.num_actions = actions;
    out.transitions.assign(states * actions * states, 0.0);
    out.rewards.assign(states * actions, 0.0);
    return out;
  }

  void validate() const {
    for (Index s = 0; s < num_states; ++s) {
      for (Index a = 0; a < num_actions; ++a) {
        double sum = 0.0;
        for (double v : p(s, a)) {
          if (v < 0.0) throw structural_error("flat model: negative probability");
          sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-12) throw structural_error("flat model: row does not sum to 1");
      }
    }
  }
};

inline FlatMdp flatten(const FactoredMdp& model) {
  const auto& g = model.structure();
  const Index S = g.num_states();
  const Index A = g.num_actions();
  FlatMdp flat = FlatMdp::make(S, A);
  const auto& idx = model.index();
  for (Index a = 0; a < A; ++a) {
    for (Index s = 0; s < S; ++s) {
      const Index pair = g.pair_index(s, a);
      std::span<double> out(flat.transitions.data() + (s * A + a) * S, S);
      expand_product(
          g.state_factor_sizes(),
          [&](std::size_t i, Index y) { return model.transition(i)(idx.transition_row(i, pair), y); },
          out);
      flat.rewards[s * A + a] = model.mean_reward(pair);
    }
  }
  return flat;
}

}  // namespace fmdp
