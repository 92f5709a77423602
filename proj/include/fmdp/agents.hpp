#pragma once

// Optimistic learning agents for factored MDPs with a known structure:
// DBN-UCRL (element-wise Bernstein sets on the factored structure), UCRL2B
// (the same sets on the flat model), and two factored L1 baselines.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fmdp/confidence.hpp"
#include "fmdp/core.hpp"
#include "fmdp/errors.hpp"
#include "fmdp/planning.hpp"

namespace fmdp {

enum class Algorithm { dbn_ucrl, ucrl2b, ucrl_factored, ucrl_factored_l };

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::dbn_ucrl: return "dbn-ucrl";
    case Algorithm::ucrl2b: return "ucrl2b";
    case Algorithm::ucrl_factored: return "ucrl-factored";
    case Algorithm::ucrl_factored_l: return "ucrl-factored-l";
  }
  return "unknown";
}

inline Algorithm parse_algorithm(std::string_view tag) {
  for (Algorithm a : {Algorithm::dbn_ucrl, Algorithm::ucrl2b, Algorithm::ucrl_factored, Algorithm::ucrl_factored_l}) {
    if (tag == to_string(a)) return a;
  }
  throw precondition_error("unknown algorithm '" + std::string(tag) + "'");
}

inline std::string to_string(RewardBonus b) { return b == RewardBonus::paper_max ? "paper-max" : "tight-min"; }

inline RewardBonus parse_reward_bonus(std::string_view tag) {
  if (tag == "paper-max") return RewardBonus::paper_max;
  if (tag == "tight-min") return RewardBonus::tight_min;
  throw precondition_error("unknown reward-bonus mode '" + std::string(tag) + "'");
}

struct AgentConfig {
  double delta = 0.01;
  Algorithm algorithm = Algorithm::dbn_ucrl;
  RewardBonus reward_bonus = RewardBonus::paper_max;
  std::uint64_t seed = 0;
  std::size_t evi_max_iter = 1'000'000;
};

/// Structure the agent learns on: the environment's own structure, or for
/// UCRL2B a single state factor over all joint states, a single action
/// factor and a single reward factor, both scoped on the whole pair.
inline FactoredStructure learning_structure(const FactoredStructure& env, Algorithm algorithm) {
  if (algorithm != Algorithm::ucrl2b) return env;
  return FactoredStructure({env.num_states()}, {env.num_actions()}, {{0, 1}}, {{0, 1}});
}

/// Episodic optimistic agent. A new episode starts (and the policy is
/// recomputed) as soon as any transition or reward factor row has been
/// visited within the episode as often as before the episode, with the
/// pre-episode count floored at 1.
class Agent {
 public:
  Agent(const FactoredStructure& env, AgentConfig config)
      : config_(config),
        structure_(learning_structure(env, config.algorithm)),
        index_(structure_),
        reward_scale_(config.algorithm == Algorithm::ucrl2b ? static_cast<double>(env.num_reward_factors()) : 1.0) {
    if (!(config_.delta > 0.0 && config_.delta < 1.0)) throw precondition_error("agent: delta must lie in (0,1)");
    const auto& g = structure_;
    for (std::size_t i = 0; i < g.num_state_factors(); ++i) {
      const Index rows = g.transition_rows(i);
      transition_counts_.emplace_back(rows, 0);
      transition_snapshot_.emplace_back(rows, 0);
      next_counts_.emplace_back(rows * g.factor_size(i), 0);
    }
    for (std::size_t i = 0; i < g.num_reward_factors(); ++i) {
      const Index rows = g.reward_rows(i);
      reward_counts_.emplace_back(rows, 0);
      reward_snapshot_.emplace_back(rows, 0);
      reward_sums_.emplace_back(rows, 0.0);
      reward_squares_.emplace_back(rows, 0.0);
    }
    start_episode();
  }

  Index act(Index state) const { return plan_.policy.at(state); }

  /// Records the transition (s, a) -> s' with per-factor rewards; replans
  /// when the episode ends.
  void observe(Index state, Index action, std::span<const double> rewards, Index next_state) {
    const auto& g = structure_;
    const Index pair = g.pair_index(state, action);
    bool end = false;
    for (std::size_t i = 0; i < g.num_state_factors(); ++i) {
      const Index row = index_.transition_row(i, pair);
      const Index y = index_.state_component(next_state, i);
      const Index n = ++transition_counts_[i][row];
      ++next_counts_[i][row * g.factor_size(i) + y];
      const Index before = transition_snapshot_[i][row];
      if (n - before >= std::max<Index>(before, 1)) end = true;
    }
    double collapsed = 0.0;
    for (double r : rewards) collapsed += r;
    for (std::size_t i = 0; i < g.num_reward_factors(); ++i) {
      const double r = config_.algorithm == Algorithm::ucrl2b ? collapsed / reward_scale_ : rewards[i];
      const Index row = index_.reward_row(i, pair);
      const Index n = ++reward_counts_[i][row];
      reward_sums_[i][row] += r;
      reward_squares_[i][row] += r * r;
      const Index before = reward_snapshot_[i][row];
      if (n - before >= std::max<Index>(before, 1)) end = true;
    }
    ++time_;
    if (end) start_episode();
  }

  /// Confidence intervals from the current counts.
  ConfidenceModel build_confidence_model() const {
    const auto& g = structure_;
    const double delta = config_.delta;
    const double m = static_cast<double>(g.num_state_factors());
    const double l = static_cast<double>(g.num_reward_factors());
    ConfidenceModel model;
    model.structure = g;
    model.time = time_;
    model.reward_scale = reward_scale_;

    const bool bernstein = config_.algorithm == Algorithm::dbn_ucrl || config_.algorithm == Algorithm::ucrl2b;
    for (std::size_t i = 0; i < g.num_state_factors(); ++i) {
      const Index rows = g.transition_rows(i);
      const Index width = g.factor_size(i);
      std::vector<Interval> bounds(rows * width);
      const double sub_delta_bernstein = delta / (3.0 * m * static_cast<double>(width) * static_cast<double>(rows));
      const double sub_delta_l1 = delta / (3.0 * m * static_cast<double>(rows));
      for (Index x = 0; x < rows; ++x) {
        const double n = static_cast<double>(std::max<Index>(transition_counts_[i][x], 1));
        if (bernstein) {
          const double b = beta(n, sub_delta_bernstein);
          for (Index y = 0; y < width; ++y) {
            const double p_hat = static_cast<double>(next_counts_[i][x * width + y]) / n;
            bounds[x * width + y] = bernstein_interval_with_threshold(p_hat, n, b);
          }
        } else {
          const double w = config_.algorithm == Algorithm::ucrl_factored
                               ? l1_radius(n, static_cast<double>(width), sub_delta_l1, L1Variant::weissman_union,
                                           static_cast<double>(time_))
                               : l1_radius(n, static_cast<double>(width), sub_delta_l1, L1Variant::laplace);
          for (Index y = 0; y < width; ++y) {
            const double p_hat = static_cast<double>(next_counts_[i][x * width + y]) / n;
            bounds[x * width + y] = {std::max(0.0, p_hat - w), std::min(1.0, p_hat + w)};
          }
        }
      }
      model.transitions.push_back(std::move(bounds));
    }

    for (std::size_t i = 0; i < g.num_reward_factors(); ++i) {
      const Index rows = g.reward_rows(i);
      std::vector<Interval> bounds(rows);
      const double sub_delta = delta / (3.0 * l * static_cast<double>(rows));
      for (Index x = 0; x < rows; ++x) {
        const Index raw = reward_counts_[i][x];
        const double n = static_cast<double>(std::max<Index>(raw, 1));
        const double mean = std::clamp(reward_sums_[i][x] / n, 0.0, 1.0);
        double variance = 0.0;
        if (raw >= 2) {
          const double rn = static_cast<double>(raw);
          variance = (reward_squares_[i][x] - rn * mean * mean) / (rn - 1.0);
          variance = std::clamp(variance, 0.0, 0.25);
        }
        if (bernstein) {
          bounds[x] = reward_interval(mean, variance, n, sub_delta, config_.reward_bonus);
        } else {
          const double w = 0.5 * beta_prime(n, sub_delta);
          bounds[x] = {std::max(0.0, mean - w), std::min(1.0, mean + w)};
        }
      }
      model.rewards.push_back(std::move(bounds));
    }
    return model;
  }

  const AgentConfig& config() const { return config_; }
  const FactoredStructure& structure() const { return structure_; }
  const OptimisticPlan& plan() const { return plan_; }
  std::size_t episodes() const { return episode_; }
  Index time() const { return time_; }
  Index episode_start() const { return episode_start_; }
  double planning_seconds() const { return planning_seconds_; }

  Index transition_count(std::size_t i, Index row) const { return transition_counts_.at(i).at(row); }
  Index transition_count_at_episode_start(std::size_t i, Index row) const { return transition_snapshot_.at(i).at(row); }
  Index next_state_count(std::size_t i, Index row, Index y) const {
    return next_counts_.at(i).at(row * structure_.factor_size(i) + y);
  }
  Index reward_count(std::size_t i, Index row) const { return reward_counts_.at(i).at(row); }

 private:
  void start_episode() {
    ++episode_;
    episode_start_ = time_;
    transition_snapshot_ = transition_counts_;
    reward_snapshot_ = reward_counts_;
    const auto began = std::chrono::steady_clock::now();
    const auto model = build_confidence_model();
    plan_ = evi(model, index_, 1.0 / std::sqrt(static_cast<double>(time_)), config_.evi_max_iter);
    planning_seconds_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - began).count();
  }

  AgentConfig config_;
  FactoredStructure structure_;
  ScopeIndex index_;
  double reward_scale_ = 1.0;

  std::vector<std::vector<Index>> transition_counts_;
  std::vector<std::vector<Index>> transition_snapshot_;
  std::vector<std::vector<Index>> next_counts_;
  std::vector<std::vector<Index>> reward_counts_;
  std::vector<std::vector<Index>> reward_snapshot_;
  std::vector<std::vector<double>> reward_sums_;
  std::vector<std::vector<double>> reward_squares_;

  OptimisticPlan plan_;
  std::size_t episode_ = 0;
  Index time_ = 1;
  Index episode_start_ = 1;
  double planning_seconds_ = 0.0;
};

}  // namespace fmdp
