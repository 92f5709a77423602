#pragma once

// Experiment runner: seeded replications of every algorithm on one
// environment, regret traces at geometric checkpoints, CSV and JSON output.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fmdp/agents.hpp"
#include "fmdp/core.hpp"
#include "fmdp/environments.hpp"
#include "fmdp/errors.hpp"
#include "fmdp/oracles.hpp"
#include "fmdp/rng.hpp"

namespace fmdp {

inline const std::vector<Algorithm>& all_algorithms() {
  static const std::vector<Algorithm> all{Algorithm::dbn_ucrl, Algorithm::ucrl2b, Algorithm::ucrl_factored,
                                          Algorithm::ucrl_factored_l};
  return all;
}

struct ExperimentConfig {
  std::string env = "riverswim-product";
  nlohmann::json env_params = nlohmann::json::object();
  Index horizon = 100'000;
  std::vector<Algorithm> algorithms = all_algorithms();
  double delta = 0.01;
  std::size_t replications = 48;
  std::uint64_t base_seed = 0;
  double checkpoint_ratio = 1.05;
  RewardBonus reward_bonus = RewardBonus::paper_max;
  unsigned workers = 1;
  bool compute_diameter = true;  // D and c(M) in the sidecar
  std::size_t evi_max_iter = 1'000'000;

  void validate() const {
    if (horizon < 1) throw precondition_error("config: horizon must be >= 1");
    if (replications < 1) throw precondition_error("config: replications must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw precondition_error("config: delta must lie in (0,1)");
    if (!(checkpoint_ratio > 1.0)) throw precondition_error("config: checkpoint_ratio must exceed 1");
    if (algorithms.empty()) throw precondition_error("config: no algorithms");
    if (evi_max_iter < 1) throw precondition_error("config: evi_max_iter must be >= 1");
  }
};

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  std::vector<std::string> algos;
  for (auto a : c.algorithms) algos.push_back(to_string(a));
  j = {{"env", c.env},
       {"env_params", c.env_params},
       {"horizon", c.horizon},
       {"algorithms", algos},
       {"delta", c.delta},
       {"replications", c.replications},
       {"base_seed", c.base_seed},
       {"checkpoint_ratio", c.checkpoint_ratio},
       {"reward_bonus", to_string(c.reward_bonus)},
       {"workers", c.workers},
       {"compute_diameter", c.compute_diameter},
       {"evi_max_iter", c.evi_max_iter}};
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  static const std::vector<std::string> known{"env",         "env_params", "horizon",          "algorithms",
                                              "delta",       "replications", "base_seed",      "checkpoint_ratio",
                                              "reward_bonus", "workers",    "compute_diameter", "evi_max_iter"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw precondition_error("config: unknown field '" + key + "'");
    }
  }
  c.env = j.value("env", c.env);
  c.env_params = j.value("env_params", c.env_params);
  c.horizon = j.value("horizon", c.horizon);
  if (j.contains("algorithms")) {
    c.algorithms.clear();
    for (const auto& a : j["algorithms"]) c.algorithms.push_back(parse_algorithm(a.get<std::string>()));
  }
  c.delta = j.value("delta", c.delta);
  c.replications = j.value("replications", c.replications);
  c.base_seed = j.value("base_seed", c.base_seed);
  c.checkpoint_ratio = j.value("checkpoint_ratio", c.checkpoint_ratio);
  if (j.contains("reward_bonus")) c.reward_bonus = parse_reward_bonus(j["reward_bonus"].get<std::string>());
  c.workers = j.value("workers", c.workers);
  c.compute_diameter = j.value("compute_diameter", c.compute_diameter);
  c.evi_max_iter = j.value("evi_max_iter", c.evi_max_iter);
}

/// 1, then t <- max(t + 1, ceil(t * ratio)) while below T, then T.
inline std::vector<Index> checkpoint_schedule(Index horizon, double ratio) {
  if (horizon < 1 || !(ratio > 1.0)) throw precondition_error("checkpoint_schedule: need T >= 1 and ratio > 1");
  std::vector<Index> out{1};
  while (out.back() < horizon) {
    const auto grown = static_cast<Index>(std::ceil(static_cast<double>(out.back()) * ratio));
    out.push_back(std::min(horizon, std::max(out.back() + 1, grown)));
  }
  return out;
}

struct ReplicationSeeds {
  std::uint64_t env;
  std::uint64_t agent;
};

inline ReplicationSeeds replication_seeds(std::uint64_t base_seed, const std::string& env, Algorithm algorithm,
                                          std::size_t replication) {
  return {base_seed ^ stable_hash(env, replication), base_seed ^ stable_hash(to_string(algorithm), replication)};
}

struct TracePoint {
  Index t = 0;
  double cum_reward = 0.0;
  double regret = 0.0;
};

struct RegretTrace {
  std::string algorithm;
  std::string env;
  std::uint64_t seed = 0;  // environment seed
  std::size_t replication = 0;
  std::vector<TracePoint> points;
  std::size_t episodes = 0;  // K(T)
  double planning_seconds = 0.0;
  double total_seconds = 0.0;
  bool failed = false;
  std::string error;
};

/// One replication. Planner non-convergence is recorded as a failed trace
/// holding the checkpoints reached so far; other errors propagate.
inline RegretTrace run_replication(const EnvSpec& env, Algorithm algorithm, const ExperimentConfig& config,
                                   std::size_t replication, double gain, const std::vector<Index>& checkpoints) {
  const auto seeds = replication_seeds(config.base_seed, env.name, algorithm, replication);
  RegretTrace trace;
  trace.algorithm = to_string(algorithm);
  trace.env = env.name;
  trace.seed = seeds.env;
  trace.replication = replication;
  const auto began = std::chrono::steady_clock::now();
  SplitMix64 rng(seeds.env);
  std::optional<Agent> agent;
  try {
    agent.emplace(env.model.structure(), AgentConfig{config.delta, algorithm, config.reward_bonus, seeds.agent, config.evi_max_iter});
    StepResult step;
    Index state = env.initial_state;
    double cum = 0.0;
    std::size_t next_checkpoint = 0;
    for (Index t = 1; t <= config.horizon; ++t) {
      const Index action = agent->act(state);
      sample_step(env.model, state, action, rng, step);
      cum += step.collapsed_reward;
      if (t == checkpoints[next_checkpoint]) {
        trace.points.push_back({t, cum, static_cast<double>(t) * gain - cum});
        ++next_checkpoint;
      }
      agent->observe(state, action, step.rewards, step.next_state);
      state = step.next_state;
    }
  } catch (const convergence_error& e) {
    trace.failed = true;
    trace.error = e.what();
  }
  if (agent) {
    trace.episodes = agent->episodes();
    trace.planning_seconds = agent->planning_seconds();
  }
  trace.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - began).count();
  return trace;
}

struct ExperimentResult {
  ExperimentConfig config;
  double gain = 0.0;
  std::optional<double> diameter;
  std::optional<double> c_m;
  std::vector<RegretTrace> traces;  // algorithm-major, then replication
};

/// Span tolerance of the g* used for regret: t g* stays accurate to ~1e-4 at T = 1e7.
inline constexpr double kRegretGainTolerance = 1e-11;

/// Runs every (algorithm, replication) job on `config.workers` threads.
/// Each job owns its agent and rng, so results do not depend on the worker count.
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const EnvSpec env = make_environment(config.env, config.env_params);
  ExperimentResult result;
  result.config = config;
  result.gain = average_reward_vi(flatten(env.model), kRegretGainTolerance).gain;
  if (config.compute_diameter) {
    const auto report = diameter_report(env.model, config.workers);
    result.diameter = report.diameter;
    result.c_m = theorem1_constant(env.model, report);
  }
  const auto checkpoints = checkpoint_schedule(config.horizon, config.checkpoint_ratio);
  const std::size_t jobs = config.algorithms.size() * config.replications;
  result.traces.resize(jobs);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> abort{false};
  auto work = [&] {
    for (std::size_t k; !abort && (k = next++) < jobs;) {
      try {
        result.traces[k] = run_replication(env, config.algorithms[k / config.replications], config,
                                           k % config.replications, result.gain, checkpoints);
      } catch (...) {
        if (!abort.exchange(true)) failure = std::current_exception();
      }
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(config.workers, static_cast<unsigned>(jobs)));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return result;
}

// ---------------------------------------------------------------------------
// Aggregation

struct AggregatePoint {
  Index t = 0;
  double mean = 0.0;
  double q10 = 0.0;
  double q90 = 0.0;
};

/// Nearest-rank empirical quantile of an unsorted sample.
inline double nearest_rank_quantile(std::vector<double> v, double q) {
  if (v.empty()) throw precondition_error("quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

/// Per-algorithm mean and 10/90% regret quantiles at every checkpoint.
/// Failed traces are skipped; all remaining traces of an algorithm must
/// share one checkpoint grid.
inline std::map<std::string, std::vector<AggregatePoint>> aggregate(const std::vector<RegretTrace>& traces) {
  std::map<std::string, std::vector<const RegretTrace*>> groups;
  for (const auto& tr : traces) {
    if (!tr.failed) groups[tr.algorithm].push_back(&tr);
  }
  std::map<std::string, std::vector<AggregatePoint>> out;
  for (const auto& [algo, members] : groups) {
    const auto& grid = members.front()->points;
    for (const auto* tr : members) {
      bool same = tr->points.size() == grid.size();
      for (std::size_t k = 0; same && k < grid.size(); ++k) same = tr->points[k].t == grid[k].t;
      if (!same) throw precondition_error("aggregate: mismatched checkpoint grids for " + algo);
    }
    auto& series = out[algo];
    for (std::size_t k = 0; k < grid.size(); ++k) {
      std::vector<double> v;
      double sum = 0.0;
      for (const auto* tr : members) {
        v.push_back(tr->points[k].regret);
        sum += tr->points[k].regret;
      }
      series.push_back({grid[k].t, sum / static_cast<double>(v.size()), nearest_rank_quantile(v, 0.1),
                        nearest_rank_quantile(v, 0.9)});
    }
  }
  return out;
}

/// Two-sided exact sign-test p-value for `wins` successes out of
/// `wins + losses` (ties dropped by the caller).
inline double sign_test_p(std::size_t wins, std::size_t losses) {
  const std::size_t n = wins + losses;
  if (n == 0) return 1.0;
  const std::size_t k = std::min(wins, losses);
  double tail = 0.0;
  for (std::size_t j = 0; j <= k; ++j) {
    tail += std::exp(std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0) -
                     static_cast<double>(n) * std::log(2.0));
  }
  return std::min(1.0, 2.0 * tail);
}

// ---------------------------------------------------------------------------
// Output

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// `algo,env,seed,t,cum_reward,regret`, one row per checkpoint, LF endings.
inline void write_csv(std::ostream& out, const std::vector<RegretTrace>& traces) {
  out << "algo,env,seed,t,cum_reward,regret\n";
  for (const auto& tr : traces) {
    for (const auto& p : tr.points) {
      out << tr.algorithm << ',' << tr.env << ',' << tr.seed << ',' << p.t << ',' << format_double(p.cum_reward)
          << ',' << format_double(p.regret) << '\n';
    }
  }
}

inline nlohmann::json sidecar(const ExperimentResult& result) {
  nlohmann::json j;
  j["config"] = result.config;
  j["gain"] = result.gain;
  j["diameter"] = result.diameter ? nlohmann::json(*result.diameter) : nlohmann::json();
  j["c_m"] = result.c_m ? nlohmann::json(*result.c_m) : nlohmann::json();
  auto& runs = j["runs"] = nlohmann::json::array();
  for (const auto& tr : result.traces) {
    nlohmann::json r{{"algo", tr.algorithm},
                     {"env", tr.env},
                     {"seed", tr.seed},
                     {"replication", tr.replication},
                     {"episodes", tr.episodes},
                     {"failed", tr.failed}};
    if (tr.failed) r["error"] = tr.error;
    runs.push_back(std::move(r));
  }
  return j;
}

}  // namespace fmdp
