#pragma once

// Benchmark factored MDPs: product RiverSwim, Coffee with reset, SysAdmin.
// Every numeric parameter is a named field with a documented default.

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fmdp/core.hpp"
#include "fmdp/errors.hpp"

namespace fmdp {

struct EnvSpec {
  std::string name;
  nlohmann::json params;
  FactoredMdp model;
  Index initial_state = 0;
};

/// Builds transition factor i by evaluating `row_fn(x)` for every x in
/// X[Z_i^p]; `x` holds the scope components in scope order.
inline TransitionFactor tabulate_transition(const FactoredStructure& g, std::size_t i,
                                            const std::function<std::vector<double>(const std::vector<Value>&)>& row_fn) {
  const auto codec = g.scope_codec(g.transition_scope(i));
  TransitionFactor f;
  f.factor = i;
  f.rows = codec.size();
  f.width = g.factor_size(i);
  f.table.reserve(f.rows * f.width);
  for (Index x = 0; x < f.rows; ++x) {
    const auto row = row_fn(codec.decode(x));
    if (row.size() != f.width) throw structural_error("tabulate_transition: row has wrong width");
    f.table.insert(f.table.end(), row.begin(), row.end());
  }
  return f;
}

inline RewardFactor tabulate_reward(const FactoredStructure& g, std::size_t i, RewardKind kind,
                                    const std::function<double(const std::vector<Value>&)>& mean_fn) {
  const auto codec = g.scope_codec(g.reward_scope(i));
  RewardFactor r;
  r.factor = i;
  for (Index x = 0; x < codec.size(); ++x) r.means.push_back(mean_fn(codec.decode(x)));
  r.kinds.assign(r.means.size(), kind);
  return r;
}

// ---------------------------------------------------------------------------
// RiverSwim

struct RiverSwimParams {
  std::size_t length = 6;
  double right_forward = 0.35;  // interior states under Right
  double right_stay = 0.6;
  double right_back = 0.05;
  double start_forward = 0.6;   // leftmost state under Right, stays otherwise
  double end_back = 0.4;        // rightmost state under Right, stays otherwise
  double small_reward = 0.005;  // Bernoulli mean at (leftmost, Left)
  double large_reward = 1.0;    // Bernoulli mean at (rightmost, Right)
  double coupling_reward = 1.0; // product only: both chains rightmost
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RiverSwimParams, length, right_forward, right_stay, right_back,
                                                start_forward, end_back, small_reward, large_reward,
                                                coupling_reward)

enum RiverAction : Value { kLeft = 0, kRight = 1 };

namespace detail {

inline std::vector<double> riverswim_row(const RiverSwimParams& p, Value state, Value action) {
  const std::size_t L = p.length;
  std::vector<double> row(L, 0.0);
  if (action == kLeft) {
    row[state == 0 ? 0 : state - 1] = 1.0;
    return row;
  }
  if (state == 0) {
    row[1] = p.start_forward;
    row[0] = 1.0 - p.start_forward;
  } else if (state + 1 == L) {
    row[state - 1] = p.end_back;
    row[state] = 1.0 - p.end_back;
  } else {
    row[state + 1] = p.right_forward;
    row[state] = p.right_stay;
    row[state - 1] = p.right_back;
  }
  return row;
}

inline double riverswim_reward(const RiverSwimParams& p, Value state, Value action) {
  if (state == 0 && action == kLeft) return p.small_reward;
  if (state + 1 == p.length && action == kRight) return p.large_reward;
  return 0.0;
}

inline void check_riverswim(const RiverSwimParams& p) {
  if (p.length < 2) throw precondition_error("riverswim: length must be >= 2");
  if (std::abs(p.right_forward + p.right_stay + p.right_back - 1.0) > 1e-12) {
    throw precondition_error("riverswim: interior Right probabilities must sum to 1");
  }
}

}  // namespace detail

/// One RiverSwim chain (m = 1, actions {Left, Right}).
inline EnvSpec make_riverswim(const RiverSwimParams& p = {}) {
  detail::check_riverswim(p);
  FactoredStructure g({p.length}, {2}, {{0, 1}}, {{0, 1}});
  auto t = tabulate_transition(g, 0, [&](const std::vector<Value>& x) { return detail::riverswim_row(p, x[0], x[1]); });
  auto r = tabulate_reward(g, 0, RewardKind::bernoulli,
                           [&](const std::vector<Value>& x) { return detail::riverswim_reward(p, x[0], x[1]); });
  return {"riverswim", p, FactoredMdp(g, {t}, {r}), 0};
}

/// Two RiverSwim chains side by side. Factors: chain states 0, 1 and chain
/// actions 2, 3. Reward factors: one per chain plus a coupling factor over
/// both chain states paying `coupling_reward` when both are rightmost.
inline EnvSpec make_riverswim_product(const RiverSwimParams& p = {}) {
  detail::check_riverswim(p);
  FactoredStructure g({p.length, p.length}, {2, 2}, {{0, 2}, {1, 3}}, {{0, 2}, {1, 3}, {0, 1}});
  std::vector<TransitionFactor> ts;
  std::vector<RewardFactor> rs;
  for (std::size_t c = 0; c < 2; ++c) {
    ts.push_back(tabulate_transition(g, c, [&](const std::vector<Value>& x) { return detail::riverswim_row(p, x[0], x[1]); }));
    rs.push_back(tabulate_reward(g, c, RewardKind::bernoulli,
                                 [&](const std::vector<Value>& x) { return detail::riverswim_reward(p, x[0], x[1]); }));
  }
  const Value last = static_cast<Value>(p.length - 1);
  rs.push_back(tabulate_reward(g, 2, RewardKind::constant, [&](const std::vector<Value>& x) {
    return x[0] == last && x[1] == last ? p.coupling_reward : 0.0;
  }));
  return {"riverswim-product", p, FactoredMdp(g, std::move(ts), std::move(rs)), 0};
}

// ---------------------------------------------------------------------------
// Coffee

struct CoffeeParams {
  double success = 0.9;        // BuyCoffee, DeliverCoffee, GetUmbrella
  double rain_flip = 0.1;      // per-step rain toggle
  double rain_reset = 0.3;     // P(raining) after a reset
  double slip = 0.05;          // location toggles under a non-Go action
  double coffee_reward = 0.9;  // while the user has coffee
  double dry_reward = 0.1;     // while the robot is dry
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(CoffeeParams, success, rain_flip, rain_reset, slip, coffee_reward,
                                                dry_reward)

/// Coffee state factors, in factor order.
enum CoffeeFactor : std::size_t { kUserCoffee = 0, kRobotCoffee, kWet, kUmbrella, kRaining, kLocation };
/// Coffee actions (single action factor, index 6).
enum CoffeeAction : Value { kGo = 0, kBuyCoffee, kDeliverCoffee, kGetUmbrella };
inline constexpr Value kOffice = 0;
inline constexpr Value kShop = 1;

/// Coffee robot with reset-on-success: once the user has coffee every action
/// returns the robot to the initial configuration (office, dry, no umbrella,
/// no coffee) and rain is redrawn. Each factor's scope therefore includes the
/// user-has-coffee factor. Factor draws are independent given the scope, so
/// e.g. a delivery can succeed while the handover draw leaves the robot
/// holding coffee.
inline EnvSpec make_coffee(const CoffeeParams& p = {}) {
  const std::size_t act = 6;
  FactoredStructure g({2, 2, 2, 2, 2, 2}, {4},
                      {
                          {kUserCoffee, kRobotCoffee, kLocation, act},   // user coffee
                          {kUserCoffee, kRobotCoffee, kLocation, act},   // robot coffee
                          {kUserCoffee, kWet, kUmbrella, kRaining, act}, // wet
                          {kUserCoffee, kUmbrella, kLocation, act},      // umbrella
                          {kUserCoffee, kRaining},                       // raining
                          {kUserCoffee, kLocation, act},                 // location
                      },
                      {{kUserCoffee}, {kWet}});
  auto bern = [](double p1) { return std::vector<double>{1.0 - p1, p1}; };

  std::vector<TransitionFactor> ts;
  ts.push_back(tabulate_transition(g, kUserCoffee, [&](const std::vector<Value>& x) {
    const Value uhc = x[0], rhc = x[1], loc = x[2], a = x[3];
    if (uhc) return bern(0.0);
    return bern(a == kDeliverCoffee && loc == kOffice && rhc ? p.success : 0.0);
  }));
  ts.push_back(tabulate_transition(g, kRobotCoffee, [&](const std::vector<Value>& x) {
    const Value uhc = x[0], rhc = x[1], loc = x[2], a = x[3];
    if (uhc) return bern(0.0);
    if (!rhc) return bern(a == kBuyCoffee && loc == kShop ? p.success : 0.0);
    return bern(a == kDeliverCoffee && loc == kOffice ? 1.0 - p.success : 1.0);
  }));
  ts.push_back(tabulate_transition(g, kWet, [&](const std::vector<Value>& x) {
    const Value uhc = x[0], wet = x[1], umb = x[2], rain = x[3], a = x[4];
    if (uhc) return bern(0.0);
    if (wet) return bern(1.0);
    return bern(a == kGo && rain && !umb ? 1.0 : 0.0);
  }));
  ts.push_back(tabulate_transition(g, kUmbrella, [&](const std::vector<Value>& x) {
    const Value uhc = x[0], umb = x[1], loc = x[2], a = x[3];
    if (uhc) return bern(0.0);
    if (umb) return bern(1.0);
    return bern(a == kGetUmbrella && loc == kOffice ? p.success : 0.0);
  }));
  ts.push_back(tabulate_transition(g, kRaining, [&](const std::vector<Value>& x) {
    const Value uhc = x[0], rain = x[1];
    if (uhc) return bern(p.rain_reset);
    return bern(rain ? 1.0 - p.rain_flip : p.rain_flip);
  }));
  ts.push_back(tabulate_transition(g, kLocation, [&](const std::vector<Value>& x) {
    const Value uhc = x[0], loc = x[1], a = x[2];
    if (uhc) return bern(0.0);
    const double toggle = a == kGo ? 1.0 : p.slip;
    return bern(loc == kShop ? 1.0 - toggle : toggle);
  }));

  std::vector<RewardFactor> rs;
  rs.push_back(tabulate_reward(g, 0, RewardKind::constant,
                               [&](const std::vector<Value>& x) { return x[0] ? p.coffee_reward : 0.0; }));
  rs.push_back(tabulate_reward(g, 1, RewardKind::constant,
                               [&](const std::vector<Value>& x) { return x[0] ? 0.0 : p.dry_reward; }));
  return {"coffee", p, FactoredMdp(g, std::move(ts), std::move(rs)), 0};
}

// ---------------------------------------------------------------------------
// SysAdmin

enum class SysAdminTopology { circle, three_legged };

struct SysAdminParams {
  SysAdminTopology topology = SysAdminTopology::circle;
  std::size_t machines = 7;
  double reboot_success = 0.95;
  double stay_working = 0.95;     // working machine with no failed neighbour
  double neighbor_penalty = 0.9;  // multiplies stay_working per failed neighbour
};

NLOHMANN_JSON_SERIALIZE_ENUM(SysAdminTopology, {{SysAdminTopology::circle, "circle"},
                                                {SysAdminTopology::three_legged, "three-legged"}})
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SysAdminParams, topology, machines, reboot_success, stay_working,
                                                neighbor_penalty)

/// Neighbour of machine i, or -1 when it has none. Circle: predecessor on the
/// ring. Three-legged: parent in a tree whose root 0 has three legs filled
/// round-robin (machine i >= 1 sits on leg (i-1) mod 3).
inline long sysadmin_neighbor(SysAdminTopology topology, std::size_t machines, std::size_t i) {
  if (topology == SysAdminTopology::circle) return static_cast<long>((i + machines - 1) % machines);
  if (i == 0) return -1;
  return i <= 3 ? 0 : static_cast<long>(i - 3);
}

/// N servers (1 = working) and one action factor: reboot machine i (i < N)
/// or idle (N).
inline EnvSpec make_sysadmin(const SysAdminParams& p = {}) {
  const std::size_t N = p.machines;
  if (N < 2) throw precondition_error("sysadmin: need at least 2 machines");
  const std::size_t act = N;
  std::vector<Scope> tscopes, rscopes;
  for (std::size_t i = 0; i < N; ++i) {
    Scope z{i, act};
    const long nb = sysadmin_neighbor(p.topology, N, i);
    if (nb >= 0) z.push_back(static_cast<std::size_t>(nb));
    std::sort(z.begin(), z.end());
    tscopes.push_back(z);
    rscopes.push_back({i});
  }
  FactoredStructure g(std::vector<Index>(N, 2), {N + 1}, tscopes, rscopes);
  std::vector<TransitionFactor> ts;
  std::vector<RewardFactor> rs;
  for (std::size_t i = 0; i < N; ++i) {
    const auto& z = g.transition_scope(i);
    ts.push_back(tabulate_transition(g, i, [&](const std::vector<Value>& x) {
      Value own = 0, a = 0;
      long failed_neighbors = 0;
      for (std::size_t k = 0; k < z.size(); ++k) {
        if (z[k] == i) {
          own = x[k];
        } else if (z[k] == act) {
          a = x[k];
        } else if (x[k] == 0) {
          ++failed_neighbors;
        }
      }
      double work;
      if (a == i) {
        work = p.reboot_success;
      } else if (own) {
        work = p.stay_working * std::pow(p.neighbor_penalty, static_cast<double>(failed_neighbors));
      } else {
        work = 0.0;
      }
      return std::vector<double>{1.0 - work, work};
    }));
    rs.push_back(tabulate_reward(g, i, RewardKind::constant, [](const std::vector<Value>& x) { return x[0] ? 1.0 : 0.0; }));
  }
  const std::string name = p.topology == SysAdminTopology::circle ? "sysadmin-circle" : "sysadmin-3leg";
  return {name, p, FactoredMdp(g, std::move(ts), std::move(rs)), g.num_states() - 1};
}

// ---------------------------------------------------------------------------
// Registry

inline const std::vector<std::string>& environment_names() {
  static const std::vector<std::string> names{"riverswim-product", "coffee", "sysadmin-circle", "sysadmin-3leg"};
  return names;
}

/// Builds a named environment, overriding default parameters with the
/// fields present in `overrides`.
inline EnvSpec make_environment(const std::string& name, const nlohmann::json& overrides = nlohmann::json::object()) {
  auto merged = [&](auto defaults) {
    nlohmann::json j = defaults;
    if (!overrides.is_null()) j.merge_patch(overrides);
    return j.get<decltype(defaults)>();
  };
  if (name == "riverswim-product") return make_riverswim_product(merged(RiverSwimParams{}));
  if (name == "riverswim") return make_riverswim(merged(RiverSwimParams{}));
  if (name == "coffee") return make_coffee(merged(CoffeeParams{}));
  if (name == "sysadmin-circle" || name == "sysadmin-3leg") {
    SysAdminParams d;
    d.topology = name == "sysadmin-circle" ? SysAdminTopology::circle : SysAdminTopology::three_legged;
    auto p = merged(d);
    p.topology = d.topology;
    return make_sysadmin(p);
  }
  throw precondition_error("unknown environment '" + name + "'");
}

}  // namespace fmdp
