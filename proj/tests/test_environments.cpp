#include <gtest/gtest.h>

#include <cmath>

#include "fmdp/fmdp.hpp"

using namespace fmdp;

// Gains and diameters pinned from scripts/oracles/model_oracle.py, an
// independent numpy implementation run on the dumped model files.

TEST(Environments, RegistryListsTheFourBenchmarks) {
  EXPECT_EQ(environment_names(),
            (std::vector<std::string>{"riverswim-product", "coffee", "sysadmin-circle", "sysadmin-3leg"}));
  EXPECT_THROW(make_environment("gridworld"), precondition_error);
}

TEST(RiverSwimProduct, Sizes) {
  const auto env = make_environment("riverswim-product");
  const auto& g = env.model.structure();
  EXPECT_EQ(g.num_states(), 36u);
  EXPECT_EQ(g.num_actions(), 4u);
  EXPECT_EQ(g.num_pairs(), 144u);
  EXPECT_EQ(g.num_reward_factors(), 3u);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(g.transition_rows(i), 12u);
  EXPECT_EQ(env.initial_state, 0u);
}

TEST(RiverSwimProduct, ChainDynamics) {
  const auto env = make_environment("riverswim-product");
  const auto& f = env.model.transition(0);
  // row index = state + 6 * action
  EXPECT_EQ(f(3 + 0, 2), 1.0);                                  // Left moves left
  EXPECT_EQ(f(0 + 0, 0), 1.0);                                  // Left at the bank stays
  EXPECT_DOUBLE_EQ(f(3 + 6, 4), 0.35);
  EXPECT_DOUBLE_EQ(f(3 + 6, 3), 0.6);
  EXPECT_DOUBLE_EQ(f(3 + 6, 2), 0.05);
  EXPECT_DOUBLE_EQ(f(0 + 6, 1), 0.6);
  EXPECT_DOUBLE_EQ(f(5 + 6, 5), 0.6);
  EXPECT_DOUBLE_EQ(f(5 + 6, 4), 0.4);
  const auto& coupling = env.model.reward(2);
  EXPECT_EQ(coupling.means[35], 1.0);
  EXPECT_EQ(coupling.means[34], 0.0);
}

TEST(RiverSwimProduct, GainPinned) {
  const auto env = make_environment("riverswim-product");
  EXPECT_NEAR(average_reward_vi(flatten(env.model)).gain, 1.0409620583546864, 1e-8);
}

TEST(RiverSwimProduct, OverridesApply) {
  const auto env = make_environment("riverswim-product", {{"coupling_reward", 0.5}, {"length", 4}});
  EXPECT_EQ(env.model.num_states(), 16u);
  EXPECT_EQ(env.model.reward(2).means.back(), 0.5);
  EXPECT_THROW(make_environment("riverswim-product", {{"right_stay", 0.9}}), precondition_error);
}

TEST(Coffee, Sizes) {
  const auto env = make_environment("coffee");
  const auto& g = env.model.structure();
  EXPECT_EQ(g.num_states(), 64u);
  EXPECT_EQ(g.num_actions(), 4u);
  EXPECT_EQ(g.num_pairs(), 256u);
  EXPECT_EQ(g.num_reward_factors(), 2u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(g.transition_scope(i).front(), static_cast<std::size_t>(kUserCoffee)) << "factor " << i;
  }
}

TEST(Coffee, UserCoffeeResetsFromAnyState) {
  const auto env = make_environment("coffee");
  const auto& g = env.model.structure();
  for (Index s = 0; s < g.num_states(); ++s) {
    if (g.state_codec().decode(s)[kUserCoffee] != 1) continue;
    for (Index a = 0; a < g.num_actions(); ++a) {
      const auto q = joint_transition(env.model, g.pair_index(s, a));
      for (Index sp = 0; sp < g.num_states(); ++sp) {
        const auto y = g.state_codec().decode(sp);
        const bool initial_family = !y[kUserCoffee] && !y[kRobotCoffee] && !y[kWet] && !y[kUmbrella] &&
                                    y[kLocation] == kOffice;
        if (!initial_family) {
          EXPECT_EQ(q[sp], 0.0);
        }
      }
      // rain redrawn
      const Index rainy = Index{1} << kRaining;
      EXPECT_NEAR(q[rainy], 0.3, 1e-15);
      EXPECT_NEAR(q[0], 0.7, 1e-15);
    }
  }
}

TEST(Coffee, ConstantRewards) {
  const auto env = make_environment("coffee");
  EXPECT_EQ(env.model.reward(0).means, (std::vector<double>{0.0, 0.9}));
  EXPECT_EQ(env.model.reward(1).means, (std::vector<double>{0.1, 0.0}));
  for (const auto& r : env.model.rewards()) {
    for (auto k : r.kinds) EXPECT_EQ(k, RewardKind::constant);
  }
}

TEST(Coffee, GainAndDiameterPinned) {
  const auto env = make_environment("coffee");
  const auto flat = flatten(env.model);
  EXPECT_NEAR(average_reward_vi(flat).gain, 0.24951800407953031, 1e-8);
  EXPECT_NEAR(diameter(flat), 4433.5473489015203, 1e-6);
}

TEST(SysAdmin, SizesAndScopes) {
  const auto circle = make_environment("sysadmin-circle");
  const auto& g = circle.model.structure();
  EXPECT_EQ(g.num_states(), 128u);
  EXPECT_EQ(g.num_actions(), 8u);
  EXPECT_EQ(g.num_pairs(), 1024u);
  for (std::size_t i = 0; i < 7; ++i) EXPECT_EQ(g.transition_rows(i), 32u);
  EXPECT_EQ(circle.initial_state, 127u);

  const auto tree = make_environment("sysadmin-3leg");
  EXPECT_EQ(tree.model.structure().transition_rows(0), 16u);
  for (std::size_t i = 1; i < 7; ++i) EXPECT_EQ(tree.model.structure().transition_rows(i), 32u);
}

TEST(SysAdmin, Neighbourhoods) {
  EXPECT_EQ(sysadmin_neighbor(SysAdminTopology::circle, 7, 0), 6);
  EXPECT_EQ(sysadmin_neighbor(SysAdminTopology::circle, 7, 3), 2);
  EXPECT_EQ(sysadmin_neighbor(SysAdminTopology::three_legged, 7, 0), -1);
  for (std::size_t i = 1; i <= 3; ++i) EXPECT_EQ(sysadmin_neighbor(SysAdminTopology::three_legged, 7, i), 0);
  EXPECT_EQ(sysadmin_neighbor(SysAdminTopology::three_legged, 7, 5), 2);
}

TEST(SysAdmin, Dynamics) {
  const auto env = make_environment("sysadmin-circle");
  const auto& g = env.model.structure();
  const Index idle = 7;
  auto prob_working = [&](std::vector<Value> state, Value action, std::size_t i) {
    std::vector<Value> x = state;
    x.push_back(action);
    return env.model.transition(i)(project(g, x, g.transition_scope(i)).index, 1);
  };
  std::vector<Value> all_up(7, 1), all_down(7, 0);
  EXPECT_NEAR(prob_working(all_up, idle, 3), 0.95, 1e-15);
  auto one_down = all_up;
  one_down[2] = 0;  // predecessor of machine 3
  EXPECT_NEAR(prob_working(one_down, idle, 3), 0.95 * 0.9, 1e-15);
  EXPECT_EQ(prob_working(all_down, idle, 3), 0.0);
  EXPECT_NEAR(prob_working(all_down, 3, 3), 0.95, 1e-15);
}

TEST(SysAdmin, AllFailedIsAbsorbingUnderIdleButRebootRecovers) {
  const auto env = make_environment("sysadmin-circle");
  const auto flat = flatten(env.model);
  EXPECT_EQ(flat.p(0, 7)[0], 1.0);
  const auto h = min_hitting_times(flat, 127);
  EXPECT_TRUE(std::isfinite(h[0]));
  EXPECT_GT(h[0], 7.0);
}

TEST(SysAdmin, GainsPinned) {
  EXPECT_NEAR(average_reward_vi(flatten(make_environment("sysadmin-circle").model)).gain, 6.5032477265644433, 1e-7);
  EXPECT_NEAR(average_reward_vi(flatten(make_environment("sysadmin-3leg").model)).gain, 6.526587844640753, 1e-7);
}

TEST(Environments, AllCommunicatingWithFactoredDiameterBelowDiameter) {
  for (const auto& name : environment_names()) {
    const auto env = make_environment(name);
    const auto report = diameter_report(env.model);
    EXPECT_TRUE(std::isfinite(report.diameter)) << name;
    for (const auto& di : report.factored) {
      for (double d : di) EXPECT_LE(d, report.diameter) << name;
    }
  }
}
