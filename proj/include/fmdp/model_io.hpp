#pragma once

// JSON model files: a FactoredStructure plus its transition and reward tables.

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fmdp/core.hpp"
#include "fmdp/errors.hpp"

namespace fmdp {

inline nlohmann::json model_to_json(const FactoredMdp& model) {
  const auto& g = model.structure();
  nlohmann::json j;
  j["state_factor_sizes"] = g.state_factor_sizes();
  j["action_factor_sizes"] = g.action_factor_sizes();
  j["transition_scopes"] = g.transition_scopes();
  j["reward_scopes"] = g.reward_scopes();
  auto& tables = j["transition_tables"] = nlohmann::json::array();
  for (const auto& f : model.transitions()) {
    auto rows = nlohmann::json::array();
    for (Index x = 0; x < f.rows; ++x) {
      const auto r = f.row(x);
      rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    tables.push_back(std::move(rows));
  }
  auto& means = j["reward_means"] = nlohmann::json::array();
  auto& kinds = j["reward_kind"] = nlohmann::json::array();
  for (const auto& r : model.rewards()) {
    means.push_back(r.means);
    auto k = nlohmann::json::array();
    for (auto kind : r.kinds) k.push_back(kind == RewardKind::constant ? "constant" : "bernoulli");
    kinds.push_back(std::move(k));
  }
  return j;
}

namespace detail {

inline RewardKind parse_reward_kind(const nlohmann::json& v) {
  const auto s = v.get<std::string>();
  if (s == "bernoulli") return RewardKind::bernoulli;
  if (s == "constant") return RewardKind::constant;
  throw structural_error("model file: unknown reward kind '" + s + "'");
}

}  // namespace detail

/// Inverse of model_to_json. `reward_kind` may give one kind per factor or
/// one per row; when absent every reward is Bernoulli.
inline FactoredMdp model_from_json(const nlohmann::json& j) {
  try {
    FactoredStructure g(j.at("state_factor_sizes").get<std::vector<Index>>(),
                        j.at("action_factor_sizes").get<std::vector<Index>>(),
                        j.at("transition_scopes").get<std::vector<Scope>>(),
                        j.at("reward_scopes").get<std::vector<Scope>>());
    const auto& tables = j.at("transition_tables");
    if (tables.size() != g.num_state_factors()) throw structural_error("model file: one transition table per state factor");
    std::vector<TransitionFactor> ts;
    for (std::size_t i = 0; i < tables.size(); ++i) {
      TransitionFactor f;
      f.rows = tables[i].size();
      f.width = g.factor_size(i);
      for (const auto& row : tables[i]) {
        const auto r = row.get<std::vector<double>>();
        if (r.size() != f.width) throw structural_error("model file: transition table " + std::to_string(i) + " row width");
        f.table.insert(f.table.end(), r.begin(), r.end());
      }
      ts.push_back(std::move(f));
    }
    const auto& means = j.at("reward_means");
    if (means.size() != g.num_reward_factors()) throw structural_error("model file: one reward table per reward factor");
    std::vector<RewardFactor> rs;
    for (std::size_t i = 0; i < means.size(); ++i) {
      RewardFactor r;
      r.means = means[i].get<std::vector<double>>();
      if (j.contains("reward_kind")) {
        const auto& k = j["reward_kind"].at(i);
        if (k.is_array()) {
          for (const auto& v : k) r.kinds.push_back(detail::parse_reward_kind(v));
        } else {
          r.kinds.assign(r.means.size(), detail::parse_reward_kind(k));
        }
      }
      rs.push_back(std::move(r));
    }
    return FactoredMdp(std::move(g), std::move(ts), std::move(rs));
  } catch (const nlohmann::json::exception& e) {
    throw structural_error(std::string("model file: ") + e.what());
  }
}

inline FactoredMdp load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw precondition_error("cannot open model file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw structural_error("model file '" + path + "': " + e.what());
  }
  return model_from_json(j);
}

inline void save_model(const FactoredMdp& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw precondition_error("cannot write model file '" + path + "'");
  out << model_to_json(model).dump(2) << '\n';
}

}  // namespace fmdp
