// Command-line front end: run experiments, plan on a model file, run the
// lemma suites, list or dump environments.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fmdp/fmdp.hpp"

namespace {

using nlohmann::json;

int run_command(const std::string& config_path, const std::string& out_dir, unsigned workers) {
  std::ifstream in(config_path);
  if (!in) throw fmdp::precondition_error("cannot open config '" + config_path + "'");
  auto config = json::parse(in).get<fmdp::ExperimentConfig>();
  if (workers > 0) config.workers = workers;
  const auto result = fmdp::run_experiment(config);

  std::filesystem::create_directories(out_dir);
  const auto stem = std::filesystem::path(config_path).stem().string();
  const auto csv_path = std::filesystem::path(out_dir) / (stem + ".csv");
  const auto json_path = std::filesystem::path(out_dir) / (stem + ".json");
  {
    std::ofstream csv(csv_path, std::ios::binary);
    fmdp::write_csv(csv, result.traces);
  }
  {
    std::ofstream side(json_path, std::ios::binary);
    side << fmdp::sidecar(result).dump(2) << '\n';
  }
  std::size_t failures = 0;
  for (const auto& tr : result.traces) failures += tr.failed ? 1 : 0;
  for (const auto& [algo, series] : fmdp::aggregate(result.traces)) {
    std::cout << algo << ": mean regret at T = " << series.back().mean << " (q10 " << series.back().q10 << ", q90 "
              << series.back().q90 << ")\n";
  }
  std::cout << "wrote " << csv_path.string() << " and " << json_path.string();
  if (failures) std::cout << " (" << failures << " failed replications)";
  std::cout << '\n';
  return 0;
}

json support_stats(const fmdp::DiameterReport& report) {
  json out = json::array();
  for (const auto& k : report.support_sizes) {
    const auto [lo, hi] = std::minmax_element(k.begin(), k.end());
    const double mean = std::accumulate(k.begin(), k.end(), 0.0) / static_cast<double>(k.size());
    out.push_back({{"min", *lo}, {"max", *hi}, {"mean", mean}});
  }
  return out;
}

int plan_command(const std::string& model_path, bool factored) {
  const auto model = fmdp::load_model(model_path);
  const auto gain = fmdp::average_reward_vi(fmdp::flatten(model));
  const auto report = fmdp::diameter_report(model);
  json out{{"gain", gain.gain}, {"diameter", report.diameter}, {"support_sizes", support_stats(report)}};
  if (factored) {
    out["factored_diameter"] = report.factored;
    out["c_m"] = fmdp::theorem1_constant(model, report);
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

int verify_command(std::uint64_t seed) {
  bool ok = true;
  for (const auto& r : fmdp::run_lemma_suites(seed)) {
    std::cout << (r.passed() ? "PASS " : "FAIL ") << r.name << ": " << r.cases << " cases, " << r.counterexamples
              << " counterexamples";
    if (!r.summary.empty()) std::cout << "; " << r.summary;
    std::cout << '\n';
    if (!r.passed()) std::cout << "  first counterexample: " << r.first_counterexample << '\n';
    ok = ok && r.passed();
  }
  return ok ? 0 : 1;
}

int envs_command(const std::string& name, const std::string& dump) {
  if (name.empty()) {
    for (const auto& n : fmdp::environment_names()) {
      const auto env = fmdp::make_environment(n);
      std::cout << n << ": S=" << env.model.num_states() << " A=" << env.model.num_actions()
                << " state factors=" << env.model.structure().num_state_factors()
                << " reward factors=" << env.model.structure().num_reward_factors() << '\n';
    }
    return 0;
  }
  const auto env = fmdp::make_environment(name);
  if (dump.empty()) {
    std::cout << json{{"name", env.name}, {"params", env.params}, {"initial_state", env.initial_state}}.dump(2) << '\n';
  } else {
    fmdp::save_model(env.model, dump);
    std::cout << "wrote " << dump << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regret minimization in factored MDPs"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "results";
  unsigned workers = 0;
  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--workers", workers, "worker threads (overrides the config)");

  std::string model_path;
  bool factored = false;
  auto* plan = app.add_subcommand("plan", "gain, diameter and factored diameter of a model file");
  plan->add_option("--model", model_path, "model file (JSON)")->required()->check(CLI::ExistingFile);
  plan->add_flag("--factored-diameter", factored, "include D_{i,y} and c(M)");

  std::uint64_t seed = 20240101;
  auto* verify = app.add_subcommand("verify", "run the lemma property suites");
  verify->add_option("--seed", seed, "suite seed");

  std::string env_name, dump;
  auto* envs = app.add_subcommand("envs", "list environments or dump one as a model file");
  envs->add_option("--env", env_name, "environment name");
  envs->add_option("--dump-model", dump, "write the model file here")->needs(envs->get_option("--env"));

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return run_command(config_path, out_dir, workers);
    if (*plan) return plan_command(model_path, factored);
    if (*verify) return verify_command(seed);
    if (*envs) return envs_command(env_name, dump);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
