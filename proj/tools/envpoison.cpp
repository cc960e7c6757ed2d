// envpoison: command-line front end for the attack library.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "envpoison/environments.hpp"
#include "envpoison/experiment.hpp"
#include "envpoison/io.hpp"
#include "envpoison/offline.hpp"
#include "envpoison/online.hpp"
#include "envpoison/simulation.hpp"

namespace ep = envpoison;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInfeasible = 2;

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    ep::write_text_file(out_path, text);
  }
}

std::string parent_dir(const std::string& path) {
  return std::filesystem::path(path).parent_path().string();
}

ep::AttackMode mode_from_flag(const std::string& flag) {
  if (flag == "r") return ep::AttackMode::kRewardsOnly;
  if (flag == "d") return ep::AttackMode::kTransitionsOnly;
  if (flag == "j") return ep::AttackMode::kJoint;
  if (flag == "ntj") return ep::AttackMode::kNonTargetOnly;
  throw ep::Error(ep::ErrorCode::kConfiguration, "mode must be one of r, d, j, ntj");
}

ep::Environment load_env(const std::string& env_path, const std::string& policy_path) {
  const ep::Json doc = ep::read_json_file(env_path);
  ep::Environment env;
  env.mdp = ep::mdp_from_json(doc);
  const std::string source = policy_path.empty() ? env_path : policy_path;
  env.target = ep::policy_from_json(policy_path.empty() ? doc : ep::read_json_file(policy_path));
  (void)source;
  ep::require_valid(env.mdp);
  ep::require_policy(env.mdp, env.target);
  return env;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Environment-poisoning attacks on tabular reinforcement learners"};
  app.require_subcommand(1);
  int exit_code = kExitOk;

  // env
  auto* env_cmd = app.add_subcommand("env", "Print a built-in environment as JSON");
  env_cmd->require_subcommand(1);
  double chain_r0 = 0.0, chain_gamma = 1.0;
  std::size_t chain_states = 4;
  std::string env_out;
  auto* chain_cmd = env_cmd->add_subcommand("chain", "Chain environment");
  chain_cmd->add_option("--reward-s0", chain_r0, "Reward of state s0")->required();
  chain_cmd->add_option("--n-states", chain_states, "Number of states")->capture_default_str();
  chain_cmd->add_option("--gamma", chain_gamma, "Discount factor (1 = average reward)")->capture_default_str();
  chain_cmd->add_option("--out", env_out, "Write to file instead of stdout");
  double nav_r0 = 0.0, nav_gamma = 1.0;
  auto* nav_cmd = env_cmd->add_subcommand("navigation", "9-state navigation environment");
  nav_cmd->add_option("--reward-s0", nav_r0, "Reward of state s0")->capture_default_str();
  nav_cmd->add_option("--gamma", nav_gamma, "Discount factor")->capture_default_str();
  nav_cmd->add_option("--out", env_out, "Write to file instead of stdout");

  // attack
  auto* attack_cmd = app.add_subcommand("attack", "Synthesize an attack");
  attack_cmd->require_subcommand(1);
  std::string mode_flag, config_path, attack_out;
  double attack_eps = 0.1;
  auto* offline_cmd = attack_cmd->add_subcommand("offline", "Offline attack on the configured environment");
  offline_cmd->add_option("--mode", mode_flag, "r | d | j | ntj")->required();
  offline_cmd->add_option("--eps", attack_eps, "Target margin")->required();
  offline_cmd->add_option("--config", config_path, "Experiment spec (JSON)")->required()->check(CLI::ExistingFile);
  offline_cmd->add_option("--out", attack_out, "Write solution JSON to file");
  double online_gamma = 1.0, online_r0 = -2.5;
  auto* online_cmd = attack_cmd->add_subcommand("online", "Non-target-only sampling MDP for the online attack");
  online_cmd->add_option("--eps", attack_eps, "Target margin")->required();
  online_cmd->add_option("--config", config_path, "Experiment spec (JSON); default: chain")->check(CLI::ExistingFile);
  online_cmd->add_option("--gamma", online_gamma, "Chain discount when no config is given")->capture_default_str();
  online_cmd->add_option("--reward-s0", online_r0, "Chain R(s0) when no config is given")->capture_default_str();
  online_cmd->add_option("--out", attack_out, "Write solution JSON to file");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Run learners against a sampling MDP");
  std::string learner = "ucrl", sim_attack, sim_env, trace_path, sim_out;
  std::size_t horizon = 300000, runs = 20;
  std::uint64_t seed = 1;
  double sim_eps = 0.1, exploration = 0.001;
  sim_cmd->add_option("--learner", learner, "ucrl | qlearn")->check(CLI::IsMember({"ucrl", "qlearn"}))->required();
  sim_cmd->add_option("--horizon", horizon, "Steps per run")->required();
  sim_cmd->add_option("--runs", runs, "Number of seeds")->required();
  sim_cmd->add_option("--attack", sim_attack, "AttackSolution JSON, or 'none'")->required();
  sim_cmd->add_option("--env", sim_env, "Environment JSON (default: chain with R(s0) = -2.5)");
  sim_cmd->add_option("--eps", sim_eps, "Margin used for the suboptimal-step count")->capture_default_str();
  sim_cmd->add_option("--seed", seed, "First seed")->capture_default_str();
  sim_cmd->add_option("--exploration", exploration, "Q-learning exploration rate")->capture_default_str();
  sim_cmd->add_option("--trace", trace_path, "Write the first run's per-step CSV");
  sim_cmd->add_option("--out", sim_out, "Write the checkpoint summary JSON to file");

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "Check eps-robust optimality of a policy");
  std::string verify_env, verify_policy;
  double verify_eps = 0.0;
  verify_cmd->add_option("--env", verify_env, "Environment JSON")->required()->check(CLI::ExistingFile);
  verify_cmd->add_option("--policy", verify_policy, "Policy JSON (array or object with target_policy)")
      ->required()
      ->check(CLI::ExistingFile);
  verify_cmd->add_option("--eps", verify_eps, "Margin")->required();

  // bounds
  auto* bounds_cmd = app.add_subcommand("bounds", "Lower/upper attack-cost bounds for a target");
  std::string bounds_env, bounds_policy;
  ep::AttackConfig bounds_cfg;
  std::string bounds_p = "inf";
  bounds_cmd->add_option("--env", bounds_env, "Environment JSON")->required()->check(CLI::ExistingFile);
  bounds_cmd->add_option("--policy", bounds_policy, "Policy JSON")->required()->check(CLI::ExistingFile);
  bounds_cmd->add_option("--eps", bounds_cfg.epsilon, "Margin")->capture_default_str();
  bounds_cmd->add_option("--cr", bounds_cfg.c_r, "Reward weight")->capture_default_str();
  bounds_cmd->add_option("--cp", bounds_cfg.c_p, "Transition weight")->capture_default_str();
  bounds_cmd->add_option("--delta", bounds_cfg.delta, "Ergodicity floor")->capture_default_str();
  bounds_cmd->add_option("--p", bounds_p, "Norm (number or inf)")->capture_default_str();

  // run
  auto* run_cmd = app.add_subcommand("run", "Run an experiment spec");
  std::string run_config;
  run_cmd->add_option("--config", run_config, "Experiment spec (JSON)")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*chain_cmd) {
      const auto env = ep::build_chain(chain_r0, chain_states, chain_gamma);
      emit(ep::mdp_to_json(env.mdp, &env.target).dump(2) + "\n", env_out);
    } else if (*nav_cmd) {
      const auto env = ep::build_navigation(nav_r0, nav_gamma);
      emit(ep::mdp_to_json(env.mdp, &env.target).dump(2) + "\n", env_out);
    } else if (*offline_cmd) {
      const auto spec = ep::parse_experiment(ep::read_json_file(config_path), parent_dir(config_path));
      const auto env = ep::build_environment(spec);
      ep::AttackConfig cfg = spec.attack;
      cfg.epsilon = attack_eps;
      cfg.mode = mode_from_flag(mode_flag);
      const auto sol = ep::solve_attack(env.mdp, env.target, cfg);
      emit(ep::solution_to_json(sol).dump(2) + "\n", attack_out);
      if (!sol.feasible) exit_code = kExitInfeasible;
    } else if (*online_cmd) {
      ep::Environment env;
      ep::AttackConfig cfg;
      cfg.p_norm = 1.0;
      if (!config_path.empty()) {
        const auto spec = ep::parse_experiment(ep::read_json_file(config_path), parent_dir(config_path));
        env = ep::build_environment(spec);
        cfg = spec.attack;
      } else {
        env = ep::build_chain(online_r0, 4, online_gamma);
      }
      cfg.epsilon = attack_eps;
      cfg.mode = ep::AttackMode::kNonTargetOnly;
      const auto sol = ep::solve_nt_jattack(env.mdp, env.target, cfg);
      emit(ep::solution_to_json(sol).dump(2) + "\n", attack_out);
    } else if (*sim_cmd) {
      ep::Environment env;
      if (sim_env.empty()) {
        env = ep::build_chain(-2.5, 4, learner == "ucrl" ? 1.0 : 0.99);
      } else {
        env = load_env(sim_env, "");
      }
      ep::SimConfig sim;
      sim.horizon = horizon;
      sim.seed = seed;
      sim.cost_cfg.p_norm = 1.0;
      sim.cost_cfg.epsilon = sim_eps;
      sim.keep_records = !trace_path.empty();
      if (sim_attack != "none") {
        const auto doc = ep::read_json_file(sim_attack);
        sim.sampling = ep::poisoned_from_json(doc, env.mdp);
      }
      const std::size_t ns = env.mdp.n_states, na = env.mdp.n_actions;
      ep::LearnerFactory factory;
      if (learner == "ucrl") {
        factory = [=](std::uint64_t s) { return std::make_unique<ep::UcrlLearner>(ns, na, ep::UcrlOptions{}, s); };
      } else {
        ep::QLearningOptions opt;
        opt.gamma = env.mdp.gamma;
        opt.exploration = exploration;
        factory = [=](std::uint64_t s) { return std::make_unique<ep::QLearner>(ns, na, opt, s); };
      }
      const auto batch = ep::run_batch(env.mdp, env.target, factory, sim, runs);
      if (!trace_path.empty()) {
        std::ofstream trace(trace_path, std::ios::binary);
        if (!trace) throw ep::Error(ep::ErrorCode::kConfiguration, "cannot write '" + trace_path + "'");
        ep::write_trace_csv(trace, batch.runs.front());
      }
      emit(ep::batch_to_json(batch).dump(2) + "\n", sim_out);
    } else if (*verify_cmd) {
      const auto env = load_env(verify_env, verify_policy);
      const double margin = ep::robust_margin(env.mdp, env.target);
      const bool robust = ep::is_eps_robust_optimal(env.mdp, env.target, verify_eps);
      ep::Json out{{"robust", robust},
                   {"margin", std::isfinite(margin) ? ep::Json(margin) : ep::Json(nullptr)},
                   {"eps", verify_eps}};
      std::cout << out.dump(2) << "\n";
      if (!robust) exit_code = kExitInfeasible;
    } else if (*bounds_cmd) {
      const auto env = load_env(bounds_env, bounds_policy);
      bounds_cfg.p_norm = bounds_p == "inf" ? ep::kInf : std::stod(bounds_p);
      const auto q = ep::compute_bound_quantities(env.mdp, env.target, bounds_cfg);
      const auto b = ep::attack_cost_bounds(env.mdp, env.target, bounds_cfg);
      ep::Json out{{"lower", b.lower},
                   {"upper", b.upper},
                   {"value_span", q.value_span},
                   {"alpha", q.alpha},
                   {"diameter", q.diameter},
                   {"state_order", q.state_order}};
      std::cout << out.dump(2) << "\n";
    } else if (*run_cmd) {
      const auto spec = ep::parse_experiment(ep::read_json_file(run_config), parent_dir(run_config));
      const auto result = ep::run_experiment(spec);
      std::cout << result.csv;
      if (result.result_count > 0 && result.feasible_count == 0) exit_code = kExitInfeasible;
    }
  } catch (const ep::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return exit_code;
}
