#pragma once

#include <optional>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "envpoison/mdp.hpp"
#include "envpoison/offline.hpp"
#include "envpoison/simulation.hpp"

namespace envpoison {

using Json = nlohmann::json;

/// {n_states, n_actions, gamma, d0, rewards, transitions[, target_policy]}
Json mdp_to_json(const Mdp& m, const Policy* target = nullptr);
Mdp mdp_from_json(const Json& j);
/// Reads target_policy from an environment object, or accepts a bare array.
Policy policy_from_json(const Json& j);
Json policy_to_json(const Policy& pi);

/// {feasible, cost, verified_margin, rewards_hat, transitions_hat, per_pair_cost}
Json solution_to_json(const AttackSolution& sol);
/// Rebuilds the poisoned MDP from a solution object and the original's gamma/d0.
Mdp poisoned_from_json(const Json& j, const Mdp& original);

Json batch_to_json(const BatchResult& batch);
void write_trace_csv(std::ostream& out, const SimTrace& trace);

/// Shortest round-trip decimal form, stable across runs.
std::string format_number(double v);

Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace envpoison
