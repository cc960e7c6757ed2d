#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "envpoison/linprog.hpp"
#include "envpoison/mdp.hpp"

namespace envpoison {

enum class AttackMode { kRewardsOnly, kTransitionsOnly, kJoint, kNonTargetOnly };

const char* to_string(AttackMode mode) noexcept;

struct AttackConfig {
  double c_r = 3.0;
  double c_p = 1.0;
  double p_norm = kInf;  // 1, 2, any real >= 1, or kInf
  double epsilon = 0.1;
  double delta = 1e-4;   // ergodicity floor: P_hat >= delta * P_bar
  AttackMode mode = AttackMode::kJoint;
  std::size_t pool_points = 11;  // grid {0, 1/(n-1), ..., 1} for the pool heuristics
};

/// Throws Error(kConfiguration) on an unusable config.
void validate_config(const AttackConfig& cfg);

struct AttackSolution {
  Mdp poisoned;
  bool feasible = false;
  double cost = 0.0;
  double verified_margin = 0.0;
  Matrix per_pair_cost;
  std::string diagnostic;
};

/// ||v||_p of a non-negative vector; p = kInf gives the max.
double norm_p(std::span<const double> v, double p);

/// c(s,a) = C_r |R_hat - R_bar| + C_p sum_x |P_hat - P_bar|.
Matrix per_pair_cost(const Mdp& poisoned, const Mdp& original, const AttackConfig& cfg);
double attack_cost(const Mdp& poisoned, const Mdp& original, const AttackConfig& cfg);

/// Fills cost, per-pair costs, verified margin and the feasibility verdict.
AttackSolution finalize_solution(Mdp poisoned, const Mdp& original, const Policy& target,
                                 const AttackConfig& cfg);

struct BoundQuantities {
  Matrix chi;       // chi_eps
  Matrix chi_zero;  // chi_0
  Matrix chi_beta;  // chi_{beta(s,a)}
  Matrix beta;
  Matrix f;  // F_{k(s,a)}(s,a)
  Matrix g;  // G_{k(s,a)}(s,a)
  std::vector<std::size_t> k;  // row-major [n_states x n_actions]
  double value_span = 0.0;
  std::vector<std::size_t> state_order;  // decreasing V of the target, ties to lower index
  double alpha = 0.0;
  double diameter = 0.0;

  std::size_t k_at(std::size_t s, std::size_t a) const { return k[s * chi.cols() + a]; }
};

BoundQuantities compute_bound_quantities(const Mdp& original, const Policy& target,
                                         const AttackConfig& cfg);

AttackSolution constructive_attack(const Mdp& original, const Policy& target,
                                   const AttackConfig& cfg);

struct CostBounds {
  double lower = 0.0;
  double upper = 0.0;
};

CostBounds attack_cost_bounds(const Mdp& original, const Policy& target, const AttackConfig& cfg);

/// Rewards-only attack as one LP; p in {1, inf}.
AttackSolution solve_rattack(const Mdp& original, const Policy& target, const AttackConfig& cfg);

/// Transitions-only pool heuristic; feasible == false when every pool member fails.
AttackSolution solve_dattack(const Mdp& original, const Policy& target, const AttackConfig& cfg);

/// Joint pool heuristic over convex combinations of the rewards-only and
/// transitions-only target rows with the original ones.
AttackSolution solve_jattack(const Mdp& original, const Policy& target, const AttackConfig& cfg);

/// Dispatches on cfg.mode.
AttackSolution solve_attack(const Mdp& original, const Policy& target, const AttackConfig& cfg);

}  // namespace envpoison
