#pragma once

#include <cstddef>
#include <span>

#include "envpoison/linprog.hpp"
#include "envpoison/mdp.hpp"
#include "envpoison/offline.hpp"

namespace envpoison {

/// Target-policy quantities shared by every per-pair subproblem.
struct TargetCache {
  ValueBundle values;
  ReachTimes reach;
  Vector eta;  // eta(s) = 1 - (1 - gamma) sum_x d0(x) T(x, s)
};

/// Throws Error(kFormulaOutOfDomain) if some eta(s) <= 0.
TargetCache precompute_target(const Mdp& base, const Policy& target);

/// mu^{pi<s;a>}(s) when the neighbor plays `row` at s and agrees with the
/// target rows of `base` everywhere else.
double mu_neighbor_closed_form(const Mdp& base, const Policy& target, std::span<const double> row,
                               std::size_t s);
double mu_neighbor_closed_form(const Mdp& base, const TargetCache& cache,
                               std::span<const double> row, std::size_t s);

/// Which of R(s,a), P(s,a,.) a subproblem may move.
enum class PairVariables { kJoint, kTransitionsOnly, kRewardsOnly };

inline constexpr std::size_t kNoVariable = static_cast<std::size_t>(-1);

struct PairSubproblem {
  std::size_t state = 0;
  std::size_t action = 0;
  LinearProgram lp;
  double eta_s = 1.0;
  Vector reach_row;   // T(., s)
  std::size_t reward_var = kNoVariable;
  std::size_t first_transition_var = kNoVariable;
  double fixed_reward = 0.0;
  Vector fixed_row;   // used when transitions are frozen
};

/// Costs and the delta floor are measured against `reference`; the target
/// rows of `base` define V, rho, T and eta through `cache`.
PairSubproblem build_pair_subproblem(const Mdp& reference, const Mdp& base, const TargetCache& cache,
                                 const AttackConfig& cfg, std::size_t s, std::size_t a,
                                 PairVariables vars = PairVariables::kJoint);
PairSubproblem build_pair_subproblem(const Mdp& original, const Policy& target,
                                 const AttackConfig& cfg, std::size_t s, std::size_t a);

struct PairSolution {
  bool feasible = false;
  double reward = 0.0;
  Vector row;
  double objective = 0.0;
};

PairSolution solve_pair_subproblem(const PairSubproblem& sub);

/// Solves every non-target pair of `base` independently and keeps the
/// target rows of `base`. Infeasible pairs or a failed verification give
/// feasible == false.
AttackSolution solve_non_target(const Mdp& reference, const Mdp& base, const Policy& target,
                                const AttackConfig& cfg, PairVariables vars);

/// Non-target-only joint attack. Throws Error(kInternal) if the assembled MDP
/// fails verification.
AttackSolution solve_nt_jattack(const Mdp& original, const Policy& target,
                                const AttackConfig& cfg);

/// max over non-target (s,a) of mu^{pi<s;a>}(s) in `sampling`.
double mu_max_neighbors(const Mdp& sampling, const Policy& target);

/// mu_max / (eps T) * (regret + 2 ||V||_inf), average-reward setting only.
double online_bound_avgmiss_regret(const Mdp& sampling, const Policy& target, double eps,
                                   double regret, double horizon);

/// cost_inf / T * (mu_max / eps * (regret + 2 ||V||_inf))^{1/p}
double online_bound_avgcost_regret(const Mdp& sampling, const Policy& target, double eps,
                                   double regret, double horizon, double cost_inf, double p);

struct SuboptBounds {
  double avg_miss = 0.0;
  double avg_cost_bound = 0.0;
};

SuboptBounds online_bound_avgmiss_subopt(double subopt_steps, double horizon, double cost_inf,
                                         double p);

}  // namespace envpoison
