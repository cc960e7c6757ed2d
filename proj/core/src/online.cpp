#include "envpoison/online.hpp"

#include <algorithm>
#include <cmath>

namespace envpoison {

namespace {

double weighted_change(double weight, double change) { return change == 0.0 ? 0.0 : weight * change; }

// Row from an LP vertex: clip to the floor, snap near-original entries and
// push the rounding residual onto the largest entry.
void clean_row(std::span<double> row, std::span<const double> reference, double delta) {
  for (std::size_t x = 0; x < row.size(); ++x) {
    row[x] = std::max(row[x], delta * reference[x]);
    if (std::abs(row[x] - reference[x]) <= 1e-13) row[x] = reference[x];
  }
  double sum = 0.0;
  for (double v : row) sum += v;
  const double residual = 1.0 - sum;
  if (residual != 0.0) {
    std::size_t big = 0;
    for (std::size_t x = 1; x < row.size(); ++x) {
      if (row[x] > row[big]) big = x;
    }
    row[big] += residual;
  }
}

}  // namespace

TargetCache precompute_target(const Mdp& base, const Policy& target) {
  TargetCache cache;
  cache.values = evaluate_policy(base, target);
  cache.reach = reach_times(base, target);
  const std::size_t n = base.n_states;
  cache.eta.assign(n, 1.0);
  if (!base.is_average_reward()) {
    for (std::size_t s = 0; s < n; ++s) {
      double acc = 0.0;
      for (std::size_t x = 0; x < n; ++x) acc += base.initial_dist[x] * cache.reach.times(x, s);
      cache.eta[s] = 1.0 - (1.0 - base.gamma) * acc;
      if (!(cache.eta[s] > 0.0)) {
        throw Error(ErrorCode::kFormulaOutOfDomain, "eta(" + std::to_string(s) + ") <= 0");
      }
    }
  }
  return cache;
}

double mu_neighbor_closed_form(const Mdp& base, const TargetCache& cache,
                               std::span<const double> row, std::size_t s) {
  if (row.size() != base.n_states) throw Error(ErrorCode::kShapeMismatch, "row length differs from n_states");
  if (s >= base.n_states) throw Error(ErrorCode::kInvalidArgument, "state out of range");
  double acc = 0.0;
  for (std::size_t x = 0; x < base.n_states; ++x) acc += row[x] * cache.reach.times(x, s);
  return cache.eta[s] / (1.0 + base.gamma * acc);
}

double mu_neighbor_closed_form(const Mdp& base, const Policy& target, std::span<const double> row,
                               std::size_t s) {
  return mu_neighbor_closed_form(base, precompute_target(base, target), row, s);
}

PairSubproblem build_pair_subproblem(const Mdp& reference, const Mdp& base, const TargetCache& cache,
                                 const AttackConfig& cfg, std::size_t s, std::size_t a,
                                 PairVariables vars) {
  const std::size_t n = base.n_states;
  PairSubproblem sub;
  sub.state = s;
  sub.action = a;
  sub.eta_s = cache.eta[s];
  sub.reach_row.resize(n);
  for (std::size_t x = 0; x < n; ++x) sub.reach_row[x] = cache.reach.times(x, s);

  const bool free_r = vars != PairVariables::kTransitionsOnly && std::isfinite(cfg.c_r);
  const bool free_p = vars != PairVariables::kRewardsOnly && std::isfinite(cfg.c_p);
  const double r_ref = reference.rewards(s, a);
  const auto p_ref = reference.row(s, a);
  sub.fixed_reward = r_ref;
  sub.fixed_row.assign(p_ref.begin(), p_ref.end());

  const double scale = cfg.epsilon / sub.eta_s;
  const auto& v = cache.values.v_values;
  // R + gamma sum_x P(x) w(x) <= V(s) + rho - eps/eta
  double rhs = v[s] + cache.values.score - scale;
  std::vector<std::pair<std::size_t, double>> terms;
  std::vector<AbsTerm> abs_terms;

  LinearProgram& lp = sub.lp;
  if (free_r) {
    sub.reward_var = lp.add_variable(0.0, -kInf, kInf);
    terms.push_back({sub.reward_var, 1.0});
    abs_terms.push_back({cfg.c_r, {{sub.reward_var, 1.0}}, -r_ref});
  } else {
    rhs -= r_ref;
  }
  if (free_p) {
    std::vector<std::pair<std::size_t, double>> sum_row;
    for (std::size_t x = 0; x < n; ++x) {
      const std::size_t j = lp.add_variable(0.0, cfg.delta * p_ref[x], kInf);
      if (x == 0) sub.first_transition_var = j;
      const double w = v[x] + scale * sub.reach_row[x];
      terms.push_back({j, base.gamma * w});
      sum_row.push_back({j, 1.0});
      abs_terms.push_back({cfg.c_p, {{j, 1.0}}, -p_ref[x]});
    }
    lp.add_eq(std::move(sum_row), 1.0);
  } else {
    for (std::size_t x = 0; x < n; ++x) {
      rhs -= base.gamma * p_ref[x] * (v[x] + scale * sub.reach_row[x]);
    }
  }
  lp.add_ub(std::move(terms), rhs);
  add_abs_objective(lp, abs_terms);
  return sub;
}

PairSubproblem build_pair_subproblem(const Mdp& original, const Policy& target,
                                 const AttackConfig& cfg, std::size_t s, std::size_t a) {
  require_valid(original);
  require_policy(original, target);
  if (s >= original.n_states || a >= original.n_actions || a == target(s)) {
    throw Error(ErrorCode::kInvalidArgument, "subproblem needs a non-target pair");
  }
  return build_pair_subproblem(original, original, precompute_target(original, target), cfg, s, a);
}

PairSolution solve_pair_subproblem(const PairSubproblem& sub) {
  PairSolution out;
  out.reward = sub.fixed_reward;
  out.row = sub.fixed_row;
  if (sub.lp.num_variables() == 0) {
    // Nothing to move: feasible iff the lone constraint already holds.
    out.feasible = sub.lp.ub_constraints.front().rhs >= -1e-12;
    return out;
  }
  const LpSolution sol = solve_lp(sub.lp);
  if (sol.status != LpStatus::kOptimal) return out;
  out.feasible = true;
  out.objective = sol.objective_value;
  if (sub.reward_var != kNoVariable) {
    out.reward = sol.x[sub.reward_var];
    if (std::abs(out.reward - sub.fixed_reward) <= 1e-13) out.reward = sub.fixed_reward;
  }
  if (sub.first_transition_var != kNoVariable) {
    for (std::size_t x = 0; x < out.row.size(); ++x) out.row[x] = sol.x[sub.first_transition_var + x];
  }
  return out;
}

AttackSolution solve_non_target(const Mdp& reference, const Mdp& base, const Policy& target,
                                const AttackConfig& cfg, PairVariables vars) {
  validate_config(cfg);
  require_policy(base, target);
  const TargetCache cache = precompute_target(base, target);
  Mdp poisoned = base;
  for (std::size_t s = 0; s < base.n_states; ++s) {
    for (std::size_t a = 0; a < base.n_actions; ++a) {
      if (a == target(s)) continue;
      const PairSubproblem sub = build_pair_subproblem(reference, base, cache, cfg, s, a, vars);
      PairSolution pair = solve_pair_subproblem(sub);
      if (!pair.feasible) {
        AttackSolution out;
        out.poisoned = base;
        out.feasible = false;
        out.cost = kInf;
        out.diagnostic = "pair (" + std::to_string(s) + ", " + std::to_string(a) + ") is infeasible";
        return out;
      }
      clean_row(pair.row, reference.row(s, a), cfg.delta);
      poisoned.rewards(s, a) = pair.reward;
      std::copy(pair.row.begin(), pair.row.end(), poisoned.row(s, a).begin());
    }
  }
  return finalize_solution(std::move(poisoned), reference, target, cfg);
}

AttackSolution solve_nt_jattack(const Mdp& original, const Policy& target,
                                const AttackConfig& cfg) {
  require_valid(original);
  AttackSolution out = solve_non_target(original, original, target, cfg, PairVariables::kJoint);
  if (!out.feasible) {
    throw Error(ErrorCode::kInternal, "non-target attack failed verification: " + out.diagnostic);
  }
  return out;
}

double mu_max_neighbors(const Mdp& sampling, const Policy& target) {
  double best = 0.0;
  for (std::size_t s = 0; s < sampling.n_states; ++s) {
    for (std::size_t a = 0; a < sampling.n_actions; ++a) {
      if (a == target(s)) continue;
      best = std::max(best, state_distribution(sampling, neighbor_policy(target, s, a))[s]);
    }
  }
  return best;
}

double online_bound_avgmiss_regret(const Mdp& sampling, const Policy& target, double eps,
                                   double regret, double horizon) {
  if (!sampling.is_average_reward()) {
    throw Error(ErrorCode::kInvalidArgument, "regret bound applies to the average-reward setting");
  }
  if (!(eps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "bound undefined for eps = 0");
  if (!(horizon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "horizon must be positive");
  const ValueBundle vb = evaluate_policy(sampling, target);
  double v_inf = 0.0;
  for (double v : vb.v_values) v_inf = std::max(v_inf, std::abs(v));
  return mu_max_neighbors(sampling, target) / (eps * horizon) * (regret + 2.0 * v_inf);
}

double online_bound_avgcost_regret(const Mdp& sampling, const Policy& target, double eps,
                                   double regret, double horizon, double cost_inf, double p) {
  const double miss = online_bound_avgmiss_regret(sampling, target, eps, regret, horizon);
  const double steps = std::max(0.0, miss * horizon);
  const double root = std::isinf(p) ? 1.0 : std::pow(steps, 1.0 / p);
  return weighted_change(cost_inf, 1.0) / horizon * (steps == 0.0 ? 0.0 : root);
}

SuboptBounds online_bound_avgmiss_subopt(double subopt_steps, double horizon, double cost_inf,
                                         double p) {
  if (!(horizon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "horizon must be positive");
  SuboptBounds b;
  b.avg_miss = subopt_steps / horizon;
  if (subopt_steps > 0.0) {
    const double root = std::isinf(p) ? 1.0 : std::pow(subopt_steps, 1.0 / p);
    b.avg_cost_bound = cost_inf / horizon * root;
  }
  return b;
}

}  // namespace envpoison
