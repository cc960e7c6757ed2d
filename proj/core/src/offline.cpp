#include "envpoison/offline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "envpoison/online.hpp"

namespace envpoison {

namespace {

double weighted(double weight, double change) {
  if (change == 0.0) return 0.0;
  return weight * change;
}

void require_same_shape(const Mdp& a, const Mdp& b) {
  if (a.n_states != b.n_states || a.n_actions != b.n_actions ||
      a.transitions.size() != b.transitions.size() || a.rewards.rows() != b.rewards.rows() ||
      a.rewards.cols() != b.rewards.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "poisoned and original MDPs differ in shape");
  }
}

std::vector<double> pool_grid(std::size_t points) {
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = points == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return grid;
}

std::size_t argmax_lowest(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace

const char* to_string(AttackMode mode) noexcept {
  switch (mode) {
    case AttackMode::kRewardsOnly: return "RAttack";
    case AttackMode::kTransitionsOnly: return "DAttack";
    case AttackMode::kJoint: return "JAttack";
    case AttackMode::kNonTargetOnly: return "NT-JAttack";
  }
  return "unknown";
}

void validate_config(const AttackConfig& cfg) {
  auto usable = [](double w) { return std::isfinite(w) && w > 0.0; };
  if (std::isnan(cfg.c_r) || std::isnan(cfg.c_p) || cfg.c_r < 0.0 || cfg.c_p < 0.0) {
    throw Error(ErrorCode::kConfiguration, "cost weights must be non-negative");
  }
  if (!usable(cfg.c_r) && !usable(cfg.c_p)) {
    throw Error(ErrorCode::kConfiguration, "one of c_r, c_p must be finite and positive");
  }
  if (!(cfg.p_norm >= 1.0)) throw Error(ErrorCode::kConfiguration, "p_norm must be >= 1");
  if (!(cfg.epsilon >= 0.0) || !std::isfinite(cfg.epsilon)) {
    throw Error(ErrorCode::kConfiguration, "epsilon must be finite and non-negative");
  }
  if (!(cfg.delta > 0.0 && cfg.delta <= 1.0)) throw Error(ErrorCode::kConfiguration, "delta must lie in (0, 1]");
  if (cfg.pool_points == 0) throw Error(ErrorCode::kConfiguration, "pool_points must be positive");
}

double norm_p(std::span<const double> v, double p) {
  if (std::isinf(p)) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  if (p == 1.0) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
  }
  double s = 0.0;
  for (double x : v) s += std::pow(std::abs(x), p);
  return std::pow(s, 1.0 / p);
}

Matrix per_pair_cost(const Mdp& poisoned, const Mdp& original, const AttackConfig& cfg) {
  require_same_shape(poisoned, original);
  Matrix cost(original.n_states, original.n_actions);
  for (std::size_t s = 0; s < original.n_states; ++s) {
    for (std::size_t a = 0; a < original.n_actions; ++a) {
      double tv = 0.0;
      auto ph = poisoned.row(s, a);
      auto pb = original.row(s, a);
      for (std::size_t x = 0; x < original.n_states; ++x) tv += std::abs(ph[x] - pb[x]);
      cost(s, a) = weighted(cfg.c_r, std::abs(poisoned.rewards(s, a) - original.rewards(s, a))) +
                   weighted(cfg.c_p, tv);
    }
  }
  return cost;
}

double attack_cost(const Mdp& poisoned, const Mdp& original, const AttackConfig& cfg) {
  return norm_p(per_pair_cost(poisoned, original, cfg).values(), cfg.p_norm);
}

AttackSolution finalize_solution(Mdp poisoned, const Mdp& original, const Policy& target,
                                 const AttackConfig& cfg) {
  AttackSolution out;
  out.per_pair_cost = per_pair_cost(poisoned, original, cfg);
  out.cost = norm_p(out.per_pair_cost.values(), cfg.p_norm);
  out.verified_margin = robust_margin(poisoned, target);
  out.feasible = out.verified_margin >= cfg.epsilon - kMarginSlack;
  for (std::size_t s = 0; s < original.n_states && out.feasible; ++s) {
    for (std::size_t a = 0; a < original.n_actions && out.feasible; ++a) {
      auto ph = poisoned.row(s, a);
      auto pb = original.row(s, a);
      for (std::size_t x = 0; x < original.n_states; ++x) {
        if (ph[x] < cfg.delta * pb[x] - kInputTolerance) {
          out.feasible = false;
          out.diagnostic = "delta floor violated";
          break;
        }
      }
    }
  }
  if (!out.feasible && out.diagnostic.empty()) out.diagnostic = "target is not eps-robust optimal";
  out.poisoned = std::move(poisoned);
  return out;
}

BoundQuantities compute_bound_quantities(const Mdp& original, const Policy& target,
                                         const AttackConfig& cfg) {
  validate_config(cfg);
  const std::size_t n = original.n_states;
  const std::size_t na = original.n_actions;
  const double gamma = original.gamma;
  const ValueBundle vb = evaluate_policy(original, target);
  const ReachTimes rt = reach_times(original, target);
  const double denom = original.is_average_reward() ? 1.0 : 1.0 - (1.0 - gamma) * rt.diameter;
  if (!(denom > 0.0)) throw Error(ErrorCode::kBetaUndefined, "(1 - gamma) * D >= 1");

  BoundQuantities q;
  q.chi = Matrix(n, na);
  q.chi_zero = Matrix(n, na);
  q.chi_beta = Matrix(n, na);
  q.beta = Matrix(n, na);
  q.f = Matrix(n, na);
  q.g = Matrix(n, na);
  q.k.assign(n * na, 0);
  q.diameter = rt.diameter;
  q.alpha = hajnal_alpha(original);

  q.state_order.resize(n);
  std::iota(q.state_order.begin(), q.state_order.end(), 0);
  std::stable_sort(q.state_order.begin(), q.state_order.end(),
                   [&](std::size_t i, std::size_t j) { return vb.v_values[i] > vb.v_values[j]; });
  const double v_low = vb.v_values[q.state_order.back()];
  q.value_span = vb.v_values[q.state_order.front()] - v_low;

  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t a = 0; a < na; ++a) {
      if (a == target(s)) continue;
      const Policy nb = neighbor_policy(target, s, a);
      const Vector mu_nb = state_distribution(original, nb);
      double rho_nb = 0.0;
      for (std::size_t x = 0; x < n; ++x) rho_nb += mu_nb[x] * original.rewards(x, nb(x));
      const double gap = rho_nb - vb.score;
      auto chi_at = [&](double e) { return std::max(0.0, (gap + e) / mu_nb[s]); };
      q.chi(s, a) = chi_at(cfg.epsilon);
      q.chi_zero(s, a) = chi_at(0.0);
      q.beta(s, a) = cfg.epsilon * mu_nb[s] * (1.0 + gamma * rt.diameter) / denom;
      q.chi_beta(s, a) = chi_at(q.beta(s, a));

      auto row = original.row(s, a);
      double f_i = 0.0, g_i = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t si = q.state_order[i];
        const double moved = (1.0 - cfg.delta) * row[si];
        f_i += gamma * moved * (vb.v_values[si] - v_low);
        g_i += 2.0 * moved;
        const bool efficient =
            gamma * cfg.c_r * (vb.v_values[si] - v_low) > 2.0 * cfg.c_p;
        if (efficient && f_i <= q.chi_beta(s, a)) {
          q.k[s * na + a] = i + 1;
          q.f(s, a) = f_i;
          q.g(s, a) = g_i;
        }
      }
    }
  }
  return q;
}

AttackSolution constructive_attack(const Mdp& original, const Policy& target,
                                   const AttackConfig& cfg) {
  require_valid(original);
  require_policy(original, target);
  const BoundQuantities q = compute_bound_quantities(original, target, cfg);
  const std::size_t n = original.n_states;
  Mdp poisoned = original;
  const std::size_t last = q.state_order.back();
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t a = 0; a < original.n_actions; ++a) {
      if (a == target(s)) continue;
      const std::size_t k = q.k_at(s, a);
      auto row = poisoned.row(s, a);
      auto orig = original.row(s, a);
      double moved = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        const std::size_t si = q.state_order[i];
        row[si] = cfg.delta * orig[si];
        moved += orig[si] - row[si];
      }
      row[last] += moved;
      poisoned.rewards(s, a) = original.rewards(s, a) - q.chi_beta(s, a) + q.f(s, a);
    }
  }
  AttackSolution out = finalize_solution(std::move(poisoned), original, target, cfg);
  if (!out.feasible) out.diagnostic = "constructive attack failed verification: " + out.diagnostic;
  return out;
}

CostBounds attack_cost_bounds(const Mdp& original, const Policy& target, const AttackConfig& cfg) {
  const BoundQuantities q = compute_bound_quantities(original, target, cfg);
  const double gamma = original.gamma;
  CostBounds b;
  const double chi0 = norm_p(q.chi_zero.values(), kInf);
  if (chi0 > 0.0) {
    const double inv_r = std::isinf(cfg.c_r) ? 0.0 : 2.0 / cfg.c_r;
    const double inv_p = std::isinf(cfg.c_p) ? 0.0 : gamma * q.value_span / cfg.c_p;
    const double num = 1.0 - gamma + gamma * cfg.delta * q.alpha;
    b.lower = num / (inv_r + inv_p) * chi0;
  }
  Matrix pair(original.n_states, original.n_actions);
  for (std::size_t s = 0; s < original.n_states; ++s) {
    for (std::size_t a = 0; a < original.n_actions; ++a) {
      if (a == target(s)) continue;
      pair(s, a) = weighted(cfg.c_p, q.g(s, a)) + weighted(cfg.c_r, q.chi_beta(s, a) - q.f(s, a));
    }
  }
  b.upper = norm_p(pair.values(), cfg.p_norm);
  return b;
}

AttackSolution solve_rattack(const Mdp& original, const Policy& target, const AttackConfig& cfg) {
  validate_config(cfg);
  require_valid(original);
  require_policy(original, target);
  const bool inf_norm = std::isinf(cfg.p_norm);
  if (!inf_norm && cfg.p_norm != 1.0) {
    throw Error(ErrorCode::kUnsupportedNorm, "rewards-only LP supports p = 1 or p = inf");
  }
  if (!std::isfinite(cfg.c_r)) throw Error(ErrorCode::kConfiguration, "rewards-only attack needs finite c_r");
  const std::size_t n = original.n_states;
  const std::size_t na = original.n_actions;
  const Vector mu = state_distribution(original, target);
  const double rho = policy_score(original, target);

  // R_hat = R_bar + u - v per pair.
  LinearProgram lp;
  std::vector<std::size_t> up(n * na), down(n * na);
  for (std::size_t i = 0; i < n * na; ++i) {
    up[i] = lp.add_variable(inf_norm ? 0.0 : cfg.c_r);
    down[i] = lp.add_variable(inf_norm ? 0.0 : cfg.c_r);
  }
  auto pair = [na](std::size_t s, std::size_t a) { return s * na + a; };
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t a = 0; a < na; ++a) {
      if (a == target(s)) continue;
      const Policy nb = neighbor_policy(target, s, a);
      const Vector mu_nb = state_distribution(original, nb);
      double rho_nb = 0.0;
      for (std::size_t x = 0; x < n; ++x) rho_nb += mu_nb[x] * original.rewards(x, nb(x));
      // rho_hat(nb) - rho_hat(target) <= -eps
      std::vector<std::pair<std::size_t, double>> terms;
      for (std::size_t x = 0; x < n; ++x) {
        if (x == s) continue;
        const double c = mu_nb[x] - mu[x];
        if (c == 0.0) continue;
        const std::size_t i = pair(x, target(x));
        terms.push_back({up[i], c});
        terms.push_back({down[i], -c});
      }
      terms.push_back({up[pair(s, a)], mu_nb[s]});
      terms.push_back({down[pair(s, a)], -mu_nb[s]});
      terms.push_back({up[pair(s, target(s))], -mu[s]});
      terms.push_back({down[pair(s, target(s))], mu[s]});
      lp.add_ub(std::move(terms), -cfg.epsilon - (rho_nb - rho));
    }
  }

  LpSolution sol;
  if (inf_norm) {
    const std::size_t t = lp.add_variable(1.0);
    for (std::size_t i = 0; i < n * na; ++i) {
      lp.add_ub({{up[i], cfg.c_r}, {down[i], cfg.c_r}, {t, -1.0}}, 0.0);
    }
    sol = solve_lp(lp);
    if (sol.status != LpStatus::kOptimal) {
      throw Error(ErrorCode::kInternal, "rewards-only LP did not reach an optimum");
    }
    // Second stage: smallest total change among max-cost minimizers.
    const double t_star = sol.x[t];
    for (std::size_t i = 0; i < n * na; ++i) {
      lp.objective[up[i]] = cfg.c_r;
      lp.objective[down[i]] = cfg.c_r;
    }
    lp.objective[t] = 0.0;
    lp.upper[t] = t_star + 1e-12 * std::max(1.0, t_star);
    LpSolution refined = solve_lp(lp);
    if (refined.status == LpStatus::kOptimal) sol = std::move(refined);
  } else {
    sol = solve_lp(lp);
    if (sol.status != LpStatus::kOptimal) {
      throw Error(ErrorCode::kInternal, "rewards-only LP did not reach an optimum");
    }
  }

  Mdp poisoned = original;
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t a = 0; a < na; ++a) {
      const double change = sol.x[up[pair(s, a)]] - sol.x[down[pair(s, a)]];
      if (std::abs(change) > 1e-13) poisoned.rewards(s, a) = original.rewards(s, a) + change;
    }
  }
  AttackSolution out = finalize_solution(std::move(poisoned), original, target, cfg);
  if (!out.feasible) throw Error(ErrorCode::kInternal, "rewards-only LP solution failed verification");
  return out;
}

AttackSolution solve_dattack(const Mdp& original, const Policy& target, const AttackConfig& cfg) {
  validate_config(cfg);
  require_valid(original);
  require_policy(original, target);
  const std::size_t n = original.n_states;
  const ValueBundle vb = evaluate_policy(original, target);
  const std::size_t top = argmax_lowest(vb.v_values);

  AttackSolution best;
  best.poisoned = original;
  best.feasible = false;
  best.diagnostic = "every pool member is infeasible";
  for (double theta : pool_grid(cfg.pool_points)) {
    Mdp base = original;
    for (std::size_t s = 0; s < n; ++s) {
      auto row = base.row(s, target(s));
      auto orig = original.row(s, target(s));
      // Drain destinations worth less than the row's expected next value.
      double expected = 0.0;
      for (std::size_t x = 0; x < n; ++x) expected += orig[x] * vb.v_values[x];
      double moved = 0.0;
      for (std::size_t x = 0; x < n; ++x) {
        if (x == top || !(vb.v_values[x] < expected)) continue;
        const double m = theta * (1.0 - cfg.delta) * row[x];
        row[x] -= m;
        moved += m;
      }
      row[top] += moved;
    }
    AttackSolution cand;
    try {
      cand = solve_non_target(original, base, target, cfg, PairVariables::kTransitionsOnly);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kFormulaOutOfDomain) throw;
      continue;
    }
    if (cand.feasible && (!best.feasible || cand.cost < best.cost)) best = std::move(cand);
  }
  return best;
}

AttackSolution solve_jattack(const Mdp& original, const Policy& target, const AttackConfig& cfg) {
  validate_config(cfg);
  require_valid(original);
  require_policy(original, target);
  const std::size_t n = original.n_states;

  AttackConfig r_cfg = cfg;
  r_cfg.mode = AttackMode::kRewardsOnly;
  if (!std::isinf(r_cfg.p_norm) && r_cfg.p_norm != 1.0) r_cfg.p_norm = kInf;
  const Mdp r_only = solve_rattack(original, target, r_cfg).poisoned;
  AttackConfig d_cfg = cfg;
  d_cfg.mode = AttackMode::kTransitionsOnly;
  AttackSolution d_sol = solve_dattack(original, target, d_cfg);
  const Mdp p_only = d_sol.feasible ? d_sol.poisoned : original;

  AttackSolution best;
  bool have = false;
  const auto grid = pool_grid(cfg.pool_points);
  for (double alpha_r : grid) {
    for (double alpha_p : grid) {
      Mdp base = original;
      for (std::size_t s = 0; s < n; ++s) {
        const std::size_t a = target(s);
        base.rewards(s, a) =
            (1.0 - alpha_r) * r_only.rewards(s, a) + alpha_r * original.rewards(s, a);
        auto row = base.row(s, a);
        auto pr = p_only.row(s, a);
        auto po = original.row(s, a);
        for (std::size_t x = 0; x < n; ++x) row[x] = (1.0 - alpha_p) * pr[x] + alpha_p * po[x];
      }
      AttackSolution cand;
      try {
        cand = solve_non_target(original, base, target, cfg, PairVariables::kJoint);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kFormulaOutOfDomain) throw;
        continue;
      }
      if (cand.feasible && (!have || cand.cost < best.cost)) {
        best = std::move(cand);
        have = true;
      }
    }
  }
  if (!have) throw Error(ErrorCode::kInternal, "joint pool produced no verified solution");
  return best;
}

AttackSolution solve_attack(const Mdp& original, const Policy& target, const AttackConfig& cfg) {
  switch (cfg.mode) {
    case AttackMode::kRewardsOnly: return solve_rattack(original, target, cfg);
    case AttackMode::kTransitionsOnly: return solve_dattack(original, target, cfg);
    case AttackMode::kJoint: return solve_jattack(original, target, cfg);
    case AttackMode::kNonTargetOnly: return solve_nt_jattack(original, target, cfg);
  }
  throw Error(ErrorCode::kConfiguration, "unknown attack mode");
}

}  // namespace envpoison
