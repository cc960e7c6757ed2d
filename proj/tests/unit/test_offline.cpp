#include <gtest/gtest.h>

#include <cmath>

#include "envpoison/environments.hpp"
#include "envpoison/linprog.hpp"
#include "envpoison/offline.hpp"
#include "envpoison/online.hpp"
#include "random_mdp.hpp"

namespace ep = envpoison;
using ep::testing::Gen;

namespace {

bool respects_floor(const ep::Mdp& poisoned, const ep::Mdp& original, double delta) {
  for (std::size_t i = 0; i < original.transitions.size(); ++i) {
    if (poisoned.transitions[i] < delta * original.transitions[i] * (1.0 - 1e-9)) return false;
  }
  return true;
}

// Rewards-only attack against every deterministic policy at once, with
// scores written out through stationary distributions. The neighbor
// reduction is not used here.
double all_policies_rattack(const ep::Mdp& m, const ep::Policy& target, const ep::AttackConfig& cfg) {
  const std::size_t ns = m.n_states, na = m.n_actions;
  ep::LinearProgram lp;
  std::vector<std::size_t> r(ns * na);
  for (auto& v : r) v = lp.add_variable(0.0, -ep::kInf, ep::kInf);
  const std::size_t t = lp.add_variable(1.0);
  std::vector<ep::AbsTerm> abs;
  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t a = 0; a < na; ++a) {
      abs.push_back({0.0, {{r[s * na + a], 1.0}}, -m.rewards(s, a)});
    }
  }
  const auto slacks = ep::add_abs_objective(lp, abs);
  for (const auto& sl : slacks) {
    lp.add_ub({{sl.plus, cfg.c_r}, {sl.minus, cfg.c_r}, {t, -1.0}}, 0.0);
  }
  const auto mu_t = ep::state_distribution(m, target);
  ep::for_each_policy(ns, na, [&](const ep::Policy& pi) {
    if (pi == target) return;
    const auto mu = ep::state_distribution(m, pi);
    std::vector<std::pair<std::size_t, double>> row;
    for (std::size_t s = 0; s < ns; ++s) {
      row.push_back({r[s * na + pi(s)], mu[s]});
      row.push_back({r[s * na + target(s)], -mu_t[s]});
    }
    lp.add_ub(row, -cfg.epsilon);
  });
  const auto sol = ep::solve_lp(lp);
  EXPECT_EQ(sol.status, ep::LpStatus::kOptimal);
  return sol.objective_value;
}

}  // namespace

TEST(Offline, NormAndCost) {
  const std::vector<double> v{3.0, 4.0};
  EXPECT_DOUBLE_EQ(ep::norm_p(v, 1.0), 7.0);
  EXPECT_NEAR(ep::norm_p(v, 2.0), 5.0, 1e-12);
  EXPECT_DOUBLE_EQ(ep::norm_p(v, ep::kInf), 4.0);

  const auto env = ep::build_chain(-2.5, 3, 1.0);
  auto poisoned = env.mdp;
  poisoned.rewards(0, 0) += 0.5;
  poisoned.p(1, 0, 0) -= 0.1;
  poisoned.p(1, 0, 2) += 0.1;
  ep::AttackConfig cfg;
  const auto c = ep::per_pair_cost(poisoned, env.mdp, cfg);
  EXPECT_NEAR(c(0, 0), 3.0 * 0.5, 1e-12);
  EXPECT_NEAR(c(1, 0), 0.2, 1e-12);
  EXPECT_DOUBLE_EQ(c(2, 1), 0.0);
  EXPECT_NEAR(ep::attack_cost(poisoned, env.mdp, cfg), 1.5, 1e-12);
  cfg.p_norm = 1.0;
  EXPECT_NEAR(ep::attack_cost(poisoned, env.mdp, cfg), 1.7, 1e-12);
}

TEST(Offline, ConfigValidation) {
  ep::AttackConfig cfg;
  cfg.c_r = -1.0;
  EXPECT_THROW(ep::validate_config(cfg), ep::Error);
  cfg = {};
  cfg.p_norm = 0.5;
  EXPECT_THROW(ep::validate_config(cfg), ep::Error);
  cfg = {};
  cfg.delta = 1.5;
  EXPECT_THROW(ep::validate_config(cfg), ep::Error);
  cfg = {};
  cfg.epsilon = -0.1;
  EXPECT_THROW(ep::validate_config(cfg), ep::Error);
}

TEST(Offline, RAttackMatchesAllPoliciesProgram) {
  Gen gen(31);
  for (int i = 0; i < 25; ++i) {
    const auto m = gen.small_mdp(3, 3);
    const auto target = gen.policy(m.n_states, m.n_actions);
    ep::AttackConfig cfg;
    cfg.epsilon = gen.uniform(0.0, 0.3);
    cfg.mode = ep::AttackMode::kRewardsOnly;
    const auto sol = ep::solve_rattack(m, target, cfg);
    ASSERT_TRUE(sol.feasible);
    EXPECT_TRUE(ep::brute_force_eps_robust(sol.poisoned, target, cfg.epsilon - 1e-9));
    EXPECT_EQ(sol.poisoned.transitions, m.transitions);
    EXPECT_NEAR(sol.cost, all_policies_rattack(m, target, cfg), 1e-7);
  }
}

TEST(Offline, RAttackL1) {
  const auto env = ep::build_chain(-2.5, 4, 0.99);
  ep::AttackConfig cfg;
  cfg.p_norm = 1.0;
  const auto sol = ep::solve_rattack(env.mdp, env.target, cfg);
  ASSERT_TRUE(sol.feasible);
  EXPECT_GE(sol.verified_margin, cfg.epsilon - 1e-9);
  cfg.p_norm = 2.0;
  try {
    ep::solve_rattack(env.mdp, env.target, cfg);
    FAIL() << "expected an error";
  } catch (const ep::Error& e) {
    EXPECT_EQ(e.code(), ep::ErrorCode::kUnsupportedNorm);
  }
}

TEST(Offline, AlreadyRobustTargetCostsNothing) {
  Gen gen(41);
  const auto m = gen.mdp(3, 2, 0.9);
  const auto pi = ep::optimal_policy(m);
  const double margin = ep::robust_margin(m, pi);
  ep::AttackConfig cfg;
  cfg.epsilon = margin / 2.0;
  for (auto mode : {ep::AttackMode::kRewardsOnly, ep::AttackMode::kTransitionsOnly,
                    ep::AttackMode::kJoint, ep::AttackMode::kNonTargetOnly}) {
    cfg.mode = mode;
    const auto sol = ep::solve_attack(m, pi, cfg);
    EXPECT_TRUE(sol.feasible) << ep::to_string(mode);
    EXPECT_NEAR(sol.cost, 0.0, 1e-9) << ep::to_string(mode);
  }
}

TEST(Offline, DAttackKeepsRewardsAndFloor) {
  const auto env = ep::build_chain(-2.5, 4, 0.99);
  ep::AttackConfig cfg;
  cfg.mode = ep::AttackMode::kTransitionsOnly;
  cfg.epsilon = 0.3;
  const auto sol = ep::solve_dattack(env.mdp, env.target, cfg);
  ASSERT_TRUE(sol.feasible);
  EXPECT_EQ(sol.poisoned.rewards, env.mdp.rewards);
  EXPECT_TRUE(respects_floor(sol.poisoned, env.mdp, cfg.delta));
  EXPECT_TRUE(ep::brute_force_eps_robust(sol.poisoned, env.target, cfg.epsilon - 1e-9));
  ep::require_valid(sol.poisoned);
}

TEST(Offline, DAttackReportsInfeasibility) {
  const auto env = ep::build_chain(-2.5, 4, 0.99);
  ep::AttackConfig cfg;
  cfg.mode = ep::AttackMode::kTransitionsOnly;
  cfg.epsilon = 1.0;
  const auto sol = ep::solve_dattack(env.mdp, env.target, cfg);
  EXPECT_FALSE(sol.feasible);
  EXPECT_FALSE(sol.diagnostic.empty());
}

TEST(Offline, JAttackNoWorseThanComponents) {
  for (double gamma : {1.0, 0.99}) {
    const auto env = ep::build_chain(-2.5, 4, gamma);
    for (double eps : {0.1, 0.5}) {
      ep::AttackConfig cfg;
      cfg.epsilon = eps;
      const auto j = ep::solve_jattack(env.mdp, env.target, cfg);
      const auto r = ep::solve_rattack(env.mdp, env.target, cfg);
      const auto nt = ep::solve_nt_jattack(env.mdp, env.target, cfg);
      ASSERT_TRUE(j.feasible);
      EXPECT_LE(j.cost, std::min(r.cost, nt.cost) + 1e-9);
      EXPECT_TRUE(respects_floor(j.poisoned, env.mdp, cfg.delta));
      EXPECT_TRUE(ep::brute_force_eps_robust(j.poisoned, env.target, eps - 1e-9));
    }
  }
}

TEST(Offline, JointAttackOnRandomInstances) {
  Gen gen(43);
  for (int i = 0; i < 10; ++i) {
    const auto m = gen.small_mdp(4, 2);
    const auto target = gen.policy(m.n_states, m.n_actions);
    ep::AttackConfig cfg;
    cfg.epsilon = gen.uniform(0.01, 0.2);
    cfg.pool_points = 3;
    const auto sol = ep::solve_jattack(m, target, cfg);
    ASSERT_TRUE(sol.feasible);
    EXPECT_GE(ep::robust_margin(sol.poisoned, target), cfg.epsilon - 1e-9);
  }
}

TEST(Offline, BoundSandwichOnChain) {
  const auto env = ep::build_chain(-2.5, 4, 0.99);
  for (double eps : {0.1, 0.5, 1.0}) {
    ep::AttackConfig cfg;
    cfg.epsilon = eps;
    const auto b = ep::attack_cost_bounds(env.mdp, env.target, cfg);
    const auto c = ep::constructive_attack(env.mdp, env.target, cfg);
    ASSERT_TRUE(c.feasible) << eps;
    EXPECT_LE(b.lower, c.cost + 1e-6);
    EXPECT_LE(c.cost, b.upper + 1e-6);
    EXPECT_GT(b.lower, 0.0);
  }
}

TEST(Offline, BoundQuantitiesShape) {
  const auto env = ep::build_chain(-2.5, 4, 0.99);
  const ep::AttackConfig cfg;
  const auto q = ep::compute_bound_quantities(env.mdp, env.target, cfg);
  EXPECT_EQ(q.chi.rows(), 4u);
  EXPECT_EQ(q.state_order.size(), 4u);
  EXPECT_GT(q.alpha, 0.0);
  EXPECT_LE(q.alpha, 1.0);
  const auto vb = ep::evaluate_policy(env.mdp, env.target);
  for (std::size_t i = 1; i < 4; ++i) {
    EXPECT_GE(vb.v_values[q.state_order[i - 1]], vb.v_values[q.state_order[i]]);
  }
  for (std::size_t s = 0; s < 4; ++s) {
    EXPECT_DOUBLE_EQ(q.chi(s, env.target(s)), 0.0);
    for (std::size_t a = 0; a < 2; ++a) {
      EXPECT_GE(q.chi(s, a), 0.0);
      EXPECT_GE(q.chi_zero(s, a), 0.0);
      EXPECT_LE(q.chi_zero(s, a), q.chi(s, a) + 1e-12);
    }
  }
}

TEST(Offline, ConstructiveAttackOnRandomInstances) {
  Gen gen(47);
  int checked = 0;
  for (int i = 0; i < 40; ++i) {
    const auto m = gen.small_mdp(4, 3);
    const auto target = gen.policy(m.n_states, m.n_actions);
    ep::AttackConfig cfg;
    cfg.epsilon = gen.uniform(0.01, 0.2);
    try {
      const auto c = ep::constructive_attack(m, target, cfg);
      const auto b = ep::attack_cost_bounds(m, target, cfg);
      EXPECT_TRUE(c.feasible);
      EXPECT_LE(b.lower, c.cost + 1e-6);
      EXPECT_LE(c.cost, b.upper + 1e-6);
      ++checked;
    } catch (const ep::Error& e) {
      EXPECT_EQ(e.code(), ep::ErrorCode::kBetaUndefined);
    }
  }
  EXPECT_GT(checked, 10);
}
