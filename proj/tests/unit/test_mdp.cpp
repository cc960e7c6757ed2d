#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "envpoison/environments.hpp"
#include "envpoison/mdp.hpp"
#include "random_mdp.hpp"

namespace ep = envpoison;
using ep::testing::Gen;

namespace {

// Two states, one action: 0 -> 1 w.p. p, 1 -> 0 w.p. q.
ep::Mdp two_state(double p, double q, double r0, double r1, double gamma) {
  ep::Mdp m(2, 1, gamma);
  m.p(0, 0, 0) = 1.0 - p;
  m.p(0, 0, 1) = p;
  m.p(1, 0, 0) = q;
  m.p(1, 0, 1) = 1.0 - q;
  m.rewards(0, 0) = r0;
  m.rewards(1, 0) = r1;
  m.initial_dist = {0.5, 0.5};
  return m;
}

double bellman_residual(const ep::Mdp& m, const ep::Policy& pi) {
  const auto vb = ep::evaluate_policy(m, pi);
  double worst = 0.0;
  for (std::size_t s = 0; s < m.n_states; ++s) {
    for (std::size_t a = 0; a < m.n_actions; ++a) {
      double q = m.rewards(s, a) - vb.score;
      for (std::size_t x = 0; x < m.n_states; ++x) q += m.gamma * m.p(s, a, x) * vb.v_values[x];
      worst = std::max(worst, std::abs(q - vb.q_values(s, a)));
    }
    worst = std::max(worst, std::abs(vb.v_values[s] - vb.q_values(s, pi(s))));
  }
  return worst;
}

}  // namespace

TEST(Mdp, TwoStateHandValues) {
  const auto m = two_state(0.2, 0.3, 1.0, -1.0, 1.0);
  const ep::Policy pi({0, 0});
  const auto vb = ep::evaluate_policy(m, pi);
  EXPECT_NEAR(vb.state_dist[0], 0.6, 1e-12);
  EXPECT_NEAR(vb.state_dist[1], 0.4, 1e-12);
  EXPECT_NEAR(vb.score, 0.6 - 0.4, 1e-12);
  // bias difference (r0 - r1) / (p + q), centred so that mu^T V = 0
  EXPECT_NEAR(vb.v_values[0] - vb.v_values[1], 2.0 / 0.5, 1e-10);
  EXPECT_NEAR(0.6 * vb.v_values[0] + 0.4 * vb.v_values[1], 0.0, 1e-12);

  const auto rt = ep::reach_times(m, pi);
  EXPECT_NEAR(rt.times(0, 1), 1.0 / 0.2, 1e-10);
  EXPECT_NEAR(rt.times(1, 0), 1.0 / 0.3, 1e-10);
  EXPECT_EQ(rt.times(0, 0), 0.0);
  EXPECT_NEAR(rt.diameter, 5.0, 1e-10);
}

TEST(Mdp, TwoStateDiscountedReachTime) {
  const double g = 0.9;
  const auto m = two_state(0.2, 0.3, 1.0, -1.0, g);
  const auto rt = ep::reach_times(m, ep::Policy({0, 0}));
  EXPECT_NEAR(rt.times(0, 1), 1.0 / (1.0 - g * 0.8), 1e-10);
  EXPECT_NEAR(rt.times(1, 0), 1.0 / (1.0 - g * 0.7), 1e-10);
}

TEST(Mdp, DiscountedScoreMatchesStandardValue) {
  Gen gen(11);
  for (int i = 0; i < 50; ++i) {
    const auto m = gen.mdp(2 + gen.index(4), 2 + gen.index(2), gen.uniform(0.3, 0.99));
    const auto pi = gen.policy(m.n_states, m.n_actions);
    const auto vb = ep::evaluate_policy(m, pi);
    double d0v = 0.0;
    for (std::size_t s = 0; s < m.n_states; ++s) d0v += m.initial_dist[s] * vb.v_standard[s];
    EXPECT_NEAR(vb.score, (1.0 - m.gamma) * d0v, 1e-8);
    EXPECT_LE(bellman_residual(m, pi), 1e-8);
  }
}

TEST(Mdp, StationaryDistributionMatchesMonteCarlo) {
  Gen gen(5);
  const auto m = gen.mdp(4, 2, 1.0);
  const ep::Policy pi({1, 0, 1, 0});
  const auto mu = ep::state_distribution(m, pi);
  std::vector<double> counts(4, 0.0);
  std::size_t s = 0;
  const std::size_t steps = 400000;
  for (std::size_t t = 0; t < steps; ++t) {
    counts[s] += 1.0;
    std::discrete_distribution<std::size_t> next(m.row(s, pi(s)).begin(), m.row(s, pi(s)).end());
    s = next(gen.engine());
  }
  for (std::size_t x = 0; x < 4; ++x) EXPECT_NEAR(counts[x] / steps, mu[x], 5e-3);
}

TEST(Mdp, ReachTimesMatchMonteCarlo) {
  Gen gen(9);
  for (double gamma : {1.0, 0.9}) {
    const auto m = gen.mdp(3, 2, gamma);
    const ep::Policy pi({0, 1, 1});
    const auto rt = ep::reach_times(m, pi);
    const std::size_t episodes = 40000;
    double total = 0.0;
    for (std::size_t e = 0; e < episodes; ++e) {
      std::size_t s = 0;
      double discount = 1.0;
      while (s != 2) {
        total += discount;
        discount *= gamma;
        std::discrete_distribution<std::size_t> next(m.row(s, pi(s)).begin(), m.row(s, pi(s)).end());
        s = next(gen.engine());
      }
    }
    EXPECT_NEAR(total / episodes, rt.times(0, 2), 0.03 * rt.times(0, 2)) << "gamma " << gamma;
  }
}

TEST(Mdp, OptimalPolicyMatchesBruteForce) {
  Gen gen(21);
  for (int i = 0; i < 100; ++i) {
    const auto m = gen.small_mdp(5, 3);
    const auto pi = ep::optimal_policy(m);
    double best = -1e300;
    ep::for_each_policy(m.n_states, m.n_actions,
                        [&](const ep::Policy& p) { best = std::max(best, ep::policy_score(m, p)); });
    EXPECT_NEAR(ep::policy_score(m, pi), best, 1e-9);
  }
}

TEST(Mdp, NeighborCheckAgreesWithBruteForce) {
  Gen gen(3);
  int robust = 0;
  for (int i = 0; i < 150; ++i) {
    auto m = gen.small_mdp(4, 3);
    // Bias toward robust instances so both verdicts are exercised.
    const auto pi = i % 2 ? ep::optimal_policy(m) : gen.policy(m.n_states, m.n_actions);
    const double eps = gen.uniform(0.0, 0.05);
    const bool fast = ep::is_eps_robust_optimal(m, pi, eps);
    EXPECT_EQ(fast, ep::brute_force_eps_robust(m, pi, eps));
    robust += fast;
  }
  EXPECT_GT(robust, 10);
  EXPECT_LT(robust, 140);
}

TEST(Mdp, ScoreGapIdentity) {
  Gen gen(17);
  for (int i = 0; i < 100; ++i) {
    const auto m = gen.small_mdp(5, 3);
    const auto pi = gen.policy(m.n_states, m.n_actions);
    const std::size_t s = gen.index(m.n_states);
    const std::size_t a = (pi(s) + 1 + gen.index(m.n_actions - 1)) % m.n_actions;
    const auto [lhs, rhs] = ep::score_gap_identity(m, pi, s, a);
    EXPECT_NEAR(lhs, rhs, 1e-8);
  }
}

TEST(Mdp, RobustMarginIsMinimumNeighborGap) {
  Gen gen(23);
  const auto m = gen.mdp(4, 3, 0.95);
  const auto pi = ep::optimal_policy(m);
  const double rho = ep::policy_score(m, pi);
  double worst = 1e300;
  for (std::size_t s = 0; s < 4; ++s) {
    for (std::size_t a = 0; a < 3; ++a) {
      if (a != pi(s)) worst = std::min(worst, rho - ep::policy_score(m, ep::neighbor_policy(pi, s, a)));
    }
  }
  EXPECT_NEAR(ep::robust_margin(m, pi), worst, 1e-12);
  EXPECT_GE(worst, 0.0);
}

TEST(Mdp, HajnalAlphaHandValue) {
  const auto m = two_state(0.2, 0.3, 0.0, 0.0, 1.0);
  // rows (0.8, 0.2) and (0.3, 0.7) overlap in 0.3 + 0.2
  EXPECT_NEAR(ep::hajnal_alpha(m), 0.5, 1e-12);
}

TEST(Mdp, ValidationRejectsBadInput) {
  auto m = two_state(0.2, 0.3, 0.0, 0.0, 1.0);
  m.p(0, 0, 0) = 0.5;
  EXPECT_FALSE(ep::validate_mdp(m).stochastic);
  try {
    ep::require_valid(m);
    FAIL() << "expected an error";
  } catch (const ep::Error& e) {
    EXPECT_EQ(e.code(), ep::ErrorCode::kMalformedTransitions);
  }

  // Two closed classes under the only policy.
  auto split = two_state(0.0, 0.0, 0.0, 0.0, 1.0);
  EXPECT_FALSE(ep::validate_mdp(split).ergodic);

  const auto ok = two_state(0.2, 0.3, 0.0, 0.0, 1.0);
  EXPECT_THROW(ep::evaluate_policy(ok, ep::Policy({0})), ep::Error);
  EXPECT_THROW(ep::evaluate_policy(ok, ep::Policy({0, 1})), ep::Error);
}

TEST(Mdp, BruteForceRefusesLargeInstances) {
  Gen gen(1);
  const auto m = gen.mdp(21, 2, 1.0);
  try {
    ep::brute_force_eps_robust(m, ep::Policy::constant(21, 0), 0.1);
    FAIL() << "expected an error";
  } catch (const ep::Error& e) {
    EXPECT_EQ(e.code(), ep::ErrorCode::kOracleSizeLimit);
  }
}

TEST(Mdp, ErrorMessagesStartWithCanonicalPhrase) {
  const ep::Error e(ep::ErrorCode::kNotErgodic, "state 3");
  EXPECT_EQ(std::string(e.what()).rfind(ep::to_string(ep::ErrorCode::kNotErgodic), 0), 0u);
}

TEST(Environments, ChainLayout) {
  const auto env = ep::build_chain(-2.5, 4, 1.0);
  ep::require_valid(env.mdp);
  EXPECT_EQ(env.target, ep::Policy::constant(4, 1));
  EXPECT_DOUBLE_EQ(env.mdp.rewards(0, 0), -2.5);
  EXPECT_DOUBLE_EQ(env.mdp.rewards(3, 1), -0.5);
  EXPECT_NEAR(env.mdp.p(1, 1, 2), 0.9 + 0.025, 1e-15);
  EXPECT_NEAR(env.mdp.p(3, 1, 3), 0.9 + 0.025, 1e-15);
  // The target is not optimal before poisoning.
  EXPECT_FALSE(ep::is_eps_robust_optimal(env.mdp, env.target, 0.0));
}

TEST(Environments, NavigationIsErgodic) {
  const auto env = ep::build_navigation(0.0, 0.99);
  ep::require_valid(env.mdp);
  EXPECT_EQ(env.mdp.n_states, 9u);
  EXPECT_EQ(env.target(0), 1u);
  EXPECT_FALSE(ep::is_eps_robust_optimal(env.mdp, env.target, 0.1));
}
