#pragma once

#include <algorithm>
#include <cmath>

#include "envpoison/mdp.hpp"
#include "envpoison/offline.hpp"

namespace envpoison::testing {

// Cheapest change of one non-target pair (s, a) of a 3-state MDP, found by
// searching rows P_bar + d over a lattice of displacements. For a fixed row
// the neighbor's score is affine in the reward with slope mu(s), so the
// reward needed follows from one policy evaluation. The cost as a function
// of the row is convex, which makes the coarse-to-fine refinement exact up
// to the final lattice step.
inline double pair_grid_oracle(const Mdp& m, const Policy& target, const AttackConfig& cfg, std::size_t s,
                               std::size_t a) {
  const double rho_t = policy_score(m, target);
  const Policy nbr = neighbor_policy(target, s, a);
  const auto cost_at = [&](double d0, double d1) -> double {
    const double row[3] = {m.p(s, a, 0) + d0, m.p(s, a, 1) + d1, m.p(s, a, 2) - d0 - d1};
    double dp = 0.0;
    for (int x = 0; x < 3; ++x) {
      if (row[x] < cfg.delta * m.p(s, a, x) || row[x] > 1.0) return INFINITY;
      dp += std::abs(row[x] - m.p(s, a, x));
    }
    Mdp trial = m;
    std::copy(row, row + 3, trial.row(s, a).begin());
    const ValueBundle vb = evaluate_policy(trial, nbr);
    const double r_max = m.rewards(s, a) + (rho_t - cfg.epsilon - vb.score) / vb.state_dist[s];
    return cfg.c_r * std::max(0.0, m.rewards(s, a) - r_max) + cfg.c_p * dp;
  };
  double best = cost_at(0.0, 0.0), c0 = 0.0, c1 = 0.0;
  double span = 1.0;
  for (int level = 0; level < 4; ++level) {
    const int half = 60;
    const double h = span / half;
    const double b0 = c0, b1 = c1;
    for (int i = -half; i <= half; ++i) {
      for (int j = -half; j <= half; ++j) {
        const double v = cost_at(b0 + i * h, b1 + j * h);
        if (v < best) best = v, c0 = b0 + i * h, c1 = b1 + j * h;
      }
    }
    span = 3.0 * h;
  }
  return best;
}

}  // namespace envpoison::testing
