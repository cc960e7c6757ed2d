#pragma once

#include <cstddef>
#include <utility>

#include "envpoison/mdp.hpp"

namespace envpoison {

struct Environment {
  Mdp mdp;
  Policy target;
};

/// n-state chain with actions {0: left, 1: right}. Each action moves one
/// step in its direction w.p. 0.9 (blocked at the ends) and lands uniformly
/// w.p. 0.1. R(s0) = reward_s0, R(s_last) = -0.5, all other states 0.5.
/// Target: always right.
Environment build_chain(double reward_s0, std::size_t n_states = 4, double gamma = 1.0);

/// 9-state, 2-action navigation layout (see data/navigation.json).
/// R(s1..s3) = -2.5, R(s4, s5) = 1, R(s6..s8) = 0, R(s0) = reward_s0.
Environment build_navigation(double reward_s0 = 0.0, double gamma = 1.0);

}  // namespace envpoison
