#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "envpoison/types.hpp"

namespace envpoison {

/// Tabular MDP (S, A, R, P, gamma, d0). gamma == 1 selects the average-reward
/// criterion, gamma < 1 the discounted one.
struct Mdp {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  Matrix rewards;              // [n_states x n_actions]
  std::vector<double> transitions;  // [n_states x n_actions x n_states], flattened
  double gamma = 1.0;
  std::vector<double> initial_dist;

  Mdp() = default;
  Mdp(std::size_t states, std::size_t actions, double discount);

  double& p(std::size_t s, std::size_t a, std::size_t next) {
    return transitions[(s * n_actions + a) * n_states + next];
  }
  double p(std::size_t s, std::size_t a, std::size_t next) const {
    return transitions[(s * n_actions + a) * n_states + next];
  }
  std::span<double> row(std::size_t s, std::size_t a) {
    return {transitions.data() + (s * n_actions + a) * n_states, n_states};
  }
  std::span<const double> row(std::size_t s, std::size_t a) const {
    return {transitions.data() + (s * n_actions + a) * n_states, n_states};
  }

  bool is_average_reward() const noexcept { return gamma >= 1.0; }
  bool operator==(const Mdp&) const = default;
};

/// Deterministic policy: one action index per state.
class Policy {
 public:
  Policy() = default;
  explicit Policy(std::vector<std::size_t> actions) : actions_(std::move(actions)) {}
  static Policy constant(std::size_t n_states, std::size_t action) {
    return Policy(std::vector<std::size_t>(n_states, action));
  }

  std::size_t operator()(std::size_t s) const { return actions_[s]; }
  std::size_t size() const noexcept { return actions_.size(); }
  const std::vector<std::size_t>& actions() const noexcept { return actions_; }
  bool operator==(const Policy&) const = default;

 private:
  std::vector<std::size_t> actions_;
};

struct ValueBundle {
  double score = 0.0;               // rho
  Vector state_dist;                // mu
  Vector v_values;                  // shifted V
  Matrix q_values;                  // shifted Q
  Vector v_standard;                // unshifted discounted V (== v_values when gamma == 1)
};

struct ReachTimes {
  Matrix times;  // times(s, s') = discounted expected steps to first reach s' from s
  double diameter = 0.0;
};

struct ValidationReport {
  bool stochastic = true;
  bool ergodic = true;
  std::vector<std::string> problems;
  bool ok() const noexcept { return stochastic && ergodic; }
};

inline constexpr double kInputTolerance = 1e-12;
/// Slack used when checking a margin condition rho(pi) >= rho(pi') + eps.
inline constexpr double kMarginSlack = 1e-9;

ValidationReport validate_mdp(const Mdp& m);
/// Throws Error{kMalformedTransitions | kNotErgodic} unless validate_mdp passes.
void require_valid(const Mdp& m);
void require_policy(const Mdp& m, const Policy& pi);

Vector state_distribution(const Mdp& m, const Policy& pi);
ValueBundle evaluate_policy(const Mdp& m, const Policy& pi);
double policy_score(const Mdp& m, const Policy& pi);
ReachTimes reach_times(const Mdp& m, const Policy& pi);
double hajnal_alpha(const Mdp& m);

Policy neighbor_policy(const Policy& pi, std::size_t s, std::size_t a);

/// min over neighbors of rho(pi) - rho(neighbor); +inf when |A| == 1.
double robust_margin(const Mdp& m, const Policy& pi);
bool is_eps_robust_optimal(const Mdp& m, const Policy& pi, double eps);

inline constexpr double kBruteForceLimit = 1e6;
bool brute_force_eps_robust(const Mdp& m, const Policy& pi, double eps);

/// Howard policy iteration, ties to the lowest action index.
Policy optimal_policy(const Mdp& m);

/// (rho(pi) - rho(pi<s;a>), mu^{pi<s;a>}(s) * (V(s) - Q(s,a))), computed independently.
std::pair<double, double> score_gap_identity(const Mdp& m, const Policy& pi, std::size_t s,
                                             std::size_t a);

/// Calls fn(policy) for every deterministic policy in lexicographic order.
template <typename Fn>
void for_each_policy(std::size_t n_states, std::size_t n_actions, Fn&& fn) {
  std::vector<std::size_t> actions(n_states, 0);
  while (true) {
    fn(Policy(actions));
    std::size_t i = 0;
    while (i < n_states && ++actions[i] == n_actions) actions[i++] = 0;
    if (i == n_states) return;
  }
}

}  // namespace envpoison
