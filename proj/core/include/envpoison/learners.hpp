#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "envpoison/mdp.hpp"

namespace envpoison {

/// The victim sees only (s, a, r, s'); nothing about the attack.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual std::size_t act(std::size_t state) = 0;
  virtual void observe(std::size_t state, std::size_t action, double reward,
                       std::size_t next_state) = 0;
};

struct UcrlOptions {
  double confidence = 0.05;
  // Radii: reward_span * sqrt(reward_scale * L / N) and sqrt(transition_scale * S * L / N),
  // with L = log(S * A * t / confidence).
  double reward_scale = 1.0;
  double transition_scale = 1.0;
  double evi_tolerance = 1e-4;
  std::size_t evi_max_iterations = 20000;
};

/// Episodic optimistic learner for the average-reward setting: episodes end
/// when a visit count doubles; each episode plays the greedy policy of
/// extended value iteration over the confidence set.
class UcrlLearner final : public Learner {
 public:
  UcrlLearner(std::size_t n_states, std::size_t n_actions, UcrlOptions options, std::uint64_t seed);

  std::size_t act(std::size_t state) override;
  void observe(std::size_t state, std::size_t action, double reward, std::size_t next_state) override;

  const Policy& current_policy() const noexcept { return policy_; }
  /// Gain estimate of the optimistic MDP at the last episode start.
  double optimistic_gain() const noexcept { return optimistic_gain_; }
  std::size_t episodes() const noexcept { return episodes_; }

 private:
  void start_episode();

  std::size_t n_states_, n_actions_;
  UcrlOptions opt_;
  std::mt19937_64 rng_;
  std::vector<double> visits_;          // N(s,a) before the current episode
  std::vector<double> episode_visits_;  // nu(s,a)
  std::vector<double> reward_sum_;
  std::vector<double> trans_counts_;    // [s][a][x], includes the current episode
  double reward_lo_ = 0.0, reward_hi_ = 0.0;
  bool seen_reward_ = false;
  std::size_t t_ = 1;
  std::size_t episodes_ = 0;
  bool need_episode_ = true;
  double optimistic_gain_ = 0.0;
  Policy policy_;
};

struct QLearningOptions {
  double gamma = 0.99;
  double exploration = 0.001;
  double rate_exponent = 0.6;  // lr = (1 + visits)^-exponent
};

class QLearner final : public Learner {
 public:
  QLearner(std::size_t n_states, std::size_t n_actions, QLearningOptions options, std::uint64_t seed);

  std::size_t act(std::size_t state) override;
  void observe(std::size_t state, std::size_t action, double reward, std::size_t next_state) override;

  double q(std::size_t s, std::size_t a) const { return q_[s * n_actions_ + a]; }
  void set_q(std::size_t s, std::size_t a, double value) { q_[s * n_actions_ + a] = value; }
  Policy greedy_policy() const;

 private:
  std::size_t greedy(std::size_t s) const;

  std::size_t n_states_, n_actions_;
  QLearningOptions opt_;
  std::mt19937_64 rng_;
  std::vector<double> q_;
  std::vector<double> visits_;
};

struct MetricsAccumulator {
  double p_norm = 1.0;
  std::size_t t = 0;
  std::size_t mismatch_count = 0;
  std::size_t subopt_count = 0;
  double cost_power_sum = 0.0;  // sum c_t^p (or running max when p = inf)
  double cum_reward = 0.0;
  std::vector<double> step_costs;
  bool keep_costs = false;

  double avg_miss() const { return t ? static_cast<double>(mismatch_count) / static_cast<double>(t) : 0.0; }
  double avg_cost() const;
};

void record_step(MetricsAccumulator& acc, std::size_t state, std::size_t action,
                 const Policy& target, double step_cost, double reward);

}  // namespace envpoison
