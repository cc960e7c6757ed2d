#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "envpoison/learners.hpp"
#include "envpoison/mdp.hpp"
#include "envpoison/offline.hpp"

namespace envpoison {

struct SimConfig {
  std::size_t horizon = 1;
  std::uint64_t seed = 0;
  std::optional<Mdp> sampling;  // attacker's feedback MDP; none = clean environment
  AttackConfig cost_cfg;        // weights and p for step costs, epsilon for SubOpt
  std::vector<std::size_t> checkpoints;  // empty = geometric 2^k plus horizon
  bool keep_records = false;
};

struct StepRecord {
  std::size_t t = 0;
  std::size_t state = 0;
  std::size_t action = 0;
  bool matched = false;
  double step_cost = 0.0;
  double reward = 0.0;
};

struct Checkpoint {
  std::size_t t = 0;
  double avg_miss = 0.0;
  double avg_cost = 0.0;
  double regret = 0.0;  // rho* t - cumulative feedback reward
  std::size_t subopt = 0;
};

struct SimTrace {
  std::vector<StepRecord> records;
  std::vector<Checkpoint> checkpoints;
  MetricsAccumulator metrics;
  double optimal_score = 0.0;  // rho* of the feedback MDP
  double regret = 0.0;
};

std::vector<std::size_t> geometric_checkpoints(std::size_t horizon);

/// Quantities shared by every run on the same (original, target, config).
struct SimContext {
  const Mdp* feedback = nullptr;
  Matrix step_cost;  // per-pair cost of the sampling MDP against the original
  double optimal_score = 0.0;
  std::vector<std::vector<bool>> near_optimal;  // [s][a]: a is played by an eps-near-optimal policy
  std::vector<double> cumulative;  // row-wise CDFs of the feedback kernel
};

SimContext prepare_context(const Mdp& original, const Policy& target, const SimConfig& cfg);

SimTrace run_online(const Mdp& original, const Policy& target, Learner& learner,
                    const SimConfig& cfg);
SimTrace run_online(const Mdp& original, const Policy& target, Learner& learner,
                    const SimConfig& cfg, const SimContext& ctx);

using LearnerFactory = std::function<std::unique_ptr<Learner>(std::uint64_t seed)>;

struct BatchPoint {
  std::size_t t = 0;
  double avg_miss_mean = 0.0;
  double avg_miss_sem = 0.0;
  double avg_cost_mean = 0.0;
  double avg_cost_sem = 0.0;
};

struct BatchResult {
  std::vector<BatchPoint> points;
  std::vector<SimTrace> runs;  // records dropped unless cfg.keep_records
};

/// Runs seeds cfg.seed + i for i < n_runs; learner seeds come from the factory.
BatchResult run_batch(const Mdp& original, const Policy& target, const LearnerFactory& factory,
                      const SimConfig& cfg, std::size_t n_runs);

}  // namespace envpoison
