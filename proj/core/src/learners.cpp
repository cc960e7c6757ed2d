#include "envpoison/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace envpoison {

UcrlLearner::UcrlLearner(std::size_t n_states, std::size_t n_actions, UcrlOptions options,
                         std::uint64_t seed)
    : n_states_(n_states),
      n_actions_(n_actions),
      opt_(options),
      rng_(seed),
      visits_(n_states * n_actions, 0.0),
      episode_visits_(n_states * n_actions, 0.0),
      reward_sum_(n_states * n_actions, 0.0),
      trans_counts_(n_states * n_actions * n_states, 0.0),
      policy_(Policy::constant(n_states, 0)) {
  if (n_states == 0 || n_actions == 0) throw Error(ErrorCode::kInvalidArgument, "empty learner");
  if (!(options.confidence > 0.0 && options.confidence < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "confidence must lie in (0, 1)");
  }
}

std::size_t UcrlLearner::act(std::size_t state) {
  if (need_episode_) start_episode();
  return policy_(state);
}

void UcrlLearner::observe(std::size_t state, std::size_t action, double reward,
                          std::size_t next_state) {
  const std::size_t i = state * n_actions_ + action;
  episode_visits_[i] += 1.0;
  reward_sum_[i] += reward;
  trans_counts_[i * n_states_ + next_state] += 1.0;
  if (!seen_reward_) {
    reward_lo_ = reward_hi_ = reward;
    seen_reward_ = true;
  } else {
    reward_lo_ = std::min(reward_lo_, reward);
    reward_hi_ = std::max(reward_hi_, reward);
  }
  ++t_;
  if (episode_visits_[i] >= std::max(1.0, visits_[i])) need_episode_ = true;
}

void UcrlLearner::start_episode() {
  need_episode_ = false;
  ++episodes_;
  for (std::size_t i = 0; i < visits_.size(); ++i) {
    visits_[i] += episode_visits_[i];
    episode_visits_[i] = 0.0;
  }
  const std::size_t n = n_states_;
  const std::size_t na = n_actions_;
  const double log_term = std::log(static_cast<double>(n * na) * static_cast<double>(t_) / opt_.confidence);
  const double span = reward_hi_ - reward_lo_;

  std::vector<double> r_opt(n * na), p_rad(n * na);
  std::vector<double> p_hat(n * na * n, 0.0);
  for (std::size_t i = 0; i < n * na; ++i) {
    const double cnt = visits_[i];
    if (cnt == 0.0) {
      r_opt[i] = reward_hi_;
      p_rad[i] = 2.0;
      for (std::size_t x = 0; x < n; ++x) p_hat[i * n + x] = 1.0 / static_cast<double>(n);
      continue;
    }
    const double mean = reward_sum_[i] / cnt;
    r_opt[i] = std::min(reward_hi_, mean + span * std::sqrt(opt_.reward_scale * log_term / cnt));
    p_rad[i] = std::min(2.0, std::sqrt(opt_.transition_scale * static_cast<double>(n) * log_term / cnt));
    for (std::size_t x = 0; x < n; ++x) p_hat[i * n + x] = trans_counts_[i * n + x] / cnt;
  }

  std::vector<double> u(n, 0.0), next(n, 0.0);
  std::vector<std::size_t> order(n);
  std::vector<double> p(n);
  std::vector<std::size_t> best(n, 0);
  for (std::size_t iter = 0; iter < opt_.evi_max_iterations; ++iter) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return u[a] > u[b]; });
    for (std::size_t s = 0; s < n; ++s) {
      double best_val = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < na; ++a) {
        const std::size_t i = s * na + a;
        std::copy(p_hat.begin() + static_cast<std::ptrdiff_t>(i * n),
                  p_hat.begin() + static_cast<std::ptrdiff_t>((i + 1) * n), p.begin());
        // Optimistic kernel: add radius/2 to the best state, drain the worst.
        p[order[0]] = std::min(1.0, p[order[0]] + p_rad[i] / 2.0);
        double total = std::accumulate(p.begin(), p.end(), 0.0);
        for (std::size_t j = n; j-- > 0 && total > 1.0;) {
          const std::size_t x = order[j];
          if (x == order[0]) continue;
          const double cut = std::min(p[x], total - 1.0);
          p[x] -= cut;
          total -= cut;
        }
        double val = r_opt[i];
        for (std::size_t x = 0; x < n; ++x) val += p[x] * u[x];
        if (val > best_val) {
          best_val = val;
          best[s] = a;
        }
      }
      next[s] = best_val;
    }
    double lo = next[0] - u[0], hi = lo;
    for (std::size_t s = 1; s < n; ++s) {
      lo = std::min(lo, next[s] - u[s]);
      hi = std::max(hi, next[s] - u[s]);
    }
    optimistic_gain_ = 0.5 * (lo + hi);
    const double shift = next[0];
    for (std::size_t s = 0; s < n; ++s) u[s] = next[s] - shift;
    if (hi - lo < opt_.evi_tolerance) break;
  }
  policy_ = Policy(best);
}

QLearner::QLearner(std::size_t n_states, std::size_t n_actions, QLearningOptions options,
                   std::uint64_t seed)
    : n_states_(n_states),
      n_actions_(n_actions),
      opt_(options),
      rng_(seed),
      q_(n_states * n_actions, 0.0),
      visits_(n_states * n_actions, 0.0) {
  if (n_states == 0 || n_actions == 0) throw Error(ErrorCode::kInvalidArgument, "empty learner");
  if (!(options.exploration >= 0.0 && options.exploration <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "exploration must lie in [0, 1]");
  }
}

std::size_t QLearner::greedy(std::size_t s) const {
  std::size_t best = 0;
  for (std::size_t a = 1; a < n_actions_; ++a) {
    if (q(s, a) > q(s, best)) best = a;
  }
  return best;
}

std::size_t QLearner::act(std::size_t state) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng_) < opt_.exploration) {
    std::uniform_int_distribution<std::size_t> pick(0, n_actions_ - 1);
    return pick(rng_);
  }
  return greedy(state);
}

void QLearner::observe(std::size_t state, std::size_t action, double reward, std::size_t next_state) {
  const std::size_t i = state * n_actions_ + action;
  const double lr = std::pow(1.0 + visits_[i], -opt_.rate_exponent);
  visits_[i] += 1.0;
  const double target = reward + opt_.gamma * q(next_state, greedy(next_state));
  q_[i] += lr * (target - q_[i]);
}

Policy QLearner::greedy_policy() const {
  std::vector<std::size_t> actions(n_states_);
  for (std::size_t s = 0; s < n_states_; ++s) actions[s] = greedy(s);
  return Policy(std::move(actions));
}

double MetricsAccumulator::avg_cost() const {
  if (t == 0) return 0.0;
  const double T = static_cast<double>(t);
  if (std::isinf(p_norm)) return cost_power_sum / T;
  if (p_norm == 1.0) return cost_power_sum / T;
  return std::pow(cost_power_sum, 1.0 / p_norm) / T;
}

void record_step(MetricsAccumulator& acc, std::size_t state, std::size_t action,
                 const Policy& target, double step_cost, double reward) {
  ++acc.t;
  if (action != target(state)) ++acc.mismatch_count;
  if (std::isinf(acc.p_norm)) {
    acc.cost_power_sum = std::max(acc.cost_power_sum, step_cost);
  } else if (acc.p_norm == 1.0) {
    acc.cost_power_sum += step_cost;
  } else {
    acc.cost_power_sum += std::pow(step_cost, acc.p_norm);
  }
  acc.cum_reward += reward;
  if (acc.keep_costs) acc.step_costs.push_back(step_cost);
}

}  // namespace envpoison
