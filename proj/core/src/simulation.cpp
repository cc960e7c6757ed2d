#include "envpoison/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace envpoison {

namespace {

constexpr std::size_t kSuboptStateLimit = 10;

bool non_target_pure(const Mdp& sampling, const Mdp& original, const Policy& target) {
  for (std::size_t s = 0; s < original.n_states; ++s) {
    const std::size_t a = target(s);
    if (sampling.rewards(s, a) != original.rewards(s, a)) return false;
    auto ph = sampling.row(s, a);
    auto pb = original.row(s, a);
    if (!std::equal(ph.begin(), ph.end(), pb.begin())) return false;
  }
  return true;
}

}  // namespace

std::vector<std::size_t> geometric_checkpoints(std::size_t horizon) {
  std::vector<std::size_t> out;
  for (std::size_t t = 1; t < horizon; t *= 2) out.push_back(t);
  out.push_back(horizon);
  return out;
}

SimContext prepare_context(const Mdp& original, const Policy& target, const SimConfig& cfg) {
  if (cfg.horizon == 0) throw Error(ErrorCode::kInvalidArgument, "horizon must be at least 1");
  require_valid(original);
  require_policy(original, target);
  SimContext ctx;
  if (cfg.sampling) {
    const Mdp& m = *cfg.sampling;
    if (m.n_states != original.n_states || m.n_actions != original.n_actions) {
      throw Error(ErrorCode::kShapeMismatch, "sampling MDP shape differs from the environment");
    }
    for (double r : m.rewards.values()) {
      if (!std::isfinite(r)) throw Error(ErrorCode::kNumericalFailure, "sampling MDP has a NaN or infinite reward");
    }
    for (double p : m.transitions) {
      if (!std::isfinite(p)) throw Error(ErrorCode::kNumericalFailure, "sampling MDP has a NaN probability");
    }
    require_valid(m);
    ctx.feedback = &m;
    ctx.step_cost = per_pair_cost(m, original, cfg.cost_cfg);
    if (non_target_pure(m, original, target)) {
      for (std::size_t s = 0; s < original.n_states; ++s) ctx.step_cost(s, target(s)) = 0.0;
    }
  } else {
    ctx.feedback = &original;
    ctx.step_cost = Matrix(original.n_states, original.n_actions);
  }
  const Mdp& fb = *ctx.feedback;
  ctx.optimal_score = policy_score(fb, optimal_policy(fb));

  const std::size_t n = fb.n_states;
  ctx.near_optimal.assign(n, std::vector<bool>(fb.n_actions, false));
  const double count = std::pow(static_cast<double>(fb.n_actions), static_cast<double>(n));
  if (n <= kSuboptStateLimit && count <= kBruteForceLimit) {
    const double threshold = ctx.optimal_score - cfg.cost_cfg.epsilon + kMarginSlack;
    for_each_policy(n, fb.n_actions, [&](const Policy& pi) {
      if (policy_score(fb, pi) < threshold) return;
      for (std::size_t s = 0; s < n; ++s) ctx.near_optimal[s][pi(s)] = true;
    });
  } else {
    for (std::size_t s = 0; s < n; ++s) ctx.near_optimal[s][target(s)] = true;
  }

  ctx.cumulative.resize(fb.transitions.size());
  for (std::size_t i = 0; i < n * fb.n_actions; ++i) {
    double acc = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
      acc += fb.transitions[i * n + x];
      ctx.cumulative[i * n + x] = acc;
    }
  }
  return ctx;
}

SimTrace run_online(const Mdp& original, const Policy& target, Learner& learner,
                    const SimConfig& cfg) {
  const SimContext ctx = prepare_context(original, target, cfg);
  return run_online(original, target, learner, cfg, ctx);
}

SimTrace run_online(const Mdp& original, const Policy& target, Learner& learner,
                    const SimConfig& cfg, const SimContext& ctx) {
  const Mdp& fb = *ctx.feedback;
  const std::size_t n = fb.n_states;
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed),
                    static_cast<std::uint32_t>(cfg.seed >> 32), 0x5eedu};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto draw = [&](const double* cdf) {
    const double u = unif(rng);
    std::size_t x = static_cast<std::size_t>(std::upper_bound(cdf, cdf + n, u) - cdf);
    return std::min(x, n - 1);
  };
  std::vector<double> d0_cdf(n);
  double acc = 0.0;
  for (std::size_t x = 0; x < n; ++x) d0_cdf[x] = acc += original.initial_dist[x];

  const std::vector<std::size_t> marks =
      cfg.checkpoints.empty() ? geometric_checkpoints(cfg.horizon) : cfg.checkpoints;
  std::size_t next_mark = 0;

  SimTrace trace;
  trace.optimal_score = ctx.optimal_score;
  trace.metrics.p_norm = cfg.cost_cfg.p_norm;
  if (cfg.keep_records) trace.records.reserve(cfg.horizon);

  std::size_t s = draw(d0_cdf.data());
  for (std::size_t t = 1; t <= cfg.horizon; ++t) {
    const std::size_t a = learner.act(s);
    if (a >= fb.n_actions) throw Error(ErrorCode::kInvalidArgument, "learner chose an invalid action");
    const double r = fb.rewards(s, a);
    const std::size_t next = draw(ctx.cumulative.data() + (s * fb.n_actions + a) * n);
    const double cost = ctx.step_cost(s, a);
    learner.observe(s, a, r, next);
    record_step(trace.metrics, s, a, target, cost, r);
    if (!ctx.near_optimal[s][a]) ++trace.metrics.subopt_count;
    if (cfg.keep_records) trace.records.push_back({t, s, a, a == target(s), cost, r});
    while (next_mark < marks.size() && marks[next_mark] == t) {
      const double regret = ctx.optimal_score * static_cast<double>(t) - trace.metrics.cum_reward;
      trace.checkpoints.push_back({t, trace.metrics.avg_miss(), trace.metrics.avg_cost(), regret,
                                   trace.metrics.subopt_count});
      ++next_mark;
    }
    s = next;
  }
  trace.regret = ctx.optimal_score * static_cast<double>(cfg.horizon) - trace.metrics.cum_reward;
  return trace;
}

BatchResult run_batch(const Mdp& original, const Policy& target, const LearnerFactory& factory,
                      const SimConfig& cfg, std::size_t n_runs) {
  if (n_runs == 0) throw Error(ErrorCode::kInvalidArgument, "n_runs must be at least 1");
  const SimContext ctx = prepare_context(original, target, cfg);
  BatchResult out;
  out.runs.reserve(n_runs);
  for (std::size_t i = 0; i < n_runs; ++i) {
    SimConfig run_cfg = cfg;
    run_cfg.seed = cfg.seed + i;
    auto learner = factory(run_cfg.seed);
    out.runs.push_back(run_online(original, target, *learner, run_cfg, ctx));
  }
  const std::size_t n_marks = out.runs.front().checkpoints.size();
  const double k = static_cast<double>(n_runs);
  for (std::size_t c = 0; c < n_marks; ++c) {
    BatchPoint p;
    p.t = out.runs.front().checkpoints[c].t;
    double sm = 0.0, sc = 0.0;
    for (const auto& run : out.runs) {
      sm += run.checkpoints[c].avg_miss;
      sc += run.checkpoints[c].avg_cost;
    }
    p.avg_miss_mean = sm / k;
    p.avg_cost_mean = sc / k;
    if (n_runs > 1) {
      double vm = 0.0, vc = 0.0;
      for (const auto& run : out.runs) {
        vm += std::pow(run.checkpoints[c].avg_miss - p.avg_miss_mean, 2);
        vc += std::pow(run.checkpoints[c].avg_cost - p.avg_cost_mean, 2);
      }
      p.avg_miss_sem = std::sqrt(vm / (k - 1.0)) / std::sqrt(k);
      p.avg_cost_sem = std::sqrt(vc / (k - 1.0)) / std::sqrt(k);
    }
    out.points.push_back(p);
  }
  return out;
}

}  // namespace envpoison
