#include "envpoison/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>

#include "dense.hpp"

namespace envpoison {

namespace {

using detail::EigenMatrix;
using detail::EigenVector;

const char* canonical_phrase(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedTransitions: return "malformed transitions";
    case ErrorCode::kNotErgodic: return "not ergodic";
    case ErrorCode::kDegenerateChain: return "degenerate chain";
    case ErrorCode::kUnreachableState: return "unreachable state";
    case ErrorCode::kOracleSizeLimit: return "oracle size limit";
    case ErrorCode::kPolicyIterationStalled: return "policy iteration stalled";
    case ErrorCode::kBetaUndefined: return "beta undefined";
    case ErrorCode::kUnsupportedNorm: return "unsupported norm for joint LP";
    case ErrorCode::kFormulaOutOfDomain: return "formula out of domain";
    case ErrorCode::kInvalidWeight: return "invalid weight";
    case ErrorCode::kNumericalFailure: return "numerical failure";
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kConfiguration: return "configuration error";
    case ErrorCode::kInternal: return "internal consistency error";
  }
  return "error";
}

std::string compose(ErrorCode code, const std::string& detail) {
  std::string msg = canonical_phrase(code);
  if (!detail.empty()) msg += ": " + detail;
  return msg;
}

// Shape and stochasticity only; the numerical routines detect ergodicity
// violations through singular systems.
void require_structure(const Mdp& m) {
  const std::size_t n = m.n_states;
  if (n == 0 || m.n_actions == 0) throw Error(ErrorCode::kShapeMismatch, "empty state or action set");
  if (m.rewards.rows() != n || m.rewards.cols() != m.n_actions ||
      m.transitions.size() != n * m.n_actions * n || m.initial_dist.size() != n) {
    throw Error(ErrorCode::kShapeMismatch, "MDP arrays disagree with n_states/n_actions");
  }
  if (!(m.gamma > 0.0 && m.gamma <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "gamma must lie in (0, 1]");
}

EigenMatrix policy_matrix(const Mdp& m, const Policy& pi) {
  const std::size_t n = m.n_states;
  EigenMatrix p(n, n);
  for (std::size_t s = 0; s < n; ++s) {
    auto row = m.row(s, pi(s));
    for (std::size_t x = 0; x < n; ++x) p(s, x) = row[x];
  }
  return p;
}

EigenVector policy_rewards(const Mdp& m, const Policy& pi) {
  EigenVector r(m.n_states);
  for (std::size_t s = 0; s < m.n_states; ++s) r(s) = m.rewards(s, pi(s));
  return r;
}

std::size_t gcd_size(std::size_t a, std::size_t b) { return std::gcd(a, b); }

}  // namespace

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(compose(code, detail)), code_(code) {}

const char* to_string(ErrorCode code) noexcept { return canonical_phrase(code); }

Mdp::Mdp(std::size_t states, std::size_t actions, double discount)
    : n_states(states),
      n_actions(actions),
      rewards(states, actions),
      transitions(states * actions * states, 0.0),
      gamma(discount),
      initial_dist(states, states ? 1.0 / static_cast<double>(states) : 0.0) {}

ValidationReport validate_mdp(const Mdp& m) {
  ValidationReport report;
  auto fail_stochastic = [&](std::string why) {
    report.stochastic = false;
    report.ergodic = false;
    report.problems.push_back("malformed transitions: " + std::move(why));
  };

  const std::size_t n = m.n_states;
  if (n == 0 || m.n_actions == 0 || m.rewards.rows() != n || m.rewards.cols() != m.n_actions ||
      m.transitions.size() != n * m.n_actions * n || m.initial_dist.size() != n) {
    fail_stochastic("array shapes disagree with n_states/n_actions");
    return report;
  }
  if (!(m.gamma > 0.0 && m.gamma <= 1.0)) fail_stochastic("gamma outside (0, 1]");
  for (double r : m.rewards.values()) {
    if (!std::isfinite(r)) {
      fail_stochastic("non-finite reward");
      break;
    }
  }
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t a = 0; a < m.n_actions; ++a) {
      double sum = 0.0;
      bool negative = false;
      for (double v : m.row(s, a)) {
        if (!(v >= 0.0)) negative = true;
        sum += v;
      }
      if (negative || std::abs(sum - 1.0) > kInputTolerance) {
        std::ostringstream os;
        os << "row (" << s << ", " << a << ") sums to " << sum;
        fail_stochastic(os.str());
      }
    }
  }
  double d0_sum = 0.0;
  bool d0_negative = false;
  for (double v : m.initial_dist) {
    if (!(v >= 0.0)) d0_negative = true;
    d0_sum += v;
  }
  if (d0_negative || std::abs(d0_sum - 1.0) > kInputTolerance) {
    fail_stochastic("initial distribution is not a probability vector");
  }
  if (!report.stochastic) return report;

  // Support graph of the uniform-random policy.
  std::vector<std::vector<std::size_t>> succ(n), pred(n);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t x = 0; x < n; ++x) {
      bool edge = false;
      for (std::size_t a = 0; a < m.n_actions && !edge; ++a) edge = m.p(s, a, x) > 0.0;
      if (edge) {
        succ[s].push_back(x);
        pred[x].push_back(s);
      }
    }
  }
  auto bfs = [n](const std::vector<std::vector<std::size_t>>& adj) {
    std::vector<long> level(n, -1);
    std::queue<std::size_t> q;
    level[0] = 0;
    q.push(0);
    while (!q.empty()) {
      std::size_t u = q.front();
      q.pop();
      for (std::size_t v : adj[u]) {
        if (level[v] < 0) {
          level[v] = level[u] + 1;
          q.push(v);
        }
      }
    }
    return level;
  };
  const auto forward = bfs(succ);
  const auto backward = bfs(pred);
  const bool irreducible =
      std::all_of(forward.begin(), forward.end(), [](long l) { return l >= 0; }) &&
      std::all_of(backward.begin(), backward.end(), [](long l) { return l >= 0; });
  if (!irreducible) {
    report.ergodic = false;
    report.problems.push_back("not ergodic: support graph is reducible");
    return report;
  }
  std::size_t period = 0;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v : succ[u]) {
      long diff = forward[u] + 1 - forward[v];
      period = gcd_size(period, static_cast<std::size_t>(diff < 0 ? -diff : diff));
    }
  }
  if (period != 1) {
    report.ergodic = false;
    report.problems.push_back("not ergodic: support graph has period " + std::to_string(period));
  }
  return report;
}

void require_valid(const Mdp& m) {
  const auto report = validate_mdp(m);
  if (report.ok()) return;
  const std::string& first = report.problems.front();
  if (!report.stochastic) throw Error(ErrorCode::kMalformedTransitions, first);
  throw Error(ErrorCode::kNotErgodic, first);
}

void require_policy(const Mdp& m, const Policy& pi) {
  if (pi.size() != m.n_states) throw Error(ErrorCode::kShapeMismatch, "policy length differs from n_states");
  for (std::size_t a : pi.actions()) {
    if (a >= m.n_actions) throw Error(ErrorCode::kInvalidArgument, "policy action out of range");
  }
}

Vector state_distribution(const Mdp& m, const Policy& pi) {
  require_structure(m);
  require_policy(m, pi);
  const std::size_t n = m.n_states;
  const EigenMatrix p = policy_matrix(m, pi);
  EigenMatrix a = EigenMatrix::Identity(n, n) - m.gamma * p.transpose();
  EigenVector b(n);
  if (m.is_average_reward()) {
    // Replace the last (redundant) balance equation by the normalization.
    a.row(n - 1).setOnes();
    b.setZero();
    b(n - 1) = 1.0;
  } else {
    for (std::size_t s = 0; s < n; ++s) b(s) = (1.0 - m.gamma) * m.initial_dist[s];
  }
  EigenVector mu = detail::solve_or_throw(a, b, ErrorCode::kDegenerateChain,
                                          "state-distribution system is singular");
  return detail::to_std(mu);
}

ValueBundle evaluate_policy(const Mdp& m, const Policy& pi) {
  const std::size_t n = m.n_states;
  ValueBundle out;
  out.state_dist = state_distribution(m, pi);
  const EigenMatrix p = policy_matrix(m, pi);
  const EigenVector r = policy_rewards(m, pi);
  const Eigen::Map<const EigenVector> mu(out.state_dist.data(), static_cast<Eigen::Index>(n));
  out.score = mu.dot(r);

  EigenVector v;
  if (m.is_average_reward()) {
    EigenMatrix a = EigenMatrix::Identity(n, n) - p + EigenVector::Ones(n) * mu.transpose();
    EigenVector b = r - out.score * EigenVector::Ones(n);
    v = detail::solve_or_throw(a, b, ErrorCode::kDegenerateChain, "bias system is singular");
    out.v_standard = detail::to_std(v);
  } else {
    EigenMatrix a = EigenMatrix::Identity(n, n) - m.gamma * p;
    EigenVector v_std =
        detail::solve_or_throw(a, r, ErrorCode::kDegenerateChain, "discounted value system is singular");
    out.v_standard = detail::to_std(v_std);
    v = v_std - (out.score / (1.0 - m.gamma)) * EigenVector::Ones(n);
  }
  out.v_values = detail::to_std(v);

  out.q_values = Matrix(n, m.n_actions);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t a = 0; a < m.n_actions; ++a) {
      double expected = 0.0;
      auto row = m.row(s, a);
      for (std::size_t x = 0; x < n; ++x) expected += row[x] * out.v_values[x];
      out.q_values(s, a) = m.rewards(s, a) - out.score + m.gamma * expected;
    }
    out.q_values(s, pi(s)) = out.v_values[s];
  }
  return out;
}

double policy_score(const Mdp& m, const Policy& pi) {
  const Vector mu = state_distribution(m, pi);
  double rho = 0.0;
  for (std::size_t s = 0; s < m.n_states; ++s) rho += mu[s] * m.rewards(s, pi(s));
  return rho;
}

ReachTimes reach_times(const Mdp& m, const Policy& pi) {
  require_structure(m);
  require_policy(m, pi);
  const std::size_t n = m.n_states;
  ReachTimes out;
  out.times = Matrix(n, n);
  if (n == 1) return out;
  const EigenMatrix p = policy_matrix(m, pi);
  for (std::size_t target = 0; target < n; ++target) {
    // Unknowns: T(s, target) for s != target.
    EigenMatrix a(n - 1, n - 1);
    EigenVector b = EigenVector::Ones(n - 1);
    for (std::size_t i = 0, s = 0; s < n; ++s) {
      if (s == target) continue;
      for (std::size_t j = 0, x = 0; x < n; ++x) {
        if (x == target) continue;
        a(i, j) = (i == j ? 1.0 : 0.0) - m.gamma * p(s, x);
        ++j;
      }
      ++i;
    }
    EigenVector t = detail::solve_or_throw(a, b, ErrorCode::kUnreachableState,
                                           "reach-time system is singular");
    for (std::size_t i = 0, s = 0; s < n; ++s) {
      if (s == target) continue;
      out.times(s, target) = t(static_cast<Eigen::Index>(i++));
    }
  }
  out.diameter = *std::max_element(out.times.values().begin(), out.times.values().end());
  return out;
}

double hajnal_alpha(const Mdp& m) {
  require_structure(m);
  const std::size_t rows = m.n_states * m.n_actions;
  double alpha = 1.0;
  for (std::size_t i = 0; i < rows; ++i) {
    auto a = m.row(i / m.n_actions, i % m.n_actions);
    for (std::size_t j = i + 1; j < rows; ++j) {
      auto b = m.row(j / m.n_actions, j % m.n_actions);
      double overlap = 0.0;
      for (std::size_t x = 0; x < m.n_states; ++x) overlap += std::min(a[x], b[x]);
      alpha = std::min(alpha, overlap);
    }
  }
  return std::clamp(alpha, 0.0, 1.0);
}

Policy neighbor_policy(const Policy& pi, std::size_t s, std::size_t a) {
  if (s >= pi.size()) throw Error(ErrorCode::kInvalidArgument, "neighbor state out of range");
  std::vector<std::size_t> actions = pi.actions();
  actions[s] = a;
  return Policy(std::move(actions));
}

double robust_margin(const Mdp& m, const Policy& pi) {
  require_policy(m, pi);
  const double rho = policy_score(m, pi);
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < m.n_states; ++s) {
    for (std::size_t a = 0; a < m.n_actions; ++a) {
      if (a == pi(s)) continue;
      margin = std::min(margin, rho - policy_score(m, neighbor_policy(pi, s, a)));
    }
  }
  return margin;
}

bool is_eps_robust_optimal(const Mdp& m, const Policy& pi, double eps) {
  if (eps < 0.0) throw Error(ErrorCode::kInvalidArgument, "eps must be non-negative");
  return robust_margin(m, pi) >= eps - kMarginSlack;
}

bool brute_force_eps_robust(const Mdp& m, const Policy& pi, double eps) {
  require_policy(m, pi);
  const double count = std::pow(static_cast<double>(m.n_actions), static_cast<double>(m.n_states));
  if (count > kBruteForceLimit) {
    throw Error(ErrorCode::kOracleSizeLimit, "|A|^|S| exceeds 1e6 policies");
  }
  const double rho = policy_score(m, pi);
  bool robust = true;
  for_each_policy(m.n_states, m.n_actions, [&](const Policy& other) {
    if (!robust || other == pi) return;
    if (rho < policy_score(m, other) + eps - kMarginSlack) robust = false;
  });
  return robust;
}

Policy optimal_policy(const Mdp& m) {
  require_structure(m);
  const double count = std::pow(static_cast<double>(m.n_actions), static_cast<double>(m.n_states));
  const std::size_t cap = count > 1e9 ? 1000000000u : static_cast<std::size_t>(count) + 1;
  constexpr double kImprovement = 1e-10;

  Policy pi = Policy::constant(m.n_states, 0);
  for (std::size_t iter = 0; iter < cap; ++iter) {
    const ValueBundle vb = evaluate_policy(m, pi);
    std::vector<std::size_t> next = pi.actions();
    bool changed = false;
    for (std::size_t s = 0; s < m.n_states; ++s) {
      std::size_t best = 0;
      for (std::size_t a = 1; a < m.n_actions; ++a) {
        if (vb.q_values(s, a) > vb.q_values(s, best)) best = a;
      }
      if (vb.q_values(s, best) > vb.q_values(s, pi(s)) + kImprovement) {
        next[s] = best;
        changed = true;
      }
    }
    if (!changed) return pi;
    pi = Policy(std::move(next));
  }
  throw Error(ErrorCode::kPolicyIterationStalled, "iteration cap reached");
}

std::pair<double, double> score_gap_identity(const Mdp& m, const Policy& pi, std::size_t s,
                                             std::size_t a) {
  require_policy(m, pi);
  if (s >= m.n_states || a >= m.n_actions || a == pi(s)) {
    throw Error(ErrorCode::kInvalidArgument, "score gap needs a proper neighbor (a != pi(s))");
  }
  const Policy nb = neighbor_policy(pi, s, a);
  const ValueBundle base = evaluate_policy(m, pi);
  const double lhs = base.score - evaluate_policy(m, nb).score;
  const double rhs = state_distribution(m, nb)[s] * (base.v_values[s] - base.q_values(s, a));
  return {lhs, rhs};
}

}  // namespace envpoison
