#include "envpoison/environments.hpp"

#include <array>

namespace envpoison {

namespace {

constexpr double kSuccess = 0.9;

void set_move(Mdp& m, std::size_t s, std::size_t a, std::size_t dest) {
  const double noise = (1.0 - kSuccess) / static_cast<double>(m.n_states);
  auto row = m.row(s, a);
  for (double& v : row) v = noise;
  row[dest] += kSuccess;
}

}  // namespace

Environment build_chain(double reward_s0, std::size_t n_states, double gamma) {
  if (n_states < 2) throw Error(ErrorCode::kInvalidArgument, "chain needs at least 2 states");
  Mdp m(n_states, 2, gamma);
  for (std::size_t s = 0; s < n_states; ++s) {
    double r = 0.5;
    if (s == 0) r = reward_s0;
    else if (s == n_states - 1) r = -0.5;
    m.rewards(s, 0) = r;
    m.rewards(s, 1) = r;
    set_move(m, s, 0, s == 0 ? 0 : s - 1);
    set_move(m, s, 1, s == n_states - 1 ? s : s + 1);
  }
  return {std::move(m), Policy::constant(n_states, 1)};
}

Environment build_navigation(double reward_s0, double gamma) {
  // successor of each state under action 0 and action 1
  constexpr std::array<std::array<std::size_t, 2>, 9> kNext{{
      {1, 6}, {2, 0}, {3, 1}, {4, 2}, {5, 3}, {0, 4}, {7, 0}, {8, 6}, {4, 7},
  }};
  constexpr std::array<double, 9> kReward{0.0, -2.5, -2.5, -2.5, 1.0, 1.0, 0.0, 0.0, 0.0};
  Mdp m(9, 2, gamma);
  for (std::size_t s = 0; s < 9; ++s) {
    const double r = s == 0 ? reward_s0 : kReward[s];
    for (std::size_t a = 0; a < 2; ++a) {
      m.rewards(s, a) = r;
      set_move(m, s, a, kNext[s][a]);
    }
  }
  std::vector<std::size_t> target(9, 0);
  target[0] = 1;
  return {std::move(m), Policy(std::move(target))};
}

}  // namespace envpoison
