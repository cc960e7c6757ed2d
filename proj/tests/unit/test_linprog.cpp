#include <gtest/gtest.h>

#include <cmath>

#include "envpoison/linprog.hpp"
#include "random_mdp.hpp"

namespace ep = envpoison;
using ep::testing::Gen;

namespace {

// Grid search over a box, keeping points that satisfy every constraint.
double grid_minimum(const ep::LinearProgram& lp, double lo, double hi, int steps) {
  double best = INFINITY;
  std::vector<double> x(lp.num_variables());
  const double h = (hi - lo) / steps;
  std::vector<int> idx(x.size(), 0);
  while (true) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = lo + h * idx[i];
    if (ep::max_violation(lp, x) <= 1e-9) {
      double v = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) v += lp.objective[i] * x[i];
      best = std::min(best, v);
    }
    std::size_t k = 0;
    while (k < x.size() && ++idx[k] > steps) idx[k++] = 0;
    if (k == x.size()) return best;
  }
}

}  // namespace

TEST(Linprog, TextbookExample) {
  // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
  ep::LinearProgram lp;
  lp.add_variable(-3.0);
  lp.add_variable(-5.0);
  lp.add_ub({{0, 1.0}}, 4.0);
  lp.add_ub({{1, 2.0}}, 12.0);
  lp.add_ub({{0, 3.0}, {1, 2.0}}, 18.0);
  const auto sol = ep::solve_lp(lp);
  ASSERT_EQ(sol.status, ep::LpStatus::kOptimal);
  EXPECT_NEAR(sol.x[0], 2.0, 1e-9);
  EXPECT_NEAR(sol.x[1], 6.0, 1e-9);
  EXPECT_NEAR(sol.objective_value, -36.0, 1e-9);
  // Complementary slackness: x <= 4 is slack.
  EXPECT_NEAR(sol.ub_duals[0], 0.0, 1e-9);
}

TEST(Linprog, EqualityFreeAndUpperBoundedVariables) {
  ep::LinearProgram lp;
  const auto x = lp.add_variable(1.0, -ep::kInf, ep::kInf);
  const auto y = lp.add_variable(-1.0, -ep::kInf, 2.0);
  lp.add_eq({{x, 1.0}, {y, 1.0}}, 1.0);
  const auto sol = ep::solve_lp(lp);
  ASSERT_EQ(sol.status, ep::LpStatus::kOptimal);
  EXPECT_NEAR(sol.x[y], 2.0, 1e-9);
  EXPECT_NEAR(sol.x[x], -1.0, 1e-9);
}

TEST(Linprog, DetectsInfeasibleAndUnbounded) {
  ep::LinearProgram bad;
  bad.add_variable(1.0);
  bad.add_ub({{0, 1.0}}, -1.0);
  EXPECT_EQ(ep::solve_lp(bad).status, ep::LpStatus::kInfeasible);

  ep::LinearProgram open;
  open.add_variable(-1.0);
  EXPECT_EQ(ep::solve_lp(open).status, ep::LpStatus::kUnbounded);
}

TEST(Linprog, DegenerateCycleProneInstance) {
  // Beale's example cycles under the textbook rule.
  ep::LinearProgram lp;
  for (double c : {-0.75, 150.0, -0.02, 6.0}) lp.add_variable(c);
  lp.add_ub({{0, 0.25}, {1, -60.0}, {2, -0.04}, {3, 9.0}}, 0.0);
  lp.add_ub({{0, 0.5}, {1, -90.0}, {2, -0.02}, {3, 3.0}}, 0.0);
  lp.add_ub({{2, 1.0}}, 1.0);
  const auto sol = ep::solve_lp(lp);
  ASSERT_EQ(sol.status, ep::LpStatus::kOptimal);
  EXPECT_NEAR(sol.objective_value, -0.05, 1e-9);
}

TEST(Linprog, RandomProgramsMatchGridSearch) {
  Gen gen(7);
  for (int i = 0; i < 30; ++i) {
    ep::LinearProgram lp;
    for (int v = 0; v < 2; ++v) lp.add_variable(gen.uniform(-1.0, 1.0), 0.0, 1.0);
    for (int r = 0; r < 2; ++r) {
      lp.add_ub({{0, gen.uniform(-1.0, 1.0)}, {1, gen.uniform(-1.0, 1.0)}}, gen.uniform(0.0, 0.5));
    }
    const auto sol = ep::solve_lp(lp);
    ASSERT_EQ(sol.status, ep::LpStatus::kOptimal);  // origin is always feasible
    EXPECT_LE(ep::max_violation(lp, sol.x), 1e-9);
    const double grid = grid_minimum(lp, 0.0, 1.0, 200);
    EXPECT_LE(sol.objective_value, grid + 1e-9);
    EXPECT_NEAR(sol.objective_value, grid, 2e-2);
  }
}

TEST(Linprog, AbsObjective) {
  // min 2|x - 1| + |x + 1|, optimum at x = 1 with value 2.
  ep::LinearProgram lp;
  const auto x = lp.add_variable(0.0, -ep::kInf, ep::kInf);
  const std::vector<ep::AbsTerm> terms{{2.0, {{x, 1.0}}, -1.0}, {1.0, {{x, 1.0}}, 1.0}};
  const auto slacks = ep::add_abs_objective(lp, terms);
  ASSERT_EQ(slacks.size(), 2u);
  const auto sol = ep::solve_lp(lp);
  ASSERT_EQ(sol.status, ep::LpStatus::kOptimal);
  EXPECT_NEAR(sol.x[x], 1.0, 1e-9);
  EXPECT_NEAR(sol.objective_value, 2.0, 1e-9);

  const std::vector<ep::AbsTerm> negative{{-1.0, {{x, 1.0}}, 0.0}};
  try {
    ep::add_abs_objective(lp, negative);
    FAIL() << "expected an error";
  } catch (const ep::Error& e) {
    EXPECT_EQ(e.code(), ep::ErrorCode::kInvalidWeight);
  }
}
