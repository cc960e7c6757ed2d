#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "envpoison/types.hpp"

namespace envpoison {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Sparse row: sum_j coef_j * x_{index_j} (op) rhs.
struct LinearConstraint {
  std::vector<std::pair<std::size_t, double>> terms;
  double rhs = 0.0;
};

/// minimize c^T x  s.t.  eq rows (==), ub rows (<=), lower <= x <= upper.
struct LinearProgram {
  Vector objective;
  std::vector<LinearConstraint> eq_constraints;
  std::vector<LinearConstraint> ub_constraints;
  Vector lower;
  Vector upper;

  std::size_t num_variables() const noexcept { return objective.size(); }
  std::size_t add_variable(double cost, double lo = 0.0, double hi = kInf);
  void add_eq(std::vector<std::pair<std::size_t, double>> terms, double rhs);
  void add_ub(std::vector<std::pair<std::size_t, double>> terms, double rhs);
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

struct LpSolution {
  LpStatus status = LpStatus::kInfeasible;
  Vector x;
  double objective_value = 0.0;
  /// Simplex multipliers of eq rows and ub rows at the final basis (optimal only).
  Vector eq_duals;
  Vector ub_duals;
  std::size_t iterations = 0;
};

/// Two-phase dense primal simplex with Bland's rule. Throws
/// Error(kNumericalFailure) when the pivot cap is reached.
LpSolution solve_lp(const LinearProgram& lp);

/// Largest violation of any constraint or bound at x.
double max_violation(const LinearProgram& lp, std::span<const double> x);

/// w * |sum_j coef_j x_j + constant|
struct AbsTerm {
  double weight = 0.0;
  std::vector<std::pair<std::size_t, double>> expr;
  double constant = 0.0;
};

struct AbsSlack {
  std::size_t plus;   // u_i
  std::size_t minus;  // v_i
};

/// Linearizes sum_i w_i |expr_i| into lp: new u_i, v_i >= 0 with
/// expr_i = u_i - v_i and objective w_i (u_i + v_i). Throws
/// Error(kInvalidWeight) on a negative weight.
std::vector<AbsSlack> add_abs_objective(LinearProgram& lp, std::span<const AbsTerm> terms);

}  // namespace envpoison
