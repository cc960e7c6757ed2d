#include "envpoison/linprog.hpp"

#include <algorithm>
#include <cmath>

namespace envpoison {

namespace {

constexpr double kPivotTol = 1e-10;
constexpr double kFeasTol = 1e-9;
constexpr double kCostTol = 1e-9;

// x_orig = offset + sum sign * y_col
struct VarMap {
  double offset = 0.0;
  std::vector<std::pair<std::size_t, double>> cols;
};

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols)
      : m_(rows), n_(cols), width_(cols + 1), a_(rows * (cols + 1), 0.0), cost_(cols + 1, 0.0),
        basis_(rows, 0) {}

  double& at(std::size_t i, std::size_t j) { return a_[i * width_ + j]; }
  double at(std::size_t i, std::size_t j) const { return a_[i * width_ + j]; }
  double& rhs(std::size_t i) { return a_[i * width_ + n_]; }
  double rhs(std::size_t i) const { return a_[i * width_ + n_]; }
  std::vector<double>& cost() { return cost_; }
  std::vector<std::size_t>& basis() { return basis_; }
  std::size_t rows() const { return m_; }
  std::size_t cols() const { return n_; }

  void pivot(std::size_t r, std::size_t c) {
    double* pr = &a_[r * width_];
    const double inv = 1.0 / pr[c];
    nz_.clear();
    for (std::size_t j = 0; j < width_; ++j) {
      if (pr[j] != 0.0) {
        pr[j] *= inv;
        nz_.push_back(j);
      }
    }
    pr[c] = 1.0;
    auto eliminate = [&](double* row) {
      const double f = row[c];
      if (f == 0.0) return;
      for (std::size_t j : nz_) row[j] -= f * pr[j];
      row[c] = 0.0;
    };
    for (std::size_t i = 0; i < m_; ++i) {
      if (i != r) eliminate(&a_[i * width_]);
    }
    eliminate(cost_.data());
    basis_[r] = c;
  }

 private:
  std::size_t m_, n_, width_;
  std::vector<double> a_;
  std::vector<double> cost_;  // reduced costs; last entry = -objective
  std::vector<std::size_t> basis_;
  std::vector<std::size_t> nz_;
};

enum class PhaseResult { kOptimal, kUnbounded };

// Bland's rule: lowest-index improving column; ratio ties to the lowest basic index.
PhaseResult run_phase(Tableau& t, std::size_t allowed_cols, std::size_t& iterations,
                      std::size_t cap) {
  while (true) {
    std::size_t enter = allowed_cols;
    for (std::size_t j = 0; j < allowed_cols; ++j) {
      if (t.cost()[j] < -kCostTol) {
        enter = j;
        break;
      }
    }
    if (enter == allowed_cols) return PhaseResult::kOptimal;

    std::size_t leave = t.rows();
    double best = 0.0;
    for (std::size_t i = 0; i < t.rows(); ++i) {
      const double a = t.at(i, enter);
      if (a <= kPivotTol) continue;
      const double ratio = t.rhs(i) / a;
      if (leave == t.rows() || ratio < best - 1e-15 ||
          (ratio <= best + 1e-15 && t.basis()[i] < t.basis()[leave])) {
        leave = i;
        best = ratio;
      }
    }
    if (leave == t.rows()) return PhaseResult::kUnbounded;
    t.pivot(leave, enter);
    if (++iterations > cap) throw Error(ErrorCode::kNumericalFailure, "simplex pivot cap exceeded");
  }
}

}  // namespace

std::size_t LinearProgram::add_variable(double cost, double lo, double hi) {
  objective.push_back(cost);
  lower.push_back(lo);
  upper.push_back(hi);
  return objective.size() - 1;
}

void LinearProgram::add_eq(std::vector<std::pair<std::size_t, double>> terms, double rhs) {
  eq_constraints.push_back({std::move(terms), rhs});
}

void LinearProgram::add_ub(std::vector<std::pair<std::size_t, double>> terms, double rhs) {
  ub_constraints.push_back({std::move(terms), rhs});
}

double max_violation(const LinearProgram& lp, std::span<const double> x) {
  double worst = 0.0;
  auto lhs = [&](const LinearConstraint& c) {
    double v = 0.0;
    for (const auto& [j, coef] : c.terms) v += coef * x[j];
    return v;
  };
  for (const auto& c : lp.eq_constraints) worst = std::max(worst, std::abs(lhs(c) - c.rhs));
  for (const auto& c : lp.ub_constraints) worst = std::max(worst, lhs(c) - c.rhs);
  for (std::size_t j = 0; j < lp.num_variables(); ++j) {
    worst = std::max(worst, lp.lower[j] - x[j]);
    worst = std::max(worst, x[j] - lp.upper[j]);
  }
  return worst;
}

LpSolution solve_lp(const LinearProgram& lp) {
  const std::size_t n = lp.num_variables();
  if (lp.lower.size() != n || lp.upper.size() != n) {
    throw Error(ErrorCode::kShapeMismatch, "bounds length differs from objective length");
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(lp.objective[j])) throw Error(ErrorCode::kInvalidArgument, "non-finite objective");
    if (lp.lower[j] > lp.upper[j]) return LpSolution{};
  }
  auto check_row = [n](const LinearConstraint& c) {
    for (const auto& term : c.terms) {
      if (term.first >= n) throw Error(ErrorCode::kShapeMismatch, "constraint references unknown variable");
    }
  };
  for (const auto& c : lp.eq_constraints) check_row(c);
  for (const auto& c : lp.ub_constraints) check_row(c);

  // Map every variable onto non-negative standard-form columns.
  std::vector<VarMap> maps(n);
  std::vector<double> std_cost;
  std::vector<std::pair<std::size_t, double>> bound_rows;  // (column, capacity)
  for (std::size_t j = 0; j < n; ++j) {
    const double lo = lp.lower[j], hi = lp.upper[j];
    if (std::isfinite(lo)) {
      maps[j].offset = lo;
      maps[j].cols.push_back({std_cost.size(), 1.0});
      if (std::isfinite(hi)) bound_rows.push_back({std_cost.size(), hi - lo});
      std_cost.push_back(lp.objective[j]);
    } else if (std::isfinite(hi)) {
      maps[j].offset = hi;
      maps[j].cols.push_back({std_cost.size(), -1.0});
      std_cost.push_back(-lp.objective[j]);
    } else {
      maps[j].cols.push_back({std_cost.size(), 1.0});
      std_cost.push_back(lp.objective[j]);
      maps[j].cols.push_back({std_cost.size(), -1.0});
      std_cost.push_back(-lp.objective[j]);
    }
  }
  const std::size_t n_std = std_cost.size();
  const std::size_t n_eq = lp.eq_constraints.size();
  const std::size_t n_ub = lp.ub_constraints.size();
  const std::size_t m = n_eq + n_ub + bound_rows.size();
  const std::size_t n_slack = n_ub + bound_rows.size();

  // Dense rows over structural + slack columns, before sign normalization.
  std::vector<std::vector<double>> rows(m, std::vector<double>(n_std + n_slack, 0.0));
  std::vector<double> rhs(m, 0.0);
  auto fill = [&](std::size_t i, const LinearConstraint& c) {
    double b = c.rhs;
    for (const auto& [j, coef] : c.terms) {
      b -= coef * maps[j].offset;
      for (const auto& [col, sign] : maps[j].cols) rows[i][col] += coef * sign;
    }
    rhs[i] = b;
  };
  for (std::size_t i = 0; i < n_eq; ++i) fill(i, lp.eq_constraints[i]);
  for (std::size_t k = 0; k < n_ub; ++k) {
    fill(n_eq + k, lp.ub_constraints[k]);
    rows[n_eq + k][n_std + k] = 1.0;
  }
  for (std::size_t k = 0; k < bound_rows.size(); ++k) {
    const std::size_t i = n_eq + n_ub + k;
    rows[i][bound_rows[k].first] = 1.0;
    rows[i][n_std + n_ub + k] = 1.0;
    rhs[i] = bound_rows[k].second;
  }

  std::vector<bool> flipped(m, false);
  std::vector<std::size_t> unit_col(m, 0);  // identity column of each row
  std::size_t n_art = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (rhs[i] < 0.0) {
      flipped[i] = true;
      rhs[i] = -rhs[i];
      for (double& v : rows[i]) v = -v;
    }
    const bool has_slack = i >= n_eq && !flipped[i];
    if (!has_slack) ++n_art;
  }

  const std::size_t art_begin = n_std + n_slack;
  const std::size_t total = art_begin + n_art;
  Tableau t(m, total);
  std::vector<std::size_t> art_rows;
  for (std::size_t i = 0, art = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n_std + n_slack; ++j) t.at(i, j) = rows[i][j];
    t.rhs(i) = rhs[i];
    if (i >= n_eq && !flipped[i]) {
      unit_col[i] = n_std + (i - n_eq);
    } else {
      unit_col[i] = art_begin + art++;
      t.at(i, unit_col[i]) = 1.0;
      art_rows.push_back(i);
    }
    t.basis()[i] = unit_col[i];
  }
  rows.clear();

  LpSolution sol;
  const std::size_t cap = 50 * (m + total) + 1000;

  // Phase 1: minimize the artificial sum.
  if (!art_rows.empty()) {
    auto& c = t.cost();
    std::fill(c.begin(), c.end(), 0.0);
    for (std::size_t i : art_rows) {
      for (std::size_t j = 0; j < art_begin; ++j) c[j] -= t.at(i, j);
      c[total] -= t.rhs(i);
    }
    run_phase(t, art_begin, sol.iterations, cap);
    double infeasibility = -c[total];
    double scale = 1.0;
    for (std::size_t i = 0; i < m; ++i) scale = std::max(scale, std::abs(rhs[i]));
    if (infeasibility > kFeasTol * scale) {
      sol.status = LpStatus::kInfeasible;
      return sol;
    }
    // Drive artificials out of the basis where possible; rows that cannot be
    // pivoted are redundant and stay inert at value zero.
    for (std::size_t i = 0; i < m; ++i) {
      if (t.basis()[i] < art_begin) continue;
      for (std::size_t j = 0; j < art_begin; ++j) {
        if (std::abs(t.at(i, j)) > kPivotTol) {
          t.pivot(i, j);
          break;
        }
      }
    }
  }

  // Phase 2.
  {
    auto& c = t.cost();
    std::fill(c.begin(), c.end(), 0.0);
    for (std::size_t j = 0; j < n_std; ++j) c[j] = std_cost[j];
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t b = t.basis()[i];
      const double cb = b < n_std ? std_cost[b] : 0.0;
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j <= total; ++j) {
        if (j == total) c[j] -= cb * t.rhs(i);
        else c[j] -= cb * t.at(i, j);
      }
    }
    if (run_phase(t, art_begin, sol.iterations, cap) == PhaseResult::kUnbounded) {
      sol.status = LpStatus::kUnbounded;
      return sol;
    }
  }

  std::vector<double> y(total, 0.0);
  for (std::size_t i = 0; i < m; ++i) y[t.basis()[i]] = std::max(0.0, t.rhs(i));
  sol.x.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double v = maps[j].offset;
    for (const auto& [col, sign] : maps[j].cols) v += sign * y[col];
    sol.x[j] = v;
  }
  sol.objective_value = 0.0;
  for (std::size_t j = 0; j < n; ++j) sol.objective_value += lp.objective[j] * sol.x[j];

  auto dual_of = [&](std::size_t i) {
    const double d = -t.cost()[unit_col[i]];
    return flipped[i] ? -d : d;
  };
  sol.eq_duals.resize(n_eq);
  for (std::size_t i = 0; i < n_eq; ++i) sol.eq_duals[i] = dual_of(i);
  sol.ub_duals.resize(n_ub);
  for (std::size_t k = 0; k < n_ub; ++k) sol.ub_duals[k] = dual_of(n_eq + k);
  sol.status = LpStatus::kOptimal;
  return sol;
}

std::vector<AbsSlack> add_abs_objective(LinearProgram& lp, std::span<const AbsTerm> terms) {
  for (const auto& term : terms) {
    if (!(term.weight >= 0.0) || !std::isfinite(term.weight)) {
      throw Error(ErrorCode::kInvalidWeight, "abs-term weight must be finite and non-negative");
    }
  }
  std::vector<AbsSlack> out;
  out.reserve(terms.size());
  for (const auto& term : terms) {
    AbsSlack slack{lp.add_variable(term.weight), 0};
    slack.minus = lp.add_variable(term.weight);
    auto row = term.expr;
    row.push_back({slack.plus, -1.0});
    row.push_back({slack.minus, 1.0});
    lp.add_eq(std::move(row), -term.constant);
    out.push_back(slack);
  }
  return out;
}

}  // namespace envpoison
