#pragma once

#include <Eigen/Dense>

#include "envpoison/types.hpp"

namespace envpoison::detail {

using EigenMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EigenVector = Eigen::VectorXd;

inline constexpr double kSingularRcond = 1e-13;

/// LU with partial pivoting; throws Error(code) when the reciprocal condition
/// estimate says the system is numerically singular.
inline EigenVector solve_or_throw(const EigenMatrix& a, const EigenVector& b, ErrorCode code,
                                  const char* what) {
  Eigen::PartialPivLU<EigenMatrix> lu(a);
  if (!(lu.rcond() > kSingularRcond)) throw Error(code, what);
  EigenVector x = lu.solve(b);
  if (!x.allFinite()) throw Error(code, what);
  return x;
}

inline Vector to_std(const EigenVector& v) { return Vector(v.data(), v.data() + v.size()); }

}  // namespace envpoison::detail
