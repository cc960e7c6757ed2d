#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace envpoison {

using Vector = std::vector<double>;

/// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& values() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class ErrorCode {
  kMalformedTransitions,
  kNotErgodic,
  kDegenerateChain,
  kUnreachableState,
  kOracleSizeLimit,
  kPolicyIterationStalled,
  kBetaUndefined,
  kUnsupportedNorm,
  kFormulaOutOfDomain,
  kInvalidWeight,
  kNumericalFailure,
  kShapeMismatch,
  kInvalidArgument,
  kConfiguration,
  kInternal,
};

/// Every failure raised by the library carries one of the codes above. The
/// message always starts with the canonical short phrase for the code
/// (e.g. "not ergodic") followed by details.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

const char* to_string(ErrorCode code) noexcept;

}  // namespace envpoison
