#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace tcblran {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A sequence of equally-sized column vectors (states, latents or inputs).
using VectorSequence = std::vector<Vector>;

/// Bad arguments to a library call: wrong dimensions, out-of-range values.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A user-facing configuration is inconsistent or incomplete.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation produced a non-finite value.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string shape_string(Eigen::Index rows, Eigen::Index cols) {
  return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
}

template <typename Derived>
std::string shape_of(const Eigen::DenseBase<Derived>& m) {
  return shape_string(m.rows(), m.cols());
}

/// Packs a sequence of n-vectors as the columns of an n x size matrix.
Matrix stack_columns(const VectorSequence& seq);

/// Inverse of stack_columns.
VectorSequence unstack_columns(const Matrix& m);

}  // namespace tcblran
