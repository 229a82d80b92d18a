#pragma once

// Tape-based reverse-mode differentiation over dense matrices.
//
// Every op appends a node holding its forward value and the indices of its
// inputs; nodes only reference earlier nodes, so the tape order is a
// topological order and backward() is a single reverse sweep.

#include "tcblran/common.hpp"

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <span>

namespace tcblran::ad {

using ParamId = std::size_t;

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid as long as its tape.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  double scalar() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Tape* tape() const { return tape_; }
  std::size_t index() const { return index_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t index) : tape_(tape), index_(index) {}

  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

/// Gradient of a scalar with respect to every parameter leaf of the tape.
struct GradientSet {
  std::map<ParamId, Matrix> grads;

  const Matrix& at(ParamId id) const;
  bool all_finite() const;
  double squared_norm() const;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// A leaf that is not differentiated.
  Var constant(Matrix value);
  /// A differentiable leaf reported under `id` by backward().
  Var parameter(ParamId id, Matrix value);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var subtract(Var a, Var b);
  /// m + b * 1^T, b a column vector with m.rows() entries.
  Var add_column(Var m, Var b);
  Var scale(Var a, double s);
  Var tanh(Var a);
  Var sum_squares(Var a);
  Var mean(Var a);
  Var columns(Var a, Eigen::Index start, Eigen::Index count);
  Var hconcat(std::span<const Var> parts);
  /// a * diag(weights); weights are constants.
  Var scale_columns(Var a, const Eigen::RowVectorXd& weights);

  /// Reverse sweep from a 1x1 root.
  GradientSet backward(Var root) const;

  std::size_t size() const { return nodes_.size(); }
  const Matrix& value(std::size_t index) const { return nodes_[index].value; }

 private:
  enum class Op {
    leaf, matmul, add, subtract, add_column, scale, tanh, sum_squares, mean,
    columns, hconcat, scale_columns
  };

  struct Node {
    Op op = Op::leaf;
    Matrix value;
    std::vector<std::size_t> parents;
    bool requires_grad = false;
    double factor = 0.0;       // scale
    Eigen::Index offset = 0;   // columns
    Eigen::RowVectorXd weights;  // scale_columns
    std::optional<ParamId> param;
  };

  Var push(Node node);
  const Node& node(Var v) const;
  void check_owned(Var v, const char* op) const;

  // deque keeps references returned by Var::value() stable as the tape grows.
  std::deque<Node> nodes_;
};

Var matmul(Var a, Var b);
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(double s, Var a);
Var add_column(Var m, Var b);
Var tanh(Var a);
Var sum_squares(Var a);
Var mean(Var a);
Var columns(Var a, Eigen::Index start, Eigen::Index count);
Var hconcat(std::span<const Var> parts);
Var scale_columns(Var a, const Eigen::RowVectorXd& weights);

/// Builds a scalar on a fresh tape from parameter leaves (ids 0..n-1).
using TapeFunction = std::function<Var(Tape&, std::span<const Var>)>;

/// Evaluates f and its gradient at params.
std::pair<double, std::vector<Matrix>> value_and_gradient(const TapeFunction& f,
                                                          const std::vector<Matrix>& params);

/// Maximum over coordinates of |analytic - numeric| / max(1, |analytic|,
/// |numeric|) with central differences of step eps.
double gradient_check(const TapeFunction& f, const std::vector<Matrix>& params,
                      double eps = 1e-6);

}  // namespace tcblran::ad
