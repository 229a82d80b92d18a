#include "tcblran/autodiff.hpp"

#include <cmath>

namespace tcblran::ad {

const Matrix& Var::value() const {
  if (tape_ == nullptr) throw InvalidArgument("Var: uninitialised handle");
  return tape_->value(index_);
}

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw InvalidArgument("Var::scalar: value has shape " + shape_of(v));
  }
  return v(0, 0);
}

const Matrix& GradientSet::at(ParamId id) const {
  auto it = grads.find(id);
  if (it == grads.end()) {
    throw InvalidArgument("GradientSet: no gradient for parameter " + std::to_string(id));
  }
  return it->second;
}

bool GradientSet::all_finite() const {
  for (const auto& [id, g] : grads)
    if (!g.allFinite()) return false;
  return true;
}

double GradientSet::squared_norm() const {
  double acc = 0.0;
  for (const auto& [id, g] : grads) acc += g.squaredNorm();
  return acc;
}

Var Tape::push(Node node) {
  for (std::size_t p : node.parents) node.requires_grad |= nodes_[p].requires_grad;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

const Tape::Node& Tape::node(Var v) const { return nodes_[v.index()]; }

void Tape::check_owned(Var v, const char* op) const {
  if (v.tape() != this || v.index() >= nodes_.size()) {
    throw InvalidArgument(std::string(op) + ": operand belongs to a different tape");
  }
}

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::parameter(ParamId id, Matrix value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  n.param = id;
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  check_owned(a, "matmul");
  check_owned(b, "matmul");
  const Matrix& av = node(a).value;
  const Matrix& bv = node(b).value;
  if (av.cols() != bv.rows()) {
    throw InvalidArgument("matmul: shape mismatch " + shape_of(av) + " vs " + shape_of(bv));
  }
  Node n;
  n.op = Op::matmul;
  n.value = av * bv;
  n.parents = {a.index(), b.index()};
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  check_owned(a, "add");
  check_owned(b, "add");
  const Matrix& av = node(a).value;
  const Matrix& bv = node(b).value;
  if (av.rows() != bv.rows() || av.cols() != bv.cols()) {
    throw InvalidArgument("add: shape mismatch " + shape_of(av) + " vs " + shape_of(bv));
  }
  Node n;
  n.op = Op::add;
  n.value = av + bv;
  n.parents = {a.index(), b.index()};
  return push(std::move(n));
}

Var Tape::subtract(Var a, Var b) {
  check_owned(a, "subtract");
  check_owned(b, "subtract");
  const Matrix& av = node(a).value;
  const Matrix& bv = node(b).value;
  if (av.rows() != bv.rows() || av.cols() != bv.cols()) {
    throw InvalidArgument("subtract: shape mismatch " + shape_of(av) + " vs " + shape_of(bv));
  }
  Node n;
  n.op = Op::subtract;
  n.value = av - bv;
  n.parents = {a.index(), b.index()};
  return push(std::move(n));
}

Var Tape::add_column(Var m, Var b) {
  check_owned(m, "add_column");
  check_owned(b, "add_column");
  const Matrix& mv = node(m).value;
  const Matrix& bv = node(b).value;
  if (bv.cols() != 1 || bv.rows() != mv.rows()) {
    throw InvalidArgument("add_column: shape mismatch " + shape_of(mv) + " vs " + shape_of(bv));
  }
  Node n;
  n.op = Op::add_column;
  n.value = mv.colwise() + bv.col(0);
  n.parents = {m.index(), b.index()};
  return push(std::move(n));
}

Var Tape::scale(Var a, double s) {
  check_owned(a, "scale");
  Node n;
  n.op = Op::scale;
  n.value = s * node(a).value;
  n.factor = s;
  n.parents = {a.index()};
  return push(std::move(n));
}

Var Tape::tanh(Var a) {
  check_owned(a, "tanh");
  Node n;
  n.op = Op::tanh;
  n.value = node(a).value.array().tanh().matrix();
  n.parents = {a.index()};
  return push(std::move(n));
}

Var Tape::sum_squares(Var a) {
  check_owned(a, "sum_squares");
  Node n;
  n.op = Op::sum_squares;
  n.value = Matrix::Constant(1, 1, node(a).value.squaredNorm());
  n.parents = {a.index()};
  return push(std::move(n));
}

Var Tape::mean(Var a) {
  check_owned(a, "mean");
  const Matrix& av = node(a).value;
  if (av.size() == 0) throw InvalidArgument("mean: empty operand");
  Node n;
  n.op = Op::mean;
  n.value = Matrix::Constant(1, 1, av.mean());
  n.parents = {a.index()};
  return push(std::move(n));
}

Var Tape::columns(Var a, Eigen::Index start, Eigen::Index count) {
  check_owned(a, "columns");
  const Matrix& av = node(a).value;
  if (start < 0 || count < 0 || start + count > av.cols()) {
    throw InvalidArgument("columns: range [" + std::to_string(start) + ", " +
                          std::to_string(start + count) + ") outside " + shape_of(av));
  }
  Node n;
  n.op = Op::columns;
  n.value = av.middleCols(start, count);
  n.offset = start;
  n.parents = {a.index()};
  return push(std::move(n));
}

Var Tape::hconcat(std::span<const Var> parts) {
  if (parts.empty()) throw InvalidArgument("hconcat: no operands");
  Eigen::Index rows = -1;
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    check_owned(p, "hconcat");
    const Matrix& pv = node(p).value;
    if (rows >= 0 && pv.rows() != rows) {
      throw InvalidArgument("hconcat: shape mismatch " + shape_string(rows, cols) +
                            " vs " + shape_of(pv));
    }
    rows = pv.rows();
    cols += pv.cols();
  }
  Node n;
  n.op = Op::hconcat;
  n.value.resize(rows, cols);
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    const Matrix& pv = node(p).value;
    n.value.middleCols(at, pv.cols()) = pv;
    at += pv.cols();
    n.parents.push_back(p.index());
  }
  return push(std::move(n));
}

Var Tape::scale_columns(Var a, const Eigen::RowVectorXd& weights) {
  check_owned(a, "scale_columns");
  const Matrix& av = node(a).value;
  if (weights.size() != av.cols()) {
    throw InvalidArgument("scale_columns: shape mismatch " + shape_of(av) + " vs " +
                          shape_of(weights));
  }
  Node n;
  n.op = Op::scale_columns;
  n.value = av * weights.asDiagonal();
  n.weights = weights;
  n.parents = {a.index()};
  return push(std::move(n));
}

namespace {

void accumulate(Matrix& slot, const Matrix& contribution) {
  if (slot.size() == 0) {
    slot = contribution;
  } else {
    slot += contribution;
  }
}

}  // namespace

GradientSet Tape::backward(Var root) const {
  check_owned(root, "backward");
  const Matrix& rv = node(root).value;
  if (rv.rows() != 1 || rv.cols() != 1) {
    throw InvalidArgument("backward: root must be scalar, got " + shape_of(rv));
  }

  std::vector<Matrix> grads(nodes_.size());
  grads[root.index()] = Matrix::Ones(1, 1);

  for (std::size_t i = root.index() + 1; i-- > 0;) {
    const Node& n = nodes_[i];
    if (grads[i].size() == 0 || !n.requires_grad) continue;
    for (std::size_t p : n.parents) {
      if (p >= i) throw std::logic_error("backward: cycle detected at node " + std::to_string(i));
    }
    const Matrix& g = grads[i];
    auto needs = [&](std::size_t k) { return nodes_[n.parents[k]].requires_grad; };
    auto parent_value = [&](std::size_t k) -> const Matrix& {
      return nodes_[n.parents[k]].value;
    };

    switch (n.op) {
      case Op::leaf:
        break;
      case Op::matmul:
        if (needs(0)) accumulate(grads[n.parents[0]], g * parent_value(1).transpose());
        if (needs(1)) accumulate(grads[n.parents[1]], parent_value(0).transpose() * g);
        break;
      case Op::add:
        if (needs(0)) accumulate(grads[n.parents[0]], g);
        if (needs(1)) accumulate(grads[n.parents[1]], g);
        break;
      case Op::subtract:
        if (needs(0)) accumulate(grads[n.parents[0]], g);
        if (needs(1)) accumulate(grads[n.parents[1]], -g);
        break;
      case Op::add_column:
        if (needs(0)) accumulate(grads[n.parents[0]], g);
        if (needs(1)) accumulate(grads[n.parents[1]], g.rowwise().sum());
        break;
      case Op::scale:
        accumulate(grads[n.parents[0]], n.factor * g);
        break;
      case Op::tanh:
        accumulate(grads[n.parents[0]],
                   (g.array() * (1.0 - n.value.array().square())).matrix());
        break;
      case Op::sum_squares:
        accumulate(grads[n.parents[0]], (2.0 * g(0, 0)) * parent_value(0));
        break;
      case Op::mean: {
        const Matrix& pv = parent_value(0);
        accumulate(grads[n.parents[0]],
                   Matrix::Constant(pv.rows(), pv.cols(),
                                    g(0, 0) / static_cast<double>(pv.size())));
        break;
      }
      case Op::columns: {
        Matrix& slot = grads[n.parents[0]];
        if (slot.size() == 0) slot = Matrix::Zero(parent_value(0).rows(), parent_value(0).cols());
        slot.middleCols(n.offset, g.cols()) += g;
        break;
      }
      case Op::hconcat: {
        Eigen::Index at = 0;
        for (std::size_t k = 0; k < n.parents.size(); ++k) {
          const Eigen::Index w = parent_value(k).cols();
          if (needs(k)) accumulate(grads[n.parents[k]], g.middleCols(at, w));
          at += w;
        }
        break;
      }
      case Op::scale_columns:
        accumulate(grads[n.parents[0]], g * n.weights.asDiagonal());
        break;
    }
  }

  GradientSet out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (!n.param) continue;
    Matrix g = grads[i].size() ? grads[i] : Matrix::Zero(n.value.rows(), n.value.cols());
    auto [it, inserted] = out.grads.emplace(*n.param, g);
    if (!inserted) it->second += g;
  }
  return out;
}

Var matmul(Var a, Var b) { return a.tape()->matmul(a, b); }
Var operator+(Var a, Var b) { return a.tape()->add(a, b); }
Var operator-(Var a, Var b) { return a.tape()->subtract(a, b); }
Var operator*(double s, Var a) { return a.tape()->scale(a, s); }
Var add_column(Var m, Var b) { return m.tape()->add_column(m, b); }
Var tanh(Var a) { return a.tape()->tanh(a); }
Var sum_squares(Var a) { return a.tape()->sum_squares(a); }
Var mean(Var a) { return a.tape()->mean(a); }
Var columns(Var a, Eigen::Index start, Eigen::Index count) {
  return a.tape()->columns(a, start, count);
}
Var hconcat(std::span<const Var> parts) {
  if (parts.empty()) throw InvalidArgument("hconcat: no operands");
  return parts.front().tape()->hconcat(parts);
}
Var scale_columns(Var a, const Eigen::RowVectorXd& weights) {
  return a.tape()->scale_columns(a, weights);
}

std::pair<double, std::vector<Matrix>> value_and_gradient(const TapeFunction& f,
                                                          const std::vector<Matrix>& params) {
  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) leaves.push_back(tape.parameter(i, params[i]));
  Var root = f(tape, leaves);
  GradientSet gs = tape.backward(root);
  std::vector<Matrix> grads;
  grads.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) grads.push_back(gs.at(i));
  return {root.scalar(), std::move(grads)};
}

double gradient_check(const TapeFunction& f, const std::vector<Matrix>& params, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("gradient_check: eps must be positive");
  const auto [value, analytic] = value_and_gradient(f, params);
  if (!std::isfinite(value)) throw NumericError("gradient_check: f is not finite at params");

  auto evaluate = [&](const std::vector<Matrix>& probe) {
    Tape tape;
    std::vector<Var> leaves;
    for (std::size_t i = 0; i < probe.size(); ++i) leaves.push_back(tape.constant(probe[i]));
    const double v = f(tape, leaves).scalar();
    if (!std::isfinite(v)) throw NumericError("gradient_check: f is not finite at a probe point");
    return v;
  };

  std::vector<Matrix> probe = params;
  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (Eigen::Index k = 0; k < params[p].size(); ++k) {
      const double saved = probe[p](k);
      probe[p](k) = saved + eps;
      const double up = evaluate(probe);
      probe[p](k) = saved - eps;
      const double down = evaluate(probe);
      probe[p](k) = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[p](k);
      const double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace tcblran::ad
