#include "tcblran/common.hpp"

namespace tcblran {

Matrix stack_columns(const VectorSequence& seq) {
  if (seq.empty()) return Matrix();
  const Eigen::Index rows = seq.front().size();
  Matrix out(rows, static_cast<Eigen::Index>(seq.size()));
  for (std::size_t j = 0; j < seq.size(); ++j) {
    if (seq[j].size() != rows) {
      throw InvalidArgument("stack_columns: vector " + std::to_string(j) +
                            " has size " + std::to_string(seq[j].size()) +
                            ", expected " + std::to_string(rows));
    }
    out.col(static_cast<Eigen::Index>(j)) = seq[j];
  }
  return out;
}

VectorSequence unstack_columns(const Matrix& m) {
  VectorSequence out;
  out.reserve(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) out.emplace_back(m.col(j));
  return out;
}

}  // namespace tcblran
