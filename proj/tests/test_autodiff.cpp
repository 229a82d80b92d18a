#include <doctest.h>

#include "tcblran/autodiff.hpp"

#include <random>

using namespace tcblran;
using namespace tcblran::ad;

namespace {

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = normal(rng);
  return m;
}

}  // namespace

TEST_CASE("forward op values") {
  Tape tape;
  CHECK(tanh(tape.constant(Matrix::Zero(3, 1))).value() == Matrix::Zero(3, 1));
  CHECK(sum_squares(tape.constant((Matrix(2, 1) << 3, 4).finished())).scalar() == 25.0);

  std::mt19937_64 rng(1);
  const Matrix a = random_matrix(rng, 4, 5);
  CHECK(matmul(tape.constant(Matrix::Identity(4, 4)), tape.constant(a)).value() == a);
  CHECK(mean(tape.constant((Matrix(1, 4) << 1, 2, 3, 6).finished())).scalar() == 3.0);
}

TEST_CASE("shape mismatches name both shapes") {
  Tape tape;
  Var a = tape.constant(Matrix::Zero(3, 4));
  Var b = tape.constant(Matrix::Zero(5, 2));
  try {
    matmul(a, b);
    FAIL("expected InvalidArgument");
  } catch (const InvalidArgument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("(3x4)") != std::string::npos);
    CHECK(msg.find("(5x2)") != std::string::npos);
  }
  CHECK_THROWS_AS(a + b, InvalidArgument);
  CHECK_THROWS_AS(a - b, InvalidArgument);
  CHECK_THROWS_AS(add_column(a, b), InvalidArgument);
  CHECK_THROWS_AS(columns(a, 3, 2), InvalidArgument);
  CHECK_THROWS_AS(scale_columns(a, Eigen::RowVectorXd::Ones(3)), InvalidArgument);

  Tape other;
  CHECK_THROWS_AS(tape.add(a, other.constant(Matrix::Zero(3, 4))), InvalidArgument);
}

TEST_CASE("backward basics") {
  SUBCASE("d/dA sum_squares(A) = 2A") {
    std::mt19937_64 rng(2);
    const Matrix a = random_matrix(rng, 3, 2);
    Tape tape;
    Var p = tape.parameter(0, a);
    CHECK(tape.backward(sum_squares(p)).at(0) == 2.0 * a);
  }
  SUBCASE("fan-out accumulates") {
    Tape tape;
    Var x = tape.parameter(0, Matrix::Constant(1, 1, 1.5));
    CHECK(tape.backward(x + x).at(0)(0, 0) == 2.0);
  }
  SUBCASE("non-scalar root is rejected") {
    Tape tape;
    Var x = tape.parameter(0, Matrix::Zero(2, 1));
    CHECK_THROWS_AS(tape.backward(x), InvalidArgument);
  }
  SUBCASE("unused parameters get exact zeros") {
    Tape tape;
    Var used = tape.parameter(0, Matrix::Ones(2, 2));
    tape.parameter(1, Matrix::Ones(3, 1));
    const GradientSet g = tape.backward(sum_squares(used));
    CHECK(g.at(1) == Matrix::Zero(3, 1));
    CHECK(g.all_finite());
  }
}

TEST_CASE("backward is deterministic") {
  std::mt19937_64 rng(3);
  const std::vector<Matrix> params{random_matrix(rng, 4, 3), random_matrix(rng, 4, 1)};
  const Matrix input = random_matrix(rng, 3, 6);
  TapeFunction f = [&](Tape& t, std::span<const Var> p) {
    return mean(tanh(add_column(matmul(p[0], t.constant(input)), p[1])));
  };
  const auto [v1, g1] = value_and_gradient(f, params);
  const auto [v2, g2] = value_and_gradient(f, params);
  CHECK(v1 == v2);
  CHECK(g1 == g2);
}

TEST_CASE("every op matches central differences") {
  std::mt19937_64 rng(4);
  const Matrix x = random_matrix(rng, 3, 5);
  const Eigen::RowVectorXd w = random_matrix(rng, 1, 5);

  std::vector<std::pair<const char*, TapeFunction>> cases = {
      {"matmul", [&](Tape& t, std::span<const Var> p) { return sum_squares(matmul(p[0], t.constant(x))); }},
      {"add", [&](Tape& t, std::span<const Var> p) { return sum_squares(matmul(p[0], t.constant(x)) + matmul(p[0], t.constant(x))); }},
      {"subtract", [&](Tape& t, std::span<const Var> p) { return sum_squares(matmul(p[0], t.constant(x)) - t.constant(Matrix::Ones(4, 5))); }},
      {"add_column", [&](Tape& t, std::span<const Var> p) { return sum_squares(add_column(matmul(p[0], t.constant(x)), p[1])); }},
      {"scale", [&](Tape& t, std::span<const Var> p) { return -0.7 * sum_squares(p[0]); }},
      {"tanh", [&](Tape& t, std::span<const Var> p) { return sum_squares(tanh(matmul(p[0], t.constant(x)))); }},
      {"mean", [&](Tape& t, std::span<const Var> p) { return mean(tanh(p[0])); }},
      {"columns", [&](Tape& t, std::span<const Var> p) { return sum_squares(columns(matmul(p[0], t.constant(x)), 1, 3)); }},
      {"hconcat", [&](Tape& t, std::span<const Var> p) {
         const Var parts[] = {p[0], tanh(p[0]), p[1]};
         return sum_squares(hconcat(parts));
       }},
      {"scale_columns", [&](Tape& t, std::span<const Var> p) { return sum_squares(scale_columns(matmul(p[0], t.constant(x)), w)); }},
  };
  const std::vector<Matrix> params{random_matrix(rng, 4, 3), random_matrix(rng, 4, 1)};
  for (const auto& [name, f] : cases) {
    CAPTURE(name);
    CHECK(gradient_check(f, params, 1e-6) < 1e-5);
  }
}

TEST_CASE("three-layer composition matches finite differences") {
  std::mt19937_64 rng(5);
  const Matrix x = random_matrix(rng, 6, 8);
  const Matrix target = random_matrix(rng, 2, 8);
  const std::vector<Matrix> params{random_matrix(rng, 5, 6), random_matrix(rng, 5, 1),
                                   random_matrix(rng, 4, 5), random_matrix(rng, 4, 1),
                                   random_matrix(rng, 2, 4), random_matrix(rng, 2, 1)};
  TapeFunction f = [&](Tape& t, std::span<const Var> p) {
    Var h1 = tanh(add_column(matmul(p[0], t.constant(x)), p[1]));
    Var h2 = tanh(add_column(matmul(p[2], h1), p[3]));
    Var out = add_column(matmul(p[4], h2), p[5]);
    return 0.5 * sum_squares(out - t.constant(target));
  };
  CHECK(gradient_check(f, params, 1e-6) < 1e-5);
}

TEST_CASE("gradient_check contract") {
  const std::vector<Matrix> params{(Matrix(2, 2) << 1, -2, 0.5, 3).finished()};
  TapeFunction quadratic = [](Tape&, std::span<const Var> p) { return 3.0 * sum_squares(p[0]); };
  CHECK(gradient_check(quadratic, params, 1e-4) < 1e-9);
  CHECK_THROWS_AS(gradient_check(quadratic, params, 0.0), InvalidArgument);

  TapeFunction blows_up = [](Tape& t, std::span<const Var> p) {
    return sum_squares(matmul(p[0], t.constant(Matrix::Constant(2, 1, 1e200))));
  };
  CHECK_THROWS_AS(gradient_check(blows_up, params, 1e-6), NumericError);
}
