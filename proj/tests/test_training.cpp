#include <doctest.h>

#include "tcblran/training.hpp"

#include <sstream>

using namespace tcblran;

namespace {

TrainingSetup small_setup(std::size_t epochs) {
  TrainingSetup s;
  s.arch.input_dim = 8;
  s.arch.latent_dim = 4;
  s.arch.encoder_hidden = 16;
  s.arch.decoder_hidden = 16;
  s.weights.batch_size = 8;
  s.weights.k_m = 4;
  s.weights.k_tm = 2;
  s.weights.gamma_tc = 0.5;
  s.trainer.epochs = epochs;
  s.trainer.weight_decay = 0.01;
  return s;
}

Dataset small_dataset() {
  DatasetConfig c;
  c.n_points = 80;
  c.lifted_dim = 8;
  c.n_train = 40;
  return build_dataset(c);
}

}  // namespace

TEST_CASE("learning-rate schedule") {
  const TrainerConfig c;
  CHECK(lr_at_epoch(c, 0) == 0.01);
  CHECK(lr_at_epoch(c, 29) == 0.01);
  CHECK(lr_at_epoch(c, 30) == 0.005);
  CHECK(lr_at_epoch(c, 150) == 0.0025);
  CHECK(lr_at_epoch(c, 450) == 0.000625);
  CHECK(lr_at_epoch(c, 599) == 0.000625);
  double prev = lr_at_epoch(c, 0);
  for (std::size_t e = 1; e < 600; ++e) {
    const double lr = lr_at_epoch(c, e);
    CHECK(lr <= prev);
    prev = lr;
  }
}

TEST_CASE("trainer config validation") {
  TrainerConfig c;
  CHECK_NOTHROW(c.validate());
  c.lr0 = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.milestones = {100, 30};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.grad_clip = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("gradient clipping is joint and preserves direction") {
  std::vector<Matrix> g{Matrix::Constant(2, 2, 3.0), Matrix::Constant(1, 1, 4.0)};
  const double norm = std::sqrt(4 * 9.0 + 16.0);
  CHECK(global_norm(g) == doctest::Approx(norm));
  const std::vector<Matrix> before = g;
  CHECK(clip_gradients(g, 0.05) == doctest::Approx(norm));
  CHECK(global_norm(g) == doctest::Approx(0.05));
  CHECK(g[0](0, 0) / g[1](0, 0) == doctest::Approx(0.75));

  std::vector<Matrix> small{Matrix::Constant(1, 1, 0.01)};
  clip_gradients(small, 0.05);
  CHECK(small[0](0, 0) == 0.01);

  std::vector<Matrix> bad{Matrix::Constant(1, 1, std::nan(""))};
  CHECK_THROWS_AS(clip_gradients(bad, 1.0), NumericError);
  CHECK_THROWS_AS(clip_gradients(small, 0.0), InvalidArgument);
}

TEST_CASE("adam step") {
  std::vector<Matrix> params{Matrix::Constant(2, 1, 1.0)};
  SUBCASE("zero gradient without decay leaves params alone") {
    AdamState s = AdamState::zeros_like(params);
    adam_step(s, params, {Matrix::Zero(2, 1)}, 0.01, 0.0);
    CHECK(params[0] == Matrix::Constant(2, 1, 1.0));
    CHECK(s.step == 1);
  }
  SUBCASE("decoupled decay shrinks params") {
    AdamState s = AdamState::zeros_like(params);
    adam_step(s, params, {Matrix::Zero(2, 1)}, 0.01, 0.1);
    CHECK(params[0](0) == doctest::Approx(1.0 - 0.01 * 0.1));
  }
  SUBCASE("first step moves by about lr against the gradient sign") {
    AdamState s = AdamState::zeros_like(params);
    adam_step(s, params, {(Matrix(2, 1) << 5.0, -0.2).finished()}, 0.01, 0.0);
    CHECK(params[0](0) == doctest::Approx(0.99).epsilon(1e-6));
    CHECK(params[0](1) == doctest::Approx(1.01).epsilon(1e-6));
  }
  SUBCASE("shape mismatch") {
    AdamState s = AdamState::zeros_like(params);
    CHECK_THROWS_AS(adam_step(s, params, {Matrix::Zero(3, 1)}, 0.01, 0.0), InvalidArgument);
  }
  SUBCASE("minimizes a quadratic") {
    std::vector<Matrix> x{(Matrix(3, 1) << 2.0, -1.0, 0.5).finished()};
    const Matrix target = (Matrix(3, 1) << 0.3, 0.1, -0.2).finished();
    AdamState s = AdamState::zeros_like(x);
    for (int i = 0; i < 3000; ++i) adam_step(s, x, {x[0] - target}, 0.01, 0.0);
    CHECK((x[0] - target).norm() < 1e-3);
  }
}

TEST_CASE("window starts") {
  const auto starts = window_starts(32, 18 + 12 + 2);
  REQUIRE(starts.size() == 1);
  CHECK(starts[0] == 0);
  CHECK(window_starts(40, 10).size() == 31);
  CHECK(window_starts(5, 10).empty());
}

TEST_CASE("training runs, is deterministic and decreases the loss") {
  const Dataset ds = small_dataset();
  const TrainResult zero = train(small_setup(0), ds);
  CHECK(zero.history.epochs.empty());
  CHECK(zero.params == init_params(0, small_setup(0).arch));

  const TrainResult a = train(small_setup(60), ds);
  const TrainResult b = train(small_setup(60), ds);
  CHECK(a.params == b.params);
  CHECK(a.batch_size == 8);
  CHECK(a.windows_per_epoch == 40 - 14 + 1);
  REQUIRE(a.history.epochs.size() == 60);
  const double first = a.history.epochs.front().losses.total;
  const double last = a.history.epochs.back().losses.total;
  CHECK(last < first / 10.0);
  CHECK(a.params.all_finite());

  TrainingSetup other = small_setup(60);
  other.trainer.seed = 1;
  CHECK_FALSE(train(other, ds).params == a.params);

  std::ostringstream csv;
  a.history.write_csv(csv);
  CHECK(csv.str().rfind("epoch,lr,L_id,L_fwd,L_tc,L_tot\n", 0) == 0);
  std::size_t lines = 0;
  for (char ch : csv.str()) lines += ch == '\n';
  CHECK(lines == 61);
}

TEST_CASE("training falls back to a smaller batch when data is scarce") {
  DatasetConfig c;
  c.n_points = 80;
  c.lifted_dim = 8;
  c.n_train = 20;
  TrainingSetup s = small_setup(2);
  s.weights.batch_size = 32;
  const TrainResult r = train(s, build_dataset(c));
  CHECK(r.batch_size == 20 - 4 - 2);
  CHECK(r.windows_per_epoch == 1);
}

TEST_CASE("training rejects mismatched data") {
  TrainingSetup s = small_setup(1);
  s.arch.input_dim = 9;
  CHECK_THROWS_AS(train(s, small_dataset()), ConfigError);
}
