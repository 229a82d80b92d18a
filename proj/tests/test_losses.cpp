#include <doctest.h>

#include "oracle.hpp"
#include "tcblran/losses.hpp"

#include <random>

using namespace tcblran;

namespace {

Architecture toy_arch() {
  Architecture a;
  a.input_dim = 4;
  a.latent_dim = 3;
  a.encoder_hidden = 8;
  a.decoder_hidden = 8;
  return a;
}

Matrix gaussian(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = normal(rng);
  return m;
}

ModelParams random_model(std::uint64_t seed, const Architecture& arch) {
  ModelParams p = init_params(seed, arch);
  std::mt19937_64 rng(seed + 7);
  for (std::size_t slot : {enc_b1, enc_b2, dec_b1, dec_b2}) p[slot] = gaussian(rng, p[slot].rows(), 1, 0.1);
  p[a_tilde] += gaussian(rng, arch.latent_dim, arch.latent_dim, 0.1);
  for (Eigen::Index i = 0; i < arch.input_count; ++i)
    p.b_tilde_at(static_cast<std::size_t>(i)) = gaussian(rng, arch.latent_dim, arch.latent_dim, 0.5);
  return p;
}

Batch random_batch(std::mt19937_64& rng, const LossWeights& w, Eigen::Index dim, Eigen::Index inputs = 1) {
  const auto length = static_cast<Eigen::Index>(w.window_length());
  const Matrix states = gaussian(rng, dim, length);
  const Matrix controls = gaussian(rng, inputs, length - 1, 0.15);
  return make_batch(states, controls, 0, w.batch_size, w.window_length());
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("identity loss worked example") {
  // Zero model reconstructs zero, so the loss is half the squared norm.
  Architecture arch = toy_arch();
  arch.input_dim = 2;
  const ModelParams zero(arch);
  LossWeights w;
  w.batch_size = 1;
  w.k_m = 1;
  Matrix states = Matrix::Zero(2, w.window_length());
  states(0, 0) = 3.0;
  states(1, 0) = 4.0;
  const Batch batch = make_batch(states, Matrix::Zero(1, w.window_length() - 1), 0, 1, w.window_length());
  CHECK(identity_loss(zero, batch) == doctest::Approx(12.5));
}

TEST_CASE("forward loss worked example") {
  Architecture arch = toy_arch();
  arch.input_dim = 2;
  const ModelParams zero(arch);
  LossWeights w;
  w.batch_size = 1;
  w.k_m = 1;
  Matrix states = Matrix::Zero(2, w.window_length());
  states(0, 1) = 1.0;
  states(1, 1) = 2.0;
  const Batch batch = make_batch(states, Matrix::Zero(1, w.window_length() - 1), 0, 1, w.window_length());
  CHECK(forward_loss(zero, batch, 1) == doctest::Approx(2.5));
  CHECK(identity_loss(zero, batch) == 0.0);
}

TEST_CASE("losses agree with the brute-force oracle") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 25; ++trial) {
    LossWeights w;
    w.batch_size = 2 + static_cast<std::size_t>(trial % 5);
    w.k_m = 1 + static_cast<std::size_t>(trial % 4);
    w.k_tm = 2 + static_cast<std::size_t>(trial % 3);
    if (w.batch_size <= w.k_tm) w.batch_size = w.k_tm + 1;
    w.gamma_tc = 0.7;
    w.gamma_fwd = 1.3;
    Architecture arch = toy_arch();
    arch.input_count = 1 + trial % 2;
    const ModelParams p = random_model(static_cast<std::uint64_t>(trial), arch);
    const Batch batch = random_batch(rng, w, arch.input_dim, arch.input_count);

    const LossBreakdown got = loss_breakdown(p, batch, w);
    const oracle::LossTriple want = oracle::loss_oracle(p, batch, w);
    CHECK(rel(got.identity, want.identity) <= 1e-12);
    CHECK(rel(got.forward, want.forward) <= 1e-12);
    CHECK(rel(got.consistency, want.consistency) <= 1e-12);
    const double total = w.gamma_id * want.identity + w.gamma_fwd * want.forward + w.gamma_tc * want.consistency;
    CHECK(rel(got.total, total) <= 1e-12);
    CHECK(total_loss(p, batch, w) == got.total);
  }
}

TEST_CASE("temporal consistency with two horizons has a closed form") {
  // k_tm = 2 leaves q = 1, k = 1: anchor p stepped once against anchor p - 1 stepped twice.
  std::mt19937_64 rng(22);
  LossWeights w;
  w.batch_size = 6;
  w.k_m = 2;
  w.k_tm = 2;
  const ModelParams p = random_model(3, toy_arch());
  const Batch batch = random_batch(rng, w, 4);
  double sum = 0.0;
  for (Eigen::Index col = 1; col < 6; ++col) {
    const Vector once = bilinear_step(p, encode(p, batch.states.col(col)), batch.controls.col(col));
    const Vector prior = bilinear_step(p, encode(p, batch.states.col(col - 1)), batch.controls.col(col - 1));
    const Vector twice = bilinear_step(p, prior, batch.controls.col(col));
    sum += (once - twice).squaredNorm();
  }
  const double closed = 0.5 * sum / 5.0;
  CHECK(rel(temporal_consistency_loss(p, batch, 2), closed) <= 1e-12);
}

TEST_CASE("temporal consistency ignores samples outside its index set") {
  std::mt19937_64 rng(23);
  LossWeights w;
  w.batch_size = 5;
  w.k_m = 4;
  w.k_tm = 3;
  const ModelParams p = random_model(4, toy_arch());
  Batch batch = random_batch(rng, w, 4);
  const double before = temporal_consistency_loss(p, batch, w.k_tm);
  // Only the first M states are encoded; later states are forward labels.
  batch.states.rightCols(batch.states.cols() - 5).setRandom();
  CHECK(temporal_consistency_loss(p, batch, w.k_tm) == before);
}

TEST_CASE("loss weights select components") {
  std::mt19937_64 rng(24);
  LossWeights w;
  w.batch_size = 4;
  w.k_m = 3;
  const ModelParams p = random_model(5, toy_arch());
  const Batch batch = random_batch(rng, w, 4);

  LossWeights only_id = w;
  only_id.gamma_id = 1;
  only_id.gamma_fwd = 0;
  only_id.gamma_tc = 0;
  CHECK(total_loss(p, batch, only_id) == identity_loss(p, batch));

  LossWeights blran = w;  // gamma_tc = 0 by default
  const LossBreakdown b = loss_breakdown(p, batch, blran);
  CHECK(b.total == doctest::Approx(b.identity + b.forward).epsilon(1e-14));
  CHECK(b.consistency > 0.0);  // still reported

  // The BLRAN gradient is blind to the consistency term.
  const auto g0 = loss_and_gradient(p, batch, blran);
  LossWeights tc = blran;
  tc.gamma_tc = 0.0;
  tc.k_tm = 3;
  const auto g1 = loss_and_gradient(p, batch, tc);
  for (std::size_t i = 0; i < g0.grads.size(); ++i) CHECK(g0.grads[i] == g1.grads[i]);
}

TEST_CASE("total loss gradient matches finite differences") {
  std::mt19937_64 rng(25);
  LossWeights w;
  w.batch_size = 4;
  w.k_m = 2;
  w.k_tm = 3;
  w.gamma_fwd = 0.8;
  w.gamma_tc = 1.5;
  const Architecture arch = toy_arch();
  const ModelParams p = random_model(6, arch);
  const Batch batch = random_batch(rng, w, arch.input_dim);

  const std::vector<Matrix>& tensors = p.tensors();
  const LossGradient analytic = loss_and_gradient(p, batch, w);
  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t slot = 0; slot < tensors.size(); ++slot) {
    for (Eigen::Index k = 0; k < tensors[slot].size(); ++k) {
      ModelParams up = p, down = p;
      up[slot](k) += h;
      down[slot](k) -= h;
      const double numeric = (total_loss(up, batch, w) - total_loss(down, batch, w)) / (2 * h);
      const double a = analytic.grads[slot](k);
      worst = std::max(worst, std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)}));
    }
  }
  CHECK(worst < 1e-6);
  CHECK(analytic.losses.total == total_loss(p, batch, w));
}

TEST_CASE("loss argument validation") {
  LossWeights w;
  CHECK_NOTHROW(w.validate());
  LossWeights bad = w;
  bad.gamma_tc = -1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = w;
  bad.k_tm = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = w;
  bad.k_m = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = w;
  bad.batch_size = 2;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  std::mt19937_64 rng(26);
  const ModelParams p = random_model(7, toy_arch());
  LossWeights small;
  small.batch_size = 4;
  small.k_m = 3;
  const Batch batch = random_batch(rng, small, 4);
  CHECK_THROWS_AS(forward_loss(p, batch, 20), ConfigError);
  CHECK_THROWS_AS(make_batch(batch.states, batch.controls, 5, 4, small.window_length()), InvalidArgument);

  Architecture wide = toy_arch();
  wide.input_dim = 5;
  CHECK_THROWS_AS(identity_loss(random_model(8, wide), batch), InvalidArgument);
}
