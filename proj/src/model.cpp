#include "tcblran/model.hpp"

#include <cmath>
#include <random>

namespace tcblran {

std::string_view to_string(Activation a) {
  return a == Activation::tanh ? "tanh" : "identity";
}

Activation activation_from_string(std::string_view name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "identity") return Activation::identity;
  throw InvalidArgument("unknown activation '" + std::string(name) + "'");
}

void Architecture::validate() const {
  if (input_dim <= 0 || latent_dim <= 0 || encoder_hidden <= 0 || decoder_hidden <= 0 ||
      input_count <= 0) {
    throw ConfigError("architecture: all dimensions must be positive");
  }
}

std::string slot_name(std::size_t slot) {
  static const char* names[] = {"enc_w1", "enc_b1", "enc_w2", "enc_b2", "dec_w1",
                                "dec_b1", "dec_w2", "dec_b2", "a_tilde"};
  if (slot < b_tilde) return names[slot];
  return "b_tilde_" + std::to_string(slot - b_tilde);
}

ModelParams::ModelParams(const Architecture& arch) : arch_(arch) {
  arch.validate();
  const auto D = arch.input_dim;
  const auto L = arch.latent_dim;
  const auto he = arch.encoder_hidden;
  const auto hd = arch.decoder_hidden;
  tensors_ = {Matrix::Zero(he, D), Matrix::Zero(he, 1), Matrix::Zero(L, he), Matrix::Zero(L, 1),
              Matrix::Zero(hd, L), Matrix::Zero(hd, 1), Matrix::Zero(D, hd), Matrix::Zero(D, 1),
              Matrix::Identity(L, L)};
  for (Eigen::Index i = 0; i < arch.input_count; ++i) tensors_.push_back(Matrix::Zero(L, L));
}

bool ModelParams::all_finite() const {
  for (const auto& t : tensors_)
    if (!t.allFinite()) return false;
  return true;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += static_cast<std::size_t>(t.size());
  return n;
}

bool ModelParams::operator==(const ModelParams& other) const {
  if (!(arch_ == other.arch_) || tensors_.size() != other.tensors_.size()) return false;
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].rows() != other.tensors_[i].rows() ||
        tensors_[i].cols() != other.tensors_[i].cols() || tensors_[i] != other.tensors_[i]) {
      return false;
    }
  }
  return true;
}

double glorot_bound(Eigen::Index fan_in, Eigen::Index fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

ModelParams init_params(std::uint64_t seed, const Architecture& arch) {
  ModelParams params(arch);
  std::mt19937_64 rng(seed);
  for (std::size_t slot : {enc_w1, enc_w2, dec_w1, dec_w2}) {
    Matrix& w = params[slot];
    const double bound = glorot_bound(w.cols(), w.rows());
    std::uniform_real_distribution<double> uniform(-bound, bound);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = uniform(rng);
  }
  return params;
}

namespace {

Matrix activate(const ModelParams& params, const Matrix& pre) {
  if (params.arch().activation == Activation::identity) return pre;
  return pre.array().tanh().matrix();
}

void check_rows(const char* op, const Matrix& m, Eigen::Index expected) {
  if (m.rows() != expected) {
    throw InvalidArgument(std::string(op) + ": input " + shape_of(m) + " needs " +
                          std::to_string(expected) + " rows");
  }
}

}  // namespace

Matrix encode_columns(const ModelParams& params, const Matrix& x) {
  check_rows("encode", x, params.arch().input_dim);
  const Matrix hidden = activate(params, (params[enc_w1] * x).colwise() + params[enc_b1].col(0));
  return (params[enc_w2] * hidden).colwise() + params[enc_b2].col(0);
}

Matrix decode_columns(const ModelParams& params, const Matrix& z) {
  check_rows("decode", z, params.arch().latent_dim);
  const Matrix hidden = activate(params, (params[dec_w1] * z).colwise() + params[dec_b1].col(0));
  return (params[dec_w2] * hidden).colwise() + params[dec_b2].col(0);
}

Vector encode(const ModelParams& params, const Vector& x) {
  return encode_columns(params, x).col(0);
}

Vector decode(const ModelParams& params, const Vector& z) {
  return decode_columns(params, z).col(0);
}

Vector bilinear_step(const ModelParams& params, const Vector& z, const Vector& u) {
  const auto& arch = params.arch();
  if (z.size() != arch.latent_dim || u.size() != arch.input_count) {
    throw InvalidArgument("bilinear_step: latent size " + std::to_string(z.size()) +
                          " / input size " + std::to_string(u.size()) + ", expected " +
                          std::to_string(arch.latent_dim) + " / " +
                          std::to_string(arch.input_count));
  }
  Vector next = params[a_tilde] * z;
  for (Eigen::Index i = 0; i < arch.input_count; ++i) {
    next += (params.b_tilde_at(static_cast<std::size_t>(i)) * z) * u(i);
  }
  return next;
}

VectorSequence rollout_latent(const ModelParams& params, const Vector& z0,
                              const VectorSequence& controls) {
  VectorSequence out;
  out.reserve(controls.size());
  Vector z = z0;
  for (const Vector& u : controls) {
    z = bilinear_step(params, z, u);
    out.push_back(z);
  }
  return out;
}

VectorSequence predict(const ModelParams& params, const Vector& x0,
                       const VectorSequence& controls) {
  const VectorSequence latents = rollout_latent(params, encode(params, x0), controls);
  if (latents.empty()) return {};
  return unstack_columns(decode_columns(params, stack_columns(latents)));
}

VectorSequence predict_with_reconstruction(const ModelParams& params, const Vector& x0,
                                           const VectorSequence& controls) {
  const Vector z0 = encode(params, x0);
  VectorSequence latents{z0};
  Vector z = z0;
  for (const Vector& u : controls) {
    z = bilinear_step(params, z, u);
    latents.push_back(z);
  }
  return unstack_columns(decode_columns(params, stack_columns(latents)));
}

TapedModel::TapedModel(ad::Tape& tape, const ModelParams& p) : params(&p) {
  vars.reserve(p.tensors().size());
  for (std::size_t i = 0; i < p.tensors().size(); ++i) vars.push_back(tape.parameter(i, p[i]));
}

ad::Var TapedModel::encode(ad::Var x) const {
  ad::Var pre = ad::add_column(ad::matmul(vars[enc_w1], x), vars[enc_b1]);
  ad::Var hidden = params->arch().activation == Activation::tanh ? ad::tanh(pre) : pre;
  return ad::add_column(ad::matmul(vars[enc_w2], hidden), vars[enc_b2]);
}

ad::Var TapedModel::decode(ad::Var z) const {
  ad::Var pre = ad::add_column(ad::matmul(vars[dec_w1], z), vars[dec_b1]);
  ad::Var hidden = params->arch().activation == Activation::tanh ? ad::tanh(pre) : pre;
  return ad::add_column(ad::matmul(vars[dec_w2], hidden), vars[dec_b2]);
}

ad::Var TapedModel::step(ad::Var z, const Matrix& controls) const {
  const auto m = params->arch().input_count;
  if (controls.rows() != m || controls.cols() != z.cols()) {
    throw InvalidArgument("TapedModel::step: controls " + shape_of(controls) +
                          " for latent batch " + shape_string(z.rows(), z.cols()));
  }
  ad::Var next = ad::matmul(vars[a_tilde], z);
  for (Eigen::Index i = 0; i < m; ++i) {
    ad::Var bz = ad::matmul(vars[b_tilde + static_cast<std::size_t>(i)], z);
    next = next + ad::scale_columns(bz, controls.row(i));
  }
  return next;
}

}  // namespace tcblran
