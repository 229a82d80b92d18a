#pragma once

#include "tcblran/autodiff.hpp"

#include <cstdint>
#include <string_view>

namespace tcblran {

/// Hidden-layer nonlinearity. tanh is the trained architecture; identity
/// exists so that an exactly linear encoder can be hardwired in tests.
enum class Activation { tanh, identity };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

struct Architecture {
  Eigen::Index input_dim = 64;
  Eigen::Index latent_dim = 12;
  Eigen::Index encoder_hidden = 128;
  Eigen::Index decoder_hidden = 128;
  Eigen::Index input_count = 1;
  Activation activation = Activation::tanh;

  void validate() const;
  bool operator==(const Architecture&) const = default;
};

/// Slots of the flat parameter list. B-tilde_i lives at b_tilde + i.
enum ParamSlot : std::size_t {
  enc_w1, enc_b1, enc_w2, enc_b2,
  dec_w1, dec_b1, dec_w2, dec_b2,
  a_tilde, b_tilde
};

std::string slot_name(std::size_t slot);

/// Encoder, decoder and latent transition matrices of a bilinearly recurrent
/// autoencoder. Biases are stored as single-column matrices so that all
/// tensors share one type.
class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(const Architecture& arch);  // all zeros, A-tilde = I

  const Architecture& arch() const { return arch_; }
  std::vector<Matrix>& tensors() { return tensors_; }
  const std::vector<Matrix>& tensors() const { return tensors_; }
  Matrix& operator[](std::size_t slot) { return tensors_.at(slot); }
  const Matrix& operator[](std::size_t slot) const { return tensors_.at(slot); }

  const Matrix& b_tilde_at(std::size_t i) const { return tensors_.at(b_tilde + i); }
  Matrix& b_tilde_at(std::size_t i) { return tensors_.at(b_tilde + i); }

  bool all_finite() const;
  std::size_t parameter_count() const;
  bool operator==(const ModelParams&) const;

 private:
  Architecture arch_;
  std::vector<Matrix> tensors_;
};

/// Glorot-uniform encoder/decoder weights, zero biases, A-tilde = I and
/// B-tilde = 0, so a fresh model's latent recurrence is the identity.
ModelParams init_params(std::uint64_t seed, const Architecture& arch);

/// Glorot bound sqrt(6 / (fan_in + fan_out)).
double glorot_bound(Eigen::Index fan_in, Eigen::Index fan_out);

Vector encode(const ModelParams& params, const Vector& x);
Vector decode(const ModelParams& params, const Vector& z);
/// Column-batched variants.
Matrix encode_columns(const ModelParams& params, const Matrix& x);
Matrix decode_columns(const ModelParams& params, const Matrix& z);

/// (A-tilde + sum_i B-tilde_i u_i) z.
Vector bilinear_step(const ModelParams& params, const Vector& z, const Vector& u);

/// out[j] is z0 advanced j + 1 steps, consuming controls left to right.
VectorSequence rollout_latent(const ModelParams& params, const Vector& z0,
                              const VectorSequence& controls);

/// Decoded latent rollout from encode(x0); one prediction per control.
VectorSequence predict(const ModelParams& params, const Vector& x0,
                       const VectorSequence& controls);

/// Same as predict but prepends the zero-step reconstruction
/// decode(encode(x0)), giving controls.size() + 1 states.
VectorSequence predict_with_reconstruction(const ModelParams& params, const Vector& x0,
                                           const VectorSequence& controls);

/// Model parameters registered on a tape, one leaf per tensor slot.
struct TapedModel {
  const ModelParams* params = nullptr;
  std::vector<ad::Var> vars;

  TapedModel(ad::Tape& tape, const ModelParams& params);

  ad::Var encode(ad::Var x) const;
  ad::Var decode(ad::Var z) const;
  /// One latent step for a batch of columns, column j driven by
  /// controls.col(j).
  ad::Var step(ad::Var z, const Matrix& controls) const;
};

}  // namespace tcblran
