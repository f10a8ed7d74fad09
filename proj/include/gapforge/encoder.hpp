#pragma once

#include <cstdint>
#include <vector>

#include "gapforge/embedding.hpp"
#include "gapforge/matrix.hpp"
#include "gapforge/rng.hpp"

namespace gapforge {

// Small feed-forward encoder: features -> tanh hidden layer -> linear output,
// row-normalized downstream. tanh keeps gradients smooth everywhere, which
// finite-difference checks rely on.
struct EncoderModel {
  Matrix w1;               // in_dim x hidden
  std::vector<double> b1;  // hidden
  Matrix w2;               // hidden x out_dim
  std::vector<double> b2;  // out_dim

  std::size_t in_dim() const noexcept { return w1.rows(); }
  std::size_t hidden_dim() const noexcept { return w1.cols(); }
  std::size_t out_dim() const noexcept { return w2.cols(); }
};

// Scaled Gaussian init: weights N(0, 1/sqrt(fan_in)), biases N(0, bias_sigma).
// The bias offset is what gives independently initialized encoders their
// distinct output cones.
EncoderModel init_encoder(std::size_t in_dim, std::size_t hidden, std::size_t out_dim,
                          Rng& rng, double bias_sigma = 0.5);

// Activations retained by a forward pass for the matching backward pass.
struct ForwardCache {
  Matrix input;       // B x in_dim
  Matrix hidden_act;  // B x hidden (post-tanh)
  Matrix raw_out;     // B x out_dim (pre-normalization)
};

// Hidden layer, tanh, output layer, then row normalization. Zero/degenerate
// raw outputs surface as ZeroRowError.
EmbeddingBatch encoder_forward(const EncoderModel& model, const Matrix& features,
                               ForwardCache* cache = nullptr);

struct EncoderGrads {
  Matrix w1;
  std::vector<double> b1;
  Matrix w2;
  std::vector<double> b2;
};

// Chain rule through normalization, output layer, tanh, hidden layer.
// grad_out is w.r.t. the normalized embeddings; grad_raw, when given, is an
// additional gradient w.r.t. the pre-normalization outputs (used by loss
// terms that bypass normalization). Set grad_input to also get d/d features.
EncoderGrads encoder_backward(const EncoderModel& model, const ForwardCache& cache,
                              const Matrix& grad_out, Matrix* grad_input = nullptr,
                              const Matrix* grad_raw = nullptr);

}  // namespace gapforge
