#include "gapforge/encoder.hpp"

#include <cmath>

#include "gapforge/errors.hpp"

namespace gapforge {

EncoderModel init_encoder(std::size_t in_dim, std::size_t hidden, std::size_t out_dim,
                          Rng& rng, double bias_sigma) {
  if (in_dim < 1 || hidden < 1 || out_dim < 2) {
    throw ConfigError("init_encoder: need in_dim >= 1, hidden >= 1, out_dim >= 2");
  }
  EncoderModel model;
  model.w1 = Matrix(in_dim, hidden);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(in_dim));
  for (double& v : model.w1.storage()) v = rng.normal() * s1;
  model.b1.resize(hidden);
  for (double& v : model.b1) v = rng.normal() * bias_sigma;
  model.w2 = Matrix(hidden, out_dim);
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (double& v : model.w2.storage()) v = rng.normal() * s2;
  model.b2.resize(out_dim);
  for (double& v : model.b2) v = rng.normal() * bias_sigma;
  return model;
}

EmbeddingBatch encoder_forward(const EncoderModel& model, const Matrix& features,
                               ForwardCache* cache) {
  if (features.cols() != model.in_dim()) {
    throw ShapeError("encoder_forward: feature dim " + std::to_string(features.cols()) +
                     " != model input dim " + std::to_string(model.in_dim()));
  }
  Matrix hidden = matmul(features, model.w1);
  for (std::size_t i = 0; i < hidden.rows(); ++i) {
    auto row = hidden.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = std::tanh(row[j] + model.b1[j]);
  }
  Matrix raw = matmul(hidden, model.w2);
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    auto row = raw.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += model.b2[j];
  }
  if (cache != nullptr) {
    cache->input = features;
    cache->hidden_act = hidden;
    cache->raw_out = raw;
  }
  return normalize_rows(EmbeddingBatch{std::move(raw), false});
}

EncoderGrads encoder_backward(const EncoderModel& model, const ForwardCache& cache,
                              const Matrix& grad_out, Matrix* grad_input,
                              const Matrix* grad_raw) {
  if (cache.input.cols() != model.in_dim() || cache.hidden_act.cols() != model.hidden_dim() ||
      cache.raw_out.cols() != model.out_dim() ||
      cache.input.rows() != cache.hidden_act.rows() ||
      cache.hidden_act.rows() != cache.raw_out.rows()) {
    throw Error("encoder_backward: cache does not match model");
  }
  if (!grad_out.same_shape(cache.raw_out)) {
    throw ShapeError("encoder_backward: grad_out shape mismatch");
  }

  Matrix g_raw = normalize_rows_backward(cache.raw_out, grad_out);
  if (grad_raw != nullptr) add_scaled(g_raw, *grad_raw);

  EncoderGrads grads;
  grads.w2 = matmul_at_b(cache.hidden_act, g_raw);
  grads.b2 = column_sums(g_raw);

  Matrix g_hidden = matmul_a_bt(g_raw, model.w2);  // g_raw . w2^T
  // tanh' = 1 - act^2
  for (std::size_t i = 0; i < g_hidden.size(); ++i) {
    const double a = cache.hidden_act.storage()[i];
    g_hidden.storage()[i] *= 1.0 - a * a;
  }
  grads.w1 = matmul_at_b(cache.input, g_hidden);
  grads.b1 = column_sums(g_hidden);
  if (grad_input != nullptr) {
    *grad_input = matmul_a_bt(g_hidden, model.w1);  // g_hidden . w1^T
  }
  return grads;
}

}  // namespace gapforge
