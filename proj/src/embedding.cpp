#include "gapforge/embedding.hpp"

#include <cmath>
#include <string>

#include "gapforge/errors.hpp"

namespace gapforge {

namespace {
constexpr double kZeroRowThreshold = 1e-12;
}

void MultimodalBatch::validate() const {
  if (modalities.size() < 2) {
    throw ShapeError("MultimodalBatch: need at least 2 modalities, got " +
                     std::to_string(modalities.size()));
  }
  const std::size_t b = modalities.front().size();
  const std::size_t d = modalities.front().dim();
  if (b < 1) throw ShapeError("MultimodalBatch: empty batch");
  if (d < 2) throw ShapeError("MultimodalBatch: embedding dimension must be >= 2");
  for (const auto& m : modalities) {
    if (m.size() != b || m.dim() != d) {
      throw ShapeError("MultimodalBatch: modalities disagree on B or d");
    }
  }
  if (anchor_index >= modalities.size()) {
    throw ShapeError("MultimodalBatch: anchor_index out of range");
  }
}

EmbeddingBatch normalize_rows(const EmbeddingBatch& batch) {
  if (!batch.data.all_finite()) {
    throw NumericError("normalize_rows: non-finite entry in input");
  }
  EmbeddingBatch out{batch.data, true};
  for (std::size_t i = 0; i < out.data.rows(); ++i) {
    auto row = out.data.row(i);
    const double n = norm(row);
    if (!std::isfinite(n)) {
      throw NumericError("normalize_rows: row " + std::to_string(i) + " norm overflowed");
    }
    if (n <= kZeroRowThreshold) {
      throw ZeroRowError("normalize_rows: row " + std::to_string(i) +
                         " has norm " + std::to_string(n));
    }
    const double inv = 1.0 / n;
    for (double& v : row) v *= inv;
  }
  return out;
}

MultimodalBatch normalize_rows(const MultimodalBatch& batch) {
  MultimodalBatch out;
  out.anchor_index = batch.anchor_index;
  out.modalities.reserve(batch.modalities.size());
  for (const auto& m : batch.modalities) out.modalities.push_back(normalize_rows(m));
  return out;
}

Matrix normalize_rows_backward(const Matrix& raw, const Matrix& grad_normalized) {
  if (!raw.same_shape(grad_normalized)) {
    throw ShapeError("normalize_rows_backward: shape mismatch");
  }
  Matrix grad_raw(raw.rows(), raw.cols());
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    const auto x = raw.row(i);
    const auto g = grad_normalized.row(i);
    const double n = norm(x);
    if (n <= kZeroRowThreshold) {
      throw ZeroRowError("normalize_rows_backward: degenerate row " + std::to_string(i));
    }
    const double inv = 1.0 / n;
    // y = x / ||x||;  dL/dx = (g - (g.y) y) / ||x||
    double gy = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) gy += g[j] * x[j] * inv;
    auto out = grad_raw.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) {
      out[j] = (g[j] - gy * x[j] * inv) * inv;
    }
  }
  return grad_raw;
}

ElementCentroid element_centroids(const MultimodalBatch& batch) {
  batch.validate();
  const std::size_t m_count = batch.n_modalities();
  Matrix c = batch.modalities.front().data;
  for (std::size_t m = 1; m < m_count; ++m) {
    add_scaled(c, batch.modalities[m].data);
  }
  scale_inplace(c, 1.0 / static_cast<double>(m_count));
  return ElementCentroid{std::move(c)};
}

Matrix pairwise_sq_dists(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("pairwise_sq_dists: dimension mismatch (" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.cols()) + ")");
  }
  Matrix d2(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      d2(i, j) = squared_distance(a.row(i), b.row(j));
    }
  }
  return d2;
}

}  // namespace gapforge
