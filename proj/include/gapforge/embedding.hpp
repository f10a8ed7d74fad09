#pragma once

#include <cstddef>
#include <vector>

#include "gapforge/matrix.hpp"

namespace gapforge {

// B x d block of latent embeddings for one modality, one row per sample.
struct EmbeddingBatch {
  Matrix data;
  bool normalized = false;

  std::size_t size() const noexcept { return data.rows(); }
  std::size_t dim() const noexcept { return data.cols(); }
};

// M aligned embedding batches sharing row order: row j across modalities is
// a true pair. anchor_index selects the reference modality for ATP.
struct MultimodalBatch {
  std::vector<EmbeddingBatch> modalities;
  std::size_t anchor_index = 0;

  std::size_t n_modalities() const noexcept { return modalities.size(); }
  std::size_t size() const noexcept {
    return modalities.empty() ? 0 : modalities.front().size();
  }
  std::size_t dim() const noexcept {
    return modalities.empty() ? 0 : modalities.front().dim();
  }

  // Throws unless M >= 2, all batches share B and d, and anchor is in range.
  void validate() const;
};

// Per-sample mean of embeddings across modalities (one row per batch element).
struct ElementCentroid {
  Matrix data;
};

// Scales each row to unit Euclidean norm. Throws ZeroRowError when a row
// norm is <= 1e-12 and NumericError on non-finite input.
EmbeddingBatch normalize_rows(const EmbeddingBatch& batch);
MultimodalBatch normalize_rows(const MultimodalBatch& batch);

// Pulls a gradient w.r.t. normalized rows y = x/||x|| back to the raw rows x:
//   dL/dx = (g - (g . y) y) / ||x||
Matrix normalize_rows_backward(const Matrix& raw, const Matrix& grad_normalized);

// c_k = (1/M) sum over modalities of row k. Centroid rows are NOT re-normalized.
ElementCentroid element_centroids(const MultimodalBatch& batch);

// Entry (i, j) = ||a_i - b_j||^2.
Matrix pairwise_sq_dists(const Matrix& a, const Matrix& b);

}  // namespace gapforge
