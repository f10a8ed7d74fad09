#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gapforge/embedding.hpp"
#include "gapforge/matrix.hpp"

namespace gapforge {

// Logit scale divisor of the contrastive softmax. When learnable, the
// training loop optimizes log(tau) and clamps tau >= min_value; losses report
// the gradient w.r.t. tau itself in LossResult::temp_grad.
struct Temperature {
  double value = 0.07;
  bool learnable = false;
  double min_value = 0.01;
};

// Scalar loss value plus one gradient matrix per input embedding batch.
// Gradients are taken w.r.t. the (normalized) embeddings the loss consumed;
// chaining through row normalization is the caller's job (see
// normalize_rows_backward).
struct LossResult {
  double value = 0.0;
  std::vector<Matrix> grads;
  std::optional<double> temp_grad;
};

// Term weights for the composite objectives. Defaults (1, 1, 1) reproduce the
// unweighted composition: contrastive carries its 1/2 bidirectional average
// internally.
struct LossWeights {
  double atp = 1.0;
  double cu = 1.0;
  double contrastive = 1.0;
};

// One direction of the contrastive cross-entropy:
//   -(1/B) sum_i log softmax_j(src_i . dst_j / tau)[i]
// Softmax rows are stabilized by max subtraction. grads = {d/d src, d/d dst}.
LossResult clip_directional(const EmbeddingBatch& src, const EmbeddingBatch& dst,
                            const Temperature& tau);

// Average of the two directions: 1/2 (L_src->dst + L_dst->src).
LossResult clip_bidirectional(const EmbeddingBatch& m1, const EmbeddingBatch& m2,
                              const Temperature& tau);

// Align-true-pairs loss: mean squared distance of every non-anchor modality
// row to its anchor row, averaged over the M-1 non-anchor modalities.
// grads ordered as batch.modalities.
LossResult atp_loss(const MultimodalBatch& batch);

// The same kernel on arbitrary row-aligned matrices; backs the
// unnormalized-ATP training option, where the term sees raw encoder outputs.
LossResult atp_term(const std::vector<Matrix>& rows, std::size_t anchor_index);

// Centroid-uniformity loss over element centroids c (RBF kernel, log-sum-exp
// stabilized):
//   log( (1/B) sum_{i != j} exp(-2 ||c_i - c_j||^2) )
// The sum runs over ordered pairs. Requires B >= 2.
LossResult cu_loss(const MultimodalBatch& batch);

// w.atp * atp_loss + w.cu * cu_loss. For B == 1 the CU sum has no pairs and
// the term drops out.
LossResult gap_loss(const MultimodalBatch& batch, const LossWeights& w);

// Full objective: w.contrastive * clip_bidirectional + gap_loss. The
// contrastive term is defined pairwise, so M != 2 with w.contrastive > 0 is
// rejected.
LossResult combined_loss(const MultimodalBatch& batch, const Temperature& tau,
                         const LossWeights& w);

// Objective selection exposed to CLI and config.
enum class Objective { ClipLearnableTau, ClipFixedTau, Gap, AtpOnly, CuOnly };

std::string to_string(Objective objective);
Objective parse_objective(std::string_view name);
std::vector<std::string> objective_names();

// Evaluates the selected training objective on a normalized batch.
LossResult objective_loss(Objective objective, const MultimodalBatch& batch,
                          const Temperature& tau, const LossWeights& w);

}  // namespace gapforge
