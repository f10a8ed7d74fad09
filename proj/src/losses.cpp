#include "gapforge/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gapforge/errors.hpp"

namespace gapforge {

namespace {

void require_normalized_pair(const EmbeddingBatch& a, const EmbeddingBatch& b,
                             const char* who) {
  if (!a.normalized || !b.normalized) {
    throw NotNormalizedError(std::string(who) + ": inputs must be row-normalized");
  }
  if (!a.data.same_shape(b.data)) {
    throw ShapeError(std::string(who) + ": batch shapes differ");
  }
  if (a.size() < 1) throw ShapeError(std::string(who) + ": empty batch");
}

void require_normalized(const MultimodalBatch& batch, const char* who) {
  batch.validate();
  for (const auto& m : batch.modalities) {
    if (!m.normalized) {
      throw NotNormalizedError(std::string(who) + ": inputs must be row-normalized");
    }
  }
}

double clamped_tau(const Temperature& tau) {
  if (!(tau.min_value > 0.0)) throw ConfigError("Temperature: min_value must be > 0");
  return std::max(tau.value, tau.min_value);
}

}  // namespace

LossResult clip_directional(const EmbeddingBatch& src, const EmbeddingBatch& dst,
                            const Temperature& tau) {
  require_normalized_pair(src, dst, "clip_directional");
  const std::size_t B = src.size();
  const double t = clamped_tau(tau);

  // logits S_ij = src_i . dst_j / tau
  Matrix logits = matmul_a_bt(src.data, dst.data);
  scale_inplace(logits, 1.0 / t);

  // P = row-softmax(S) with max subtraction; value = (1/B) sum_i (lse_i - S_ii)
  Matrix probs(B, B);
  double value = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    const auto srow = logits.row(i);
    const double m = *std::max_element(srow.begin(), srow.end());
    double z = 0.0;
    for (std::size_t j = 0; j < B; ++j) z += std::exp(srow[j] - m);
    const double lse = m + std::log(z);
    value += lse - srow[i];
    auto prow = probs.row(i);
    for (std::size_t j = 0; j < B; ++j) prow[j] = std::exp(srow[j] - lse);
  }
  value /= static_cast<double>(B);

  // dL/dS_ij = (P_ij - delta_ij) / B
  Matrix dS = probs;
  for (std::size_t i = 0; i < B; ++i) dS(i, i) -= 1.0;
  scale_inplace(dS, 1.0 / static_cast<double>(B));

  LossResult res;
  res.value = value;
  // dL/dsrc = dS . dst / tau, dL/ddst = dS^T . src / tau
  Matrix gsrc = matmul(dS, dst.data);
  scale_inplace(gsrc, 1.0 / t);
  Matrix gdst = matmul_at_b(dS, src.data);
  scale_inplace(gdst, 1.0 / t);
  res.grads.push_back(std::move(gsrc));
  res.grads.push_back(std::move(gdst));

  if (tau.learnable) {
    // dS_ij/dtau = -S_ij / tau
    double g = 0.0;
    for (std::size_t i = 0; i < B; ++i) {
      for (std::size_t j = 0; j < B; ++j) g += dS(i, j) * logits(i, j);
    }
    res.temp_grad = -g / t;
  }
  return res;
}

LossResult clip_bidirectional(const EmbeddingBatch& m1, const EmbeddingBatch& m2,
                              const Temperature& tau) {
  LossResult fwd = clip_directional(m1, m2, tau);
  LossResult bwd = clip_directional(m2, m1, tau);

  LossResult res;
  res.value = 0.5 * (fwd.value + bwd.value);
  res.grads.push_back(std::move(fwd.grads[0]));
  add_scaled(res.grads[0], bwd.grads[1]);
  scale_inplace(res.grads[0], 0.5);
  res.grads.push_back(std::move(fwd.grads[1]));
  add_scaled(res.grads[1], bwd.grads[0]);
  scale_inplace(res.grads[1], 0.5);
  if (fwd.temp_grad && bwd.temp_grad) {
    res.temp_grad = 0.5 * (*fwd.temp_grad + *bwd.temp_grad);
  }
  return res;
}

LossResult atp_term(const std::vector<Matrix>& rows, std::size_t anchor_index) {
  const std::size_t M = rows.size();
  if (M < 2) throw ShapeError("atp_term: needs at least 2 modalities");
  if (anchor_index >= M) throw ShapeError("atp_term: anchor index out of range");
  const Matrix& anchor = rows[anchor_index];
  const std::size_t B = anchor.rows();
  const std::size_t d = anchor.cols();
  const double scale = 1.0 / (static_cast<double>(M - 1) * static_cast<double>(B));

  LossResult res;
  res.grads.assign(M, Matrix(B, d));
  for (std::size_t m = 0; m < M; ++m) {
    if (m == anchor_index) continue;
    if (!rows[m].same_shape(anchor)) throw ShapeError("atp_term: shape mismatch");
    for (std::size_t j = 0; j < B; ++j) {
      const auto mj = rows[m].row(j);
      const auto aj = anchor.row(j);
      auto gm = res.grads[m].row(j);
      auto ga = res.grads[anchor_index].row(j);
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = mj[k] - aj[k];
        res.value += scale * diff * diff;
        const double g = 2.0 * scale * diff;
        gm[k] += g;
        ga[k] -= g;
      }
    }
  }
  return res;
}

LossResult atp_loss(const MultimodalBatch& batch) {
  require_normalized(batch, "atp_loss");
  std::vector<Matrix> rows;
  rows.reserve(batch.n_modalities());
  for (const auto& m : batch.modalities) rows.push_back(m.data);
  return atp_term(rows, batch.anchor_index);
}

LossResult cu_loss(const MultimodalBatch& batch) {
  require_normalized(batch, "cu_loss");
  const std::size_t M = batch.n_modalities();
  const std::size_t B = batch.size();
  const std::size_t d = batch.dim();
  if (B < 2) {
    throw ShapeError("cu_loss: needs B >= 2, uniformity is undefined over one centroid");
  }

  const ElementCentroid cent = element_centroids(batch);
  const Matrix d2 = pairwise_sq_dists(cent.data, cent.data);

  // a_ij = -2 d2_ij over ordered pairs i != j; value = lse(a) - log B
  double amax = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < B; ++i) {
    for (std::size_t j = 0; j < B; ++j) {
      if (j != i) amax = std::max(amax, -2.0 * d2(i, j));
    }
  }
  double z = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    for (std::size_t j = 0; j < B; ++j) {
      if (j != i) z += std::exp(-2.0 * d2(i, j) - amax);
    }
  }

  LossResult res;
  res.value = amax + std::log(z) - std::log(static_cast<double>(B));

  // softmax weights s_ij over ordered pairs; dL/dc_i = -8 sum_j s_ij (c_i - c_j)
  Matrix gc(B, d);
  for (std::size_t i = 0; i < B; ++i) {
    const auto ci = cent.data.row(i);
    auto gi = gc.row(i);
    for (std::size_t j = 0; j < B; ++j) {
      if (j == i) continue;
      const double s = std::exp(-2.0 * d2(i, j) - amax) / z;
      const auto cj = cent.data.row(j);
      for (std::size_t k = 0; k < d; ++k) gi[k] += -8.0 * s * (ci[k] - cj[k]);
    }
  }

  // centroids average the modalities, so each modality sees gc / M
  scale_inplace(gc, 1.0 / static_cast<double>(M));
  res.grads.assign(M, gc);
  return res;
}

LossResult gap_loss(const MultimodalBatch& batch, const LossWeights& w) {
  require_normalized(batch, "gap_loss");
  const std::size_t M = batch.n_modalities();
  LossResult res;
  res.grads.assign(M, Matrix(batch.size(), batch.dim()));

  if (w.atp != 0.0) {
    LossResult atp = atp_loss(batch);
    res.value += w.atp * atp.value;
    for (std::size_t m = 0; m < M; ++m) add_scaled(res.grads[m], atp.grads[m], w.atp);
  }
  // B == 1 leaves the CU pair sum empty; the term contributes nothing.
  if (w.cu != 0.0 && batch.size() >= 2) {
    LossResult cu = cu_loss(batch);
    res.value += w.cu * cu.value;
    for (std::size_t m = 0; m < M; ++m) add_scaled(res.grads[m], cu.grads[m], w.cu);
  }
  return res;
}

LossResult combined_loss(const MultimodalBatch& batch, const Temperature& tau,
                         const LossWeights& w) {
  require_normalized(batch, "combined_loss");
  if (w.contrastive != 0.0 && batch.n_modalities() != 2) {
    throw UnsupportedError("combined_loss: contrastive term is defined pairwise; got M = " +
                           std::to_string(batch.n_modalities()));
  }
  LossResult res = gap_loss(batch, w);
  if (w.contrastive != 0.0) {
    LossResult cl =
        clip_bidirectional(batch.modalities[0], batch.modalities[1], tau);
    res.value += w.contrastive * cl.value;
    add_scaled(res.grads[0], cl.grads[0], w.contrastive);
    add_scaled(res.grads[1], cl.grads[1], w.contrastive);
    if (cl.temp_grad) res.temp_grad = w.contrastive * *cl.temp_grad;
  }
  return res;
}

std::string to_string(Objective objective) {
  switch (objective) {
    case Objective::ClipLearnableTau: return "clip-lt";
    case Objective::ClipFixedTau: return "clip-ft";
    case Objective::Gap: return "gap";
    case Objective::AtpOnly: return "atp-only";
    case Objective::CuOnly: return "cu-only";
  }
  throw ConfigError("unknown objective enum value");
}

Objective parse_objective(std::string_view name) {
  if (name == "clip-lt") return Objective::ClipLearnableTau;
  if (name == "clip-ft") return Objective::ClipFixedTau;
  if (name == "gap") return Objective::Gap;
  if (name == "atp-only") return Objective::AtpOnly;
  if (name == "cu-only") return Objective::CuOnly;
  throw ConfigError("unknown objective '" + std::string(name) +
                    "' (expected clip-lt|clip-ft|gap|atp-only|cu-only)");
}

std::vector<std::string> objective_names() {
  return {"clip-lt", "clip-ft", "gap", "atp-only", "cu-only"};
}

LossResult objective_loss(Objective objective, const MultimodalBatch& batch,
                          const Temperature& tau, const LossWeights& w) {
  switch (objective) {
    case Objective::ClipLearnableTau:
    case Objective::ClipFixedTau: {
      if (batch.n_modalities() != 2) {
        throw UnsupportedError("contrastive objectives need exactly 2 modalities");
      }
      LossResult res =
          clip_bidirectional(batch.modalities[0], batch.modalities[1], tau);
      if (w.contrastive != 1.0) {
        res.value *= w.contrastive;
        for (auto& g : res.grads) scale_inplace(g, w.contrastive);
        if (res.temp_grad) *res.temp_grad *= w.contrastive;
      }
      return res;
    }
    case Objective::Gap:
      return combined_loss(batch, tau, w);
    case Objective::AtpOnly:
      return atp_loss(batch);
    case Objective::CuOnly:
      return cu_loss(batch);
  }
  throw ConfigError("unknown objective enum value");
}

}  // namespace gapforge
