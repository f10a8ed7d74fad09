#include "gapforge/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gapforge/errors.hpp"
#include "gapforge/rng.hpp"

namespace gapforge {

namespace {

constexpr double kTauMin = 0.01;

Temperature tau_for(LossKind kind, double log_tau) {
  Temperature tau;
  tau.value = std::max(std::exp(log_tau), kTauMin);
  tau.learnable = (kind == LossKind::ClipLT);
  tau.min_value = kTauMin;
  return tau;
}

MultimodalBatch normalized_batch(const std::vector<Matrix>& raw, std::size_t anchor_index) {
  MultimodalBatch batch;
  batch.anchor_index = anchor_index;
  for (const auto& m : raw) batch.modalities.push_back(normalize_rows(EmbeddingBatch{m, false}));
  return batch;
}

LossResult eval_kind(LossKind kind, const MultimodalBatch& batch, const Temperature& tau,
                     const LossWeights& w) {
  switch (kind) {
    case LossKind::ClipLT:
    case LossKind::ClipFT:
      return clip_bidirectional(batch.modalities[0], batch.modalities[1], tau);
    case LossKind::Atp:
      return atp_loss(batch);
    case LossKind::Cu:
      return cu_loss(batch);
    case LossKind::GapOnly:
      return gap_loss(batch, w);
    case LossKind::Combined:
      return combined_loss(batch, tau, w);
  }
  throw ConfigError("unknown loss kind");
}

}  // namespace

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::ClipLT: return "clip-lt";
    case LossKind::ClipFT: return "clip-ft";
    case LossKind::Atp: return "atp";
    case LossKind::Cu: return "cu";
    case LossKind::GapOnly: return "gap";
    case LossKind::Combined: return "combined";
  }
  throw ConfigError("unknown loss kind enum value");
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "clip-lt") return LossKind::ClipLT;
  if (name == "clip-ft") return LossKind::ClipFT;
  if (name == "atp") return LossKind::Atp;
  if (name == "cu") return LossKind::Cu;
  if (name == "gap") return LossKind::GapOnly;
  if (name == "combined") return LossKind::Combined;
  throw ConfigError("unknown loss kind '" + std::string(name) +
                    "' (expected clip-lt|clip-ft|atp|cu|gap|combined)");
}

std::vector<LossKind> all_loss_kinds() {
  return {LossKind::ClipLT, LossKind::ClipFT, LossKind::Atp,
          LossKind::Cu,     LossKind::GapOnly, LossKind::Combined};
}

std::vector<Matrix> finite_diff_grad(const ScalarFn& f, const std::vector<Matrix>& x,
                                     double h) {
  if (!(h >= 1e-6 && h <= 1e-2)) {
    throw std::invalid_argument("finite_diff_grad: h must lie in [1e-6, 1e-2]");
  }
  std::vector<Matrix> grads;
  grads.reserve(x.size());
  std::vector<Matrix> work = x;
  for (std::size_t t = 0; t < x.size(); ++t) {
    Matrix g(x[t].rows(), x[t].cols());
    for (std::size_t i = 0; i < x[t].size(); ++i) {
      const double orig = work[t].storage()[i];
      work[t].storage()[i] = orig + h;
      const double fplus = f(work);
      work[t].storage()[i] = orig - h;
      const double fminus = f(work);
      work[t].storage()[i] = orig;
      g.storage()[i] = (fplus - fminus) / (2.0 * h);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

double loss_value_from_raw(LossKind kind, const std::vector<Matrix>& raw, double log_tau,
                           const LossWeights& w, std::size_t anchor_index) {
  const MultimodalBatch batch = normalized_batch(raw, anchor_index);
  return eval_kind(kind, batch, tau_for(kind, log_tau), w).value;
}

std::vector<Matrix> analytic_grad_from_raw(LossKind kind, const std::vector<Matrix>& raw,
                                           double log_tau, const LossWeights& w,
                                           std::size_t anchor_index, double* grad_log_tau) {
  const MultimodalBatch batch = normalized_batch(raw, anchor_index);
  const Temperature tau = tau_for(kind, log_tau);
  const LossResult res = eval_kind(kind, batch, tau, w);
  std::vector<Matrix> grads;
  grads.reserve(raw.size());
  for (std::size_t m = 0; m < raw.size(); ++m) {
    grads.push_back(normalize_rows_backward(raw[m], res.grads[m]));
  }
  if (grad_log_tau != nullptr) {
    // tau = exp(log_tau) above the clamp, constant below it
    const bool clamped = std::exp(log_tau) < kTauMin;
    *grad_log_tau =
        (res.temp_grad && !clamped) ? *res.temp_grad * tau.value : 0.0;
  }
  return grads;
}

std::vector<GradCheckRow> run_gradcheck(const GradCheckOptions& options) {
  static const std::size_t kBatchSizes[] = {2, 4, 8};
  static const std::size_t kDims[] = {3, 8, 16};
  static const std::size_t kModalityCounts[] = {2, 3};

  std::vector<GradCheckRow> rows;
  for (LossKind kind : options.kinds) {
    const bool pairwise = kind == LossKind::ClipLT || kind == LossKind::ClipFT ||
                          kind == LossKind::Combined;
    GradCheckRow row;
    row.kind = kind;
    row.cases = options.cases_per_kind;
    for (int c = 0; c < options.cases_per_kind; ++c) {
      Rng rng(mix_seed(options.seed, (static_cast<std::uint64_t>(kind) << 32) |
                                         static_cast<std::uint64_t>(c)));
      const std::size_t B = kBatchSizes[rng.uniform_int(3)];
      const std::size_t d = kDims[rng.uniform_int(3)];
      const std::size_t M = pairwise ? 2 : kModalityCounts[rng.uniform_int(2)];
      const std::size_t anchor = rng.uniform_int(M);

      std::vector<Matrix> raw;
      for (std::size_t m = 0; m < M; ++m) {
        Matrix x(B, d);
        for (double& v : x.storage()) v = rng.normal();
        raw.push_back(std::move(x));
      }
      LossWeights w;
      if (kind == LossKind::GapOnly || kind == LossKind::Combined) {
        // exercise non-default weights half of the time
        if (c % 2 == 1) {
          w.atp = 0.25 + rng.uniform();
          w.cu = 0.25 + rng.uniform();
          w.contrastive = 0.25 + rng.uniform();
        }
      }
      const double log_tau = std::log(0.07);

      double g_log_tau = 0.0;
      const std::vector<Matrix> analytic =
          analytic_grad_from_raw(kind, raw, log_tau, w, anchor, &g_log_tau);
      const std::vector<Matrix> fd = finite_diff_grad(
          [&](const std::vector<Matrix>& x) {
            return loss_value_from_raw(kind, x, log_tau, w, anchor);
          },
          raw, options.step);

      double fd_scale = 1e-8;
      for (const auto& g : fd) {
        for (double v : g.storage()) fd_scale = std::max(fd_scale, std::abs(v));
      }
      double abs_err = 0.0;
      for (std::size_t m = 0; m < raw.size(); ++m) {
        for (std::size_t i = 0; i < fd[m].size(); ++i) {
          abs_err = std::max(abs_err,
                             std::abs(analytic[m].storage()[i] - fd[m].storage()[i]));
        }
      }
      double rel_err = abs_err / fd_scale;

      if (kind == LossKind::ClipLT) {
        const double fd_tau = (loss_value_from_raw(kind, raw, log_tau + options.step, w,
                                                   anchor) -
                               loss_value_from_raw(kind, raw, log_tau - options.step, w,
                                                   anchor)) /
                              (2.0 * options.step);
        rel_err = std::max(rel_err, std::abs(g_log_tau - fd_tau) /
                                        std::max(std::abs(fd_tau), 1e-8));
      }
      row.max_rel_err = std::max(row.max_rel_err, rel_err);
    }
    row.pass = row.max_rel_err < options.tolerance;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace gapforge
