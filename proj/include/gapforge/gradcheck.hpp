#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "gapforge/embedding.hpp"
#include "gapforge/losses.hpp"
#include "gapforge/matrix.hpp"

namespace gapforge {

// Loss families covered by the gradient verification suite. GapOnly is the
// ATP+CU sum without the contrastive term; Combined is the full objective.
enum class LossKind { ClipLT, ClipFT, Atp, Cu, GapOnly, Combined };

std::string to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);
std::vector<LossKind> all_loss_kinds();

using ScalarFn = std::function<double(const std::vector<Matrix>&)>;

// Central differences (f(x+h) - f(x-h)) / 2h per coordinate. h must lie in
// [1e-6, 1e-2]; everything runs in 64-bit.
std::vector<Matrix> finite_diff_grad(const ScalarFn& f, const std::vector<Matrix>& x,
                                     double h);

// Loss value of kind on raw (pre-normalization) inputs: normalization is part
// of the forward pass. log_tau is the temperature parameter where applicable.
double loss_value_from_raw(LossKind kind, const std::vector<Matrix>& raw,
                           double log_tau, const LossWeights& w,
                           std::size_t anchor_index = 0);

// Analytic gradient of the same composite, chained through row normalization.
// When grad_log_tau is non-null and the kind has a learnable temperature, the
// derivative w.r.t. log(tau) is stored there.
std::vector<Matrix> analytic_grad_from_raw(LossKind kind, const std::vector<Matrix>& raw,
                                           double log_tau, const LossWeights& w,
                                           std::size_t anchor_index = 0,
                                           double* grad_log_tau = nullptr);

struct GradCheckOptions {
  std::vector<LossKind> kinds = all_loss_kinds();
  int cases_per_kind = 20;
  double tolerance = 1e-4;
  double step = 1e-5;
  std::uint64_t seed = 20240;
};

struct GradCheckRow {
  LossKind kind{};
  int cases = 0;
  double max_rel_err = 0.0;
  bool pass = false;
};

// Seeded random configurations with B in {2,4,8}, d in {3,8,16},
// M in {2,3} (M = 2 where the kind is pairwise). Relative error per case is
// max|analytic - fd| / max(max|fd|, 1e-8) over all gradient entries.
std::vector<GradCheckRow> run_gradcheck(const GradCheckOptions& options);

}  // namespace gapforge
