#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace gapforge {

struct AdamWParams {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// First/second moment buffers plus step counter for one parameter tensor.
struct AdamWState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;

  explicit AdamWState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// One AdamW update with decoupled weight decay and bias correction:
//   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
//   p <- p - lr * wd * p - lr * m_hat / (sqrt(v_hat) + eps)
void adamw_step(std::span<double> params, std::span<const double> grads, AdamWState& state,
                const AdamWParams& opt);

}  // namespace gapforge
