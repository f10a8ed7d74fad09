#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "gapforge/gradcheck.hpp"
#include "gapforge/rng.hpp"

using namespace gapforge;

namespace {

std::vector<Matrix> random_raw(std::size_t M, std::size_t B, std::size_t d, Rng& rng) {
  std::vector<Matrix> raw;
  for (std::size_t m = 0; m < M; ++m) {
    Matrix x(B, d);
    for (double& v : x.storage()) v = rng.normal();
    raw.push_back(std::move(x));
  }
  return raw;
}

double max_rel_err(const std::vector<Matrix>& analytic, const std::vector<Matrix>& fd) {
  double scale = 1e-8;
  for (const auto& g : fd) {
    for (double v : g.storage()) scale = std::max(scale, std::abs(v));
  }
  double err = 0.0;
  for (std::size_t m = 0; m < fd.size(); ++m) {
    for (std::size_t i = 0; i < fd[m].size(); ++i) {
      err = std::max(err, std::abs(analytic[m].storage()[i] - fd[m].storage()[i]));
    }
  }
  return err / scale;
}

}  // namespace

TEST_CASE("finite_diff_grad recovers a linear functional exactly") {
  Rng rng(41);
  Matrix coeffs(3, 4);
  for (double& v : coeffs.storage()) v = rng.normal();
  const ScalarFn f = [&](const std::vector<Matrix>& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x[0].size(); ++i) s += coeffs.storage()[i] * x[0].storage()[i];
    return s;
  };
  Matrix x0(3, 4);
  for (double& v : x0.storage()) v = rng.normal();
  const auto grads = finite_diff_grad(f, {x0}, 1e-4);
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    CHECK(std::abs(grads[0].storage()[i] - coeffs.storage()[i]) < 1e-9);
  }
}

TEST_CASE("finite_diff_grad rejects steps outside [1e-6, 1e-2]") {
  const ScalarFn f = [](const std::vector<Matrix>&) { return 0.0; };
  CHECK_THROWS_AS(finite_diff_grad(f, {Matrix(1, 2)}, 1e-7), std::invalid_argument);
  CHECK_THROWS_AS(finite_diff_grad(f, {Matrix(1, 2)}, 0.1), std::invalid_argument);
}

TEST_CASE("atp analytic gradient matches finite differences on random batches") {
  Rng rng(42);
  for (int trial = 0; trial < 3; ++trial) {
    const auto raw = random_raw(3, 4, 5, rng);
    const auto analytic = analytic_grad_from_raw(LossKind::Atp, raw, std::log(0.07), {});
    const auto fd = finite_diff_grad(
        [&](const std::vector<Matrix>& x) {
          return loss_value_from_raw(LossKind::Atp, x, std::log(0.07), {});
        },
        raw, 1e-5);
    CHECK(max_rel_err(analytic, fd) < 1e-5);
  }
}

TEST_CASE("cu analytic gradient matches finite differences on random batches") {
  Rng rng(43);
  for (int trial = 0; trial < 3; ++trial) {
    const auto raw = random_raw(2, 4, 5, rng);
    const auto analytic = analytic_grad_from_raw(LossKind::Cu, raw, std::log(0.07), {});
    const auto fd = finite_diff_grad(
        [&](const std::vector<Matrix>& x) {
          return loss_value_from_raw(LossKind::Cu, x, std::log(0.07), {});
        },
        raw, 1e-5);
    CHECK(max_rel_err(analytic, fd) < 1e-4);
  }
}

TEST_CASE("bidirectional clip gradient matches finite differences over 10 seeds") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(mix_seed(44, seed));
    const auto raw = random_raw(2, 4, 6, rng);
    const auto analytic = analytic_grad_from_raw(LossKind::ClipFT, raw, std::log(0.07), {});
    const auto fd = finite_diff_grad(
        [&](const std::vector<Matrix>& x) {
          return loss_value_from_raw(LossKind::ClipFT, x, std::log(0.07), {});
        },
        raw, 1e-5);
    CHECK(max_rel_err(analytic, fd) < 1e-4);
  }
}

TEST_CASE("learnable-tau gradient matches a finite difference in log tau") {
  Rng rng(45);
  const auto raw = random_raw(2, 5, 4, rng);
  const double log_tau = std::log(0.07);
  double g_log_tau = 0.0;
  analytic_grad_from_raw(LossKind::ClipLT, raw, log_tau, {}, 0, &g_log_tau);
  const double h = 1e-5;
  const double fd = (loss_value_from_raw(LossKind::ClipLT, raw, log_tau + h, {}) -
                     loss_value_from_raw(LossKind::ClipLT, raw, log_tau - h, {})) /
                    (2.0 * h);
  CHECK(std::abs(g_log_tau - fd) / std::max(std::abs(fd), 1e-8) < 1e-6);
}

TEST_CASE("run_gradcheck passes every loss kind at the default tolerance") {
  GradCheckOptions options;
  options.cases_per_kind = 5;  // the full 20-case sweep runs in the acceptance suite
  const auto rows = run_gradcheck(options);
  CHECK(rows.size() == all_loss_kinds().size());
  for (const auto& row : rows) {
    INFO("loss kind: ", to_string(row.kind), " max_rel_err: ", row.max_rel_err);
    CHECK(row.pass);
  }
}

TEST_CASE("run_gradcheck fails at an unsatisfiable tolerance") {
  GradCheckOptions options;
  options.kinds = {LossKind::Atp};
  options.cases_per_kind = 2;
  options.tolerance = 1e-15;
  const auto rows = run_gradcheck(options);
  CHECK_FALSE(rows[0].pass);
}

TEST_CASE("loss kind names round-trip") {
  for (LossKind kind : all_loss_kinds()) {
    CHECK(parse_loss_kind(to_string(kind)) == kind);
  }
}
