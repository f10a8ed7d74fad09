#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "gapforge/errors.hpp"
#include "gapforge/rng.hpp"
#include "gapforge/synth.hpp"

using namespace gapforge;

namespace {

// least-squares oracle: solve the ridge-stabilized normal equations
// (F^T F + lambda I) W = F^T Z by Gaussian elimination with partial pivoting
// (noise-free features are rank-deficient), then report R^2 of F W ~ Z
double linear_probe_r2(const Matrix& features, const Matrix& targets) {
  const std::size_t p = features.cols();
  Matrix ata = matmul_at_b(features, features);
  Matrix atb = matmul_at_b(features, targets);
  double trace = 0.0;
  for (std::size_t i = 0; i < p; ++i) trace += ata(i, i);
  const double lambda = 1e-9 * trace / static_cast<double>(p);
  for (std::size_t i = 0; i < p; ++i) ata(i, i) += lambda;

  // elimination on the augmented system
  for (std::size_t col = 0; col < p; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < p; ++r) {
      if (std::abs(ata(r, col)) > std::abs(ata(pivot, col))) pivot = r;
    }
    REQUIRE(std::abs(ata(pivot, col)) > 1e-12);
    if (pivot != col) {
      for (std::size_t c = 0; c < p; ++c) std::swap(ata(col, c), ata(pivot, c));
      for (std::size_t c = 0; c < atb.cols(); ++c) std::swap(atb(col, c), atb(pivot, c));
    }
    for (std::size_t r = 0; r < p; ++r) {
      if (r == col) continue;
      const double factor = ata(r, col) / ata(col, col);
      for (std::size_t c = 0; c < p; ++c) ata(r, c) -= factor * ata(col, c);
      for (std::size_t c = 0; c < atb.cols(); ++c) atb(r, c) -= factor * atb(col, c);
    }
  }
  Matrix coeffs(p, targets.cols());
  for (std::size_t r = 0; r < p; ++r) {
    for (std::size_t c = 0; c < targets.cols(); ++c) coeffs(r, c) = atb(r, c) / ata(r, r);
  }

  const Matrix predicted = matmul(features, coeffs);
  std::vector<double> mean = column_sums(targets);
  for (double& v : mean) v /= static_cast<double>(targets.rows());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < targets.rows(); ++i) {
    for (std::size_t j = 0; j < targets.cols(); ++j) {
      const double res = targets(i, j) - predicted(i, j);
      const double dev = targets(i, j) - mean[j];
      ss_res += res * res;
      ss_tot += dev * dev;
    }
  }
  return 1.0 - ss_res / ss_tot;
}

}  // namespace

TEST_CASE("generate_synthetic is deterministic given the seed") {
  SyntheticDatasetSpec spec;
  spec.n_pairs = 100;
  spec.seed = 42;
  const PairedDataset a = generate_synthetic(spec);
  const PairedDataset b = generate_synthetic(spec);
  for (std::size_t m = 0; m < 2; ++m) {
    CHECK(a.train.features[m].storage() == b.train.features[m].storage());
    CHECK(a.test.features[m].storage() == b.test.features[m].storage());
  }
  CHECK(a.train.ids == b.train.ids);

  spec.seed = 43;
  const PairedDataset c = generate_synthetic(spec);
  CHECK(a.train.features[0].storage() != c.train.features[0].storage());
}

TEST_CASE("degenerate spec collapses every pair onto one prototype") {
  SyntheticDatasetSpec spec;
  spec.n_pairs = 20;
  spec.n_clusters = 1;
  spec.noise_sigma = 0.0;
  spec.jitter_sigma = 0.0;
  const PairedDataset data = generate_synthetic(spec);
  for (std::size_t m = 0; m < 2; ++m) {
    const Matrix& f = data.train.features[m];
    for (std::size_t i = 1; i < f.rows(); ++i) {
      for (std::size_t j = 0; j < f.cols(); ++j) {
        CHECK(f(i, j) == doctest::Approx(f(0, j)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("80/20 split with stable pair ids") {
  SyntheticDatasetSpec spec;
  spec.n_pairs = 1000;
  const PairedDataset data = generate_synthetic(spec);
  CHECK(data.train.size() == 800);
  CHECK(data.test.size() == 200);
  CHECK(data.train.ids.front() == "pair-00000");
  CHECK(data.test.ids.front() == "pair-00800");
  CHECK(data.train.features[0].rows() == 800);
  CHECK(data.test.features[1].rows() == 200);
  CHECK(data.train.features[0].cols() == spec.d_feat[0]);
}

TEST_CASE("a linear probe recovers the semantics from noise-free features") {
  SyntheticDatasetSpec spec;
  spec.n_pairs = 1000;
  spec.d_semantic = 8;
  spec.noise_sigma = 0.0;
  spec.seed = 7;
  const PairedDataset data = generate_synthetic(spec);
  const double r2 = linear_probe_r2(data.train.features[0], data.train.semantics);
  CHECK(r2 > 0.99);

  // with heavy feature noise the relation is no longer exact
  spec.noise_sigma = 1.0;
  const PairedDataset noisy = generate_synthetic(spec);
  const double r2_noisy = linear_probe_r2(noisy.train.features[0], noisy.train.semantics);
  CHECK(r2_noisy < 0.9);
}

TEST_CASE("spec validation rejects bad values") {
  SyntheticDatasetSpec spec;
  spec.n_pairs = 0;
  CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
  spec = {};
  spec.noise_sigma = -0.1;
  CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
  spec = {};
  spec.d_feat = {64};
  CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
  spec = {};
  spec.n_clusters = 0;
  CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
}
