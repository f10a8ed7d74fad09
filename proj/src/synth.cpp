#include "gapforge/synth.hpp"

#include <cmath>
#include <cstdio>

#include "gapforge/errors.hpp"
#include "gapforge/rng.hpp"

namespace gapforge {

void SyntheticDatasetSpec::validate() const {
  if (n_pairs < 1) throw ConfigError("SyntheticDatasetSpec: n_pairs must be >= 1");
  if (d_semantic < 1) throw ConfigError("SyntheticDatasetSpec: d_semantic must be >= 1");
  if (d_feat.size() < 2) throw ConfigError("SyntheticDatasetSpec: need >= 2 modalities");
  for (std::size_t d : d_feat) {
    if (d < 1) throw ConfigError("SyntheticDatasetSpec: feature dims must be >= 1");
  }
  if (noise_sigma < 0.0) throw ConfigError("SyntheticDatasetSpec: noise_sigma must be >= 0");
  if (jitter_sigma < 0.0) throw ConfigError("SyntheticDatasetSpec: jitter_sigma must be >= 0");
  if (n_clusters < 1) throw ConfigError("SyntheticDatasetSpec: n_clusters must be >= 1");
}

namespace {

std::string pair_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "pair-%05zu", index);
  return buf;
}

}  // namespace

PairedDataset generate_synthetic(const SyntheticDatasetSpec& spec) {
  spec.validate();
  const std::size_t M = spec.d_feat.size();
  const std::size_t N = spec.n_pairs;
  Rng rng(spec.seed);

  // cluster prototypes on the unit sphere of the semantic space
  Matrix prototypes(spec.n_clusters, spec.d_semantic);
  for (std::size_t c = 0; c < spec.n_clusters; ++c) {
    auto row = prototypes.row(c);
    double n2 = 0.0;
    do {
      n2 = 0.0;
      for (double& v : row) {
        v = rng.normal();
        n2 += v * v;
      }
    } while (n2 <= 1e-24);
    const double inv = 1.0 / std::sqrt(n2);
    for (double& v : row) v *= inv;
  }

  // fixed random linear map per modality: d_feat[m] x d_semantic
  std::vector<Matrix> maps;
  maps.reserve(M);
  const double map_scale = 1.0 / std::sqrt(static_cast<double>(spec.d_semantic));
  for (std::size_t m = 0; m < M; ++m) {
    Matrix a(spec.d_feat[m], spec.d_semantic);
    for (double& v : a.storage()) v = rng.normal() * map_scale;
    maps.push_back(std::move(a));
  }

  // semantic vector per pair: prototype plus Gaussian jitter
  Matrix semantics(N, spec.d_semantic);
  for (std::size_t j = 0; j < N; ++j) {
    const std::size_t c = rng.uniform_int(spec.n_clusters);
    auto z = semantics.row(j);
    const auto proto = prototypes.row(c);
    for (std::size_t k = 0; k < spec.d_semantic; ++k) {
      z[k] = proto[k] + spec.jitter_sigma * rng.normal();
    }
  }

  // modality features: A_m z + noise
  std::vector<Matrix> features;
  features.reserve(M);
  for (std::size_t m = 0; m < M; ++m) {
    Matrix f(N, spec.d_feat[m]);
    for (std::size_t j = 0; j < N; ++j) {
      const auto z = semantics.row(j);
      auto frow = f.row(j);
      for (std::size_t r = 0; r < spec.d_feat[m]; ++r) {
        frow[r] = dot(maps[m].row(r), z);
        if (spec.noise_sigma > 0.0) frow[r] += spec.noise_sigma * rng.normal();
      }
    }
    features.push_back(std::move(f));
  }

  // 80/20 split by pair index
  const std::size_t n_train = (N * 8 + 5) / 10;
  PairedDataset out;
  out.spec = spec;
  out.train.features.assign(M, Matrix());
  out.test.features.assign(M, Matrix());
  for (std::size_t m = 0; m < M; ++m) {
    const std::size_t d = spec.d_feat[m];
    Matrix tr(n_train, d);
    Matrix te(N - n_train, d);
    for (std::size_t j = 0; j < N; ++j) {
      auto dst = j < n_train ? tr.row(j) : te.row(j - n_train);
      const auto src = features[m].row(j);
      std::copy(src.begin(), src.end(), dst.begin());
    }
    out.train.features[m] = std::move(tr);
    out.test.features[m] = std::move(te);
  }
  out.train.semantics = Matrix(n_train, spec.d_semantic);
  out.test.semantics = Matrix(N - n_train, spec.d_semantic);
  for (std::size_t j = 0; j < N; ++j) {
    const auto src = semantics.row(j);
    auto dst = j < n_train ? out.train.semantics.row(j)
                           : out.test.semantics.row(j - n_train);
    std::copy(src.begin(), src.end(), dst.begin());
    (j < n_train ? out.train.ids : out.test.ids).push_back(pair_id(j));
  }
  return out;
}

}  // namespace gapforge
