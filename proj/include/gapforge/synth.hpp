#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gapforge/matrix.hpp"

namespace gapforge {

// Recipe for a seeded paired-modality dataset: cluster prototypes on the unit
// sphere of the semantic space, per-pair Gaussian jitter, then a fixed random
// linear map plus feature noise per modality.
struct SyntheticDatasetSpec {
  std::size_t n_pairs = 2000;
  std::size_t d_semantic = 12;
  std::vector<std::size_t> d_feat = {64, 64};
  double noise_sigma = 0.4;
  double jitter_sigma = 0.25;
  std::size_t n_clusters = 32;
  std::uint64_t seed = 7;

  void validate() const;
};

// One split: features[m] is an N x d_feat[m] matrix; row j of every modality
// derives from the same semantic vector (row j of semantics, kept for
// diagnostics only, never written to disk). ids name the pairs.
struct PairedSplit {
  std::vector<Matrix> features;
  Matrix semantics;
  std::vector<std::string> ids;

  std::size_t size() const noexcept { return ids.size(); }
};

struct PairedDataset {
  SyntheticDatasetSpec spec;
  PairedSplit train;
  PairedSplit test;

  std::size_t n_modalities() const noexcept { return spec.d_feat.size(); }
};

// Deterministic given spec.seed; 80/20 train/test split by pair index.
PairedDataset generate_synthetic(const SyntheticDatasetSpec& spec);

}  // namespace gapforge
