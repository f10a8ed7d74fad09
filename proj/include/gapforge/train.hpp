#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gapforge/adamw.hpp"
#include "gapforge/encoder.hpp"
#include "gapforge/losses.hpp"
#include "gapforge/metrics.hpp"
#include "gapforge/synth.hpp"

#include "json.hpp"

namespace gapforge {

// Desk-scale defaults (latent 32, lr 1e-3, 50 epochs) keep a run under two
// minutes on CPU; larger-scale values (512 / 1e-4 / 100) stay selectable.
struct TrainConfig {
  Objective objective = Objective::Gap;
  int epochs = 50;
  std::size_t batch_size = 128;
  double lr = 1e-3;
  double weight_decay = 0.01;
  double tau_init = 0.07;
  double tau_min = 0.01;
  LossWeights weights;
  std::uint64_t seed = 7;
  int eval_every = 10;  // epochs between held-out evaluations
  std::size_t hidden_dim = 128;
  std::size_t latent_dim = 32;
  std::size_t anchor_index = 0;
  std::vector<int> eval_ks = {1, 5, 10};
  // evaluate the ATP term on raw (pre-normalization) encoder outputs
  bool atp_on_raw = false;

  void validate() const;
};

nlohmann::json train_config_to_json(const TrainConfig& config);
// Missing keys fall back to the provided defaults (config-file layering).
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig defaults = {});

// Unweighted per-term values of the objective actually trained; terms the
// objective does not contain stay empty.
struct LossComponents {
  std::optional<double> contrastive;
  std::optional<double> atp;
  std::optional<double> cu;
};

// One history entry: mean training loss over the epoch just finished (absent
// for the step-0 record) plus the held-out alignment report.
struct EvalRecord {
  std::int64_t step = 0;
  int epoch = 0;
  std::optional<double> train_loss;
  LossComponents components;
  double tau = 0.0;
  AlignmentReport report;
};

struct TrainingHistory {
  std::vector<EvalRecord> records;
};

nlohmann::json eval_record_to_json(const EvalRecord& record);
EvalRecord eval_record_from_json(const nlohmann::json& j);

// Everything mutable the loop owns: per-modality encoders, the log-tau
// parameter, optimizer states (one per tensor, encoders first, log-tau last
// when learnable), and the data-order RNG state.
struct TrainState {
  std::vector<EncoderModel> encoders;
  double log_tau = 0.0;
  bool tau_learnable = false;
  std::vector<AdamWState> opt_states;
  std::string rng_state;
};

struct TrainResult {
  TrainConfig config;
  TrainState state;
  TrainingHistory history;
};

// Mini-batch loop with seeded shuffling; the last partial batch is dropped
// (contrastive semantics depend on a full B). Deterministic given config and
// dataset within one build. Non-finite losses abort with step diagnostics.
TrainResult train_run(const TrainConfig& config, const PairedDataset& dataset);

// Runs every modality of a split through its encoder; rows come out
// normalized.
MultimodalBatch encode_split(const std::vector<EncoderModel>& encoders,
                             const PairedSplit& split, std::size_t anchor_index = 0);

double tau_of(const TrainState& state, const TrainConfig& config);

}  // namespace gapforge
