#include "gapforge/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gapforge/errors.hpp"
#include "gapforge/rng.hpp"

namespace gapforge {

namespace {

constexpr std::uint64_t kDataOrderStream = 0x0DA7A;

struct ObjectiveEval {
  double total = 0.0;
  LossComponents components;
  std::vector<Matrix> grads;      // w.r.t. normalized embeddings
  std::vector<Matrix> raw_grads;  // w.r.t. raw outputs (atp_on_raw only)
  std::optional<double> temp_grad;
};

ObjectiveEval evaluate_objective(Objective objective, const MultimodalBatch& batch,
                                 const Temperature& tau, const LossWeights& w,
                                 const std::vector<Matrix>* raw_outputs) {
  ObjectiveEval out;
  const std::size_t M = batch.n_modalities();
  out.grads.assign(M, Matrix(batch.size(), batch.dim()));

  const bool with_contrastive =
      objective == Objective::ClipLearnableTau || objective == Objective::ClipFixedTau ||
      (objective == Objective::Gap && w.contrastive != 0.0);
  const bool with_atp =
      objective == Objective::AtpOnly || (objective == Objective::Gap && w.atp != 0.0);
  const bool with_cu =
      objective == Objective::CuOnly ||
      (objective == Objective::Gap && w.cu != 0.0 && batch.size() >= 2);

  if (with_contrastive) {
    if (M != 2) throw UnsupportedError("contrastive term needs exactly 2 modalities");
    const double weight = objective == Objective::Gap ? w.contrastive : 1.0;
    LossResult cl = clip_bidirectional(batch.modalities[0], batch.modalities[1], tau);
    out.components.contrastive = cl.value;
    out.total += weight * cl.value;
    add_scaled(out.grads[0], cl.grads[0], weight);
    add_scaled(out.grads[1], cl.grads[1], weight);
    if (cl.temp_grad) out.temp_grad = weight * *cl.temp_grad;
  }
  if (with_atp) {
    const double weight = objective == Objective::Gap ? w.atp : 1.0;
    LossResult atp = raw_outputs != nullptr ? atp_term(*raw_outputs, batch.anchor_index)
                                            : atp_loss(batch);
    out.components.atp = atp.value;
    out.total += weight * atp.value;
    if (raw_outputs != nullptr) {
      out.raw_grads.assign(M, Matrix(batch.size(), batch.dim()));
      for (std::size_t m = 0; m < M; ++m) add_scaled(out.raw_grads[m], atp.grads[m], weight);
    } else {
      for (std::size_t m = 0; m < M; ++m) add_scaled(out.grads[m], atp.grads[m], weight);
    }
  }
  if (with_cu) {
    const double weight = objective == Objective::Gap ? w.cu : 1.0;
    LossResult cu = cu_loss(batch);
    out.components.cu = cu.value;
    out.total += weight * cu.value;
    for (std::size_t m = 0; m < M; ++m) add_scaled(out.grads[m], cu.grads[m], weight);
  }
  return out;
}

Matrix gather_rows(const Matrix& source, const std::vector<std::size_t>& order,
                   std::size_t begin, std::size_t count) {
  Matrix out(count, source.cols());
  for (std::size_t r = 0; r < count; ++r) {
    const auto src = source.row(order[begin + r]);
    auto dst = out.row(r);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return out;
}

struct RunningMean {
  double sum = 0.0;
  std::int64_t n = 0;
  void add(double v) {
    sum += v;
    ++n;
  }
  std::optional<double> mean() const {
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  }
};

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("TrainConfig: epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("TrainConfig: lr must be > 0");
  if (weight_decay < 0.0) throw ConfigError("TrainConfig: weight_decay must be >= 0");
  if (!(tau_init > 0.0)) throw ConfigError("TrainConfig: tau_init must be > 0");
  if (!(tau_min > 0.0)) throw ConfigError("TrainConfig: tau_min must be > 0");
  if (eval_every < 1) throw ConfigError("TrainConfig: eval_every must be >= 1");
  if (hidden_dim < 1) throw ConfigError("TrainConfig: hidden_dim must be >= 1");
  if (latent_dim < 2) throw ConfigError("TrainConfig: latent_dim must be >= 2");
  if (weights.atp < 0.0 || weights.cu < 0.0 || weights.contrastive < 0.0) {
    throw ConfigError("TrainConfig: loss weights must be >= 0");
  }
  if (eval_ks.empty()) throw ConfigError("TrainConfig: eval_ks must not be empty");
}

nlohmann::json train_config_to_json(const TrainConfig& config) {
  return nlohmann::json{{"objective", to_string(config.objective)},
                        {"epochs", config.epochs},
                        {"batch_size", config.batch_size},
                        {"lr", config.lr},
                        {"weight_decay", config.weight_decay},
                        {"tau_init", config.tau_init},
                        {"tau_min", config.tau_min},
                        {"w_atp", config.weights.atp},
                        {"w_cu", config.weights.cu},
                        {"w_contrastive", config.weights.contrastive},
                        {"seed", config.seed},
                        {"eval_every", config.eval_every},
                        {"hidden_dim", config.hidden_dim},
                        {"latent_dim", config.latent_dim},
                        {"anchor_index", config.anchor_index},
                        {"eval_ks", config.eval_ks},
                        {"atp_on_raw", config.atp_on_raw}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig defaults) {
  TrainConfig c = std::move(defaults);
  if (j.contains("objective")) c.objective = parse_objective(j.at("objective").get<std::string>());
  if (j.contains("epochs")) c.epochs = j.at("epochs").get<int>();
  if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<std::size_t>();
  if (j.contains("lr")) c.lr = j.at("lr").get<double>();
  if (j.contains("weight_decay")) c.weight_decay = j.at("weight_decay").get<double>();
  if (j.contains("tau_init")) c.tau_init = j.at("tau_init").get<double>();
  if (j.contains("tau_min")) c.tau_min = j.at("tau_min").get<double>();
  if (j.contains("w_atp")) c.weights.atp = j.at("w_atp").get<double>();
  if (j.contains("w_cu")) c.weights.cu = j.at("w_cu").get<double>();
  if (j.contains("w_contrastive")) c.weights.contrastive = j.at("w_contrastive").get<double>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("eval_every")) c.eval_every = j.at("eval_every").get<int>();
  if (j.contains("hidden_dim")) c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  if (j.contains("latent_dim")) c.latent_dim = j.at("latent_dim").get<std::size_t>();
  if (j.contains("anchor_index")) c.anchor_index = j.at("anchor_index").get<std::size_t>();
  if (j.contains("eval_ks")) c.eval_ks = j.at("eval_ks").get<std::vector<int>>();
  if (j.contains("atp_on_raw")) c.atp_on_raw = j.at("atp_on_raw").get<bool>();
  return c;
}

nlohmann::json eval_record_to_json(const EvalRecord& record) {
  nlohmann::json j{{"step", record.step},
                   {"epoch", record.epoch},
                   {"tau", record.tau},
                   {"report", report_to_json(record.report)}};
  j["train_loss"] = record.train_loss ? nlohmann::json(*record.train_loss) : nlohmann::json();
  nlohmann::json comps = nlohmann::json::object();
  if (record.components.contrastive) comps["contrastive"] = *record.components.contrastive;
  if (record.components.atp) comps["atp"] = *record.components.atp;
  if (record.components.cu) comps["cu"] = *record.components.cu;
  j["components"] = comps;
  return j;
}

EvalRecord eval_record_from_json(const nlohmann::json& j) {
  EvalRecord record;
  record.step = j.at("step").get<std::int64_t>();
  record.epoch = j.at("epoch").get<int>();
  record.tau = j.at("tau").get<double>();
  record.report = report_from_json(j.at("report"));
  if (j.contains("train_loss") && !j.at("train_loss").is_null()) {
    record.train_loss = j.at("train_loss").get<double>();
  }
  const auto& comps = j.at("components");
  if (comps.contains("contrastive")) record.components.contrastive = comps.at("contrastive").get<double>();
  if (comps.contains("atp")) record.components.atp = comps.at("atp").get<double>();
  if (comps.contains("cu")) record.components.cu = comps.at("cu").get<double>();
  return record;
}

MultimodalBatch encode_split(const std::vector<EncoderModel>& encoders,
                             const PairedSplit& split, std::size_t anchor_index) {
  if (encoders.size() != split.features.size()) {
    throw ShapeError("encode_split: encoder/modality count mismatch");
  }
  MultimodalBatch batch;
  batch.anchor_index = anchor_index;
  for (std::size_t m = 0; m < encoders.size(); ++m) {
    batch.modalities.push_back(encoder_forward(encoders[m], split.features[m]));
  }
  return batch;
}

double tau_of(const TrainState& state, const TrainConfig& config) {
  return std::max(std::exp(state.log_tau), config.tau_min);
}

TrainResult train_run(const TrainConfig& config, const PairedDataset& dataset) {
  config.validate();
  const std::size_t M = dataset.n_modalities();
  if (M != 2) {
    // the losses handle M >= 2, but the held-out report (gap/cos/recall) and
    // the contrastive arms are pairwise, so the harness trains two modalities
    throw ConfigError("train_run: the training harness expects exactly 2 modalities, got " +
                      std::to_string(M));
  }
  if (config.anchor_index >= M) throw ConfigError("train_run: anchor_index out of range");
  if (dataset.train.size() < config.batch_size && config.epochs > 0) {
    throw ConfigError("train_run: train split smaller than one batch");
  }
  if (dataset.test.size() < 1) throw ConfigError("train_run: empty test split");
  for (int k : config.eval_ks) {
    if (static_cast<std::size_t>(k) > dataset.test.size()) {
      throw ConfigError("train_run: eval K exceeds test split size");
    }
  }

  TrainResult result;
  result.config = config;
  TrainState& state = result.state;
  state.tau_learnable = config.objective == Objective::ClipLearnableTau;
  state.log_tau = std::log(config.tau_init);
  for (std::size_t m = 0; m < M; ++m) {
    Rng init_rng(mix_seed(config.seed, m));
    state.encoders.push_back(init_encoder(dataset.spec.d_feat[m], config.hidden_dim,
                                          config.latent_dim, init_rng));
  }
  // one optimizer state per tensor: encoders (w1, b1, w2, b2) then log-tau
  for (const auto& enc : state.encoders) {
    state.opt_states.emplace_back(enc.w1.size());
    state.opt_states.emplace_back(enc.b1.size());
    state.opt_states.emplace_back(enc.w2.size());
    state.opt_states.emplace_back(enc.b2.size());
  }
  if (state.tau_learnable) state.opt_states.emplace_back(1);

  const AdamWParams opt{config.lr, 0.9, 0.999, 1e-8, config.weight_decay};
  // the temperature is a scale parameter; decaying it toward zero is wrong
  const AdamWParams opt_tau{config.lr, 0.9, 0.999, 1e-8, 0.0};

  Rng order_rng(mix_seed(config.seed, kDataOrderStream));

  const auto evaluate = [&](std::int64_t step, int epoch, RunningMean& loss_mean,
                            RunningMean& cl_mean, RunningMean& atp_mean,
                            RunningMean& cu_mean) {
    EvalRecord record;
    record.step = step;
    record.epoch = epoch;
    record.train_loss = loss_mean.mean();
    record.components.contrastive = cl_mean.mean();
    record.components.atp = atp_mean.mean();
    record.components.cu = cu_mean.mean();
    record.tau = tau_of(state, config);
    const MultimodalBatch test_batch =
        encode_split(state.encoders, dataset.test, config.anchor_index);
    record.report = alignment_report(test_batch, config.eval_ks);
    result.history.records.push_back(std::move(record));
  };

  RunningMean empty_loss, empty_cl, empty_atp, empty_cu;
  evaluate(0, 0, empty_loss, empty_cl, empty_atp, empty_cu);

  std::vector<std::size_t> order(dataset.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t n_batches = dataset.train.size() / config.batch_size;

  std::int64_t step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    order_rng.shuffle(order);
    RunningMean loss_mean, cl_mean, atp_mean, cu_mean;

    for (std::size_t b = 0; b < n_batches; ++b) {
      ++step;
      MultimodalBatch batch;
      batch.anchor_index = config.anchor_index;
      std::vector<ForwardCache> caches(M);
      try {
        for (std::size_t m = 0; m < M; ++m) {
          const Matrix features = gather_rows(dataset.train.features[m], order,
                                              b * config.batch_size, config.batch_size);
          batch.modalities.push_back(
              encoder_forward(state.encoders[m], features, &caches[m]));
        }
      } catch (const Error& e) {
        throw NumericError("train_run: step " + std::to_string(step) + " epoch " +
                           std::to_string(epoch) + ": " + e.what());
      }

      Temperature tau{tau_of(state, config), state.tau_learnable, config.tau_min};
      std::vector<Matrix> raw_outputs;
      if (config.atp_on_raw) {
        for (const auto& cache : caches) raw_outputs.push_back(cache.raw_out);
      }
      ObjectiveEval eval =
          evaluate_objective(config.objective, batch, tau, config.weights,
                             config.atp_on_raw ? &raw_outputs : nullptr);
      if (!std::isfinite(eval.total)) {
        throw NumericError(
            "train_run: non-finite loss at step " + std::to_string(step) + " epoch " +
            std::to_string(epoch) + " (contrastive=" +
            std::to_string(eval.components.contrastive.value_or(0.0)) + ", atp=" +
            std::to_string(eval.components.atp.value_or(0.0)) + ", cu=" +
            std::to_string(eval.components.cu.value_or(0.0)) + ")");
      }
      loss_mean.add(eval.total);
      if (eval.components.contrastive) cl_mean.add(*eval.components.contrastive);
      if (eval.components.atp) atp_mean.add(*eval.components.atp);
      if (eval.components.cu) cu_mean.add(*eval.components.cu);

      for (std::size_t m = 0; m < M; ++m) {
        const Matrix* raw_grad =
            eval.raw_grads.empty() ? nullptr : &eval.raw_grads[m];
        EncoderGrads grads =
            encoder_backward(state.encoders[m], caches[m], eval.grads[m], nullptr, raw_grad);
        EncoderModel& enc = state.encoders[m];
        AdamWState* st = &state.opt_states[m * 4];
        adamw_step(enc.w1.storage(), grads.w1.storage(), st[0], opt);
        adamw_step(enc.b1, grads.b1, st[1], opt);
        adamw_step(enc.w2.storage(), grads.w2.storage(), st[2], opt);
        adamw_step(enc.b2, grads.b2, st[3], opt);
      }
      if (state.tau_learnable) {
        // optimize log(tau); below the clamp the derivative vanishes
        const double dtau = eval.temp_grad.value_or(0.0);
        const double tau_raw = std::exp(state.log_tau);
        const double g = tau_raw >= config.tau_min ? dtau * tau_raw : 0.0;
        double p[1] = {state.log_tau};
        const double gv[1] = {g};
        adamw_step(p, gv, state.opt_states.back(), opt_tau);
        state.log_tau = std::max(p[0], std::log(config.tau_min));
      }
    }

    if (epoch % config.eval_every == 0 || epoch == config.epochs) {
      evaluate(step, epoch, loss_mean, cl_mean, atp_mean, cu_mean);
    }
  }

  state.rng_state = order_rng.serialize_state();
  return result;
}

}  // namespace gapforge
