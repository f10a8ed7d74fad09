// gapforge command-line interface: synthesize paired data, train toy
// encoders under the selectable objectives, evaluate alignment reports,
// export embedding snapshots, and verify analytic gradients.
//
// Exit codes: 0 success, 1 check/assertion failure, 2 usage error, 3 IO error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gapforge/checkpoint.hpp"
#include "gapforge/dataset_io.hpp"
#include "gapforge/embed_io.hpp"
#include "gapforge/errors.hpp"
#include "gapforge/gradcheck.hpp"
#include "gapforge/manifest.hpp"
#include "gapforge/metrics.hpp"
#include "gapforge/synth.hpp"
#include "gapforge/train.hpp"

#include "CLI11.hpp"
#include "json.hpp"

namespace gf = gapforge;
namespace fs = std::filesystem;

namespace {

// set by subcommand callbacks; 0 unless a check failed
int g_exit_code = 0;

std::string echo_command_line(int argc, char** argv) {
  std::ostringstream os;
  for (int i = 0; i < argc; ++i) {
    if (i) os << ' ';
    os << argv[i];
  }
  return os.str();
}

std::string g_command_line;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct SynthArgs {
  gf::SyntheticDatasetSpec spec;
  std::string out_dir;
};

void run_synth(const SynthArgs& args) {
  const auto start = Clock::now();
  const gf::PairedDataset dataset = gf::generate_synthetic(args.spec);
  gf::save_dataset(args.out_dir, dataset);

  gf::RunManifest manifest;
  manifest.command_line = g_command_line;
  manifest.resolved_config = gf::synth_spec_to_json(args.spec);
  manifest.seed = args.spec.seed;
  for (std::size_t m = 0; m < dataset.n_modalities(); ++m) {
    manifest.artifacts.push_back("train_m" + std::to_string(m) + ".gfb");
    manifest.artifacts.push_back("test_m" + std::to_string(m) + ".gfb");
  }
  manifest.artifacts.push_back("spec.json");
  manifest.artifacts.push_back("pairs.json");
  manifest.duration_seconds = seconds_since(start);
  gf::write_manifest(fs::path(args.out_dir) / "manifest.json", manifest);

  std::cout << "wrote dataset with " << dataset.train.size() << " train / "
            << dataset.test.size() << " test pairs to " << args.out_dir << "\n";
}

struct TrainArgs {
  std::string dataset_dir;
  std::string out_dir = "run";
  std::string config_file;
  gf::TrainConfig config;
};

void run_train(const TrainArgs& args) {
  const auto start = Clock::now();
  const gf::PairedDataset dataset = gf::load_dataset(args.dataset_dir);
  const gf::TrainResult result = gf::train_run(args.config, dataset);

  fs::create_directories(args.out_dir);
  const fs::path out_dir(args.out_dir);
  gf::save_checkpoint(out_dir / "checkpoint.json",
                      gf::Checkpoint{result.config, result.state});
  std::ostringstream history;
  for (const auto& record : result.history.records) {
    history << gf::eval_record_to_json(record).dump() << '\n';
  }
  gf::write_text_file(out_dir / "history.jsonl", history.str());

  for (const auto& record : result.history.records) {
    std::printf("epoch %3d step %5lld", record.epoch,
                static_cast<long long>(record.step));
    if (record.train_loss) std::printf("  loss %.5f", *record.train_loss);
    std::printf("  gap %.4f  cos %.4f\n", record.report.gap,
                record.report.cos_true_pairs);
  }

  gf::RunManifest manifest;
  manifest.command_line = g_command_line;
  manifest.resolved_config = gf::train_config_to_json(result.config);
  manifest.resolved_config["dataset"] = args.dataset_dir;
  if (!args.config_file.empty()) manifest.resolved_config["config_file"] = args.config_file;
  manifest.seed = result.config.seed;
  manifest.artifacts = {"checkpoint.json", "history.jsonl"};
  manifest.duration_seconds = seconds_since(start);
  gf::write_manifest(out_dir / "manifest.json", manifest);

  std::cout << "wrote checkpoint and history to " << args.out_dir << "\n";
}

struct EvalArgs {
  std::string checkpoint_path;
  std::string dataset_dir;
  std::vector<int> ks = {1, 5, 10};
  std::string direction = "m0-to-m1";
  std::string format = "json";
  std::string out_file;
  bool gap_sum = false;
};

void check_compatibility(const gf::Checkpoint& ckpt, const gf::PairedDataset& dataset) {
  if (ckpt.state.encoders.size() != dataset.n_modalities()) {
    throw gf::ConfigError("checkpoint has " + std::to_string(ckpt.state.encoders.size()) +
                          " encoders but dataset has " +
                          std::to_string(dataset.n_modalities()) + " modalities");
  }
  for (std::size_t m = 0; m < dataset.n_modalities(); ++m) {
    if (ckpt.state.encoders[m].in_dim() != dataset.spec.d_feat[m]) {
      throw gf::ConfigError(
          "modality " + std::to_string(m) + ": encoder expects feature dim " +
          std::to_string(ckpt.state.encoders[m].in_dim()) + " but dataset provides " +
          std::to_string(dataset.spec.d_feat[m]));
    }
  }
}

void run_eval(const EvalArgs& args) {
  const gf::Checkpoint ckpt = gf::load_checkpoint(args.checkpoint_path);
  const gf::PairedDataset dataset = gf::load_dataset(args.dataset_dir);
  check_compatibility(ckpt, dataset);
  if (dataset.test.size() < 1) throw gf::ConfigError("dataset has an empty test split");

  const gf::MultimodalBatch batch =
      gf::encode_split(ckpt.state.encoders, dataset.test, ckpt.config.anchor_index);
  const gf::AlignmentReport report = gf::alignment_report(
      batch, args.ks, gf::parse_direction(args.direction), args.gap_sum);

  std::string payload;
  if (args.format == "json") {
    payload = gf::report_to_json(report).dump(2) + "\n";
  } else if (args.format == "csv") {
    payload = gf::report_csv_header() + "\n" +
              gf::report_csv_row(gf::to_string(ckpt.config.objective), report) + "\n";
  } else {
    throw gf::ConfigError("unknown --format '" + args.format + "' (expected json|csv)");
  }
  if (args.out_file.empty()) {
    std::cout << payload;
  } else {
    gf::write_text_file_atomic(args.out_file, payload);
  }
}

struct ExportArgs {
  std::string checkpoint_path;
  std::string dataset_dir;
  std::string out_dir;
};

void run_export(const ExportArgs& args) {
  const auto start = Clock::now();
  const gf::Checkpoint ckpt = gf::load_checkpoint(args.checkpoint_path);
  const gf::PairedDataset dataset = gf::load_dataset(args.dataset_dir);
  check_compatibility(ckpt, dataset);
  if (dataset.test.size() < 1) throw gf::ConfigError("dataset has an empty test split");

  const gf::MultimodalBatch batch =
      gf::encode_split(ckpt.state.encoders, dataset.test, ckpt.config.anchor_index);

  fs::create_directories(args.out_dir);
  const fs::path out_dir(args.out_dir);
  gf::RunManifest manifest;
  for (std::size_t m = 0; m < batch.n_modalities(); ++m) {
    const std::string stem = "embeddings_m" + std::to_string(m);
    const std::string modality = "m" + std::to_string(m);
    gf::write_embeddings_jsonl(out_dir / (stem + ".jsonl"), batch.modalities[m].data,
                               dataset.test.ids, modality);
    gf::write_gfb(out_dir / (stem + ".gfb"), batch.modalities[m].data);
    manifest.artifacts.push_back(stem + ".jsonl");
    manifest.artifacts.push_back(stem + ".gfb");
  }
  manifest.command_line = g_command_line;
  manifest.resolved_config = {{"checkpoint", args.checkpoint_path},
                              {"dataset", args.dataset_dir}};
  manifest.seed = ckpt.config.seed;
  manifest.duration_seconds = seconds_since(start);
  gf::write_manifest(out_dir / "manifest.json", manifest);

  std::cout << "exported " << dataset.test.size() << " test-pair embeddings to "
            << args.out_dir << "\n";
}

struct GradcheckArgs {
  std::vector<std::string> losses;
  double tol = 1e-4;
  int cases = 20;
  double step = 1e-5;
  std::uint64_t seed = 7;
};

void run_gradcheck_cmd(const GradcheckArgs& args) {
  gf::GradCheckOptions options;
  if (!args.losses.empty()) {
    options.kinds.clear();
    for (const auto& name : args.losses) options.kinds.push_back(gf::parse_loss_kind(name));
  }
  options.tolerance = args.tol;
  options.cases_per_kind = args.cases;
  options.step = args.step;
  options.seed = args.seed;

  const auto rows = gf::run_gradcheck(options);
  std::printf("%-10s %6s %14s  %s\n", "loss", "cases", "max_rel_err", "status");
  bool all_pass = true;
  for (const auto& row : rows) {
    std::printf("%-10s %6d %14.3e  %s\n", gf::to_string(row.kind).c_str(), row.cases,
                row.max_rel_err, row.pass ? "pass" : "FAIL");
    all_pass = all_pass && row.pass;
  }
  if (!all_pass) g_exit_code = 1;
}

}  // namespace

int main(int argc, char** argv) {
  g_command_line = echo_command_line(argc, argv);

  CLI::App app{"gapforge: multimodal alignment losses, diagnostics, and desk-scale training"};
  app.require_subcommand(1);

  // synth
  auto synth_args = std::make_shared<SynthArgs>();
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic paired dataset");
  synth->add_option("--n", synth_args->spec.n_pairs, "number of pairs")
      ->check(CLI::PositiveNumber);
  synth->add_option("--d-semantic", synth_args->spec.d_semantic, "semantic dimension")
      ->check(CLI::PositiveNumber);
  synth->add_option("--d-feat", synth_args->spec.d_feat,
                    "per-modality feature dims (comma separated)")
      ->delimiter(',');
  synth->add_option("--noise", synth_args->spec.noise_sigma, "feature noise sigma")
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--jitter", synth_args->spec.jitter_sigma, "semantic jitter sigma")
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--clusters", synth_args->spec.n_clusters, "semantic cluster count")
      ->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_args->spec.seed, "RNG seed")->envname("GAPFORGE_SEED");
  synth->add_option("-o,--out", synth_args->out_dir, "output directory")->required();
  synth->callback([synth_args] { run_synth(*synth_args); });

  // train
  auto train_args = std::make_shared<TrainArgs>();
  CLI::App* train = app.add_subcommand("train", "train encoders under an objective");
  train->add_option("dataset", train_args->dataset_dir, "dataset directory")->required();
  train->add_option("-o,--out", train_args->out_dir, "output directory");
  auto* opt_config = train->add_option("--config", train_args->config_file,
                                       "JSON config file (flags override it)");
  auto* opt_objective =
      train->add_option("--objective", "training objective")
          ->check(CLI::IsMember(gf::objective_names()));
  auto* opt_epochs = train->add_option("--epochs", "epoch count")->check(CLI::NonNegativeNumber);
  auto* opt_batch = train->add_option("--batch", "mini-batch size")->check(CLI::PositiveNumber);
  auto* opt_lr = train->add_option("--lr", "learning rate");
  auto* opt_wd = train->add_option("--weight-decay", "decoupled weight decay");
  auto* opt_tau = train->add_option("--tau", "initial temperature");
  auto* opt_tau_min = train->add_option("--tau-min", "temperature clamp");
  auto* opt_watp = train->add_option("--w-atp", "ATP term weight");
  auto* opt_wcu = train->add_option("--w-cu", "CU term weight");
  auto* opt_wcl = train->add_option("--w-contrastive", "contrastive term weight");
  auto* opt_seed = train->add_option("--seed", "RNG seed")->envname("GAPFORGE_SEED");
  auto* opt_eval_every = train->add_option("--eval-every", "epochs between evaluations")
                             ->check(CLI::PositiveNumber);
  auto* opt_hidden = train->add_option("--hidden", "encoder hidden width")
                         ->check(CLI::PositiveNumber);
  auto* opt_latent = train->add_option("--latent", "shared latent dimension")
                         ->check(CLI::PositiveNumber);
  auto* opt_anchor = train->add_option("--anchor", "anchor modality index");
  auto* opt_ks = train->add_option("--ks", "recall cutoffs (comma separated)")
                     ->delimiter(',')
                     ->expected(1, -1);
  auto* opt_atp_raw = train->add_flag(
      "--atp-on-raw", "evaluate the ATP term on pre-normalization encoder outputs");
  train->callback([train_args, opt_config, opt_objective, opt_epochs, opt_batch, opt_lr,
                   opt_wd, opt_tau, opt_tau_min, opt_watp, opt_wcu, opt_wcl, opt_seed,
                   opt_eval_every, opt_hidden, opt_latent, opt_anchor, opt_ks,
                   opt_atp_raw] {
    gf::TrainConfig config;  // built-in defaults
    if (opt_config->count()) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(gf::read_text_file(train_args->config_file));
      } catch (const nlohmann::json::exception& e) {
        throw gf::ConfigError("bad config file: " + std::string(e.what()));
      }
      config = gf::train_config_from_json(j, config);
    }
    // flags take precedence over the config file
    if (opt_objective->count()) config.objective = gf::parse_objective(opt_objective->as<std::string>());
    if (opt_epochs->count()) config.epochs = opt_epochs->as<int>();
    if (opt_batch->count()) config.batch_size = opt_batch->as<std::size_t>();
    if (opt_lr->count()) config.lr = opt_lr->as<double>();
    if (opt_wd->count()) config.weight_decay = opt_wd->as<double>();
    if (opt_tau->count()) config.tau_init = opt_tau->as<double>();
    if (opt_tau_min->count()) config.tau_min = opt_tau_min->as<double>();
    if (opt_watp->count()) config.weights.atp = opt_watp->as<double>();
    if (opt_wcu->count()) config.weights.cu = opt_wcu->as<double>();
    if (opt_wcl->count()) config.weights.contrastive = opt_wcl->as<double>();
    if (opt_seed->count()) config.seed = opt_seed->as<std::uint64_t>();
    if (opt_eval_every->count()) config.eval_every = opt_eval_every->as<int>();
    if (opt_hidden->count()) config.hidden_dim = opt_hidden->as<std::size_t>();
    if (opt_latent->count()) config.latent_dim = opt_latent->as<std::size_t>();
    if (opt_anchor->count()) config.anchor_index = opt_anchor->as<std::size_t>();
    if (opt_ks->count()) config.eval_ks = opt_ks->as<std::vector<int>>();
    if (opt_atp_raw->count()) config.atp_on_raw = true;
    config.validate();
    train_args->config = config;
    run_train(*train_args);
  });

  // eval
  auto eval_args = std::make_shared<EvalArgs>();
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  eval->add_option("checkpoint", eval_args->checkpoint_path, "checkpoint file")->required();
  eval->add_option("dataset", eval_args->dataset_dir, "dataset directory")->required();
  eval->add_option("--ks", eval_args->ks, "recall cutoffs (comma separated)")->delimiter(',');
  eval->add_option("--direction", eval_args->direction, "retrieval direction")
      ->check(CLI::IsMember({"m0-to-m1", "m1-to-m0", "i2t", "t2i"}));
  eval->add_option("--format", eval_args->format, "output format")
      ->check(CLI::IsMember({"json", "csv"}));
  eval->add_option("-o,--out", eval_args->out_file, "write report to file instead of stdout");
  eval->add_flag("--gap-sum", eval_args->gap_sum,
                 "use the sum (not mean) centroid convention for the gap metric");
  eval->callback([eval_args] { run_eval(*eval_args); });

  // export
  auto export_args = std::make_shared<ExportArgs>();
  CLI::App* exp = app.add_subcommand("export", "export test-split embedding snapshots");
  exp->add_option("checkpoint", export_args->checkpoint_path, "checkpoint file")->required();
  exp->add_option("dataset", export_args->dataset_dir, "dataset directory")->required();
  exp->add_option("-o,--out", export_args->out_dir, "output directory")->required();
  exp->callback([export_args] { run_export(*export_args); });

  // gradcheck
  auto gradcheck_args = std::make_shared<GradcheckArgs>();
  CLI::App* gradcheck =
      app.add_subcommand("gradcheck", "verify analytic gradients against finite differences");
  gradcheck->add_option("--losses", gradcheck_args->losses,
                        "loss subset: clip-lt,clip-ft,atp,cu,gap,combined")
      ->delimiter(',');
  gradcheck->add_option("--tol", gradcheck_args->tol, "max relative error");
  gradcheck->add_option("--cases", gradcheck_args->cases, "cases per loss")
      ->check(CLI::PositiveNumber);
  gradcheck->add_option("--step", gradcheck_args->step, "finite-difference step");
  gradcheck->add_option("--seed", gradcheck_args->seed, "RNG seed")->envname("GAPFORGE_SEED");
  gradcheck->callback([gradcheck_args] { run_gradcheck_cmd(*gradcheck_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const gf::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const gf::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return g_exit_code;
}
