#include "gapforge/dataset_io.hpp"

#include <string>

#include "gapforge/embed_io.hpp"
#include "gapforge/errors.hpp"

namespace gapforge {

namespace {
constexpr int kDatasetVersion = 1;
}

nlohmann::json synth_spec_to_json(const SyntheticDatasetSpec& spec) {
  return nlohmann::json{{"n_pairs", spec.n_pairs},
                        {"d_semantic", spec.d_semantic},
                        {"d_feat", spec.d_feat},
                        {"noise_sigma", spec.noise_sigma},
                        {"jitter_sigma", spec.jitter_sigma},
                        {"n_clusters", spec.n_clusters},
                        {"seed", spec.seed}};
}

SyntheticDatasetSpec synth_spec_from_json(const nlohmann::json& j,
                                          SyntheticDatasetSpec defaults) {
  SyntheticDatasetSpec s = std::move(defaults);
  if (j.contains("n_pairs")) s.n_pairs = j.at("n_pairs").get<std::size_t>();
  if (j.contains("d_semantic")) s.d_semantic = j.at("d_semantic").get<std::size_t>();
  if (j.contains("d_feat")) s.d_feat = j.at("d_feat").get<std::vector<std::size_t>>();
  if (j.contains("noise_sigma")) s.noise_sigma = j.at("noise_sigma").get<double>();
  if (j.contains("jitter_sigma")) s.jitter_sigma = j.at("jitter_sigma").get<double>();
  if (j.contains("n_clusters")) s.n_clusters = j.at("n_clusters").get<std::size_t>();
  if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

void save_dataset(const std::filesystem::path& dir, const PairedDataset& dataset) {
  std::filesystem::create_directories(dir);
  nlohmann::json header{{"format", "gapforge.dataset"},
                        {"version", kDatasetVersion},
                        {"spec", synth_spec_to_json(dataset.spec)},
                        {"n_train", dataset.train.size()},
                        {"n_test", dataset.test.size()}};
  write_text_file(dir / "spec.json", header.dump(2) + "\n");
  nlohmann::json pairs{{"train_ids", dataset.train.ids}, {"test_ids", dataset.test.ids}};
  write_text_file(dir / "pairs.json", pairs.dump() + "\n");
  for (std::size_t m = 0; m < dataset.n_modalities(); ++m) {
    const std::string suffix = "_m" + std::to_string(m) + ".gfb";
    write_gfb(dir / ("train" + suffix), dataset.train.features[m]);
    write_gfb(dir / ("test" + suffix), dataset.test.features[m]);
  }
}

PairedDataset load_dataset(const std::filesystem::path& dir) {
  const auto spec_path = dir / "spec.json";
  if (!std::filesystem::exists(spec_path)) {
    throw IoError("load_dataset: " + spec_path.string() + " not found");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(read_text_file(spec_path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("load_dataset: bad spec.json: " + std::string(e.what()));
  }
  if (header.value("format", "") != "gapforge.dataset") {
    throw IoError("load_dataset: " + spec_path.string() + " is not a dataset header");
  }

  PairedDataset dataset;
  dataset.spec = synth_spec_from_json(header.at("spec"));
  nlohmann::json pairs;
  try {
    pairs = nlohmann::json::parse(read_text_file(dir / "pairs.json"));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("load_dataset: bad pairs.json: " + std::string(e.what()));
  }
  dataset.train.ids = pairs.at("train_ids").get<std::vector<std::string>>();
  dataset.test.ids = pairs.at("test_ids").get<std::vector<std::string>>();

  const std::size_t M = dataset.spec.d_feat.size();
  for (std::size_t m = 0; m < M; ++m) {
    const std::string suffix = "_m" + std::to_string(m) + ".gfb";
    dataset.train.features.push_back(read_gfb(dir / ("train" + suffix)));
    dataset.test.features.push_back(read_gfb(dir / ("test" + suffix)));
  }
  for (std::size_t m = 0; m < M; ++m) {
    if (dataset.train.features[m].rows() != dataset.train.size() ||
        dataset.test.features[m].rows() != dataset.test.size() ||
        dataset.train.features[m].cols() != dataset.spec.d_feat[m] ||
        dataset.test.features[m].cols() != dataset.spec.d_feat[m]) {
      throw IoError("load_dataset: feature files disagree with spec/pair index");
    }
  }
  return dataset;
}

}  // namespace gapforge
