#pragma once

#include <filesystem>

#include "gapforge/synth.hpp"

#include "json.hpp"

namespace gapforge {

nlohmann::json synth_spec_to_json(const SyntheticDatasetSpec& spec);
SyntheticDatasetSpec synth_spec_from_json(const nlohmann::json& j,
                                          SyntheticDatasetSpec defaults = {});

// Dataset directory layout:
//   spec.json                dataset header with the generating spec
//   pairs.json               pair ids per split
//   {train,test}_m<i>.gfb    per-modality feature matrices (binary format)
void save_dataset(const std::filesystem::path& dir, const PairedDataset& dataset);
PairedDataset load_dataset(const std::filesystem::path& dir);

}  // namespace gapforge
