#pragma once

#include <filesystem>

#include "gapforge/train.hpp"

namespace gapforge {

// Single-file JSON checkpoint: versioned header, config echo, named and
// shaped parameter arrays, optimizer state, RNG state.
struct Checkpoint {
  TrainConfig config;
  TrainState state;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace gapforge
