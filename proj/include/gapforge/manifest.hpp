#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace gapforge {

inline constexpr std::string_view kToolkitVersion = "0.1.0";

// Run provenance written next to every command's artifacts: the command line,
// the fully resolved configuration, seed, artifact paths, and wall time.
// Everything except duration_seconds is deterministic for a fixed seed.
struct RunManifest {
  std::string command_line;
  nlohmann::json resolved_config;
  std::uint64_t seed = 0;
  std::vector<std::string> artifacts;
  std::string toolkit_version = std::string(kToolkitVersion);
  double duration_seconds = 0.0;
};

nlohmann::json manifest_to_json(const RunManifest& manifest);

// Written atomically (temp file + rename) at run end.
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

}  // namespace gapforge
