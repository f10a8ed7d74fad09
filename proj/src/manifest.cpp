#include "gapforge/manifest.hpp"

#include "gapforge/embed_io.hpp"

namespace gapforge {

nlohmann::json manifest_to_json(const RunManifest& manifest) {
  return nlohmann::json{{"format", "gapforge.manifest"},
                        {"version", 1},
                        {"command_line", manifest.command_line},
                        {"resolved_config", manifest.resolved_config},
                        {"seed", manifest.seed},
                        {"artifacts", manifest.artifacts},
                        {"toolkit_version", manifest.toolkit_version},
                        {"duration_seconds", manifest.duration_seconds}};
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
  write_text_file_atomic(path, manifest_to_json(manifest).dump(2) + "\n");
}

}  // namespace gapforge
