#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gapforge/matrix.hpp"

namespace gapforge {

// Binary embedding/feature file: magic "GFB1", u32 rows, u32 cols
// (little-endian), then rows*cols little-endian 32-bit floats, row-major.
// One file per modality; row order = pair order.
void write_gfb(const std::filesystem::path& path, const Matrix& data);
Matrix read_gfb(const std::filesystem::path& path);

// JSON Lines embeddings, one record per sample:
//   {"id": string, "modality": string, "vector": [f64...]}
struct JsonlEmbeddings {
  Matrix data;
  std::vector<std::string> ids;
  std::string modality;
};

void write_embeddings_jsonl(const std::filesystem::path& path, const Matrix& data,
                            const std::vector<std::string>& ids,
                            const std::string& modality);
JsonlEmbeddings read_embeddings_jsonl(const std::filesystem::path& path);

// Whole-file helpers used by every artifact writer.
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);
// write-then-rename so partially written files never shadow a valid artifact
void write_text_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace gapforge
