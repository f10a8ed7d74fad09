#include "gapforge/embed_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "gapforge/errors.hpp"

#include "json.hpp"

namespace gapforge {

namespace {

constexpr char kMagic[4] = {'G', 'F', 'B', '1'};

void put_u32_le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void write_gfb(const std::filesystem::path& path, const Matrix& data) {
  std::string out;
  out.reserve(12 + data.size() * 4);
  out.append(kMagic, 4);
  put_u32_le(out, static_cast<std::uint32_t>(data.rows()));
  put_u32_le(out, static_cast<std::uint32_t>(data.cols()));
  for (double v : data.storage()) {
    const float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32_le(out, bits);
  }
  write_text_file(path, out);
}

Matrix read_gfb(const std::filesystem::path& path) {
  const std::string raw = read_text_file(path);
  if (raw.size() < 12 || std::memcmp(raw.data(), kMagic, 4) != 0) {
    throw IoError("read_gfb: " + path.string() + " is not a GFB1 file");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
  const std::uint32_t rows = get_u32_le(p + 4);
  const std::uint32_t cols = get_u32_le(p + 8);
  if (raw.size() != 12 + static_cast<std::size_t>(rows) * cols * 4) {
    throw IoError("read_gfb: " + path.string() + " truncated or oversized");
  }
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const std::uint32_t bits = get_u32_le(p + 12 + i * 4);
    float f;
    std::memcpy(&f, &bits, 4);
    m.storage()[i] = static_cast<double>(f);
  }
  return m;
}

void write_embeddings_jsonl(const std::filesystem::path& path, const Matrix& data,
                            const std::vector<std::string>& ids,
                            const std::string& modality) {
  if (ids.size() != data.rows()) {
    throw ShapeError("write_embeddings_jsonl: id count != row count");
  }
  std::ostringstream out;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    nlohmann::json rec{{"id", ids[i]}, {"modality", modality}};
    auto row = data.row(i);
    rec["vector"] = std::vector<double>(row.begin(), row.end());
    out << rec.dump() << '\n';
  }
  write_text_file(path, out.str());
}

JsonlEmbeddings read_embeddings_jsonl(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  JsonlEmbeddings out;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IoError("read_embeddings_jsonl: " + path.string() + " line " +
                    std::to_string(line_no) + ": " + e.what());
    }
    out.ids.push_back(rec.at("id").get<std::string>());
    if (out.modality.empty()) out.modality = rec.at("modality").get<std::string>();
    rows.push_back(rec.at("vector").get<std::vector<double>>());
    if (rows.back().size() != rows.front().size()) {
      throw IoError("read_embeddings_jsonl: ragged vectors in " + path.string());
    }
  }
  if (rows.empty()) throw IoError("read_embeddings_jsonl: " + path.string() + " is empty");
  out.data = Matrix(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto dst = out.data.row(i);
    std::copy(rows[i].begin(), rows[i].end(), dst.begin());
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("short write to " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failure on " + path.string());
  return buf.str();
}

void write_text_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  write_text_file(tmp, content);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("atomic rename to " + path.string() + " failed: " + ec.message());
}

}  // namespace gapforge
