#include "gapforge/checkpoint.hpp"

#include <string>

#include "gapforge/embed_io.hpp"
#include "gapforge/errors.hpp"

#include "json.hpp"

namespace gapforge {

namespace {

constexpr int kCheckpointVersion = 1;

nlohmann::json matrix_to_json(const Matrix& m) {
  return nlohmann::json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.storage()}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != m.size()) throw IoError("checkpoint: matrix payload size mismatch");
  m.storage() = data;
  return m;
}

nlohmann::json adamw_state_to_json(const AdamWState& s) {
  return nlohmann::json{{"m", s.m}, {"v", s.v}, {"step", s.step}};
}

AdamWState adamw_state_from_json(const nlohmann::json& j) {
  AdamWState s;
  s.m = j.at("m").get<std::vector<double>>();
  s.v = j.at("v").get<std::vector<double>>();
  s.step = j.at("step").get<std::int64_t>();
  if (s.m.size() != s.v.size()) throw IoError("checkpoint: optimizer state size mismatch");
  return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  nlohmann::json encoders = nlohmann::json::array();
  for (const auto& enc : checkpoint.state.encoders) {
    encoders.push_back(nlohmann::json{{"w1", matrix_to_json(enc.w1)},
                                      {"b1", enc.b1},
                                      {"w2", matrix_to_json(enc.w2)},
                                      {"b2", enc.b2}});
  }
  nlohmann::json opt_states = nlohmann::json::array();
  for (const auto& s : checkpoint.state.opt_states) opt_states.push_back(adamw_state_to_json(s));

  nlohmann::json j{{"format", "gapforge.checkpoint"},
                   {"version", kCheckpointVersion},
                   {"config", train_config_to_json(checkpoint.config)},
                   {"encoders", encoders},
                   {"log_tau", checkpoint.state.log_tau},
                   {"tau_learnable", checkpoint.state.tau_learnable},
                   {"optimizer", opt_states},
                   {"rng_state", checkpoint.state.rng_state}};
  write_text_file_atomic(path, j.dump() + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw IoError("load_checkpoint: " + path.string() + " not found");
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("load_checkpoint: bad JSON: " + std::string(e.what()));
  }
  if (j.value("format", "") != "gapforge.checkpoint") {
    throw IoError("load_checkpoint: " + path.string() + " is not a checkpoint");
  }
  if (j.value("version", 0) != kCheckpointVersion) {
    throw IoError("load_checkpoint: unsupported version " +
                  std::to_string(j.value("version", 0)));
  }
  Checkpoint out;
  out.config = train_config_from_json(j.at("config"));
  for (const auto& enc_json : j.at("encoders")) {
    EncoderModel enc;
    enc.w1 = matrix_from_json(enc_json.at("w1"));
    enc.b1 = enc_json.at("b1").get<std::vector<double>>();
    enc.w2 = matrix_from_json(enc_json.at("w2"));
    enc.b2 = enc_json.at("b2").get<std::vector<double>>();
    out.state.encoders.push_back(std::move(enc));
  }
  out.state.log_tau = j.at("log_tau").get<double>();
  out.state.tau_learnable = j.at("tau_learnable").get<bool>();
  for (const auto& s : j.at("optimizer")) {
    out.state.opt_states.push_back(adamw_state_from_json(s));
  }
  out.state.rng_state = j.value("rng_state", "");
  return out;
}

}  // namespace gapforge
