// Checkpoint file: one JSON document with a manifest and named parameter
// arrays. Doubles are written in shortest round-trip form, so reloading is
// bit-exact. Writes go to a temporary file that is then renamed.
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "pjfcann/experiment.hpp"

namespace pjfcann {

inline constexpr int kCheckpointFormat = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline nlohmann::json checkpoint_json(const PjfModel& model, const RunConfig& config,
                                      const SimilarityFunction* similarity) {
  nlohmann::json j;
  j["format_version"] = kCheckpointFormat;
  j["config"] = config;
  j["config_hash"] = hex64(config_hash(nlohmann::json(config)));
  j["model_config"] = model.config();
  j["seed"] = model.seed();
  j["vocabulary"] = model.vocabulary().tokens();
  j["vocabulary_hash"] = hex64(model.vocabulary().hash());
  j["job_ids"] = model.job_ids();
  j["resume_ids"] = model.resume_ids();
  j["similarity"] = similarity ? similarity->to_json() : nlohmann::json(nullptr);
  nlohmann::json params = nlohmann::json::array();
  const ParameterStore& store = model.parameters();
  for (std::size_t i = 0; i < store.size(); ++i) {
    params.push_back({{"name", store[i].name},
                      {"shape", store[i].value.shape},
                      {"data", store[i].value.data}});
  }
  j["parameters"] = std::move(params);
  return j;
}

inline void write_atomic(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw CheckpointError("cannot write " + tmp.string());
    os << text;
    if (!os) throw CheckpointError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void save_checkpoint(const std::filesystem::path& path, const PjfModel& model,
                            const RunConfig& config,
                            const SimilarityFunction* similarity = nullptr) {
  write_atomic(path, checkpoint_json(model, config, similarity).dump());
}

struct LoadedCheckpoint {
  RunConfig config;
  std::unique_ptr<PjfModel> model;
  std::unique_ptr<SimilarityFunction> similarity;
};

inline LoadedCheckpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format_version").get<int>() != kCheckpointFormat) {
      throw CheckpointError("unsupported checkpoint format version " +
                            j.at("format_version").dump());
    }
    LoadedCheckpoint out;
    out.config = j.at("config").get<RunConfig>();
    if (hex64(config_hash(nlohmann::json(out.config))) !=
        j.at("config_hash").get<std::string>()) {
      throw CheckpointError("checkpoint config hash mismatch");
    }
    Vocabulary vocab = Vocabulary::from_tokens(
        j.at("vocabulary").get<std::vector<std::string>>());
    if (hex64(vocab.hash()) != j.at("vocabulary_hash").get<std::string>()) {
      throw CheckpointError("checkpoint vocabulary hash mismatch");
    }
    out.model = std::make_unique<PjfModel>(
        j.at("model_config").get<ModelConfig>(), std::move(vocab),
        j.at("job_ids").get<std::vector<std::string>>(),
        j.at("resume_ids").get<std::vector<std::string>>(),
        j.at("seed").get<std::uint64_t>());
    ParameterStore& store = out.model->parameters();
    std::set<std::string> seen;
    for (const auto& p : j.at("parameters")) {
      const auto name = p.at("name").get<std::string>();
      if (!store.contains(name)) {
        throw CheckpointError("checkpoint has unknown parameter " + name);
      }
      Parameter& param = store.get(name);
      Tensor value(p.at("shape").get<Shape>(), p.at("data").get<std::vector<double>>());
      if (value.shape != param.value.shape) {
        throw CheckpointError("checkpoint shape mismatch for " + name + ": " +
                              shape_string(value.shape) + " vs " +
                              shape_string(param.value.shape));
      }
      param.value = std::move(value);
      seen.insert(name);
    }
    if (seen.size() != store.size()) {
      throw CheckpointError("checkpoint is missing parameters");
    }
    if (!j.at("similarity").is_null()) {
      out.similarity = std::make_unique<SimilarityFunction>(
          SimilarityFunction::from_json(j.at("similarity")));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
}

inline LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw CheckpointError("malformed checkpoint " + path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace pjfcann
