#pragma once

// Checkpoint file (little-endian):
//
//   magic "GCCK" | version u32 = 1 | header_len u32 | JSON header (header_len bytes)
//   | tensor values as f32, concatenated in header order
//   | [if header.optimizer.present: m tensors, then v tensors, same order]
//
// JSON header keys: model_kind, dims{dim_in, proj_hidden, proj_out,
// gate_hidden, cls_hidden, num_classes, dropout_proj, dropout_cls},
// tensors[{name, shape}], optimizer{present, step_count}, meta{...}.

#include <filesystem>
#include <optional>

#include "json.hpp"

#include "gatedclip/model.hpp"
#include "gatedclip/optim.hpp"

namespace gatedclip {

struct Checkpoint {
  ModelKind kind = ModelKind::gatedclip;
  ModelConfig config;
  ParameterSet<float> params;
  std::optional<optim::AdamWState> optimizer;
  nlohmann::json meta = nlohmann::json::object();
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);

Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Loads and rejects files whose kind or dimensions differ from the expected ones.
Checkpoint load_checkpoint(const std::filesystem::path& path, ModelKind expected_kind,
                           const ModelConfig& expected_config);

nlohmann::json model_config_to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace gatedclip
