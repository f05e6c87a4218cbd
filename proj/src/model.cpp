#include "gatedclip/model.hpp"

#include <stdexcept>

namespace gatedclip {

std::string to_string(ModelKind kind) {
  return kind == ModelKind::baseline ? "baseline" : "gatedclip";
}

ModelKind parse_model_kind(std::string_view s) {
  if (s == "baseline") return ModelKind::baseline;
  if (s == "gatedclip") return ModelKind::gatedclip;
  throw std::invalid_argument("unknown model kind '" + std::string(s) + "'");
}

void ModelConfig::validate() const {
  if (dim_in == 0 || proj_hidden == 0 || proj_out == 0 || gate_hidden == 0 || cls_hidden == 0 ||
      num_classes == 0) {
    throw std::invalid_argument("model dimensions must all be >= 1");
  }
  if (!(dropout_proj >= 0.0 && dropout_proj < 1.0) || !(dropout_cls >= 0.0 && dropout_cls < 1.0)) {
    throw std::invalid_argument("dropout rates must be in [0, 1)");
  }
}

Architecture architecture(ModelKind kind, const ModelConfig& c) {
  c.validate();
  if (kind == ModelKind::baseline) {
    return {{"baseline.Wcls", "baseline.bcls", c.num_classes, c.dim_in, InitKind::xavier}};
  }
  Architecture arch;
  for (auto prefix : {names::kImagePrefix, names::kTextPrefix}) {
    const std::string p(prefix);
    arch.push_back({p + ".W1", p + ".b1", c.proj_hidden, c.dim_in, InitKind::he});
    arch.push_back({p + ".W2", p + ".b2", c.proj_out, c.proj_hidden, InitKind::he});
  }
  arch.push_back({"gate.Wc", "gate.bc", c.gate_hidden, 2 * c.proj_out, InitKind::he});
  arch.push_back({"gate.Wg", "gate.bg", 1, c.gate_hidden, InitKind::xavier});
  arch.push_back({"cls.Wh", "cls.bh", c.cls_hidden, c.proj_out, InitKind::he});
  arch.push_back({"cls.Wcls", "cls.bcls", c.num_classes, c.cls_hidden, InitKind::xavier});
  return arch;
}

std::size_t param_count(ModelKind kind, const ModelConfig& config) {
  return count_parameters(architecture(kind, config));
}

ParameterSet<float> init_model(ModelKind kind, const ModelConfig& config, std::uint64_t seed) {
  return init_params(architecture(kind, config), seed);
}

}  // namespace gatedclip
