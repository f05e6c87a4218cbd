#include "gatedclip/checkpoint.hpp"

#include <array>
#include <fstream>

#include "gatedclip/error.hpp"

namespace gatedclip {

namespace {

constexpr std::array<char, 4> kMagic = {'G', 'C', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void write_floats(std::ofstream& out, const std::vector<float>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(float)));
}

void read_floats(std::ifstream& in, std::vector<float>& v, const std::string& what) {
  if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)))) {
    throw FormatError(FormatErrc::truncated, "checkpoint ends inside " + what);
  }
}

}  // namespace

nlohmann::json model_config_to_json(const ModelConfig& c) {
  return {{"dim_in", c.dim_in},           {"proj_hidden", c.proj_hidden},
          {"proj_out", c.proj_out},       {"gate_hidden", c.gate_hidden},
          {"cls_hidden", c.cls_hidden},   {"num_classes", c.num_classes},
          {"dropout_proj", c.dropout_proj}, {"dropout_cls", c.dropout_cls}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.dim_in = j.at("dim_in").get<std::size_t>();
  c.proj_hidden = j.at("proj_hidden").get<std::size_t>();
  c.proj_out = j.at("proj_out").get<std::size_t>();
  c.gate_hidden = j.at("gate_hidden").get<std::size_t>();
  c.cls_hidden = j.at("cls_hidden").get<std::size_t>();
  c.num_classes = j.at("num_classes").get<std::size_t>();
  c.dropout_proj = j.at("dropout_proj").get<double>();
  c.dropout_cls = j.at("dropout_cls").get<double>();
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  if (ckpt.optimizer && !ckpt.optimizer->aligned_with(ckpt.params)) {
    throw ShapeError("save_checkpoint: optimizer state not aligned with parameters");
  }
  nlohmann::json header;
  header["model_kind"] = to_string(ckpt.kind);
  header["dims"] = model_config_to_json(ckpt.config);
  header["tensors"] = nlohmann::json::array();
  for (const auto& p : ckpt.params) header["tensors"].push_back({{"name", p.name}, {"shape", p.shape}});
  header["optimizer"] = {{"present", ckpt.optimizer.has_value()},
                         {"step_count", ckpt.optimizer ? ckpt.optimizer->step_count : 0}};
  header["meta"] = ckpt.meta;
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatErrc::io, "cannot open " + path.string() + " for writing");
  out.write(kMagic.data(), kMagic.size());
  const std::uint32_t version = kVersion;
  const auto len = static_cast<std::uint32_t>(text.size());
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& p : ckpt.params) write_floats(out, p.values);
  if (ckpt.optimizer) {
    for (const auto& m : ckpt.optimizer->m) write_floats(out, m);
    for (const auto& v : ckpt.optimizer->v) write_floats(out, v);
  }
  out.flush();
  if (!out) throw FormatError(FormatErrc::io, "write to " + path.string() + " failed");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatErrc::io, "cannot open " + path.string());
  std::array<char, 4> magic{};
  std::uint32_t version = 0, len = 0;
  if (!in.read(magic.data(), magic.size())) throw FormatError(FormatErrc::truncated, "no magic");
  if (magic != kMagic) throw FormatError(FormatErrc::bad_magic, path.string() + " is not a checkpoint");
  if (!in.read(reinterpret_cast<char*>(&version), sizeof version) ||
      !in.read(reinterpret_cast<char*>(&len), sizeof len)) {
    throw FormatError(FormatErrc::truncated, "checkpoint header incomplete");
  }
  if (version != kVersion) {
    throw FormatError(FormatErrc::unsupported_version, "checkpoint version " + std::to_string(version));
  }
  std::string text(len, '\0');
  if (!in.read(text.data(), len)) throw FormatError(FormatErrc::truncated, "checkpoint JSON header");

  Checkpoint ckpt;
  try {
    const auto header = nlohmann::json::parse(text);
    ckpt.kind = parse_model_kind(header.at("model_kind").get<std::string>());
    ckpt.config = model_config_from_json(header.at("dims"));
    const auto arch = architecture(ckpt.kind, ckpt.config);
    const auto& tensors = header.at("tensors");
    if (tensors.size() != 2 * arch.size()) {
      throw FormatError(FormatErrc::config_mismatch, "tensor list does not match the model kind");
    }
    std::size_t ti = 0;
    for (const auto& layer : arch) {
      const std::pair<std::string, std::vector<std::size_t>> expected[] = {
          {layer.weight_name, {layer.out, layer.in}}, {layer.bias_name, {layer.out}}};
      for (const auto& [name, shape] : expected) {
        const auto& t = tensors.at(ti++);
        if (t.at("name").get<std::string>() != name ||
            t.at("shape").get<std::vector<std::size_t>>() != shape) {
          throw FormatError(FormatErrc::config_mismatch,
                            "tensor " + t.at("name").get<std::string>() + " does not match dims");
        }
        std::vector<float> values(shape.size() == 2 ? shape[0] * shape[1] : shape[0]);
        read_floats(in, values, name);
        ckpt.params.add(name, shape, std::move(values));
      }
    }
    const auto& opt = header.at("optimizer");
    if (opt.at("present").get<bool>()) {
      auto state = optim::AdamWState::zeros_like(ckpt.params);
      state.step_count = opt.at("step_count").get<std::uint64_t>();
      for (std::size_t i = 0; i < ckpt.params.size(); ++i) read_floats(in, state.m[i], "optimizer m");
      for (std::size_t i = 0; i < ckpt.params.size(); ++i) read_floats(in, state.v[i], "optimizer v");
      ckpt.optimizer = std::move(state);
    }
    ckpt.meta = header.value("meta", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatErrc::corrupt, std::string("checkpoint header: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(FormatErrc::corrupt, std::string("checkpoint header: ") + e.what());
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError(FormatErrc::corrupt, "trailing bytes after checkpoint data");
  }
  return ckpt;
}

Checkpoint load_checkpoint(const std::filesystem::path& path, ModelKind expected_kind,
                           const ModelConfig& expected_config) {
  auto ckpt = load_checkpoint(path);
  if (ckpt.kind != expected_kind) {
    throw FormatError(FormatErrc::config_mismatch, "checkpoint holds a " + to_string(ckpt.kind) +
                                                       " model, expected " + to_string(expected_kind));
  }
  if (!(ckpt.config == expected_config)) {
    throw FormatError(FormatErrc::config_mismatch, "checkpoint dimensions differ from the expected config");
  }
  return ckpt;
}

}  // namespace gatedclip
