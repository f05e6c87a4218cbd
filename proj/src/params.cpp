#include "gatedclip/params.hpp"

#include <cmath>
#include <random>

#include "gatedclip/rng.hpp"

namespace gatedclip {

const char* to_string(FormatErrc code) {
  switch (code) {
    case FormatErrc::io: return "io error";
    case FormatErrc::bad_magic: return "bad magic";
    case FormatErrc::unsupported_version: return "unsupported version";
    case FormatErrc::truncated: return "truncated";
    case FormatErrc::norm_violation: return "norm violation";
    case FormatErrc::invalid_label: return "invalid label";
    case FormatErrc::duplicate_id: return "duplicate id";
    case FormatErrc::corrupt: return "corrupt";
    case FormatErrc::config_mismatch: return "config mismatch";
  }
  return "unknown";
}

std::size_t count_parameters(const Architecture& arch) {
  std::size_t n = 0;
  for (const auto& layer : arch) n += layer.out * layer.in + layer.out;
  return n;
}

ParameterSet<float> init_params(const Architecture& arch, std::uint64_t seed) {
  ParameterSet<float> params;
  for (std::size_t li = 0; li < arch.size(); ++li) {
    const auto& layer = arch[li];
    const double gain = layer.init == InitKind::he ? 2.0 : 1.0;
    const double stddev = std::sqrt(gain / static_cast<double>(layer.in));
    auto engine = rng::make_engine(rng::derive_key(seed, rng::Purpose::init, li));
    std::normal_distribution<double> dist(0.0, stddev);
    std::vector<float> w(layer.out * layer.in);
    for (auto& v : w) v = static_cast<float>(dist(engine));
    params.add(layer.weight_name, {layer.out, layer.in}, std::move(w));
    params.add(layer.bias_name, {layer.out}, std::vector<float>(layer.out, 0.0f));
  }
  return params;
}

}  // namespace gatedclip
