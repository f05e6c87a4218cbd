#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gatedclip/embedding_store.hpp"
#include "gatedclip/model.hpp"

namespace gatedclip {

struct GateEntry {
  std::uint64_t id = 0;
  std::uint8_t label = 0;
  MetaTag meta_tag = MetaTag::none;
  double g = 0.0;
};

inline constexpr std::size_t kGateHistogramBins = 20;

struct GateReport {
  std::vector<GateEntry> per_example;
  double overall_mean = 0.0;
  double overall_std = 0.0;  // population standard deviation
  // Keys "meta:<tag>" (synthetic ground truth) and "label:<0|1|255>".
  std::map<std::string, double> group_means;
  std::map<std::string, std::size_t> group_counts;
  // Bin i covers [i/20, (i+1)/20); g = 1 falls in the last bin.
  std::array<std::size_t, kGateHistogramBins> histogram{};
};

/// Eval-mode gate values for every record plus aggregate statistics.
/// Throws std::invalid_argument for a baseline model (it has no gate).
GateReport gate_report(const Dataset& ds, const ParameterSet<float>& params, ModelKind kind,
                       const ModelConfig& config);

/// Builds the statistics from already computed entries.
GateReport summarize_gates(std::vector<GateEntry> entries);

/// CSV: header "id,label,meta_tag,g", one row per example with g to 6
/// decimals, then summary lines prefixed with '#'.
void export_gate_csv(const GateReport& report, const std::filesystem::path& path);

}  // namespace gatedclip
