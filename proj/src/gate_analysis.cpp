#include "gatedclip/gate_analysis.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "gatedclip/error.hpp"
#include "gatedclip/trainer.hpp"

namespace gatedclip {

GateReport summarize_gates(std::vector<GateEntry> entries) {
  GateReport report;
  report.per_example = std::move(entries);
  const auto& xs = report.per_example;
  if (xs.empty()) return report;

  double sum = 0.0;
  std::map<std::string, double> group_sums;
  for (const auto& e : xs) {
    if (!(e.g >= 0.0 && e.g <= 1.0)) throw std::domain_error("gate value outside [0, 1]");
    sum += e.g;
    for (const auto& key : {"meta:" + std::string(to_string(e.meta_tag)),
                            "label:" + std::to_string(e.label)}) {
      group_sums[key] += e.g;
      report.group_counts[key] += 1;
    }
    const auto bin = std::min(static_cast<std::size_t>(e.g * kGateHistogramBins), kGateHistogramBins - 1);
    report.histogram[bin] += 1;
  }
  const double n = static_cast<double>(xs.size());
  report.overall_mean = sum / n;
  double sq = 0.0;
  for (const auto& e : xs) sq += (e.g - report.overall_mean) * (e.g - report.overall_mean);
  report.overall_std = std::sqrt(sq / n);
  for (const auto& [key, s] : group_sums) {
    report.group_means[key] = s / static_cast<double>(report.group_counts[key]);
  }
  return report;
}

GateReport gate_report(const Dataset& ds, const ParameterSet<float>& params, ModelKind kind,
                       const ModelConfig& config) {
  if (kind != ModelKind::gatedclip) {
    throw std::invalid_argument("gate analysis needs a gatedclip model; the baseline has no gate");
  }
  if (ds.records.empty()) return {};
  const auto pred = predict(ds, params, kind, config);
  std::vector<GateEntry> entries;
  entries.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& r = ds.records[i];
    entries.push_back({r.id, r.label, r.meta_tag, pred.gates[i]});
  }
  return summarize_gates(std::move(entries));
}

void export_gate_csv(const GateReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError(FormatErrc::io, "cannot open " + path.string() + " for writing");
  char buf[64];
  out << "id,label,meta_tag,g\n";
  for (const auto& e : report.per_example) {
    std::snprintf(buf, sizeof buf, "%.6f", e.g);
    out << e.id << ',' << static_cast<int>(e.label) << ',' << to_string(e.meta_tag) << ',' << buf
        << '\n';
  }
  if (!report.per_example.empty()) {
    out << "# n=" << report.per_example.size() << '\n';
    std::snprintf(buf, sizeof buf, "%.6f", report.overall_mean);
    out << "# mean=" << buf << '\n';
    std::snprintf(buf, sizeof buf, "%.6f", report.overall_std);
    out << "# std=" << buf << '\n';
    for (const auto& [key, mean] : report.group_means) {
      std::snprintf(buf, sizeof buf, "%.6f", mean);
      out << "# group " << key << " n=" << report.group_counts.at(key) << " mean=" << buf << '\n';
    }
    out << "# histogram";
    for (auto c : report.histogram) out << ' ' << c;
    out << '\n';
  }
  out.flush();
  if (!out) throw FormatError(FormatErrc::io, "write to " + path.string() + " failed");
}

}  // namespace gatedclip
