#include "scalelens/calibration.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "scalelens/stats.hpp"

namespace scalelens {

namespace {

double edge(std::size_t b, std::size_t n_bins) {
  return static_cast<double>(b) / static_cast<double>(n_bins);
}

}  // namespace

std::size_t bin_index(double confidence, std::size_t n_bins) {
  if (n_bins == 0) throw AnalysisError("calibration: n_bins must be >= 1");
  if (!(confidence >= 0.0 && confidence <= 1.0))
    throw AnalysisError(fmt::format("calibration: confidence {} outside [0, 1]", confidence));
  const double scaled = std::ceil(confidence * static_cast<double>(n_bins)) - 1.0;
  auto b = static_cast<std::size_t>(std::clamp(scaled, 0.0, static_cast<double>(n_bins - 1)));
  // Snap against the same edges reported in bin_stats.
  while (b > 0 && confidence <= edge(b, n_bins)) --b;
  while (b + 1 < n_bins && confidence > edge(b + 1, n_bins)) ++b;
  return b;
}

CalibrationSummary calibration_summary(std::span<const std::uint8_t> correct,
                                       std::span<const double> confidences, std::size_t n_bins) {
  if (correct.size() != confidences.size())
    throw AnalysisError("calibration: correctness and confidence lengths differ");
  if (correct.empty()) throw AnalysisError("calibration: no samples");
  if (n_bins == 0) throw AnalysisError("calibration: n_bins must be >= 1");

  std::vector<double> conf_sum(n_bins, 0.0);
  std::vector<std::size_t> hits(n_bins, 0), counts(n_bins, 0);
  double conf_correct = 0.0, conf_incorrect = 0.0, total_conf = 0.0;
  std::size_t n_correct = 0;
  for (std::size_t i = 0; i < correct.size(); ++i) {
    const double c = confidences[i];
    const auto b = bin_index(c, n_bins);
    ++counts[b];
    conf_sum[b] += c;
    total_conf += c;
    if (correct[i]) {
      ++hits[b];
      ++n_correct;
      conf_correct += c;
    } else {
      conf_incorrect += c;
    }
  }

  const double n = static_cast<double>(correct.size());
  CalibrationSummary out;
  out.n_bins = n_bins;
  for (std::size_t b = 0; b < n_bins; ++b) {
    BinStat s{edge(b, n_bins), edge(b + 1, n_bins), counts[b], 0.0, 0.0};
    if (counts[b] > 0) {
      const double cnt = static_cast<double>(counts[b]);
      s.mean_confidence = conf_sum[b] / cnt;
      s.accuracy = static_cast<double>(hits[b]) / cnt;
      out.ece += (cnt / n) * std::fabs(s.accuracy - s.mean_confidence);
    }
    out.bin_stats.push_back(s);
  }
  out.global_conf = total_conf / n;
  out.global_acc = static_cast<double>(n_correct) / n;
  out.global_gap = std::fabs(out.global_conf - out.global_acc);
  if (n_correct > 0) out.mean_conf_correct = conf_correct / static_cast<double>(n_correct);
  if (n_correct < correct.size())
    out.mean_conf_incorrect = conf_incorrect / static_cast<double>(correct.size() - n_correct);
  return out;
}

namespace {

std::vector<std::uint8_t> correctness(const RunRecord& record, const DatasetManifest& manifest) {
  if (record.pred_labels.size() != manifest.n_test || record.confidences.size() != manifest.n_test)
    throw ValidationError("calibration: record length does not match manifest");
  std::vector<std::uint8_t> out(manifest.n_test);
  for (std::size_t i = 0; i < manifest.n_test; ++i)
    out[i] = record.pred_labels[i] == manifest.true_labels[i] ? 1 : 0;
  return out;
}

}  // namespace

CalibrationSummary ece(const RunRecord& record, const DatasetManifest& manifest, std::size_t n_bins) {
  const auto correct = correctness(record, manifest);
  auto out = calibration_summary(correct, record.confidences, n_bins);
  out.config_id = record.config_id;
  return out;
}

ConfidenceSplit confidence_split(const RunRecord& record, const DatasetManifest& manifest) {
  const auto s = calibration_summary(correctness(record, manifest), record.confidences, 1);
  return {s.mean_conf_correct, s.mean_conf_incorrect};
}

}  // namespace scalelens
