#pragma once

// Expected calibration error with equal-width bins, reported next to the
// global confidence/accuracy gap so the two are never conflated.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scalelens/record.hpp"

namespace scalelens {

/// Bins are ((b-1)/B, b/B]; the lowest bin also holds confidence 0.
inline constexpr const char* kBinRule = "equal-width, left-open/right-closed, first bin closed at 0";

struct BinStat {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double mean_confidence = 0.0;  // 0 for empty bins
  double accuracy = 0.0;         // 0 for empty bins
};

struct CalibrationSummary {
  std::string config_id;
  double ece = 0.0;
  std::size_t n_bins = 0;
  std::vector<BinStat> bin_stats;
  std::optional<double> mean_conf_correct;
  std::optional<double> mean_conf_incorrect;
  double global_conf = 0.0;
  double global_acc = 0.0;
  double global_gap = 0.0;
};

/// Index of the bin holding `confidence` (in [0, 1]) among n_bins.
std::size_t bin_index(double confidence, std::size_t n_bins);

/// Core computation over parallel correctness / confidence sequences.
CalibrationSummary calibration_summary(std::span<const std::uint8_t> correct,
                                       std::span<const double> confidences, std::size_t n_bins);

CalibrationSummary ece(const RunRecord& record, const DatasetManifest& manifest, std::size_t n_bins = 15);

struct ConfidenceSplit {
  std::optional<double> mean_conf_correct;
  std::optional<double> mean_conf_incorrect;
};

ConfidenceSplit confidence_split(const RunRecord& record, const DatasetManifest& manifest);

}  // namespace scalelens
