#pragma once

// Error-set overlap: Jaccard between error masks, cross-config and
// cross-seed summaries, the independence and containment null models, and
// percentile bootstrap intervals.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scalelens/record.hpp"
#include "scalelens/stats.hpp"

namespace scalelens {

struct SeededMask {
  std::int64_t seed = 0;
  ErrorMask mask;
};

struct OverlapSummary {
  std::string config_a;
  std::string config_b;
  std::vector<double> pair_values;
  /// (seed_a, seed_b) for each entry of pair_values.
  std::vector<std::pair<std::int64_t, std::int64_t>> seed_pairs;
  double mean = 0.0;
  std::optional<double> std;  // absent for a single pair
  std::size_t n_pairs = 0;
  double error_rate_a = 0.0;  // seed means
  double error_rate_b = 0.0;
  std::optional<double> indep_null;
  std::optional<double> containment_null;
  std::optional<Interval> bootstrap_ci95;
};

/// |A ∩ B| / |A ∪ B|; 1.0 when both masks are empty.
double jaccard(const ErrorMask& a, const ErrorMask& b);

/// Expected Jaccard of independent error sets at rates e_a, e_b.
double independence_null(double e_a, double e_b);

/// Largest achievable Jaccard at rates e_a, e_b (smaller set nested in larger).
double containment_null(double e_a, double e_b);

struct BootstrapOptions {
  std::size_t n_resamples = 10000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Percentile bootstrap (2.5 / 97.5) of the mean. Values are sorted before
/// resampling so the result does not depend on their input order.
Interval bootstrap_ci(std::vector<double> values, const BootstrapOptions& options);

/// All |runs_a| x |runs_b| seed pairs, same-index pairs included.
OverlapSummary cross_config_overlap(const std::vector<SeededMask>& runs_a,
                                    const std::vector<SeededMask>& runs_b,
                                    const std::optional<BootstrapOptions>& bootstrap = std::nullopt);

/// Unordered distinct seed pairs within one config (C(n, 2) pairs).
OverlapSummary cross_seed_baseline(const std::vector<SeededMask>& runs,
                                   const std::optional<BootstrapOptions>& bootstrap = std::nullopt);

/// Seeded masks of one config group.
std::vector<SeededMask> group_masks(const Corpus& corpus, const ConfigGroup& group);

}  // namespace scalelens
