#pragma once

// Per-class inequality: Gini coefficient of per-class accuracy, its
// binomial sampling null, hardest/easiest class means, and bootstrap
// intervals for Gini differences.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scalelens/record.hpp"
#include "scalelens/stats.hpp"

namespace scalelens {

/// Mean-absolute-difference Gini: sum_ij |x_i - x_j| / (2 n^2 mean).
/// Throws AnalysisError on empty, negative or all-zero input.
double gini(const std::vector<double>& values);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

/// Monte-Carlo Gini when every class has the same true accuracy p and is
/// evaluated on n_per_class samples. Deterministic given seed and
/// independent of the thread count.
MeanStd binomial_null_gini(double p, std::size_t n_classes, std::size_t n_per_class,
                           std::size_t n_trials, std::uint64_t seed, unsigned threads = 1);

struct BottomTop {
  double bottom_mean = 0.0;
  double top_mean = 0.0;
};

/// Classes sorted by accuracy ascending, ties by class index ascending.
BottomTop bottom_top_k(const PerClassAccuracy& pca, std::size_t k);

/// Percentile bootstrap of mean(a) - mean(b), each side resampled
/// independently.
Interval gini_difference_ci(const std::vector<double>& ginis_a, const std::vector<double>& ginis_b,
                            std::size_t n_resamples, std::uint64_t seed);

enum class RankingMode {
  per_seed,  // hardest classes chosen within each run, then averaged
  pooled,    // one ranking from the seed-averaged per-class accuracies
};

struct FairnessOptions {
  std::vector<std::size_t> ks{5, 10, 20};
  RankingMode ranking = RankingMode::per_seed;
  std::size_t null_trials = 10000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct FairnessSummary {
  std::string arch;
  std::string config_id;
  std::int64_t n_params = 0;
  std::vector<std::int64_t> seeds;
  std::vector<double> per_seed_ginis;
  double gini_mean = 0.0;
  std::optional<double> gini_std;
  double mean_accuracy = 0.0;
  // Absent when the mean accuracy is 0 or 1 (no binomial variance).
  std::optional<double> null_gini;
  std::optional<double> null_gini_std;
  std::map<std::size_t, double> bottom_k;
  std::map<std::size_t, double> top_k;
};

/// Values of k above the class count are left out of bottom_k / top_k.
/// Null Gini uses the seed-mean accuracy and the balanced per-class support
/// (mean support when the manifest is unbalanced).
FairnessSummary summarize_fairness(const Corpus& corpus, const ConfigGroup& group,
                                   const FairnessOptions& options);

}  // namespace scalelens
