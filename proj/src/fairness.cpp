#include "scalelens/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/random/binomial_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <fmt/format.h>

namespace scalelens {

double gini(const std::vector<double>& values) {
  if (values.empty()) throw AnalysisError("gini: empty input");
  std::vector<double> x = values;
  for (double v : x)
    if (!(v >= 0.0) || !std::isfinite(v)) throw AnalysisError("gini: values must be finite and >= 0");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  const double total = std::accumulate(x.begin(), x.end(), 0.0);
  if (!(total > 0.0)) throw AnalysisError("gini: undefined for all-zero input");
  // For ascending x (1-based rank i): sum_ij |x_i - x_j| = 2 sum_i (2i - n - 1) x_i.
  double weighted = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    weighted += (2.0 * static_cast<double>(i + 1) - n - 1.0) * x[i];
  return std::max(0.0, (2.0 * weighted) / (2.0 * n * total));
}

MeanStd binomial_null_gini(double p, std::size_t n_classes, std::size_t n_per_class,
                           std::size_t n_trials, std::uint64_t seed, unsigned threads) {
  if (!(p > 0.0 && p < 1.0)) throw AnalysisError("binomial_null_gini: p must lie in (0, 1)");
  if (n_classes == 0 || n_per_class == 0) throw AnalysisError("binomial_null_gini: counts must be positive");
  if (n_trials < 1000) throw AnalysisError("binomial_null_gini: need at least 1000 trials");

  std::vector<double> ginis(n_trials, 0.0);
  const std::size_t blocks = (n_trials + kTrialsPerBlock - 1) / kTrialsPerBlock;
  parallel_for(blocks, threads, [&](std::size_t block) {
    auto rng = make_stream(seed, block);
    boost::random::binomial_distribution<std::int64_t, double> draw(static_cast<std::int64_t>(n_per_class), p);
    std::vector<double> acc(n_classes);
    const std::size_t end = std::min(n_trials, (block + 1) * kTrialsPerBlock);
    for (std::size_t t = block * kTrialsPerBlock; t < end; ++t) {
      for (auto& a : acc) a = static_cast<double>(draw(rng)) / static_cast<double>(n_per_class);
      // An all-zero draw has no defined Gini; with p in (0,1) it is vanishingly
      // rare at realistic sizes and is scored as perfectly unequal.
      ginis[t] = std::any_of(acc.begin(), acc.end(), [](double a) { return a > 0.0; }) ? gini(acc) : 1.0;
    }
  });
  return {mean(ginis), sample_std(ginis).value_or(0.0)};
}

BottomTop bottom_top_k(const PerClassAccuracy& pca, std::size_t k) {
  const std::size_t n = pca.values.size();
  if (k < 1 || k > n) throw AnalysisError(fmt::format("bottom_top_k: k = {} outside [1, {}]", k, n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pca.values[a] < pca.values[b]; });
  double bottom = 0.0, top = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    bottom += pca.values[order[i]];
    top += pca.values[order[n - 1 - i]];
  }
  return {bottom / static_cast<double>(k), top / static_cast<double>(k)};
}

Interval gini_difference_ci(const std::vector<double>& ginis_a, const std::vector<double>& ginis_b,
                            std::size_t n_resamples, std::uint64_t seed) {
  if (ginis_a.size() < 2 || ginis_b.size() < 2)
    throw AnalysisError("gini_difference_ci: need at least 2 seeds per side");
  if (n_resamples < 1000) throw AnalysisError("gini_difference_ci: need at least 1000 resamples");
  auto a = ginis_a, b = ginis_b;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());

  auto rng = make_stream(seed, 0);
  boost::random::uniform_int_distribution<std::size_t> pick_a(0, a.size() - 1), pick_b(0, b.size() - 1);
  std::vector<double> diffs(n_resamples);
  for (auto& d : diffs) {
    double sa = 0.0, sb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sa += a[pick_a(rng)];
    for (std::size_t i = 0; i < b.size(); ++i) sb += b[pick_b(rng)];
    d = sa / static_cast<double>(a.size()) - sb / static_cast<double>(b.size());
  }
  std::sort(diffs.begin(), diffs.end());
  return {quantile_sorted(diffs, 0.025), quantile_sorted(diffs, 0.975)};
}

FairnessSummary summarize_fairness(const Corpus& corpus, const ConfigGroup& group,
                                   const FairnessOptions& options) {
  if (group.record_indices.empty()) throw AnalysisError("summarize_fairness: empty config group");
  FairnessSummary out;
  out.arch = group.arch;
  out.config_id = group.config_id;
  out.n_params = group.n_params;

  std::vector<PerClassAccuracy> per_run;
  std::vector<double> accs;
  for (auto idx : group.record_indices) {
    const auto& r = corpus.record(idx);
    auto pca = per_class_accuracy(r, corpus.manifest);
    out.seeds.push_back(r.seed);
    out.per_seed_ginis.push_back(gini(pca.values));
    accs.push_back(accuracy(r, corpus.manifest));
    per_run.push_back(std::move(pca));
  }
  out.gini_mean = mean(out.per_seed_ginis);
  out.gini_std = sample_std(out.per_seed_ginis);
  out.mean_accuracy = mean(accs);

  const std::size_t n_classes = corpus.manifest.n_classes;
  for (auto k : options.ks) {
    if (k < 1) throw AnalysisError("fairness: k must be >= 1");
    // Skipped rather than rejected: the defaults assume at least 20 classes.
    if (k > n_classes) continue;
    double bottom = 0.0, top = 0.0;
    if (options.ranking == RankingMode::per_seed) {
      for (const auto& pca : per_run) {
        const auto bt = bottom_top_k(pca, k);
        bottom += bt.bottom_mean;
        top += bt.top_mean;
      }
      bottom /= static_cast<double>(per_run.size());
      top /= static_cast<double>(per_run.size());
    } else {
      PerClassAccuracy pooled{std::vector<double>(n_classes, 0.0), per_run.front().support};
      for (const auto& pca : per_run)
        for (std::size_t c = 0; c < n_classes; ++c) pooled.values[c] += pca.values[c];
      for (auto& v : pooled.values) v /= static_cast<double>(per_run.size());
      const auto bt = bottom_top_k(pooled, k);
      bottom = bt.bottom_mean;
      top = bt.top_mean;
    }
    out.bottom_k[k] = bottom;
    out.top_k[k] = top;
  }

  if (out.mean_accuracy > 0.0 && out.mean_accuracy < 1.0) {
    const auto n_per_class = static_cast<std::size_t>(
        std::llround(static_cast<double>(corpus.manifest.n_test) / static_cast<double>(n_classes)));
    const auto null = binomial_null_gini(out.mean_accuracy, n_classes, std::max<std::size_t>(1, n_per_class),
                                         options.null_trials, options.seed, options.threads);
    out.null_gini = null.mean;
    out.null_gini_std = null.std;
  }
  return out;
}

}  // namespace scalelens
