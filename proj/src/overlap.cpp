#include "scalelens/overlap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include <boost/random/uniform_int_distribution.hpp>
#include <fmt/format.h>

namespace scalelens {

double jaccard(const ErrorMask& a, const ErrorMask& b) {
  if (a.size() != b.size())
    throw AnalysisError(fmt::format("jaccard: mask lengths differ ({} vs {})", a.size(), b.size()));
  std::size_t inter = 0, uni = 0;
  const auto& wa = a.words();
  const auto& wb = b.words();
  for (std::size_t i = 0; i < wa.size(); ++i) {
    inter += static_cast<std::size_t>(std::popcount(wa[i] & wb[i]));
    uni += static_cast<std::size_t>(std::popcount(wa[i] | wb[i]));
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double independence_null(double e_a, double e_b) {
  if (!(e_a >= 0.0 && e_a <= 1.0 && e_b >= 0.0 && e_b <= 1.0))
    throw AnalysisError("independence_null: error rates must lie in [0, 1]");
  if (e_a == 0.0 && e_b == 0.0) throw AnalysisError("independence_null: undefined when both rates are 0");
  return (e_a * e_b) / (e_a + e_b - e_a * e_b);
}

double containment_null(double e_a, double e_b) {
  if (!(e_a > 0.0 && e_a <= 1.0 && e_b > 0.0 && e_b <= 1.0))
    throw AnalysisError("containment_null: error rates must lie in (0, 1]");
  return std::min(e_a, e_b) / std::max(e_a, e_b);
}

Interval bootstrap_ci(std::vector<double> values, const BootstrapOptions& options) {
  if (values.size() < 2) throw AnalysisError("bootstrap_ci: need at least 2 values");
  if (options.n_resamples < 1000) throw AnalysisError("bootstrap_ci: need at least 1000 resamples");
  std::sort(values.begin(), values.end());

  const std::size_t n = values.size();
  std::vector<double> means(options.n_resamples);
  const std::size_t blocks = (options.n_resamples + kTrialsPerBlock - 1) / kTrialsPerBlock;
  parallel_for(blocks, options.threads, [&](std::size_t block) {
    auto rng = make_stream(options.seed, block);
    boost::random::uniform_int_distribution<std::size_t> pick(0, n - 1);
    const std::size_t end = std::min(options.n_resamples, (block + 1) * kTrialsPerBlock);
    for (std::size_t r = block * kTrialsPerBlock; r < end; ++r) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += values[pick(rng)];
      means[r] = s / static_cast<double>(n);
    }
  });
  std::sort(means.begin(), means.end());
  return {quantile_sorted(means, 0.025), quantile_sorted(means, 0.975)};
}

namespace {

double mean_error_rate(const std::vector<SeededMask>& runs) {
  double s = 0.0;
  for (const auto& r : runs) s += r.mask.error_rate();
  return s / static_cast<double>(runs.size());
}

void finish(OverlapSummary& out, const std::optional<BootstrapOptions>& bootstrap) {
  out.n_pairs = out.pair_values.size();
  out.mean = mean(out.pair_values);
  out.std = sample_std(out.pair_values);
  const double ea = out.error_rate_a, eb = out.error_rate_b;
  if (ea > 0.0 || eb > 0.0) out.indep_null = independence_null(ea, eb);
  if (ea > 0.0 && eb > 0.0) out.containment_null = containment_null(ea, eb);
  if (bootstrap && out.n_pairs >= 2) out.bootstrap_ci95 = bootstrap_ci(out.pair_values, *bootstrap);
}

}  // namespace

OverlapSummary cross_config_overlap(const std::vector<SeededMask>& runs_a,
                                    const std::vector<SeededMask>& runs_b,
                                    const std::optional<BootstrapOptions>& bootstrap) {
  if (runs_a.empty() || runs_b.empty()) throw AnalysisError("cross_config_overlap: empty side");
  OverlapSummary out;
  for (const auto& a : runs_a) {
    for (const auto& b : runs_b) {
      out.pair_values.push_back(jaccard(a.mask, b.mask));
      out.seed_pairs.emplace_back(a.seed, b.seed);
    }
  }
  out.error_rate_a = mean_error_rate(runs_a);
  out.error_rate_b = mean_error_rate(runs_b);
  finish(out, bootstrap);
  return out;
}

OverlapSummary cross_seed_baseline(const std::vector<SeededMask>& runs,
                                   const std::optional<BootstrapOptions>& bootstrap) {
  if (runs.size() < 2) throw AnalysisError("cross_seed_baseline: need at least 2 seeds");
  OverlapSummary out;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (std::size_t j = i + 1; j < runs.size(); ++j) {
      out.pair_values.push_back(jaccard(runs[i].mask, runs[j].mask));
      out.seed_pairs.emplace_back(runs[i].seed, runs[j].seed);
    }
  }
  out.error_rate_a = out.error_rate_b = mean_error_rate(runs);
  finish(out, bootstrap);
  return out;
}

std::vector<SeededMask> group_masks(const Corpus& corpus, const ConfigGroup& group) {
  std::vector<SeededMask> out;
  for (auto idx : group.record_indices) {
    const auto& r = corpus.record(idx);
    out.push_back({r.seed, error_mask(r, corpus.manifest)});
  }
  return out;
}

}  // namespace scalelens
