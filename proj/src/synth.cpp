#include "scalelens/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/binomial_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <fmt/format.h>

#include "scalelens/matrix_io.hpp"
#include "scalelens/overlap.hpp"
#include "scalelens/stats.hpp"

namespace scalelens {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::pair<SynthKind, std::string_view> kKindNames[] = {
    {SynthKind::power_law_curve, "power_law_curve"},
    {SynthKind::overlap_masks, "overlap_masks"},
    {SynthKind::calibration_profile, "calibration_profile"},
    {SynthKind::planted_spectrum, "planted_spectrum"},
    {SynthKind::binomial_classes, "binomial_classes"},
    {SynthKind::corpus, "corpus"},
};

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    boost::random::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(v[i - 1], v[pick(rng)]);
  }
}

std::size_t count_for(double rate, std::size_t n) {
  return static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
}

}  // namespace

std::string_view to_string(SynthKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "";
}

SynthKind synth_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kKindNames)
    if (n == name) return k;
  throw ValidationError(fmt::format("unknown synth kind '{}'", name));
}

SynthSpec synth_spec_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.contains("seed"))
    throw ValidationError("synth spec: expected an object with 'kind' and 'seed'");
  SynthSpec spec;
  spec.kind = synth_kind_from_string(j.at("kind").get<std::string>());
  if (!j.at("seed").is_number_integer()) throw ValidationError("synth spec: 'seed' must be an integer");
  spec.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("params")) spec.params = j.at("params");
  return spec;
}

std::vector<ScalingPoint> gen_power_law_runs(double alpha, double intercept, double noise_sigma,
                                             const std::vector<std::int64_t>& sizes, std::size_t n_seeds,
                                             std::uint64_t seed) {
  if (!(alpha > 0.0)) throw AnalysisError("gen_power_law_runs: alpha must be positive");
  for (auto n : sizes)
    if (n <= 0) throw AnalysisError("gen_power_law_runs: sizes must be positive");
  std::vector<ScalingPoint> out;
  for (std::size_t s = 0; s < n_seeds; ++s) {
    auto rng = make_stream(seed, s);
    boost::random::normal_distribution<double> noise(0.0, 1.0);
    for (auto n : sizes) {
      const double eps = noise_sigma * noise(rng);
      const double metric = std::exp(intercept - alpha * std::log(static_cast<double>(n)) + eps);
      out.push_back({n, metric, static_cast<std::int64_t>(s), fmt::format("n{}", n)});
    }
  }
  return out;
}

std::pair<ErrorMask, ErrorMask> gen_overlap_masks(std::size_t n_test, double e_a, double e_b,
                                                  double target_jaccard, std::uint64_t seed) {
  if (n_test == 0) throw AnalysisError("gen_overlap_masks: n_test must be positive");
  if (!(e_a >= 0.0 && e_a <= 1.0 && e_b >= 0.0 && e_b <= 1.0))
    throw AnalysisError("gen_overlap_masks: error rates must lie in [0, 1]");
  if (!(target_jaccard >= 0.0 && target_jaccard <= 1.0))
    throw AnalysisError("gen_overlap_masks: target Jaccard must lie in [0, 1]");
  const std::size_t na = count_for(e_a, n_test);
  const std::size_t nb = count_for(e_b, n_test);
  const std::size_t small = std::min(na, nb);
  const double raw = target_jaccard * static_cast<double>(na + nb) / (1.0 + target_jaccard);
  std::size_t ni = static_cast<std::size_t>(std::llround(raw));
  if (ni > small && e_a > 0.0 && e_b > 0.0 && target_jaccard <= containment_null(e_a, e_b) + 1e-12) ni = small;
  const std::size_t min_inter = na + nb > n_test ? na + nb - n_test : 0;
  if (ni > small || ni < min_inter)
    throw AnalysisError(fmt::format(
        "gen_overlap_masks: Jaccard {} infeasible for |A| = {}, |B| = {} over {} samples", target_jaccard, na,
        nb, n_test));

  std::vector<std::size_t> perm(n_test);
  std::iota(perm.begin(), perm.end(), 0);
  auto rng = make_stream(seed, 0);
  shuffle(perm, rng);

  ErrorMask a(n_test), b(n_test);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < ni; ++i, ++pos) {
    a.set(perm[pos]);
    b.set(perm[pos]);
  }
  for (std::size_t i = ni; i < na; ++i, ++pos) a.set(perm[pos]);
  for (std::size_t i = ni; i < nb; ++i, ++pos) b.set(perm[pos]);
  return {std::move(a), std::move(b)};
}

CalibrationSample gen_calibration_profile(std::size_t n_test, const std::vector<double>& bin_accuracies,
                                          const std::vector<double>& bin_confidences,
                                          const std::vector<double>& bin_weights, std::uint64_t seed) {
  const std::size_t bins = bin_accuracies.size();
  if (bins == 0 || bin_confidences.size() != bins || bin_weights.size() != bins)
    throw AnalysisError("gen_calibration_profile: profile sequences must be nonempty and equal length");
  double wsum = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    if (!(bin_accuracies[b] >= 0.0 && bin_accuracies[b] <= 1.0))
      throw AnalysisError("gen_calibration_profile: accuracy outside [0, 1]");
    if (!(bin_confidences[b] >= 0.0 && bin_confidences[b] <= 1.0))
      throw AnalysisError("gen_calibration_profile: confidence outside [0, 1]");
    if (!(bin_weights[b] >= 0.0)) throw AnalysisError("gen_calibration_profile: negative weight");
    wsum += bin_weights[b];
  }
  if (std::fabs(wsum - 1.0) > 1e-9) throw AnalysisError("gen_calibration_profile: weights must sum to 1");

  // Largest remainder; ties go to the lower bin index.
  CalibrationSample out;
  out.bin_counts.resize(bins);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t b = 0; b < bins; ++b) {
    const double exact = bin_weights[b] * static_cast<double>(n_test);
    out.bin_counts[b] = static_cast<std::size_t>(std::floor(exact));
    assigned += out.bin_counts[b];
    remainders.emplace_back(-(exact - std::floor(exact)), b);
  }
  std::sort(remainders.begin(), remainders.end());
  for (std::size_t i = 0; assigned < n_test; ++i, ++assigned) ++out.bin_counts[remainders[i % bins].second];

  auto rng = make_stream(seed, 0);
  for (std::size_t b = 0; b < bins; ++b) {
    boost::random::bernoulli_distribution<double> hit(bin_accuracies[b]);
    for (std::size_t i = 0; i < out.bin_counts[b]; ++i) {
      out.correct.push_back(hit(rng) ? 1 : 0);
      out.confidences.push_back(bin_confidences[b]);
    }
    out.expected_ece += static_cast<double>(out.bin_counts[b]) / static_cast<double>(n_test) *
                        std::fabs(bin_accuracies[b] - bin_confidences[b]);
  }
  return out;
}

Eigen::MatrixXd gen_planted_spectrum(double beta, std::size_t n_features, std::size_t n_samples,
                                     std::uint64_t seed) {
  if (!(beta >= 0.0)) throw AnalysisError("gen_planted_spectrum: beta must be nonnegative");
  Eigen::RowVectorXd scale(static_cast<Eigen::Index>(n_features));
  for (std::size_t k = 0; k < n_features; ++k)
    scale[static_cast<Eigen::Index>(k)] = std::sqrt(std::pow(static_cast<double>(k + 1), -beta));
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n_samples), static_cast<Eigen::Index>(n_features));
  auto rng = make_stream(seed, 0);
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = normal(rng) * scale[j];
  return out;
}

std::vector<double> gen_binomial_classes(double p, std::size_t n_classes, std::size_t n_per_class,
                                         std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw AnalysisError("gen_binomial_classes: p outside [0, 1]");
  auto rng = make_stream(seed, 0);
  boost::random::binomial_distribution<std::int64_t, double> draw(static_cast<std::int64_t>(n_per_class), p);
  std::vector<double> out(n_classes);
  for (auto& v : out) v = static_cast<double>(draw(rng));
  return out;
}

DatasetManifest balanced_manifest(std::string dataset_id, std::size_t n_test, std::size_t n_classes) {
  DatasetManifest m;
  m.dataset_id = std::move(dataset_id);
  m.n_test = n_test;
  m.n_classes = n_classes;
  m.true_labels.resize(n_test);
  for (std::size_t i = 0; i < n_test; ++i) m.true_labels[i] = static_cast<std::int32_t>(i % n_classes);
  return m;
}

RunRecord record_from_correctness(const DatasetManifest& manifest, const std::vector<std::uint8_t>& correct,
                                  const std::vector<double>& confidences, std::string arch,
                                  std::string config_id, std::int64_t n_params, std::int64_t seed) {
  if (correct.size() != manifest.n_test || confidences.size() != manifest.n_test)
    throw AnalysisError("record_from_correctness: lengths do not match the manifest");
  RunRecord r;
  r.dataset_id = manifest.dataset_id;
  r.arch = std::move(arch);
  r.config_id = std::move(config_id);
  r.n_params = n_params;
  r.seed = seed;
  r.pred_labels.resize(manifest.n_test);
  for (std::size_t i = 0; i < manifest.n_test; ++i) {
    const auto truth = manifest.true_labels[i];
    r.pred_labels[i] = correct[i] ? truth : static_cast<std::int32_t>((truth + 1) % manifest.n_classes);
  }
  r.confidences = confidences;
  return r;
}

// Corpus ----------------------------------------------------------------------------

namespace {

template <typename T>
T param_or(const json& params, const char* key, T fallback) {
  return params.contains(key) ? params.at(key).get<T>() : fallback;
}

std::vector<SynthFamily> default_families() {
  return {
      {"ScaleCNN", {21936, 80348, 175336, 306900, 679756, 1198916, 2676148, 4738596}, 0.156, 1.02, 0.01, 0.84,
       8.0, 0.0},
      {"MobileNetV2",
       {214180, 262596, 366212, 524228, 815780, 1483524, 2351972, 5129252, 8953188, 19803748},
       0.106,
       0.567,
       0.01,
       0.30,
       3.0,
       0.05},
  };
}

}  // namespace

CorpusSpec corpus_spec_from_json(const json& params, std::uint64_t seed) {
  CorpusSpec spec;
  spec.seed = seed;
  spec.dataset_id = param_or<std::string>(params, "dataset_id", spec.dataset_id);
  spec.n_test = param_or<std::size_t>(params, "n_test", spec.n_test);
  spec.n_classes = param_or<std::size_t>(params, "n_classes", spec.n_classes);
  spec.n_seeds = param_or<std::size_t>(params, "n_seeds", spec.n_seeds);
  spec.difficulty_weight = param_or<double>(params, "difficulty_weight", spec.difficulty_weight);
  spec.class_spread = param_or<double>(params, "class_spread", spec.class_spread);
  if (params.contains("families")) {
    for (const auto& f : params.at("families")) {
      SynthFamily fam;
      fam.arch = f.at("arch").get<std::string>();
      fam.sizes = f.at("sizes").get<std::vector<std::int64_t>>();
      fam.alpha = param_or<double>(f, "alpha", fam.alpha);
      fam.intercept = param_or<double>(f, "intercept", fam.intercept);
      fam.noise_sigma = param_or<double>(f, "noise_sigma", fam.noise_sigma);
      fam.train_loss_alpha = param_or<double>(f, "train_loss_alpha", fam.train_loss_alpha);
      fam.train_loss_intercept = param_or<double>(f, "train_loss_intercept", fam.train_loss_intercept);
      fam.overconfidence = param_or<double>(f, "overconfidence", fam.overconfidence);
      spec.families.push_back(std::move(fam));
    }
  } else {
    spec.families = default_families();
  }
  return spec;
}

Corpus gen_corpus(const CorpusSpec& spec) {
  if (spec.n_test == 0 || spec.n_classes < 2 || spec.n_seeds == 0)
    throw AnalysisError("gen_corpus: need n_test > 0, n_classes > 1 and n_seeds > 0");
  if (spec.families.empty()) throw AnalysisError("gen_corpus: no families");
  if (!(spec.difficulty_weight >= 0.0 && spec.difficulty_weight <= 1.0))
    throw AnalysisError("gen_corpus: difficulty_weight must lie in [0, 1]");

  auto manifest = balanced_manifest(spec.dataset_id, spec.n_test, spec.n_classes);

  // Shared difficulty: per-class offset plus per-sample variation.
  auto base_rng = make_stream(spec.seed, 0);
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> class_offset(spec.n_classes);
  for (auto& c : class_offset) c = spec.class_spread * normal(base_rng);
  std::vector<double> difficulty(spec.n_test);
  for (std::size_t i = 0; i < spec.n_test; ++i)
    difficulty[i] = class_offset[manifest.true_labels[i]] + normal(base_rng);

  const double w = spec.difficulty_weight;
  const double w_noise = std::sqrt(1.0 - w * w);
  std::vector<RunRecord> records;
  std::uint64_t stream = 1;
  for (const auto& fam : spec.families) {
    for (std::size_t c = 0; c < fam.sizes.size(); ++c) {
      const auto n_params = fam.sizes[c];
      for (std::size_t s = 0; s < spec.n_seeds; ++s) {
        auto rng = make_stream(spec.seed, stream++);
        boost::random::uniform_01<double> unif;
        const double log_n = std::log(static_cast<double>(n_params));
        const double err =
            std::clamp(std::exp(fam.intercept - fam.alpha * log_n + fam.noise_sigma * normal(rng)), 0.0, 1.0);
        const std::size_t n_err = count_for(err, spec.n_test);

        std::vector<std::pair<double, std::size_t>> score(spec.n_test);
        for (std::size_t i = 0; i < spec.n_test; ++i) score[i] = {-(w * difficulty[i] + w_noise * normal(rng)), i};
        std::sort(score.begin(), score.end());
        std::vector<std::uint8_t> correct(spec.n_test, 1);
        for (std::size_t k = 0; k < n_err; ++k) correct[score[k].second] = 0;

        const double acc = 1.0 - static_cast<double>(n_err) / static_cast<double>(spec.n_test);
        std::vector<double> conf(spec.n_test);
        for (std::size_t i = 0; i < spec.n_test; ++i) {
          const double centre = acc + fam.overconfidence + (correct[i] ? 0.15 : -0.15);
          conf[i] = std::clamp(centre + 0.2 * (unif(rng) - 0.5), 0.0, 1.0);
        }
        auto rec = record_from_correctness(manifest, correct, conf, fam.arch, fmt::format("{}-{}", fam.arch, c),
                                           n_params, static_cast<std::int64_t>(s));
        rec.width_param = static_cast<double>(c + 1);
        rec.final_train_loss = std::exp(fam.train_loss_intercept - fam.train_loss_alpha * log_n +
                                        fam.noise_sigma * normal(rng));
        // Wrong predictions spread over the other classes.
        boost::random::uniform_int_distribution<std::int32_t> other(1, static_cast<std::int32_t>(spec.n_classes) - 1);
        for (std::size_t i = 0; i < spec.n_test; ++i)
          if (!correct[i])
            rec.pred_labels[i] = static_cast<std::int32_t>((manifest.true_labels[i] + other(rng)) % spec.n_classes);
        records.push_back(std::move(rec));
      }
    }
  }
  return make_corpus(std::move(manifest), std::move(records));
}

// Output ----------------------------------------------------------------------------

std::vector<fs::path> write_synth(const SynthSpec& spec, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const auto& p = spec.params;
  const auto manifest_path = out_dir / "manifest.json";
  const auto records_path = out_dir / "records.jsonl";
  const auto n_test = param_or<std::size_t>(p, "n_test", 10000);
  const auto n_classes = param_or<std::size_t>(p, "n_classes", 100);
  const auto dataset_id = param_or<std::string>(p, "dataset_id", "synthetic");

  switch (spec.kind) {
    case SynthKind::corpus: {
      const auto corpus = gen_corpus(corpus_spec_from_json(p, spec.seed));
      write_manifest(corpus.manifest, manifest_path);
      write_records(corpus.records, records_path);
      return {manifest_path, records_path};
    }
    case SynthKind::power_law_curve: {
      const auto points = gen_power_law_runs(
          param_or<double>(p, "alpha", 0.156), param_or<double>(p, "intercept", 1.02),
          param_or<double>(p, "noise_sigma", 0.01),
          param_or<std::vector<std::int64_t>>(p, "sizes", default_families().front().sizes),
          param_or<std::size_t>(p, "n_seeds", 5), spec.seed);
      const auto manifest = balanced_manifest(dataset_id, n_test, n_classes);
      auto rng = make_stream(spec.seed, 1u << 20);
      std::vector<RunRecord> records;
      for (const auto& pt : points) {
        const std::size_t n_err = count_for(std::min(1.0, pt.metric_value), n_test);
        std::vector<std::uint8_t> correct(n_test, 1);
        std::fill_n(correct.begin(), n_err, 0);
        shuffle(correct, rng);
        std::vector<double> conf(n_test, 1.0 - static_cast<double>(n_err) / static_cast<double>(n_test));
        records.push_back(record_from_correctness(manifest, correct, conf, param_or<std::string>(p, "arch", "synthetic"),
                                                  pt.config_id, pt.n_params, pt.seed));
      }
      write_manifest(manifest, manifest_path);
      write_records(records, records_path);
      return {manifest_path, records_path};
    }
    case SynthKind::overlap_masks: {
      const auto [a, b] = gen_overlap_masks(n_test, param_or<double>(p, "e_a", 0.583), param_or<double>(p, "e_b", 0.247),
                                            param_or<double>(p, "target_jaccard", 0.349), spec.seed);
      const auto manifest = balanced_manifest(dataset_id, n_test, n_classes);
      std::vector<RunRecord> records;
      for (const auto* mask : {&a, &b}) {
        std::vector<std::uint8_t> correct(n_test);
        for (std::size_t i = 0; i < n_test; ++i) correct[i] = mask->test(i) ? 0 : 1;
        const double acc = 1.0 - mask->error_rate();
        records.push_back(record_from_correctness(manifest, correct, std::vector<double>(n_test, acc), "synthetic",
                                                  mask == &a ? "A" : "B", mask == &a ? 1000 : 2000, 0));
      }
      write_manifest(manifest, manifest_path);
      write_records(records, records_path);
      return {manifest_path, records_path};
    }
    case SynthKind::calibration_profile: {
      const auto sample = gen_calibration_profile(
          n_test, p.at("accuracies").get<std::vector<double>>(), p.at("confidences").get<std::vector<double>>(),
          p.at("weights").get<std::vector<double>>(), spec.seed);
      const auto manifest = balanced_manifest(dataset_id, n_test, n_classes);
      write_manifest(manifest, manifest_path);
      write_records({record_from_correctness(manifest, sample.correct, sample.confidences, "synthetic", "profile",
                                             1000, 0)},
                    records_path);
      return {manifest_path, records_path};
    }
    case SynthKind::planted_spectrum: {
      const auto path = out_dir / "matrix.npy";
      save_npy(gen_planted_spectrum(param_or<double>(p, "beta", 1.45), param_or<std::size_t>(p, "n_features", 600),
                                    param_or<std::size_t>(p, "n_samples", 50000), spec.seed),
               path);
      return {path};
    }
    case SynthKind::binomial_classes: {
      const auto n_per_class = param_or<std::size_t>(p, "n_per_class", 100);
      const auto counts =
          gen_binomial_classes(param_or<double>(p, "p", 0.42), n_classes, n_per_class, spec.seed);
      const auto manifest = balanced_manifest(dataset_id, n_classes * n_per_class, n_classes);
      // Sample i is the (i / n_classes)-th member of class i % n_classes.
      std::vector<std::uint8_t> correct(manifest.n_test);
      for (std::size_t i = 0; i < manifest.n_test; ++i)
        correct[i] = static_cast<double>(i / n_classes) < counts[i % n_classes] ? 1 : 0;
      write_manifest(manifest, manifest_path);
      write_records({record_from_correctness(manifest, correct, std::vector<double>(manifest.n_test, 0.5), "synthetic",
                                             "binomial", 1000, 0)},
                    records_path);
      return {manifest_path, records_path};
    }
  }
  return {};
}

}  // namespace scalelens
