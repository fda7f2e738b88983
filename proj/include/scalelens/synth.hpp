#pragma once

// Seeded synthetic-data generators with planted parameters. Each one is the
// oracle for an analysis: the analysis must recover what was planted.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "scalelens/record.hpp"
#include "scalelens/scaling.hpp"

namespace scalelens {

enum class SynthKind {
  power_law_curve,
  overlap_masks,
  calibration_profile,
  planted_spectrum,
  binomial_classes,
  corpus,
};

std::string_view to_string(SynthKind kind);
SynthKind synth_kind_from_string(std::string_view name);

struct SynthSpec {
  SynthKind kind = SynthKind::corpus;
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 0;
};

SynthSpec synth_spec_from_json(const nlohmann::json& j);

/// metric = exp(intercept) * N^-alpha * exp(eps), eps ~ Normal(0, sigma^2)
/// per point. Seeds are 0..n_seeds-1; config ids are "n<size>".
std::vector<ScalingPoint> gen_power_law_runs(double alpha, double intercept, double noise_sigma,
                                             const std::vector<std::int64_t>& sizes, std::size_t n_seeds,
                                             std::uint64_t seed);

/// |A| = round(e_a n), |B| = round(e_b n), |A ∩ B| = round(J (|A| + |B|) / (1 + J)),
/// clamped to |B| when J is the containment bound. Membership is a seeded
/// random permutation. Throws AnalysisError when the sizes are infeasible.
std::pair<ErrorMask, ErrorMask> gen_overlap_masks(std::size_t n_test, double e_a, double e_b,
                                                  double target_jaccard, std::uint64_t seed);

struct CalibrationSample {
  std::vector<std::uint8_t> correct;
  std::vector<double> confidences;
  std::vector<std::size_t> bin_counts;
  /// sum_b w_b |acc_b - conf_b| using the realized bin counts as weights.
  double expected_ece = 0.0;
};

/// Bin sizes use largest-remainder rounding of weights * n_test. Every
/// sample in bin b has confidence conf_b and is correct with probability
/// acc_b.
CalibrationSample gen_calibration_profile(std::size_t n_test, const std::vector<double>& bin_accuracies,
                                          const std::vector<double>& bin_confidences,
                                          const std::vector<double>& bin_weights, std::uint64_t seed);

/// Rows drawn from N(0, diag(k^-beta)), k = 1..n_features.
Eigen::MatrixXd gen_planted_spectrum(double beta, std::size_t n_features, std::size_t n_samples,
                                     std::uint64_t seed);

/// Per-class correct counts drawn from Binomial(n_per_class, p).
std::vector<double> gen_binomial_classes(double p, std::size_t n_classes, std::size_t n_per_class,
                                         std::uint64_t seed);

/// Balanced manifest: sample i belongs to class i mod n_classes.
DatasetManifest balanced_manifest(std::string dataset_id, std::size_t n_test, std::size_t n_classes);

/// A record whose correctness follows `correct`; wrong predictions name the
/// next class.
RunRecord record_from_correctness(const DatasetManifest& manifest, const std::vector<std::uint8_t>& correct,
                                  const std::vector<double>& confidences, std::string arch,
                                  std::string config_id, std::int64_t n_params, std::int64_t seed);

struct SynthFamily {
  std::string arch;
  std::vector<std::int64_t> sizes;
  double alpha = 0.15;
  double intercept = 0.8;
  double noise_sigma = 0.01;
  double train_loss_alpha = 0.5;
  double train_loss_intercept = 4.0;
  double overconfidence = 0.0;
};

struct CorpusSpec {
  std::string dataset_id = "synthetic";
  std::size_t n_test = 10000;
  std::size_t n_classes = 100;
  std::size_t n_seeds = 5;
  /// Weight of the shared per-sample difficulty in each run's error score.
  double difficulty_weight = 0.8;
  /// Spread of per-class difficulty offsets.
  double class_spread = 0.5;
  std::vector<SynthFamily> families;
  std::uint64_t seed = 0;
};

CorpusSpec corpus_spec_from_json(const nlohmann::json& params, std::uint64_t seed);

/// Error counts are exact: each run misclassifies round(e n) samples where
/// e is its planted error rate.
Corpus gen_corpus(const CorpusSpec& spec);

/// Writes the generator output in the standard formats and returns the
/// files written.
std::vector<std::filesystem::path> write_synth(const SynthSpec& spec, const std::filesystem::path& out_dir);

}  // namespace scalelens
