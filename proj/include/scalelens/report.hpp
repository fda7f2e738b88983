#pragma once

// Corpus-level analyses assembled into plot-ready tables and a single
// diff-stable report.json.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "scalelens/calibration.hpp"
#include "scalelens/fairness.hpp"
#include "scalelens/overlap.hpp"
#include "scalelens/record.hpp"
#include "scalelens/scaling.hpp"
#include "scalelens/spectral.hpp"

namespace scalelens {

inline constexpr const char* kToolVersion = "0.1.0";

struct ReportOptions {
  std::size_t n_bins = 15;
  std::size_t bootstrap_resamples = 10000;
  std::size_t null_trials = 10000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  RankingMode ranking = RankingMode::per_seed;
  SaturationThresholds saturation;
  std::vector<std::size_t> ks{5, 10, 20};
};

/// Round to 9 significant digits so serialized output is stable.
double round9(double x);

/// Applies round9 to every floating-point number in `j`.
nlohmann::json rounded(const nlohmann::json& j);

/// SHA-256 over the canonical serialization of manifest and records.
std::string corpus_fingerprint(const Corpus& corpus);

nlohmann::json conventions_json(const ReportOptions& options);

nlohmann::json to_json(const ScalingFit& fit);
nlohmann::json to_json(const ExponentComparison& cmp);
nlohmann::json to_json(const LocalExponent& le, SaturationLabel label);
nlohmann::json to_json(const OverlapSummary& s);
nlohmann::json to_json(const FairnessSummary& s);
nlohmann::json to_json(const CalibrationSummary& s);
nlohmann::json to_json(const SpectralFit& fit);

// Table rows --------------------------------------------------------------------

struct ConfigRow {
  std::string arch;
  std::string config_id;
  std::int64_t n_params = 0;
  std::optional<std::int64_t> macs;
  std::size_t n_seeds = 0;
  double acc_mean = 0.0;  // percent
  std::optional<double> acc_std;
  double err_mean = 0.0;  // fraction
  double ece_mean = 0.0;
  std::optional<double> ece_std;
};

std::vector<ConfigRow> config_table(const Corpus& corpus, const ReportOptions& options);

struct ArchFits {
  std::string arch;
  ScalingFit error_fit;
  std::optional<ScalingFit> train_loss_fit;
  std::vector<LocalExponent> locals;
  std::vector<SaturationLabel> labels;
};

std::vector<ArchFits> scaling_analysis(const Corpus& corpus, const ReportOptions& options);

struct JaccardMatrix {
  std::vector<std::string> configs;       // "arch/config_id", group order
  std::vector<std::vector<double>> mean;  // diagonal: cross-seed baseline (1 for a single seed)
  std::vector<OverlapSummary> pairs;      // upper triangle, then baselines
};

JaccardMatrix jaccard_analysis(const Corpus& corpus, const ReportOptions& options);

struct CalibrationRow {
  std::string arch;
  std::string config_id;
  std::int64_t n_params = 0;
  std::vector<CalibrationSummary> per_seed;
  double ece_mean = 0.0;
  std::optional<double> ece_std;
  double global_conf = 0.0;  // seed means
  double global_acc = 0.0;
  double global_gap = 0.0;
  std::optional<double> mean_conf_correct;
  std::optional<double> mean_conf_incorrect;
  /// Bin statistics pooled over seeds.
  std::vector<BinStat> pooled_bins;
};

std::vector<CalibrationRow> calibration_analysis(const Corpus& corpus, const ReportOptions& options);

std::vector<FairnessSummary> fairness_analysis(const Corpus& corpus, const ReportOptions& options);

// CSV ------------------------------------------------------------------------------

std::string format_number(double x);
std::string scaling_csv(const std::vector<ConfigRow>& rows);
std::string fits_csv(const std::vector<ArchFits>& fits);
std::string local_exponents_csv(const std::vector<ArchFits>& fits);
std::string jaccard_matrix_csv(const JaccardMatrix& m);
std::string fairness_csv(const std::vector<FairnessSummary>& rows);
std::string calibration_csv(const std::vector<CalibrationRow>& rows);
std::string reliability_csv(const std::vector<CalibrationRow>& rows);

nlohmann::json fits_json(const std::vector<ArchFits>& fits);
nlohmann::json jaccard_json(const JaccardMatrix& m);

/// Runs every corpus analysis, writes scaling.csv, local_exponents.csv,
/// jaccard_matrix.csv, fairness.csv, calibration.csv and report.json into
/// out_dir, and returns the report document.
nlohmann::json run_report(const Corpus& corpus, const ReportOptions& options, const std::filesystem::path& out_dir,
                          const std::optional<EigenSpectrum>& spectrum = std::nullopt);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace scalelens
