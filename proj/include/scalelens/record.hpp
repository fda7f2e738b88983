#pragma once

// Evaluation records and dataset manifests: the canonical data model every
// analysis consumes, plus JSON / JSON Lines ingestion and serialization.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace scalelens {

inline constexpr const char* kSchemaVersion = "1";

struct DatasetManifest {
  std::string schema_version = kSchemaVersion;
  std::string dataset_id;
  std::size_t n_test = 0;
  std::size_t n_classes = 0;
  std::vector<std::int32_t> true_labels;
  std::optional<std::vector<std::string>> class_names;

  /// Test samples per class, length n_classes.
  std::vector<std::size_t> class_support() const;
  bool is_balanced() const;
};

struct RunRecord {
  std::string schema_version = kSchemaVersion;
  std::string dataset_id;
  std::string arch;
  std::string config_id;
  double width_param = 0.0;
  std::int64_t n_params = 0;
  std::optional<std::int64_t> macs;
  std::int64_t seed = 0;
  std::vector<std::int32_t> pred_labels;
  std::vector<double> confidences;
  std::optional<double> final_train_loss;
  // Retained for format completeness; no analysis consumes it.
  std::optional<std::vector<std::array<std::int32_t, 5>>> top5_pred_labels;
};

/// Per-sample misclassification bitset (bit set = wrong).
class ErrorMask {
public:
  ErrorMask() = default;
  explicit ErrorMask(std::size_t n) : n_(n), words_((n + 63) / 64, 0) {}

  std::size_t size() const { return n_; }
  bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1u; }
  void set(std::size_t i) { words_[i / 64] |= std::uint64_t{1} << (i % 64); }
  std::size_t count() const;
  double error_rate() const;
  std::vector<std::size_t> indices() const;
  const std::vector<std::uint64_t>& words() const { return words_; }

  bool operator==(const ErrorMask&) const = default;

private:
  std::size_t n_ = 0;
  std::vector<std::uint64_t> words_;
};

struct PerClassAccuracy {
  std::vector<double> values;
  std::vector<std::size_t> support;
};

/// Records sharing (arch, config_id), ordered by seed.
struct ConfigGroup {
  std::string arch;
  std::string config_id;
  double width_param = 0.0;
  std::int64_t n_params = 0;
  std::vector<std::size_t> record_indices;
};

struct Corpus {
  DatasetManifest manifest;
  std::vector<RunRecord> records;
  /// Ordered by (arch, n_params, config_id).
  std::vector<ConfigGroup> groups;

  const RunRecord& record(std::size_t i) const { return records.at(i); }
  std::vector<std::string> architectures() const;
};

// Validation ------------------------------------------------------------------

void validate_manifest(const DatasetManifest& manifest);

/// Checks a record against its manifest. Errors name the field and index.
void validate_record(const RunRecord& record, const DatasetManifest& manifest);

/// Validates every record, rejects duplicate (arch, config_id, seed) and
/// inconsistent n_params within a config, then builds the config groups.
Corpus make_corpus(DatasetManifest manifest, std::vector<RunRecord> records);

// JSON -------------------------------------------------------------------------

DatasetManifest manifest_from_json(const nlohmann::json& j);
nlohmann::json manifest_to_json(const DatasetManifest& manifest);
RunRecord record_from_json(const nlohmann::json& j);
nlohmann::json record_to_json(const RunRecord& record);

DatasetManifest load_manifest(const std::filesystem::path& path);

/// Reads a JSON Lines file; parse errors report the line number.
std::vector<RunRecord> load_records(const std::filesystem::path& path);

/// `records_path` may be a .jsonl file or a directory of them (read in
/// lexicographic filename order).
Corpus load_corpus(const std::filesystem::path& manifest_path,
                   const std::filesystem::path& records_path);

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
void write_records(const std::vector<RunRecord>& records, const std::filesystem::path& path);

// Derived quantities -------------------------------------------------------------

ErrorMask error_mask(const RunRecord& record, const DatasetManifest& manifest);

/// Throws ValidationError when a class has zero support.
PerClassAccuracy per_class_accuracy(const RunRecord& record, const DatasetManifest& manifest);

double accuracy(const RunRecord& record, const DatasetManifest& manifest);

}  // namespace scalelens
