#include "scalelens/record.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <fmt/format.h>

#include "scalelens/stats.hpp"

namespace scalelens {

namespace fs = std::filesystem;
using nlohmann::json;

// ErrorMask -----------------------------------------------------------------------

std::size_t ErrorMask::count() const {
  std::size_t c = 0;
  for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

double ErrorMask::error_rate() const {
  if (n_ == 0) return 0.0;
  return static_cast<double>(count()) / static_cast<double>(n_);
}

std::vector<std::size_t> ErrorMask::indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n_; ++i)
    if (test(i)) out.push_back(i);
  return out;
}

// Manifest ------------------------------------------------------------------------

std::vector<std::size_t> DatasetManifest::class_support() const {
  std::vector<std::size_t> support(n_classes, 0);
  for (auto label : true_labels)
    if (label >= 0 && static_cast<std::size_t>(label) < n_classes) ++support[label];
  return support;
}

bool DatasetManifest::is_balanced() const {
  const auto support = class_support();
  return std::adjacent_find(support.begin(), support.end(), std::not_equal_to<>()) == support.end();
}

std::vector<std::string> Corpus::architectures() const {
  std::vector<std::string> out;
  for (const auto& g : groups)
    if (std::find(out.begin(), out.end(), g.arch) == out.end()) out.push_back(g.arch);
  return out;
}

void validate_manifest(const DatasetManifest& m) {
  if (m.schema_version != kSchemaVersion)
    throw ValidationError(fmt::format("manifest: unsupported schema_version '{}'", m.schema_version));
  if (m.n_test == 0) throw ValidationError("manifest: n_test must be > 0");
  if (m.n_classes < 2) throw ValidationError("manifest: n_classes must be > 1");
  if (m.true_labels.size() != m.n_test)
    throw ValidationError(fmt::format("manifest: true_labels has length {} but n_test = {}",
                                      m.true_labels.size(), m.n_test));
  for (std::size_t i = 0; i < m.true_labels.size(); ++i) {
    const auto label = m.true_labels[i];
    if (label < 0 || static_cast<std::size_t>(label) >= m.n_classes)
      throw ValidationError(fmt::format("manifest: true_labels[{}] = {} outside [0, {})", i, label,
                                        m.n_classes));
  }
  if (m.class_names && m.class_names->size() != m.n_classes)
    throw ValidationError(fmt::format("manifest: class_names has length {} but n_classes = {}",
                                      m.class_names->size(), m.n_classes));
}

void validate_record(const RunRecord& r, const DatasetManifest& m) {
  const auto who = fmt::format("record ({}, {}, seed {})", r.arch, r.config_id, r.seed);
  if (r.schema_version != kSchemaVersion)
    throw ValidationError(fmt::format("{}: unsupported schema_version '{}'", who, r.schema_version));
  if (r.dataset_id != m.dataset_id)
    throw ValidationError(fmt::format("{}: dataset_id '{}' does not match manifest '{}'", who,
                                      r.dataset_id, m.dataset_id));
  if (r.arch.empty() || r.config_id.empty())
    throw ValidationError(fmt::format("{}: arch and config_id must be nonempty", who));
  for (const auto* id : {&r.arch, &r.config_id})
    if (id->find_first_of(",\n\r\"") != std::string::npos)
      throw ValidationError(fmt::format("{}: identifiers may not contain commas, quotes or newlines", who));
  if (r.n_params <= 0) throw ValidationError(fmt::format("{}: n_params must be positive", who));
  if (r.macs && *r.macs <= 0) throw ValidationError(fmt::format("{}: macs must be positive", who));
  if (r.pred_labels.size() != m.n_test)
    throw ValidationError(fmt::format("{}: pred_labels has length {} but manifest n_test = {}", who,
                                      r.pred_labels.size(), m.n_test));
  if (r.confidences.size() != m.n_test)
    throw ValidationError(fmt::format("{}: confidences has length {} but manifest n_test = {}", who,
                                      r.confidences.size(), m.n_test));
  for (std::size_t i = 0; i < m.n_test; ++i) {
    const auto label = r.pred_labels[i];
    if (label < 0 || static_cast<std::size_t>(label) >= m.n_classes)
      throw ValidationError(fmt::format("{}: pred_labels[{}] = {} outside [0, {})", who, i, label,
                                        m.n_classes));
    const double c = r.confidences[i];
    if (!(c >= 0.0 && c <= 1.0))
      throw ValidationError(fmt::format("{}: confidences[{}] = {} outside [0, 1]", who, i, c));
  }
  if (r.final_train_loss && !(*r.final_train_loss >= 0.0))
    throw ValidationError(fmt::format("{}: final_train_loss must be nonnegative", who));
  if (r.top5_pred_labels) {
    if (r.top5_pred_labels->size() != m.n_test)
      throw ValidationError(fmt::format("{}: top5_pred_labels has length {} but manifest n_test = {}",
                                        who, r.top5_pred_labels->size(), m.n_test));
    for (std::size_t i = 0; i < m.n_test; ++i)
      for (auto label : (*r.top5_pred_labels)[i])
        if (label < 0 || static_cast<std::size_t>(label) >= m.n_classes)
          throw ValidationError(fmt::format("{}: top5_pred_labels[{}] contains {} outside [0, {})",
                                            who, i, label, m.n_classes));
  }
}

Corpus make_corpus(DatasetManifest manifest, std::vector<RunRecord> records) {
  validate_manifest(manifest);
  if (records.empty()) throw ValidationError("corpus contains no records");

  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> by_config;
  std::set<std::tuple<std::string, std::string, std::int64_t>> keys;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    validate_record(r, manifest);
    if (!keys.emplace(r.arch, r.config_id, r.seed).second)
      throw ValidationError(fmt::format("duplicate run key (arch={}, config_id={}, seed={})", r.arch,
                                        r.config_id, r.seed));
    by_config[{r.arch, r.config_id}].push_back(i);
  }

  Corpus corpus{std::move(manifest), std::move(records), {}};
  for (auto& [key, idx] : by_config) {
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return corpus.records[a].seed < corpus.records[b].seed;
    });
    const auto& first = corpus.records[idx.front()];
    for (auto i : idx)
      if (corpus.records[i].n_params != first.n_params)
        throw ValidationError(fmt::format("config ({}, {}) has inconsistent n_params across seeds",
                                          key.first, key.second));
    corpus.groups.push_back({key.first, key.second, first.width_param, first.n_params, idx});
  }
  std::sort(corpus.groups.begin(), corpus.groups.end(), [](const ConfigGroup& a, const ConfigGroup& b) {
    return std::tie(a.arch, a.n_params, a.config_id) < std::tie(b.arch, b.n_params, b.config_id);
  });
  return corpus;
}

// JSON ------------------------------------------------------------------------------

namespace {

void check_keys(const json& j, std::initializer_list<const char*> required,
                std::initializer_list<const char*> optional, const char* what) {
  if (!j.is_object()) throw ValidationError(fmt::format("{}: expected a JSON object", what));
  for (const char* k : required)
    if (!j.contains(k)) throw ValidationError(fmt::format("{}: missing key '{}'", what, k));
  for (const auto& item : j.items()) {
    const auto& k = item.key();
    const auto match = [&](const char* s) { return k == s; };
    if (std::none_of(required.begin(), required.end(), match) &&
        std::none_of(optional.begin(), optional.end(), match))
      throw ValidationError(fmt::format("{}: unknown key '{}'", what, k));
  }
}

std::string get_string(const json& j, const char* key, const char* what) {
  const auto& v = j.at(key);
  if (!v.is_string()) throw ValidationError(fmt::format("{}: '{}' must be a string", what, key));
  return v.get<std::string>();
}

std::int64_t get_int(const json& v, const char* key, const char* what) {
  if (!v.is_number_integer())
    throw ValidationError(fmt::format("{}: '{}' must be an integer", what, key));
  return v.get<std::int64_t>();
}

double get_real(const json& v, const char* key, const char* what) {
  if (!v.is_number()) throw ValidationError(fmt::format("{}: '{}' must be a number", what, key));
  return v.get<double>();
}

std::vector<std::int32_t> get_int_array(const json& j, const char* key, const char* what) {
  const auto& arr = j.at(key);
  if (!arr.is_array()) throw ValidationError(fmt::format("{}: '{}' must be an array", what, key));
  std::vector<std::int32_t> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number_integer())
      throw ValidationError(fmt::format("{}: {}[{}] must be an integer", what, key, i));
    out.push_back(arr[i].get<std::int32_t>());
  }
  return out;
}

}  // namespace

DatasetManifest manifest_from_json(const json& j) {
  constexpr const char* what = "manifest";
  check_keys(j, {"schema_version", "dataset_id", "n_test", "n_classes", "true_labels"},
             {"class_names"}, what);
  DatasetManifest m;
  m.schema_version = get_string(j, "schema_version", what);
  m.dataset_id = get_string(j, "dataset_id", what);
  const auto n_test = get_int(j.at("n_test"), "n_test", what);
  const auto n_classes = get_int(j.at("n_classes"), "n_classes", what);
  if (n_test <= 0) throw ValidationError("manifest: n_test must be > 0");
  if (n_classes <= 1) throw ValidationError("manifest: n_classes must be > 1");
  m.n_test = static_cast<std::size_t>(n_test);
  m.n_classes = static_cast<std::size_t>(n_classes);
  m.true_labels = get_int_array(j, "true_labels", what);
  if (j.contains("class_names")) {
    const auto& names = j.at("class_names");
    if (!names.is_array()) throw ValidationError("manifest: 'class_names' must be an array");
    std::vector<std::string> out;
    for (const auto& n : names) {
      if (!n.is_string()) throw ValidationError("manifest: class_names entries must be strings");
      out.push_back(n.get<std::string>());
    }
    m.class_names = std::move(out);
  }
  validate_manifest(m);
  return m;
}

json manifest_to_json(const DatasetManifest& m) {
  json j = {{"schema_version", m.schema_version},
            {"dataset_id", m.dataset_id},
            {"n_test", m.n_test},
            {"n_classes", m.n_classes},
            {"true_labels", m.true_labels}};
  if (m.class_names) j["class_names"] = *m.class_names;
  return j;
}

RunRecord record_from_json(const json& j) {
  constexpr const char* what = "record";
  check_keys(j,
             {"schema_version", "dataset_id", "arch", "config_id", "width_param", "n_params", "seed",
              "pred_labels", "confidences"},
             {"macs", "final_train_loss", "top5_pred_labels"}, what);
  RunRecord r;
  r.schema_version = get_string(j, "schema_version", what);
  r.dataset_id = get_string(j, "dataset_id", what);
  r.arch = get_string(j, "arch", what);
  r.config_id = get_string(j, "config_id", what);
  r.width_param = get_real(j.at("width_param"), "width_param", what);
  r.n_params = get_int(j.at("n_params"), "n_params", what);
  if (j.contains("macs")) r.macs = get_int(j.at("macs"), "macs", what);
  r.seed = get_int(j.at("seed"), "seed", what);
  r.pred_labels = get_int_array(j, "pred_labels", what);

  const auto& conf = j.at("confidences");
  if (!conf.is_array()) throw ValidationError("record: 'confidences' must be an array");
  r.confidences.reserve(conf.size());
  for (std::size_t i = 0; i < conf.size(); ++i) {
    if (!conf[i].is_number())
      throw ValidationError(fmt::format("record: confidences[{}] must be a number", i));
    r.confidences.push_back(conf[i].get<double>());
  }
  if (j.contains("final_train_loss"))
    r.final_train_loss = get_real(j.at("final_train_loss"), "final_train_loss", what);
  if (j.contains("top5_pred_labels")) {
    const auto& arr = j.at("top5_pred_labels");
    if (!arr.is_array()) throw ValidationError("record: 'top5_pred_labels' must be an array");
    std::vector<std::array<std::int32_t, 5>> top5;
    top5.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const auto& row = arr[i];
      if (!row.is_array() || row.size() != 5)
        throw ValidationError(fmt::format("record: top5_pred_labels[{}] must be an array of 5 ints", i));
      std::array<std::int32_t, 5> t{};
      for (std::size_t k = 0; k < 5; ++k) {
        if (!row[k].is_number_integer())
          throw ValidationError(fmt::format("record: top5_pred_labels[{}][{}] must be an integer", i, k));
        t[k] = row[k].get<std::int32_t>();
      }
      top5.push_back(t);
    }
    r.top5_pred_labels = std::move(top5);
  }
  return r;
}

json record_to_json(const RunRecord& r) {
  json j = {{"schema_version", r.schema_version},
            {"dataset_id", r.dataset_id},
            {"arch", r.arch},
            {"config_id", r.config_id},
            {"width_param", r.width_param},
            {"n_params", r.n_params},
            {"seed", r.seed},
            {"pred_labels", r.pred_labels},
            {"confidences", r.confidences}};
  if (r.macs) j["macs"] = *r.macs;
  if (r.final_train_loss) j["final_train_loss"] = *r.final_train_loss;
  if (r.top5_pred_labels) j["top5_pred_labels"] = *r.top5_pred_labels;
  return j;
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("cannot open manifest '{}'", path.string()));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(fmt::format("{}: JSON parse error: {}", path.string(), e.what()));
  }
  return manifest_from_json(j);
}

std::vector<RunRecord> load_records(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("cannot open records '{}'", path.string()));
  std::vector<RunRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ValidationError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  return out;
}

Corpus load_corpus(const fs::path& manifest_path, const fs::path& records_path) {
  auto manifest = load_manifest(manifest_path);
  std::vector<RunRecord> records;
  if (fs::is_directory(records_path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(records_path))
      if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      auto part = load_records(f);
      std::move(part.begin(), part.end(), std::back_inserter(records));
    }
  } else {
    if (!fs::exists(records_path))
      throw ValidationError(fmt::format("records path '{}' does not exist", records_path.string()));
    records = load_records(records_path);
  }
  return make_corpus(std::move(manifest), std::move(records));
}

void write_manifest(const DatasetManifest& manifest, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError(fmt::format("cannot write '{}'", path.string()));
  out << manifest_to_json(manifest).dump() << '\n';
}

void write_records(const std::vector<RunRecord>& records, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError(fmt::format("cannot write '{}'", path.string()));
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

// Derived ---------------------------------------------------------------------------

ErrorMask error_mask(const RunRecord& record, const DatasetManifest& manifest) {
  if (record.pred_labels.size() != manifest.n_test)
    throw ValidationError("error_mask: record length does not match manifest");
  ErrorMask mask(manifest.n_test);
  for (std::size_t i = 0; i < manifest.n_test; ++i)
    if (record.pred_labels[i] != manifest.true_labels[i]) mask.set(i);
  return mask;
}

PerClassAccuracy per_class_accuracy(const RunRecord& record, const DatasetManifest& manifest) {
  if (record.pred_labels.size() != manifest.n_test)
    throw ValidationError("per_class_accuracy: record length does not match manifest");
  PerClassAccuracy out;
  out.support = manifest.class_support();
  std::vector<std::size_t> correct(manifest.n_classes, 0);
  for (std::size_t i = 0; i < manifest.n_test; ++i)
    if (record.pred_labels[i] == manifest.true_labels[i]) ++correct[manifest.true_labels[i]];
  out.values.resize(manifest.n_classes);
  for (std::size_t c = 0; c < manifest.n_classes; ++c) {
    if (out.support[c] == 0)
      throw ValidationError(fmt::format("per_class_accuracy: class {} has zero support", c));
    out.values[c] = static_cast<double>(correct[c]) / static_cast<double>(out.support[c]);
  }
  return out;
}

double accuracy(const RunRecord& record, const DatasetManifest& manifest) {
  return 1.0 - error_mask(record, manifest).error_rate();
}

}  // namespace scalelens
