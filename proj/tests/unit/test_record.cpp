#include <fstream>

#include "doctest.h"
#include "scalelens/record.hpp"
#include "scalelens/stats.hpp"
#include "scalelens/synth.hpp"
#include "testkit.hpp"

using namespace scalelens;
using testkit::TempDir;

namespace {

DatasetManifest tiny_manifest() { return balanced_manifest("tiny", 6, 3); }

RunRecord tiny_record(const DatasetManifest& m, std::vector<std::int32_t> preds) {
  RunRecord r;
  r.dataset_id = m.dataset_id;
  r.arch = "net";
  r.config_id = "c1";
  r.n_params = 100;
  r.pred_labels = std::move(preds);
  r.confidences.assign(m.n_test, 0.5);
  return r;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("record") {

TEST_CASE("error mask of perfect and hopeless runs") {
  const auto m = tiny_manifest();
  const auto perfect = tiny_record(m, {0, 1, 2, 0, 1, 2});
  const auto mask = error_mask(perfect, m);
  CHECK(mask.count() == 0);
  CHECK(mask.error_rate() == 0.0);
  CHECK(mask.indices().empty());

  const auto wrong = tiny_record(m, {1, 2, 0, 1, 2, 0});
  CHECK(error_mask(wrong, m).error_rate() == 1.0);
  CHECK(accuracy(wrong, m) == 0.0);
}

TEST_CASE("error mask bits follow mismatches") {
  const auto m = tiny_manifest();
  const auto r = tiny_record(m, {0, 0, 2, 1, 1, 2});
  const auto mask = error_mask(r, m);
  CHECK(mask.indices() == std::vector<std::size_t>{1, 3});
  CHECK(mask.error_rate() == doctest::Approx(2.0 / 6.0));
}

TEST_CASE("c=4 seed-mean accuracy maps to its error rate") {
  // 41.71% accuracy on 10000 samples: 5829 errors.
  const auto m = balanced_manifest("cifar100", 10000, 100);
  std::vector<std::uint8_t> correct(10000, 0);
  std::fill_n(correct.begin(), 4171, 1);
  const auto r = record_from_correctness(m, correct, std::vector<double>(10000, 0.4), "ScaleCNN", "c=4", 21936, 0);
  CHECK(error_mask(r, m).error_rate() == doctest::Approx(0.5829).epsilon(1e-12));
}

TEST_CASE("per-class accuracy") {
  const auto m = balanced_manifest("b", 10000, 100);
  SUBCASE("perfect") {
    std::vector<std::int32_t> preds(m.true_labels.begin(), m.true_labels.end());
    const auto pca = per_class_accuracy(tiny_record(m, preds), m);
    for (double v : pca.values) CHECK(v == 1.0);
  }
  SUBCASE("constant class 0") {
    const auto pca = per_class_accuracy(tiny_record(m, std::vector<std::int32_t>(10000, 0)), m);
    CHECK(pca.values[0] == 1.0);
    for (std::size_t c = 1; c < 100; ++c) CHECK(pca.values[c] == 0.0);
    CHECK(pca.support[7] == 100);
  }
}

TEST_CASE("per-class accuracy matches direct counting on an unbalanced manifest") {
  DatasetManifest m;
  m.dataset_id = "u";
  m.n_classes = 4;
  m.true_labels = {0, 0, 0, 1, 2, 2, 3, 3, 3, 3};
  m.n_test = m.true_labels.size();
  const std::vector<std::int32_t> preds{0, 1, 0, 1, 3, 2, 3, 0, 0, 3};
  const auto pca = per_class_accuracy(tiny_record(m, preds), m);
  const auto oracle = testkit::brute_per_class(m.true_labels, preds, 4);
  CHECK(pca.values == oracle);
  CHECK(pca.support == std::vector<std::size_t>{3, 1, 2, 4});
  CHECK_FALSE(m.is_balanced());
}

TEST_CASE("zero-support class is an error") {
  DatasetManifest m;
  m.dataset_id = "z";
  m.n_classes = 3;
  m.true_labels = {0, 1, 0, 1};
  m.n_test = 4;
  CHECK_THROWS_AS(per_class_accuracy(tiny_record(m, {0, 1, 0, 1}), m), ValidationError);
}

TEST_CASE("validation names the field and index") {
  const auto m = tiny_manifest();
  auto r = tiny_record(m, {0, 1, 2, 0, 1, 2});
  r.confidences[3] = 1.2;
  const auto msg = error_of([&] { validate_record(r, m); });
  CHECK(msg.find("confidences[3]") != std::string::npos);

  auto short_r = tiny_record(m, {0, 1, 2, 0, 1});
  short_r.confidences.resize(5);
  CHECK(error_of([&] { validate_record(short_r, m); }).find("length 5") != std::string::npos);

  auto bad_label = tiny_record(m, {0, 1, 2, 0, 1, 3});
  CHECK(error_of([&] { validate_record(bad_label, m); }).find("pred_labels[5]") != std::string::npos);

  auto comma = tiny_record(m, {0, 1, 2, 0, 1, 2});
  comma.config_id = "a,b";
  CHECK_THROWS_AS(validate_record(comma, m), ValidationError);
}

TEST_CASE("9999 predictions against 10000 samples") {
  const auto m = balanced_manifest("d", 10000, 100);
  auto r = tiny_record(m, std::vector<std::int32_t>(9999, 0));
  r.confidences.resize(9999);
  CHECK_THROWS_WITH_AS(validate_record(r, m), doctest::Contains("length 9999"), ValidationError);
}

TEST_CASE("manifest validation") {
  auto m = tiny_manifest();
  m.true_labels[2] = 3;
  CHECK_THROWS_AS(validate_manifest(m), ValidationError);
  m = tiny_manifest();
  m.n_classes = 1;
  CHECK_THROWS_AS(validate_manifest(m), ValidationError);
  m = tiny_manifest();
  m.class_names = std::vector<std::string>{"a", "b"};
  CHECK_THROWS_AS(validate_manifest(m), ValidationError);
  CHECK(tiny_manifest().is_balanced());
}

TEST_CASE("corpus grouping and duplicate keys") {
  const auto m = tiny_manifest();
  std::vector<RunRecord> rs;
  for (int seed : {2, 0, 1}) {
    auto r = tiny_record(m, {0, 1, 2, 0, 1, 2});
    r.seed = seed;
    rs.push_back(r);
  }
  auto big = tiny_record(m, {0, 1, 2, 0, 1, 2});
  big.config_id = "c2";
  big.n_params = 50;
  rs.push_back(big);
  const auto c = make_corpus(m, rs);
  REQUIRE(c.groups.size() == 2);
  CHECK(c.groups[0].config_id == "c2");  // smaller n_params first
  CHECK(c.record(c.groups[1].record_indices[0]).seed == 0);
  CHECK(c.record(c.groups[1].record_indices[2]).seed == 2);

  rs.push_back(rs[0]);
  CHECK_THROWS_WITH_AS(make_corpus(m, rs), doctest::Contains("duplicate run key"), ValidationError);

  rs.pop_back();
  rs[1].n_params = 101;
  CHECK_THROWS_AS(make_corpus(m, rs), ValidationError);
  CHECK_THROWS_AS(make_corpus(m, {}), ValidationError);
}

TEST_CASE("JSON key sets are exact") {
  const auto m = tiny_manifest();
  auto j = record_to_json(tiny_record(m, {0, 1, 2, 0, 1, 2}));
  CHECK_NOTHROW(record_from_json(j));
  auto extra = j;
  extra["logits"] = 1;
  CHECK_THROWS_WITH_AS(record_from_json(extra), doctest::Contains("unknown key 'logits'"), ValidationError);
  auto missing = j;
  missing.erase("seed");
  CHECK_THROWS_WITH_AS(record_from_json(missing), doctest::Contains("missing key 'seed'"), ValidationError);
  auto typed = j;
  typed["n_params"] = 1.5;
  CHECK_THROWS_AS(record_from_json(typed), ValidationError);
  auto mj = manifest_to_json(m);
  CHECK(mj.contains("schema_version"));
  CHECK_FALSE(mj.contains("class_names"));
  mj["extra"] = true;
  CHECK_THROWS_AS(manifest_from_json(mj), ValidationError);
}

TEST_CASE("loading reports the offending line") {
  TempDir dir;
  const auto m = tiny_manifest();
  write_manifest(m, dir / "manifest.json");
  auto r = tiny_record(m, {0, 1, 2, 0, 1, 2});
  {
    std::ofstream out(dir / "records.jsonl");
    out << record_to_json(r).dump() << "\n";
    out << "{not json\n";
  }
  CHECK_THROWS_WITH_AS(load_corpus(dir / "manifest.json", dir / "records.jsonl"),
                       doctest::Contains("records.jsonl:2"), ValidationError);

  { std::ofstream out(dir / "empty.jsonl"); }
  CHECK_THROWS_AS(load_corpus(dir / "manifest.json", dir / "empty.jsonl"), ValidationError);
  CHECK_THROWS_AS(load_corpus(dir / "missing.json", dir / "empty.jsonl"), ValidationError);
}

TEST_CASE("records directory is read in filename order") {
  TempDir dir;
  const auto m = tiny_manifest();
  write_manifest(m, dir / "manifest.json");
  std::filesystem::create_directories(dir / "runs");
  auto a = tiny_record(m, {0, 1, 2, 0, 1, 2});
  auto b = a;
  b.seed = 1;
  write_records({b}, dir / "runs" / "b.jsonl");
  write_records({a}, dir / "runs" / "a.jsonl");
  const auto c = load_corpus(dir / "manifest.json", dir / "runs");
  REQUIRE(c.records.size() == 2);
  CHECK(c.records[0].seed == 0);
}

TEST_CASE("optional fields survive a round trip") {
  const auto m = tiny_manifest();
  auto r = tiny_record(m, {0, 1, 2, 0, 1, 2});
  r.macs = 12345;
  r.final_train_loss = 0.123456789012345;
  r.top5_pred_labels = std::vector<std::array<std::int32_t, 5>>(6, {0, 1, 2, 0, 1});
  r.confidences[0] = 0.1 + 0.2;
  const auto back = record_from_json(nlohmann::json::parse(record_to_json(r).dump()));
  CHECK(back.macs == r.macs);
  CHECK(back.final_train_loss == r.final_train_loss);
  CHECK(back.top5_pred_labels == r.top5_pred_labels);
  CHECK(back.confidences == r.confidences);
}

}  // TEST_SUITE
