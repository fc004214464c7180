#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "core/eval.hpp"
#include "core/synth.hpp"

using namespace rockid;

namespace {

std::filesystem::path fixture_path() {
  return std::filesystem::path(ROCKID_DATA_DIR) / "golden_cases.json";
}

}  // namespace

TEST_CASE("kfold_split: partition arithmetic and determinism") {
  std::vector<int> labels(10, 0);
  auto folds = kfold_split(labels, 1, 5, 3);
  REQUIRE(folds.size() == 5);
  std::vector<int> seen(10, 0);
  for (const auto& f : folds) {
    CHECK(f.test.size() == 2);
    CHECK(f.train.size() == 8);
    for (size_t i : f.test) seen[i] += 1;
  }
  for (int c : seen) CHECK(c == 1);  // each index in exactly one test fold

  auto again = kfold_split(labels, 1, 5, 3);
  for (size_t f = 0; f < folds.size(); ++f) CHECK(folds[f].test == again[f].test);

  std::vector<int> small = {0, 0, 0, 1, 1, 1, 1, 1};
  CHECK_THROWS_AS(kfold_split(small, 2, 5, 1), Error);  // class 0 has 3 < 5
}

TEST_CASE("kfold_split: stratified across classes") {
  std::vector<int> labels;
  for (int i = 0; i < 20; ++i) labels.push_back(0);
  for (int i = 0; i < 10; ++i) labels.push_back(1);
  auto folds = kfold_split(labels, 2, 5, 9);
  for (const auto& f : folds) {
    int c0 = 0, c1 = 0;
    for (size_t i : f.test) (labels[i] == 0 ? c0 : c1)++;
    CHECK(c0 == 4);
    CHECK(c1 == 2);
  }
}

TEST_CASE("confusion: diagonal, dedicated other column, mismatch error") {
  std::vector<std::string> names = {"granite", "sandstone"};

  auto perfect = confusion({"granite", "sandstone", "granite"},
                           {"granite", "sandstone", "granite"}, names);
  CHECK(perfect.class_names == names);  // no "other" needed
  CHECK(perfect.at(0, 0) == 2);
  CHECK(perfect.at(1, 1) == 1);
  CHECK(perfect.at(0, 1) == 0);
  CHECK(perfect.total() == 3);

  auto rejected = confusion({"granite", "granite", "sandstone"},
                            {"other", "other", "other"}, names);
  REQUIRE(rejected.class_names.size() == 3);
  CHECK(rejected.class_names.back() == "other");
  CHECK(rejected.at(0, 2) == 2);
  CHECK(rejected.at(1, 2) == 1);

  CHECK_THROWS_AS(confusion({"granite"}, {}, names), Error);
}

TEST_CASE("metrics: precision/recall/f1 arithmetic on reference counts") {
  // granite: TP=5, FP=10, FN=0 -> precision 33.3%, recall 100%
  auto g = metrics_from_counts(5, 10, 0);
  REQUIRE(g.precision);
  REQUIRE(g.recall);
  CHECK(*g.precision == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(*g.recall == 1.0);

  // limestone: P=0.667, R=0.571 -> F1 0.62 (two decimals)
  auto f1 = [](double p, double r) { return 2 * p * r / (p + r); };
  CHECK(f1(0.667, 0.571) == doctest::Approx(0.615).epsilon(0.001));
  CHECK(std::round(f1(0.667, 0.571) * 100) / 100 == 0.62);

  // sandstone: P=0.571, R=0.364 -> F1 0.44
  CHECK(std::round(f1(0.571, 0.364) * 100) / 100 == 0.44);
}

TEST_CASE("metrics: from a matrix; undefined precision marker") {
  ConfusionMatrix cm;
  cm.class_names = {"a", "b", "c"};
  // row-major, rows = true: "c" never predicted
  cm.counts = {5, 1, 0,
               2, 4, 0,
               0, 1, 0};
  auto rep = metrics(cm);
  CHECK(rep.accuracy == doctest::Approx(9.0 / 13));
  CHECK(rep.per_class.at("a").precision.has_value());
  CHECK_FALSE(rep.per_class.at("c").precision.has_value());  // no predictions
  CHECK(rep.per_class.at("c").recall.has_value());
  CHECK(*rep.per_class.at("c").recall == 0.0);

  // report text prints the undefined marker, not 0
  CHECK(rep.to_text().find("n/a") != std::string::npos);

  // recomputing from the stored matrix matches exactly
  auto rep2 = metrics(cm);
  CHECK(rep2.to_json() == rep.to_json());
}

TEST_CASE("metrics: permuted class ordering yields identical per-class values") {
  ConfusionMatrix cm;
  cm.class_names = {"a", "b", "c"};
  cm.counts = {7, 2, 1,
               1, 5, 0,
               3, 0, 9};
  ConfusionMatrix perm;
  perm.class_names = {"c", "a", "b"};
  // permutation pi maps new index -> old index: c=2, a=0, b=1
  std::vector<size_t> pi = {2, 0, 1};
  perm.counts.resize(9);
  for (size_t i = 0; i < 3; ++i)
    for (size_t j = 0; j < 3; ++j) perm.counts[i * 3 + j] = cm.counts[pi[i] * 3 + pi[j]];

  auto m1 = metrics(cm);
  auto m2 = metrics(perm);
  CHECK(m1.accuracy == m2.accuracy);
  for (const auto& name : cm.class_names) {
    CHECK(m1.per_class.at(name).precision == m2.per_class.at(name).precision);
    CHECK(m1.per_class.at(name).recall == m2.per_class.at(name).recall);
    CHECK(m1.per_class.at(name).f1 == m2.per_class.at(name).f1);
  }
}

TEST_CASE("golden fixture: loads, checksum guards tampering") {
  auto cases = load_golden_fixture(fixture_path());
  REQUIRE(cases.size() == 30);
  for (const auto& c : cases) CHECK(c.labels.size() == 10);

  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_golden_fixture("/nonexistent/golden.json"), Error);
  }

  SUBCASE("tampered fixture fails the checksum") {
    std::ifstream in(fixture_path());
    nlohmann::json j;
    in >> j;
    j["cases"][0]["oracle_expected"] = "Limestone";
    auto dir = std::filesystem::temp_directory_path() / "rockid_golden";
    std::filesystem::create_directories(dir);
    auto bad = dir / "tampered.json";
    std::ofstream os(bad);
    os << j.dump();
    os.close();
    try {
      load_golden_fixture(bad);
      FAIL("expected FixtureError");
    } catch (const Error& e) {
      CHECK(e.status() == Status::FixtureError);
      CHECK(std::string(e.what()).find("checksum") != std::string::npos);
    }
  }
}

TEST_CASE("golden suite: all 30 oracle matches, known expert agreement") {
  auto kb = default_knowledge_base();
  auto cases = load_golden_fixture(fixture_path());
  auto rep = run_golden_suite(kb, cases);
  CHECK(rep.oracle_matches == 30);
  CHECK(rep.expert_agreements == 15);

  // the indicator-mineral rejection cases all classify as rejection
  const std::vector<int> rejection_ids = {3, 5, 8, 9, 10, 13, 17, 19, 22, 24, 28};
  for (int id : rejection_ids) {
    const auto& cr = rep.cases[static_cast<size_t>(id - 1)];
    CHECK(cr.id == id);
    CHECK(cr.classified == "other");
    CHECK(cr.expert_agreement);
  }

  // deterministic: a second run produces the identical report
  auto rep2 = run_golden_suite(kb, cases);
  CHECK(rep.to_json() == rep2.to_json());

  // rock-level view derived from the frozen fixture: expert intent has
  // 5 granite, 7 sandstone, 7 limestone, 11 rejection cases; the scoring
  // recovers 4 of 7 limestones and rejects everything else except two
  // granite-scored cases.
  CHECK(rep.rock_confusion.total() == 30);
  const auto& lm = rep.rock_metrics.per_class.at("limestone");
  REQUIRE(lm.recall.has_value());
  CHECK(*lm.recall == doctest::Approx(4.0 / 7).epsilon(1e-12));
  REQUIRE(lm.precision.has_value());
  CHECK(*lm.precision == 1.0);
}

TEST_CASE("cross_validate: fold accounting, determinism, separable corpus") {
  GridSpec grid{150, 1500, 64};
  std::vector<SyntheticMineralSpec> specs = {
      {"Left", {{400, 30, 1.0}}},
      {"Right", {{1100, 30, 1.0}}},
      {"Mid", {{700, 25, 1.0}}},
  };
  auto ds = make_synthetic_corpus(specs, 15, grid, 0.01, 4);

  nn::ModelSpec spec;
  spec.kind = nn::ModelKind::Cnn;
  spec.cnn.conv_channels = {4, 6};
  spec.cnn.kernel_size = 3;
  spec.cnn.hidden_units = 16;
  nn::TrainConfig cfg;
  cfg.learning_rate = 0.01;  // tiny model, few batches: take bigger steps
  cfg.max_epochs = 30;
  cfg.patience = 8;
  cfg.batch_size = 16;

  auto rep = cross_validate(ds, spec, cfg, 5, 21);
  REQUIRE(rep.folds.size() == 5);
  CHECK(rep.mean_accuracy >= 0.95);
  CHECK(rep.std_error >= 0.0);

  auto rep2 = cross_validate(ds, spec, cfg, 5, 21, /*max_workers=*/1);
  for (size_t f = 0; f < rep.folds.size(); ++f)
    CHECK(rep.folds[f].accuracy == rep2.folds[f].accuracy);  // schedule-independent
}
