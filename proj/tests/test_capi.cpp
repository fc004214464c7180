#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rockid.h"

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  rockid_string_free(s);
  return out;
}

std::filesystem::path work_dir() {
  auto dir = std::filesystem::temp_directory_path() / "rockid_capi";
  std::filesystem::create_directories(dir);
  return dir;
}

rockid_grid small_grid() { return {150.0, 1500.0, 64}; }

rockid_cnn_config small_cnn() {
  rockid_cnn_config c = rockid_cnn_config_default();
  c.conv1_channels = 4;
  c.conv2_channels = 6;
  c.kernel_size = 3;
  c.hidden_units = 16;
  c.dropout_rate = 0.0;
  return c;
}

rockid_train_config fast_train(uint64_t seed) {
  rockid_train_config c = rockid_train_config_default();
  c.seed = seed;
  c.learning_rate = 0.01;  // tiny corpus, few batches
  c.max_epochs = 30;
  c.patience = 8;
  c.batch_size = 16;
  return c;
}

}  // namespace

TEST_CASE("version, status names, defaults") {
  CHECK(std::string(rockid_version()) == "1.0.0");
  CHECK(std::string(rockid_status_name(ROCKID_OK)) == "ok");
  CHECK(std::string(rockid_status_name(ROCKID_E_TOO_FEW_POINTS)) == "too_few_points");

  rockid_grid g = rockid_grid_default();
  CHECK(g.min_wavenumber == 150.0);
  CHECK(g.max_wavenumber == 1500.0);
  CHECK(g.num_points == 1024);

  rockid_train_config t = rockid_train_config_default();
  CHECK(t.learning_rate == 0.001);
  CHECK(t.patience == 20);
  CHECK(t.mc_passes == 30);
  CHECK(t.unknown_threshold == 0.5);

  rockid_cnn_config c = rockid_cnn_config_default();
  CHECK(c.conv1_channels == 16);
  CHECK(c.conv2_channels == 32);
  CHECK(c.dropout_rate == 0.3);

  rockid_augment_config a = rockid_augment_config_default();
  CHECK(a.target_multiplier == 4.0);
  CHECK(a.pca_min_samples == 8);
}

TEST_CASE("error reporting: null arguments and missing files") {
  rockid_dataset* ds = nullptr;
  CHECK(rockid_dataset_open(nullptr, &ds) == ROCKID_E_INVALID_ARGUMENT);
  CHECK(std::strlen(rockid_last_error()) > 0);
  CHECK(rockid_dataset_open("/nonexistent/path.ds", &ds) == ROCKID_E_IO);

  rockid_kb* kb = nullptr;
  CHECK(rockid_kb_load("/nonexistent/kb.json", &kb) == ROCKID_E_IO);
}

TEST_CASE("synthetic dataset, save/open, expand") {
  rockid_grid grid = small_grid();
  rockid_dataset* ds = nullptr;
  REQUIRE(rockid_dataset_synthetic(8, &grid, 0.01, 7, &ds) == ROCKID_OK);
  CHECK(rockid_dataset_num_samples(ds) == 14 * 8);
  CHECK(rockid_dataset_num_classes(ds) == 14);
  CHECK(std::string(rockid_dataset_class_name(ds, 0)) == "Quartz");
  CHECK(rockid_dataset_class_name(ds, 99) == nullptr);

  auto path = (work_dir() / "c.ds").string();
  REQUIRE(rockid_dataset_save(ds, path.c_str(), "hash", 7) == ROCKID_OK);
  rockid_dataset* back = nullptr;
  REQUIRE(rockid_dataset_open(path.c_str(), &back) == ROCKID_OK);
  CHECK(rockid_dataset_num_samples(back) == 14 * 8);

  rockid_augment_config ac = rockid_augment_config_default();
  ac.target_multiplier = 2.0;
  ac.seed = 3;
  rockid_dataset* expanded = nullptr;
  char* manifest = nullptr;
  REQUIRE(rockid_dataset_expand(back, &ac, &expanded, &manifest) == ROCKID_OK);
  CHECK(rockid_dataset_num_samples(expanded) == 14 * 16);
  auto mj = nlohmann::json::parse(take(manifest));
  CHECK(mj["classes"].size() == 14);
  CHECK(mj["classes"][0]["path"] == "pca");  // 8 samples meets the default threshold

  rockid_dataset_free(expanded);
  rockid_dataset_free(back);
  rockid_dataset_free(ds);
}

TEST_CASE("ingest directory through the C API") {
  auto dir = work_dir() / "ingest";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  for (int i = 0; i < 3; ++i) {
    std::ofstream os(dir / ("q" + std::to_string(i) + ".txt"));
    os << "##NAMES=Quartz\n100, " << i << "\n200, 2\n300, 1\n";
  }
  {
    std::ofstream os(dir / "skip.txt");
    os << "##NAMES=Unobtainium\n100, 1\n200, 2\n";
  }

  const char* classes[] = {"Quartz", "Calcite"};
  rockid_grid grid = {100, 300, 16};
  rockid_dataset* ds = nullptr;
  char* report = nullptr;
  REQUIRE(rockid_dataset_ingest_dir(dir.string().c_str(), classes, 2, &grid, &ds, &report) ==
          ROCKID_OK);
  CHECK(rockid_dataset_num_samples(ds) == 3);
  auto rj = nlohmann::json::parse(take(report));
  CHECK(rj["skipped"]["Unobtainium"] == 1);
  rockid_dataset_free(ds);
}

namespace {

// Three minerals with peaks hundreds of cm^-1 apart: separable even on the
// coarse 64-point test grid.
std::string trio_spec_file() {
  auto p = work_dir() / "trio.conf";
  std::ofstream os(p);
  os << "mineral = Calcite\npeak = 1086, 20, 1\n"
     << "mineral = Quartz\npeak = 464, 20, 1\n"
     << "mineral = Jadeite\npeak = 700, 20, 1\n";
  return p.string();
}

std::vector<double> gaussian_spectrum(std::vector<double>& w, double center) {
  std::vector<double> v;
  for (int i = 0; i < 64; ++i) {
    double x = 150 + (1500.0 - 150.0) * i / 63.0;
    w.push_back(x);
    double dx = x - center;
    v.push_back(std::exp(-dx * dx / (2 * 20.0 * 20.0)));
  }
  return v;
}

}  // namespace

TEST_CASE("train, checkpoint round trip, predict") {
  rockid_grid grid = small_grid();
  rockid_dataset* ds = nullptr;
  REQUIRE(rockid_dataset_synthetic_from_spec(trio_spec_file().c_str(), 15, &grid, 0.01, 9,
                                             &ds) == ROCKID_OK);

  rockid_cnn_config cnn = small_cnn();
  rockid_train_config tc = fast_train(13);
  rockid_model* model = nullptr;
  char* history = nullptr;
  REQUIRE(rockid_model_train(ds, ROCKID_MODEL_CNN, 0, &cnn, &tc, &model, &history) ==
          ROCKID_OK);
  auto hj = nlohmann::json::parse(take(history));
  CHECK(hj["model_kind"] == "cnn");
  CHECK(hj["epochs"].get<int>() >= 1);
  CHECK(rockid_model_is_uncertainty(model) == 0);
  CHECK(rockid_model_num_classes(model) == 3);
  CHECK(std::string(rockid_model_class_name(model, 0)) == "Calcite");

  auto path = (work_dir() / "m.ckpt").string();
  REQUIRE(rockid_model_save(model, path.c_str(), "h", 13) == ROCKID_OK);
  rockid_model* loaded = nullptr;
  REQUIRE(rockid_model_open(path.c_str(), &loaded) == ROCKID_OK);

  std::vector<double> w;
  std::vector<double> v = gaussian_spectrum(w, 1086.0);
  char* pred = nullptr;
  REQUIRE(rockid_model_predict(loaded, w.data(), v.data(), 64, ROCKID_PREDICT_BASE, &tc,
                               &pred) == ROCKID_OK);
  auto pj = nlohmann::json::parse(take(pred));
  CHECK(pj["label"] == "Calcite");
  CHECK_FALSE(pj["unknown"].get<bool>());

  rockid_model_free(loaded);
  rockid_model_free(model);
  rockid_dataset_free(ds);
}

TEST_CASE("knowledge base and label classification") {
  rockid_kb* kb = nullptr;
  REQUIRE(rockid_kb_default(&kb) == ROCKID_OK);

  auto path = (work_dir() / "kb.json").string();
  REQUIRE(rockid_kb_save(kb, path.c_str()) == ROCKID_OK);
  rockid_kb* loaded = nullptr;
  REQUIRE(rockid_kb_load(path.c_str(), &loaded) == ROCKID_OK);

  std::vector<const char*> labels(10, "Calcite");
  char* result = nullptr;
  REQUIRE(rockid_classify_labels(loaded, labels.data(), 10, "case25", &result) == ROCKID_OK);
  auto rj = nlohmann::json::parse(take(result));
  CHECK(rj["classification"]["label"] == "limestone");
  CHECK(rj["classification"]["margin"].get<double>() == doctest::Approx(0.8));

  CHECK(rockid_classify_labels(loaded, nullptr, 0, "x", &result) ==
        ROCKID_E_INVALID_ARGUMENT);

  rockid_kb_free(loaded);
  rockid_kb_free(kb);
}

TEST_CASE("golden suite and metrics through the C API") {
  rockid_kb* kb = nullptr;
  REQUIRE(rockid_kb_default(&kb) == ROCKID_OK);
  auto fixture = (std::filesystem::path(ROCKID_DATA_DIR) / "golden_cases.json").string();
  char* report = nullptr;
  REQUIRE(rockid_eval_golden(kb, fixture.c_str(), &report) == ROCKID_OK);
  auto j = nlohmann::json::parse(take(report));
  CHECK(j["oracle_matches"] == 30);
  CHECK(j["expert_agreements"] == 15);
  rockid_kb_free(kb);

  // granite-row confusion arithmetic: 5 of 15 granite predictions correct
  const char* names[] = {"granite", "rest"};
  // true granite: 5 predicted granite, 0 predicted rest; true rest: 10
  // predicted granite
  int64_t counts[] = {5, 0, 10, 85};
  char* metrics = nullptr;
  REQUIRE(rockid_metrics_from_confusion(counts, names, 2, &metrics) == ROCKID_OK);
  auto m = nlohmann::json::parse(take(metrics));
  CHECK(m["per_class"]["granite"]["precision"].get<double>() == doctest::Approx(1.0 / 3));
  CHECK(m["per_class"]["granite"]["recall"].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("sample-dir classification through the C API") {
  rockid_grid grid = small_grid();
  rockid_dataset* ds = nullptr;
  REQUIRE(rockid_dataset_synthetic_from_spec(trio_spec_file().c_str(), 15, &grid, 0.01, 4,
                                             &ds) == ROCKID_OK);
  rockid_cnn_config cnn = small_cnn();
  rockid_train_config tc = fast_train(5);
  rockid_model* model = nullptr;
  REQUIRE(rockid_model_train(ds, ROCKID_MODEL_CNN, 0, &cnn, &tc, &model, nullptr) == ROCKID_OK);

  auto dir = work_dir() / "sample";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  for (int i = 0; i < 10; ++i) {
    std::ofstream os(dir / ("p" + std::to_string(i) + ".txt"));
    os << "##NAMES=field-point\n";
    for (int k = 0; k < 64; ++k) {
      double x = 150 + (1500.0 - 150.0) * k / 63.0;
      double dx = x - 1086;
      os << x << ", " << std::exp(-dx * dx / (2 * 20.0 * 20.0)) << "\n";
    }
  }

  rockid_kb* kb = nullptr;
  REQUIRE(rockid_kb_default(&kb) == ROCKID_OK);
  char* result = nullptr;
  REQUIRE(rockid_classify_sample_dir(model, kb, dir.string().c_str(), ROCKID_PREDICT_BASE, 10,
                                     &tc, &result) == ROCKID_OK);
  auto j = nlohmann::json::parse(take(result));
  CHECK(j["mineral_labels"].size() == 10);
  CHECK(j["classification"]["label"] == "limestone");

  // 9 points: too few
  std::filesystem::remove(dir / "p9.txt");
  rockid_status s = rockid_classify_sample_dir(model, kb, dir.string().c_str(),
                                               ROCKID_PREDICT_BASE, 10, &tc, &result);
  CHECK(s == ROCKID_E_TOO_FEW_POINTS);
  CHECK(std::string(rockid_last_error()).find("9 < 10") != std::string::npos);

  rockid_kb_free(kb);
  rockid_model_free(model);
  rockid_dataset_free(ds);
}
