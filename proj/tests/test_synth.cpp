#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "core/synth.hpp"

using namespace rockid;

namespace {

SampleMatrix matrix_from_rows(const std::vector<std::vector<double>>& rows) {
  SampleMatrix m;
  m.rows = rows.size();
  m.cols = rows.empty() ? 0 : rows[0].size();
  for (const auto& r : rows) m.data.insert(m.data.end(), r.begin(), r.end());
  return m;
}

}  // namespace

TEST_CASE("pca_augment: identical rows reproduce the row") {
  AugmentConfig cfg;
  cfg.pca_min_samples = 2;
  cfg.target_multiplier = 3.0;
  std::vector<double> row = {0.1, 0.9, 0.3, 0.0, 0.5};
  auto m = matrix_from_rows({row, row});
  Rng rng(3);
  auto out = pca_augment(m, cfg, rng);
  CHECK(out.rows == 4);  // ceil((3-1)*2)
  for (size_t r = 0; r < out.rows; ++r)
    for (size_t c = 0; c < out.cols; ++c)
      CHECK(out.row(r)[c] == doctest::Approx(row[c]).epsilon(1e-10));
}

TEST_CASE("pca_augment: 4x multiplier yields 3n synthetic rows") {
  AugmentConfig cfg;  // multiplier 4 by default
  Rng gen(5);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 10; ++i) {
    std::vector<double> r(16);
    for (double& x : r) x = gen.uniform();
    rows.push_back(r);
  }
  Rng rng(6);
  auto out = pca_augment(matrix_from_rows(rows), cfg, rng);
  CHECK(out.rows == 30);
  for (double x : out.data) CHECK(x >= 0.0);
}

TEST_CASE("pca_augment: deterministic under seed") {
  AugmentConfig cfg;
  Rng gen(5);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 9; ++i) {
    std::vector<double> r(12);
    for (double& x : r) x = gen.uniform();
    rows.push_back(r);
  }
  auto m = matrix_from_rows(rows);
  Rng r1(77), r2(77);
  auto a = pca_augment(m, cfg, r1);
  auto b = pca_augment(m, cfg, r2);
  CHECK(a.data == b.data);
}

TEST_CASE("pca_augment: too few samples") {
  AugmentConfig cfg;  // pca_min_samples 8
  auto m = matrix_from_rows({{1, 2}, {3, 4}});
  Rng rng(1);
  CHECK_THROWS_AS(pca_augment(m, cfg, rng), Error);
}

TEST_CASE("direct_variation: identity configuration") {
  AugmentConfig cfg;
  cfg.noise_sigma = 0;
  cfg.shift_max = 0;
  cfg.scale_range = {1, 1};
  std::vector<double> v = {0.5, 0.25, 1.0, 0.0};
  Rng rng(9);
  CHECK(direct_variation(v, cfg, rng) == v);
}

TEST_CASE("direct_variation: pure scaling") {
  AugmentConfig cfg;
  cfg.noise_sigma = 0;
  cfg.shift_max = 0;
  cfg.scale_range = {2, 2};
  std::vector<double> v = {0, 1, 2};
  Rng rng(9);
  CHECK(direct_variation(v, cfg, rng) == std::vector<double>{0, 2, 4});
}

TEST_CASE("direct_variation: deterministic and nonnegative") {
  AugmentConfig cfg;  // defaults: shift 3, scale [0.9,1.1], noise 0.01
  std::vector<double> v(32);
  Rng gen(4);
  for (double& x : v) x = gen.uniform();
  Rng r1(13), r2(13);
  auto a = direct_variation(v, cfg, r1);
  auto b = direct_variation(v, cfg, r2);
  CHECK(a == b);
  for (double x : a) CHECK(x >= 0.0);
}

namespace {

LabeledDataset two_class_dataset(int n_a, int n_b, int dims) {
  LabeledDataset ds;
  ds.grid = {0, 100, dims};
  ds.class_names = {"A", "B"};
  Rng gen(21);
  for (int i = 0; i < n_a + n_b; ++i) {
    for (int d = 0; d < dims; ++d) ds.data.push_back(gen.uniform());
    ds.labels.push_back(i < n_a ? 0 : 1);
  }
  return ds;
}

}  // namespace

TEST_CASE("expand_dataset: path routing and counts") {
  // class A: 3 samples -> direct; class B: 12 samples -> pca
  auto ds = two_class_dataset(3, 12, 10);
  AugmentConfig cfg;  // multiplier 4, pca_min_samples 8
  cfg.seed = 99;
  ExpandManifest manifest;
  auto out = expand_dataset(ds, cfg, &manifest);

  REQUIRE(manifest.classes.size() == 2);
  CHECK(manifest.classes[0].path == "direct");
  CHECK(manifest.classes[1].path == "pca");
  CHECK(manifest.classes[0].original == 3);
  CHECK(manifest.classes[0].synthetic == 9);
  CHECK(manifest.classes[1].synthetic == 36);
  CHECK(out.num_samples() == 15 + 45);

  // originals never altered, and they come first
  for (size_t i = 0; i < ds.data.size(); ++i) CHECK(out.data[i] == ds.data[i]);
}

TEST_CASE("expand_dataset: multiplier 1 is a no-op") {
  auto ds = two_class_dataset(4, 4, 6);
  AugmentConfig cfg;
  cfg.target_multiplier = 1.0;
  auto out = expand_dataset(ds, cfg);
  CHECK(out.data == ds.data);
  CHECK(out.labels == ds.labels);
}

TEST_CASE("expand_dataset: per-class totals are ceil(multiplier * n)") {
  auto ds = two_class_dataset(5, 7, 6);
  AugmentConfig cfg;
  cfg.target_multiplier = 2.5;
  cfg.pca_min_samples = 6;
  auto out = expand_dataset(ds, cfg);
  int count_a = 0, count_b = 0;
  for (int l : out.labels) (l == 0 ? count_a : count_b)++;
  CHECK(count_a == static_cast<int>(std::ceil(2.5 * 5)));
  CHECK(count_b == static_cast<int>(std::ceil(2.5 * 7)));
}

TEST_CASE("make_synthetic_corpus: single peak, argmax at center") {
  GridSpec grid{150, 1500, 256};
  std::vector<SyntheticMineralSpec> specs = {{"Solo", {{800, 10, 1.0}}}};
  auto ds = make_synthetic_corpus(specs, 5, grid, 0.0, 1);
  REQUIRE(ds.num_samples() == 5);
  auto first = ds.row(0);
  for (size_t s = 1; s < 5; ++s) {
    auto r = ds.row(s);
    CHECK(std::equal(first.begin(), first.end(), r.begin()));
  }
  size_t argmax = 0;
  for (size_t i = 1; i < first.size(); ++i)
    if (first[i] > first[argmax]) argmax = i;
  // grid point nearest 800
  double best = 1e18;
  size_t nearest = 0;
  for (int i = 0; i < grid.num_points; ++i) {
    double d = std::abs(grid.point(i) - 800.0);
    if (d < best) {
      best = d;
      nearest = static_cast<size_t>(i);
    }
  }
  CHECK(argmax == nearest);
}

TEST_CASE("make_synthetic_corpus: counts and determinism") {
  GridSpec grid{150, 1500, 128};
  auto specs = default_mineral_specs();
  REQUIRE(specs.size() == 14);
  auto a = make_synthetic_corpus(specs, 50, grid, 0.01, 7);
  CHECK(a.num_samples() == 700);
  CHECK(a.class_names.size() == 14);
  auto b = make_synthetic_corpus(specs, 50, grid, 0.01, 7);
  CHECK(a.data == b.data);  // bitwise
  for (double x : a.data) CHECK(x >= 0.0);
}

TEST_CASE("make_synthetic_corpus: nearest-centroid separates disjoint specs at noise 0") {
  GridSpec grid{150, 1500, 256};
  auto specs = default_mineral_specs();
  auto ds = make_synthetic_corpus(specs, 8, grid, 0.0, 3);

  // brute-force nearest-centroid oracle
  size_t k = specs.size();
  size_t d = static_cast<size_t>(grid.num_points);
  std::vector<std::vector<double>> centroids(k, std::vector<double>(d, 0.0));
  std::vector<int> counts(k, 0);
  for (size_t i = 0; i < ds.num_samples(); ++i) {
    auto r = ds.row(i);
    auto& c = centroids[static_cast<size_t>(ds.labels[i])];
    for (size_t j = 0; j < d; ++j) c[j] += r[j];
    counts[static_cast<size_t>(ds.labels[i])]++;
  }
  for (size_t cl = 0; cl < k; ++cl)
    for (double& x : centroids[cl]) x /= counts[cl];

  int correct = 0;
  for (size_t i = 0; i < ds.num_samples(); ++i) {
    auto r = ds.row(i);
    double best = 1e300;
    int best_c = -1;
    for (size_t cl = 0; cl < k; ++cl) {
      double dist = 0;
      for (size_t j = 0; j < d; ++j) {
        double diff = r[j] - centroids[cl][j];
        dist += diff * diff;
      }
      if (dist < best) {
        best = dist;
        best_c = static_cast<int>(cl);
      }
    }
    correct += (best_c == ds.labels[i]);
  }
  CHECK(correct == static_cast<int>(ds.num_samples()));
}

TEST_CASE("make_synthetic_corpus: peak outside grid rejected") {
  GridSpec grid{150, 1500, 64};
  std::vector<SyntheticMineralSpec> specs = {{"Bad", {{2000, 10, 1} }}};
  CHECK_THROWS_AS(make_synthetic_corpus(specs, 2, grid, 0, 1), Error);
}

TEST_CASE("mineral spec file: round trip and demo file") {
  auto specs = default_mineral_specs();
  auto dir = std::filesystem::temp_directory_path() / "rockid_specs";
  std::filesystem::create_directories(dir);
  auto p = dir / "specs.conf";
  {
    std::ofstream os(p);
    os << serialize_mineral_specs(specs);
  }
  auto loaded = load_mineral_specs(p);
  REQUIRE(loaded.size() == specs.size());
  for (size_t i = 0; i < specs.size(); ++i) {
    CHECK(loaded[i].name == specs[i].name);
    REQUIRE(loaded[i].peaks.size() == specs[i].peaks.size());
    for (size_t j = 0; j < specs[i].peaks.size(); ++j) {
      CHECK(loaded[i].peaks[j].center == specs[i].peaks[j].center);
      CHECK(loaded[i].peaks[j].width == specs[i].peaks[j].width);
      CHECK(loaded[i].peaks[j].height == specs[i].peaks[j].height);
    }
  }

  auto demo = load_mineral_specs(std::filesystem::path(ROCKID_DATA_DIR) /
                                 "examples/minerals_demo.conf");
  CHECK(demo.size() == 3);
  CHECK(demo[0].name == "Calcite");

  SUBCASE("errors carry line numbers") {
    auto bad = dir / "bad.conf";
    {
      std::ofstream os(bad);
      os << "mineral = X\npeak = 1, 2\n";
    }
    try {
      load_mineral_specs(bad);
      FAIL("expected ParseError");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
  }
}
