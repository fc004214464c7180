#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/rng.hpp"

namespace rockid {

struct AugmentConfig {
  double target_multiplier = 4.0;   // total per-class count = ceil(multiplier * n)
  int pca_min_samples = 8;          // classes at or above this take the PCA path
  int pca_components = 5;           // capped at samples-1
  double coeff_sigma_scale = 0.5;   // perturbation std as a fraction of component std
  double noise_sigma = 0.01;        // direct variation additive noise (post-normalization units)
  int shift_max = 3;                // direct variation shift, grid points
  std::array<double, 2> scale_range = {0.9, 1.1};
  uint64_t seed = 0;

  void validate() const;
};

// Row-major matrix of class vectors; thin wrapper kept local to augmentation.
struct SampleMatrix {
  std::vector<double> data;
  size_t rows = 0;
  size_t cols = 0;

  std::span<const double> row(size_t i) const { return {data.data() + i * cols, cols}; }
  std::span<double> row(size_t i) { return {data.data() + i * cols, cols}; }
};

// PCA path: fit components on the class, then rebuild each synthetic sample
// from an original sample's coefficients plus Gaussian perturbation scaled by
// the per-component std. Produces ceil((multiplier-1) * rows) new rows,
// clamped to >= 0.
SampleMatrix pca_augment(const SampleMatrix& class_vectors, const AugmentConfig& config,
                         Rng& rng);

// Direct variation path: integer shift (zero fill), multiplicative scale,
// additive Gaussian noise, clamp to >= 0. One output per call.
std::vector<double> direct_variation(std::span<const double> vec, const AugmentConfig& config,
                                     Rng& rng);

struct ExpandManifest {
  struct PerClass {
    std::string name;
    int original = 0;
    int synthetic = 0;
    std::string path;   // "pca" | "direct" | "none"
    std::string error;  // empty on success
  };
  std::vector<PerClass> classes;
  uint64_t seed = 0;

  std::string to_json() const;
};

// Per class: PCA when the class has >= pca_min_samples rows, direct variation
// otherwise. Originals are never altered; synthetics are appended.
LabeledDataset expand_dataset(const LabeledDataset& dataset, const AugmentConfig& config,
                              ExpandManifest* manifest = nullptr);

struct SyntheticMineralSpec {
  struct Peak {
    double center = 0.0;  // cm^-1
    double width = 0.0;   // Gaussian sigma, cm^-1
    double height = 0.0;  // relative
  };
  std::string name;
  std::vector<Peak> peaks;
};

// The 14 desk-scale stand-in minerals: the twelve species named by the rock
// hierarchies plus jadeite and epidote so indicator minerals are coverable
// end to end. Peak positions are loosely inspired by real Raman bands but
// only distinctness matters here.
std::vector<SyntheticMineralSpec> default_mineral_specs();

// Key-value spec file: "mineral = name" opens a block, "peak = center, width,
// height" adds peaks to the open block. '#' starts a comment.
std::vector<SyntheticMineralSpec> load_mineral_specs(const std::filesystem::path& path);
std::string serialize_mineral_specs(const std::vector<SyntheticMineralSpec>& specs);

// Gaussian-peak corpus: per sample, sum of peaks + Gaussian noise, min-max
// normalized. Deterministic under seed (per-class streams).
LabeledDataset make_synthetic_corpus(const std::vector<SyntheticMineralSpec>& specs,
                                     int per_class, const GridSpec& grid, double noise_sigma,
                                     uint64_t seed);

}  // namespace rockid
