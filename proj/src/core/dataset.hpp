#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "core/spectrum.hpp"

namespace rockid {

// Fixed-grid spectral vectors with mineral class labels, row-major.
struct LabeledDataset {
  std::vector<double> data;  // num_samples x grid.num_points
  std::vector<int> labels;
  std::vector<std::string> class_names;
  GridSpec grid;

  size_t num_samples() const { return labels.size(); }
  std::span<const double> row(size_t i) const {
    return {data.data() + i * static_cast<size_t>(grid.num_points),
            static_cast<size_t>(grid.num_points)};
  }
  std::span<double> row(size_t i) {
    return {data.data() + i * static_cast<size_t>(grid.num_points),
            static_cast<size_t>(grid.num_points)};
  }
  void validate() const;
};

struct LoadReport {
  int loaded = 0;
  std::map<std::string, int> skipped_by_name;  // mineral_name -> file count
  struct Failure {
    std::string file;
    std::string error;
  };
  std::vector<Failure> failures;

  std::string to_json() const;
};

// Parse, resample and normalize every file under `dir` whose ##NAMES value is
// in `class_names` (case-insensitive). Files with other names are counted in
// the skip report; parse failures are collected, never fatal for the batch.
LabeledDataset load_dataset(const std::filesystem::path& dir,
                            const std::vector<std::string>& class_names,
                            const GridSpec& grid, LoadReport* report = nullptr);

struct DatasetFileInfo {
  uint32_t version = 0;
  std::string config_hash;
  uint64_t seed = 0;
};

void save_dataset(const LabeledDataset& ds, const std::filesystem::path& path,
                  const std::string& config_hash, uint64_t seed);

LabeledDataset load_dataset_file(const std::filesystem::path& path,
                                 DatasetFileInfo* info = nullptr);

}  // namespace rockid
