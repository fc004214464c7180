#pragma once

#include "core/knowledge.hpp"
#include "core/train.hpp"

namespace rockid {

// One rock sample: several Raman point measurements taken across its surface.
struct SampleMeasurements {
  std::string sample_id;
  std::vector<Spectrum> spectra;
};

inline constexpr int kDefaultMinPoints = 10;

enum class PipelineMode { Base, Uncertainty, OracleLabels };

const char* pipeline_mode_name(PipelineMode mode);

struct RockResult {
  std::string sample_id;
  PipelineMode mode = PipelineMode::Base;
  std::vector<nn::Prediction> predictions;  // one per parsed spectrum
  std::vector<std::string> mineral_labels;  // one per measurement point (UNKNOWN for failures)
  int failed_points = 0;
  RockClassification classification;

  std::string to_json() const;
};

// Full per-sample run: resample + normalize each point, predict minerals with
// the requested mode, classify the label sequence against the knowledge base.
RockResult classify_sample(const SampleMeasurements& sample, const nn::Model& model,
                           const KnowledgeBase& kb, PipelineMode mode, const GridSpec& grid,
                           const nn::TrainConfig& train_config,
                           int min_points = kDefaultMinPoints);

// Oracle-labels mode: classify a known mineral label sequence, no model.
RockResult classify_labels(std::span<const std::string> labels, const KnowledgeBase& kb,
                           const std::string& sample_id = "");

struct BatchOutcome {
  std::vector<RockResult> results;
  struct Failure {
    std::string sample_id;
    std::string error;
  };
  std::vector<Failure> failures;
};

// Per-sample failures are isolated; the batch never aborts.
BatchOutcome classify_batch(const std::vector<SampleMeasurements>& samples,
                            const nn::Model& model, const KnowledgeBase& kb, PipelineMode mode,
                            const GridSpec& grid, const nn::TrainConfig& train_config,
                            int min_points = kDefaultMinPoints);

// Directory of spectrum files = one sample; unparseable files become UNKNOWN
// points as long as enough valid spectra remain.
struct LoadedSample {
  SampleMeasurements sample;
  std::vector<std::string> failed_files;
};

LoadedSample load_sample_dir(const std::filesystem::path& dir);

RockResult classify_sample_dir(const std::filesystem::path& dir, const nn::Model& model,
                               const KnowledgeBase& kb, PipelineMode mode,
                               const nn::TrainConfig& train_config,
                               int min_points = kDefaultMinPoints);

}  // namespace rockid
