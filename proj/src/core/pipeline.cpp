#include "core/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace rockid {

const char* pipeline_mode_name(PipelineMode mode) {
  switch (mode) {
    case PipelineMode::Base: return "base";
    case PipelineMode::Uncertainty: return "uncertainty-aware";
    case PipelineMode::OracleLabels: return "oracle-labels";
  }
  return "unknown";
}

std::string RockResult::to_json() const {
  nlohmann::json j;
  j["format_version"] = 1;
  j["sample_id"] = sample_id;
  j["mode"] = pipeline_mode_name(mode);
  j["mineral_labels"] = mineral_labels;
  j["failed_points"] = failed_points;
  if (mode != PipelineMode::OracleLabels) {
    nlohmann::json preds = nlohmann::json::array();
    for (const auto& p : predictions)
      preds.push_back({{"label_index", p.label_index},
                       {"unknown", p.unknown},
                       {"max_mean_prob", p.max_mean_prob},
                       {"mean_probs", p.mean_probs},
                       {"variance", p.variance}});
    j["predictions"] = preds;
  }
  j["classification"] = nlohmann::json::parse(classification.to_json());
  return j.dump();
}

RockResult classify_sample(const SampleMeasurements& sample, const nn::Model& model,
                           const KnowledgeBase& kb, PipelineMode mode, const GridSpec& grid,
                           const nn::TrainConfig& train_config, int min_points) {
  if (mode == PipelineMode::OracleLabels)
    fail(Status::InvalidArgument, "classify_sample: oracle-labels mode takes a label sequence");
  if (!(grid == model.grid))
    fail(Status::ShapeMismatch, "classify_sample: grid does not match the model checkpoint");
  if (static_cast<int>(sample.spectra.size()) < min_points)
    fail(Status::TooFewPoints,
         "classify_sample: too few points (" + std::to_string(sample.spectra.size()) + " < " +
             std::to_string(min_points) + ")");

  RockResult out;
  out.sample_id = sample.sample_id;
  out.mode = mode;
  for (size_t i = 0; i < sample.spectra.size(); ++i) {
    std::vector<double> v = normalize(resample(sample.spectra[i], grid));
    nn::Prediction p = (mode == PipelineMode::Uncertainty)
                           ? nn::mc_predict(model, v, train_config, i)
                           : nn::predict(model, v);
    out.mineral_labels.push_back(p.label_name(model.class_names));
    out.predictions.push_back(std::move(p));
  }
  out.classification = classify(out.mineral_labels, kb);
  return out;
}

RockResult classify_labels(std::span<const std::string> labels, const KnowledgeBase& kb,
                           const std::string& sample_id) {
  if (labels.empty()) fail(Status::EmptyInput, "classify_labels: empty label sequence");
  RockResult out;
  out.sample_id = sample_id;
  out.mode = PipelineMode::OracleLabels;
  out.mineral_labels.assign(labels.begin(), labels.end());
  out.classification = classify(labels, kb);
  return out;
}

BatchOutcome classify_batch(const std::vector<SampleMeasurements>& samples,
                            const nn::Model& model, const KnowledgeBase& kb, PipelineMode mode,
                            const GridSpec& grid, const nn::TrainConfig& train_config,
                            int min_points) {
  BatchOutcome out;
  for (const auto& s : samples) {
    try {
      out.results.push_back(
          classify_sample(s, model, kb, mode, grid, train_config, min_points));
    } catch (const Error& e) {
      out.failures.push_back({s.sample_id, e.what()});
    }
  }
  return out;
}

LoadedSample load_sample_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec))
    fail(Status::IoError, "load_sample_dir: not a readable directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  LoadedSample out;
  out.sample.sample_id = dir.filename().string();
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) {
      out.failed_files.push_back(f.string());
      continue;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
      out.sample.spectra.push_back(parse_spectrum_file(ss.str()).spectrum);
    } catch (const Error&) {
      out.failed_files.push_back(f.string());
    }
  }
  return out;
}

RockResult classify_sample_dir(const std::filesystem::path& dir, const nn::Model& model,
                               const KnowledgeBase& kb, PipelineMode mode,
                               const nn::TrainConfig& train_config, int min_points) {
  LoadedSample loaded = load_sample_dir(dir);
  if (static_cast<int>(loaded.sample.spectra.size()) < min_points)
    fail(Status::TooFewPoints,
         "classify_sample_dir: too few valid points (" +
             std::to_string(loaded.sample.spectra.size()) + " < " +
             std::to_string(min_points) + "), " +
             std::to_string(loaded.failed_files.size()) + " unparseable");

  RockResult out;
  out.sample_id = loaded.sample.sample_id;
  out.mode = mode;
  for (size_t i = 0; i < loaded.sample.spectra.size(); ++i) {
    std::vector<double> v = normalize(resample(loaded.sample.spectra[i], model.grid));
    nn::Prediction p = (mode == PipelineMode::Uncertainty)
                           ? nn::mc_predict(model, v, train_config, i)
                           : nn::predict(model, v);
    out.mineral_labels.push_back(p.label_name(model.class_names));
    out.predictions.push_back(std::move(p));
  }
  // Unparseable points dilute proportions as UNKNOWN instead of dropping the
  // sample; the classifier cannot name what it never saw.
  for (size_t i = 0; i < loaded.failed_files.size(); ++i)
    out.mineral_labels.push_back(kUnknownLabel);
  out.failed_points = static_cast<int>(loaded.failed_files.size());
  out.classification = classify(out.mineral_labels, kb);
  return out;
}

}  // namespace rockid
