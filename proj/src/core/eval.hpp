#pragma once

#include <optional>

#include "core/knowledge.hpp"
#include "core/train.hpp"

namespace rockid {

struct ConfusionMatrix {
  std::vector<std::string> class_names;  // may include a trailing "other"
  std::vector<int64_t> counts;           // row-major, rows = true class

  int64_t at(size_t true_i, size_t pred_j) const {
    return counts[true_i * class_names.size() + pred_j];
  }
  int64_t total() const;
  std::string to_json() const;
};

// Labels outside `class_names` (UNKNOWN, "other", stray species) collapse
// into one dedicated row/column appended as "other".
ConfusionMatrix confusion(const std::vector<std::string>& true_labels,
                          const std::vector<std::string>& predicted_labels,
                          const std::vector<std::string>& class_names);

struct ClassMetrics {
  std::optional<double> precision;  // undefined when the class is never predicted
  std::optional<double> recall;     // undefined when the class never occurs
  std::optional<double> f1;
  int64_t tp = 0, fp = 0, fn = 0;
};

struct MetricsReport {
  double accuracy = 0.0;
  std::map<std::string, ClassMetrics> per_class;
  double macro_precision = 0.0;  // over classes where defined
  double macro_recall = 0.0;
  double macro_f1 = 0.0;

  std::string to_json() const;
  // Human-readable table; percentages to one decimal, f1 to two.
  std::string to_text() const;
};

MetricsReport metrics(const ConfusionMatrix& cm);

// Per-class metrics from raw counts (precision 33.3% from TP=5/FP=10, ...).
ClassMetrics metrics_from_counts(int64_t tp, int64_t fp, int64_t fn);

struct Fold {
  std::vector<size_t> train;
  std::vector<size_t> test;
};

// Stratified k-fold partition; every index lands in exactly one test fold.
std::vector<Fold> kfold_split(const std::vector<int>& labels, int num_classes, int k,
                              uint64_t seed);

struct CvReport {
  double mean_accuracy = 0.0;
  double std_error = 0.0;
  struct FoldResult {
    double accuracy = 0.0;
    int epochs = 0;
  };
  std::vector<FoldResult> folds;

  std::string to_json() const;
};

// Trains one model per fold (concurrently; per-fold seed streams keep the
// result independent of scheduling) and reports mean accuracy +- standard
// error of the fold accuracies.
CvReport cross_validate(const LabeledDataset& dataset, const nn::ModelSpec& spec,
                        const nn::TrainConfig& config, int k, uint64_t seed,
                        int max_workers = 0);

// ---------------- golden suite ----------------

struct GoldenCase {
  int id = 0;
  std::vector<std::string> labels;
  std::string expert_result;  // expert ground-truth column
  std::string oracle_expected;  // frozen output of the implemented semantics
};

// Fixture file is JSON with an FNV-1a checksum over the canonical case
// serialization; any edit must update the checksum deliberately.
std::vector<GoldenCase> load_golden_fixture(const std::filesystem::path& path);
uint64_t golden_checksum(const std::vector<GoldenCase>& cases);

struct GoldenReport {
  struct CaseResult {
    int id = 0;
    std::string classified;
    std::string oracle_expected;
    std::string expert_result;
    bool oracle_match = false;
    bool expert_agreement = false;
  };
  std::vector<CaseResult> cases;
  int oracle_matches = 0;
  int expert_agreements = 0;
  // Rock-level view: rows are the expert's intended label ("Not a X" rows
  // map to other), columns the classified label.
  ConfusionMatrix rock_confusion;
  MetricsReport rock_metrics;

  std::string to_json() const;
  std::string to_text() const;
};

GoldenReport run_golden_suite(const KnowledgeBase& kb, const std::vector<GoldenCase>& cases);

}  // namespace rockid
