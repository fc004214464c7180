#pragma once

#include <optional>

#include "core/dataset.hpp"
#include "core/nn.hpp"

namespace rockid::nn {

// Per-point classifier output. `label_index` is -1 when the uncertainty rule
// rejects the point as UNKNOWN.
struct Prediction {
  std::vector<double> mean_probs;
  std::vector<double> variance;
  int label_index = -1;
  bool unknown = false;
  double max_mean_prob = 0.0;

  std::string label_name(const std::vector<std::string>& class_names) const;
};

struct SplitIndices {
  std::vector<size_t> train;
  std::vector<size_t> val;
};

// Stratified split; every class keeps at least one training sample.
SplitIndices stratified_split(const std::vector<int>& labels, int num_classes,
                              double validation_fraction, Rng& rng);

// Early-stopping bookkeeping: improvement = strictly lower validation loss;
// stop after `patience` consecutive epochs without improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}

  // Returns true if this epoch improved on the best validation loss.
  bool update(double val_loss);
  bool should_stop() const { return no_improve_ >= patience_; }
  double best() const { return best_; }
  int best_epoch() const { return best_epoch_; }

 private:
  int patience_;
  int epochs_seen_ = 0;
  int no_improve_ = 0;
  int best_epoch_ = -1;
  double best_ = 0.0;
  bool has_best_ = false;
};

struct ModelSpec {
  ModelKind kind = ModelKind::Cnn;
  bool uncertainty = false;
  CnnConfig cnn;                        // kind == Cnn
  std::vector<int> mlp_hidden = {128};  // kind == Mlp
};

// Trains on an explicit index split (the stratified `train` entry point and
// cross-validation both funnel through here). Returns the parameters of the
// best validation epoch, with the full epoch history attached.
Model train_on_split(const LabeledDataset& dataset, const std::vector<size_t>& train_idx,
                     const std::vector<size_t>& val_idx, const ModelSpec& spec,
                     const TrainConfig& config);

// Stratified-split training of the 1D CNN (base or uncertainty variant).
Model train(const LabeledDataset& dataset, const CnnConfig& cnn_config,
            const TrainConfig& train_config, bool uncertainty = false);

// Dense-only baseline sharing the same kernels and training loop.
Model train_mlp(const LabeledDataset& dataset, const std::vector<int>& hidden_layers,
                const TrainConfig& train_config);

// Single dropout-free pass; variance is exactly zero and UNKNOWN never fires.
Prediction predict(const Model& model, std::span<const double> input);

// Monte Carlo dropout: mc_passes stochastic passes, per-class mean/variance
// over the softmax outputs (Welford, so identical passes give exactly zero
// variance), UNKNOWN when the max mean probability is below the threshold.
// `input_index` selects the seed-derived stream for batch reproducibility.
Prediction mc_predict(const Model& model, std::span<const double> input,
                      const TrainConfig& config, uint64_t input_index = 0);

double evaluate_accuracy(const Model& model, const LabeledDataset& dataset,
                         const std::vector<size_t>& indices);

std::string history_to_json(const Model& model);

}  // namespace rockid::nn
