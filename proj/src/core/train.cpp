#include "core/train.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "core/knowledge.hpp"

namespace rockid::nn {

std::string Prediction::label_name(const std::vector<std::string>& class_names) const {
  if (unknown || label_index < 0) return kUnknownLabel;
  return class_names.at(static_cast<size_t>(label_index));
}

SplitIndices stratified_split(const std::vector<int>& labels, int num_classes,
                              double validation_fraction, Rng& rng) {
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    fail(Status::InvalidArgument, "stratified_split: fraction must be in (0,1)");
  SplitIndices out;
  for (int cls = 0; cls < num_classes; ++cls) {
    std::vector<size_t> idx;
    for (size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) idx.push_back(i);
    if (idx.empty()) continue;
    rng.shuffle(idx);
    size_t n_val = static_cast<size_t>(
        std::floor(validation_fraction * static_cast<double>(idx.size())));
    if (n_val >= idx.size()) n_val = idx.size() - 1;  // keep the class trainable
    for (size_t i = 0; i < idx.size(); ++i)
      (i < idx.size() - n_val ? out.train : out.val).push_back(idx[i]);
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  return out;
}

bool EarlyStopping::update(double val_loss) {
  ++epochs_seen_;
  if (!has_best_ || val_loss < best_) {
    has_best_ = true;
    best_ = val_loss;
    best_epoch_ = epochs_seen_;
    no_improve_ = 0;
    return true;
  }
  ++no_improve_;
  return false;
}

namespace {

Model build_from_spec(const ModelSpec& spec, const LabeledDataset& dataset, Rng& rng) {
  if (spec.kind == ModelKind::Cnn) {
    CnnConfig cfg = spec.cnn;
    cfg.input_length = dataset.grid.num_points;
    cfg.num_classes = static_cast<int>(dataset.class_names.size());
    return build_cnn(cfg, dataset.grid, dataset.class_names, spec.uncertainty, rng);
  }
  double rate = spec.uncertainty ? spec.cnn.dropout_rate : 0.0;
  return build_mlp(spec.mlp_hidden, dataset.grid.num_points,
                   static_cast<int>(dataset.class_names.size()), rate, dataset.grid,
                   dataset.class_names, spec.uncertainty, rng);
}

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

EvalResult evaluate(const Model& model, const LabeledDataset& dataset,
                    const std::vector<size_t>& indices) {
  EvalResult r;
  if (indices.empty()) return r;
  std::vector<LayerState> states;
  size_t correct = 0;
  for (size_t i : indices) {
    std::vector<double> logits = forward(model, dataset.row(i), states, DropoutMode::Off);
    LossGrad lg = cross_entropy(logits, dataset.labels[i]);
    r.loss += lg.loss;
    auto best = std::max_element(logits.begin(), logits.end());
    if (static_cast<int>(best - logits.begin()) == dataset.labels[i]) ++correct;
  }
  r.loss /= static_cast<double>(indices.size());
  r.accuracy = static_cast<double>(correct) / static_cast<double>(indices.size());
  return r;
}

}  // namespace

double evaluate_accuracy(const Model& model, const LabeledDataset& dataset,
                         const std::vector<size_t>& indices) {
  return evaluate(model, dataset, indices).accuracy;
}

Model train_on_split(const LabeledDataset& dataset, const std::vector<size_t>& train_idx,
                     const std::vector<size_t>& val_idx, const ModelSpec& spec,
                     const TrainConfig& config) {
  config.validate();
  dataset.validate();
  if (dataset.class_names.size() < 2)
    fail(Status::InvalidArgument, "train: need at least 2 classes");
  if (train_idx.empty() || val_idx.empty())
    fail(Status::TrainingError, "train: empty train or validation split");

  // Every class must be trainable.
  std::vector<int> seen(dataset.class_names.size(), 0);
  for (size_t i : train_idx) seen[static_cast<size_t>(dataset.labels[i])] = 1;
  for (size_t c = 0; c < seen.size(); ++c)
    if (!seen[c])
      fail(Status::TrainingError,
           "train: degenerate split, class '" + dataset.class_names[c] + "' absent from train");

  Rng init_rng(config.seed, stream_id("init", 0));
  Model model = build_from_spec(spec, dataset, init_rng);
  const DropoutMode train_mode = model.uncertainty ? DropoutMode::Sample : DropoutMode::Off;

  AdamState adam = AdamState::zeros_like(model);
  Gradients grads = Gradients::zeros_like(model);
  EarlyStopping stopper(config.patience);
  Model best = model.clone();

  std::vector<size_t> order(train_idx);
  std::vector<LayerState> states;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    Rng perm_rng(config.seed, stream_id("epoch-perm", static_cast<uint64_t>(epoch)));
    Rng dropout_rng(config.seed, stream_id("epoch-dropout", static_cast<uint64_t>(epoch)));
    order = train_idx;
    perm_rng.shuffle(order);

    double train_loss = 0.0;
    size_t done = 0;
    while (done < order.size()) {
      size_t batch = std::min<size_t>(static_cast<size_t>(config.batch_size),
                                      order.size() - done);
      grads.clear();
      double batch_loss = 0.0;
      for (size_t bi = 0; bi < batch; ++bi) {
        size_t i = order[done + bi];
        std::vector<double> logits =
            forward(model, dataset.row(i), states, train_mode, &dropout_rng);
        batch_loss += backward(model, states, logits, dataset.labels[i], grads);
      }
      grads.scale(1.0 / static_cast<double>(batch));
      adam_step(model, grads, adam, config);
      train_loss += batch_loss;
      done += batch;
    }
    train_loss /= static_cast<double>(order.size());

    EvalResult val = evaluate(model, dataset, val_idx);
    model.history.push_back({train_loss, val.loss, val.accuracy});

    if (stopper.update(val.loss)) {
      std::vector<EpochStats> history = std::move(model.history);
      best = model.clone();
      model.history = std::move(history);
      best.history.clear();
    }
    if (stopper.should_stop()) break;
  }

  best.history = std::move(model.history);
  best.best_epoch = stopper.best_epoch();
  return best;
}

Model train(const LabeledDataset& dataset, const CnnConfig& cnn_config,
            const TrainConfig& train_config, bool uncertainty) {
  train_config.validate();
  Rng split_rng(train_config.seed, stream_id("split", 0));
  SplitIndices split = stratified_split(dataset.labels,
                                        static_cast<int>(dataset.class_names.size()),
                                        train_config.validation_fraction, split_rng);
  ModelSpec spec;
  spec.kind = ModelKind::Cnn;
  spec.uncertainty = uncertainty;
  spec.cnn = cnn_config;
  return train_on_split(dataset, split.train, split.val, spec, train_config);
}

Model train_mlp(const LabeledDataset& dataset, const std::vector<int>& hidden_layers,
                const TrainConfig& train_config) {
  train_config.validate();
  Rng split_rng(train_config.seed, stream_id("split", 0));
  SplitIndices split = stratified_split(dataset.labels,
                                        static_cast<int>(dataset.class_names.size()),
                                        train_config.validation_fraction, split_rng);
  ModelSpec spec;
  spec.kind = ModelKind::Mlp;
  spec.mlp_hidden = hidden_layers;
  return train_on_split(dataset, split.train, split.val, spec, train_config);
}

Prediction predict(const Model& model, std::span<const double> input) {
  std::vector<double> logits = forward(model, input);
  Prediction p;
  p.mean_probs = softmax(logits);
  p.variance.assign(p.mean_probs.size(), 0.0);
  auto best = std::max_element(p.mean_probs.begin(), p.mean_probs.end());
  p.label_index = static_cast<int>(best - p.mean_probs.begin());
  p.max_mean_prob = *best;
  p.unknown = false;
  return p;
}

Prediction mc_predict(const Model& model, std::span<const double> input,
                      const TrainConfig& config, uint64_t input_index) {
  config.validate();
  const int passes = config.mc_passes;
  const size_t k = static_cast<size_t>(model.num_classes);

  // Welford over the per-pass softmax outputs: identical passes (dropout
  // rate 0) yield an exactly zero variance.
  std::vector<double> mean(k, 0.0), m2(k, 0.0);
  std::vector<LayerState> states;
  for (int pass = 0; pass < passes; ++pass) {
    Rng rng(config.seed,
            stream_id("mc-pass", input_index * static_cast<uint64_t>(config.mc_passes) +
                                      static_cast<uint64_t>(pass)));
    std::vector<double> logits = forward(model, input, states, DropoutMode::Sample, &rng);
    std::vector<double> probs = softmax(logits);
    double n = static_cast<double>(pass + 1);
    for (size_t i = 0; i < k; ++i) {
      double delta = probs[i] - mean[i];
      mean[i] += delta / n;
      m2[i] += delta * (probs[i] - mean[i]);
    }
  }

  Prediction p;
  p.mean_probs = std::move(mean);
  p.variance.resize(k);
  for (size_t i = 0; i < k; ++i) p.variance[i] = m2[i] / static_cast<double>(passes);
  auto best = std::max_element(p.mean_probs.begin(), p.mean_probs.end());
  p.max_mean_prob = *best;
  if (p.max_mean_prob < config.unknown_threshold) {
    p.unknown = true;
    p.label_index = -1;
  } else {
    p.unknown = false;
    p.label_index = static_cast<int>(best - p.mean_probs.begin());
  }
  return p;
}

std::string history_to_json(const Model& model) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["model_kind"] = model.model_kind == ModelKind::Cnn ? "cnn" : "mlp";
  j["uncertainty"] = model.uncertainty;
  j["epochs"] = model.history.size();
  j["best_epoch"] = model.best_epoch;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& h : model.history)
    arr.push_back({{"train_loss", h.train_loss},
                   {"val_loss", h.val_loss},
                   {"val_accuracy", h.val_accuracy}});
  j["history"] = arr;
  return j.dump(2);
}

}  // namespace rockid::nn
