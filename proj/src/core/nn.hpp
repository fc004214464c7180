#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "core/rng.hpp"
#include "core/spectrum.hpp"

namespace rockid::nn {

struct CnnConfig {
  std::array<int, 2> conv_channels = {16, 32};
  int kernel_size = 5;
  int pool_size = 2;
  int hidden_units = 128;
  int num_classes = 14;
  double dropout_rate = 0.3;
  int input_length = 1024;

  void validate() const;
  // lengths after each stage (valid convolution, floor pooling)
  int conv1_out_length() const { return input_length - kernel_size + 1; }
  int pool1_out_length() const { return conv1_out_length() / pool_size; }
  int conv2_out_length() const { return pool1_out_length() - kernel_size + 1; }
  int pool2_out_length() const { return conv2_out_length() / pool_size; }
  int flattened_size() const { return conv_channels[1] * pool2_out_length(); }
};

struct TrainConfig {
  double learning_rate = 0.001;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int batch_size = 32;
  int max_epochs = 200;
  int patience = 20;
  double validation_fraction = 0.2;
  uint64_t seed = 0;
  int mc_passes = 30;
  double unknown_threshold = 0.5;

  void validate() const;
};

// Activation passed between layers: `channels` rows of `length` values.
struct Act {
  std::vector<double> v;
  int channels = 1;
  int length = 0;

  size_t size() const { return v.size(); }
};

enum class DropoutMode {
  Off,     // deterministic pass
  Sample,  // draw fresh masks from the supplied rng
  Replay,  // reuse the masks already recorded in the layer state
};

// Per-pass scratch recorded by forward and consumed by backward.
struct LayerState {
  Act input;
  std::vector<int> argmax;      // maxpool routing
  std::vector<uint8_t> mask;    // dropout keep mask
};

class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::string kind() const = 0;
  virtual Act forward(const Act& in, LayerState& st, DropoutMode mode, Rng* rng) const = 0;
  // Returns grad wrt the layer input; accumulates parameter grads into
  // dw/db (same shapes as w/b).
  virtual Act backward(const LayerState& st, const Act& grad_out, std::vector<double>& dw,
                       std::vector<double>& db) const = 0;

  std::vector<double> w;
  std::vector<double> b;
};

std::unique_ptr<Layer> make_conv1d(int in_channels, int out_channels, int kernel_size);
std::unique_ptr<Layer> make_relu();
std::unique_ptr<Layer> make_maxpool(int pool_size);
std::unique_ptr<Layer> make_dropout(double rate);
std::unique_ptr<Layer> make_dense(int in_size, int out_size);  // flattens its input

enum class ModelKind { Cnn, Mlp };

struct EpochStats {
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

// A trained classifier: the layer stack plus everything needed to run it on
// raw spectra (grid, class names) and to reproduce it (seed lives in the
// checkpoint header).
struct Model {
  ModelKind model_kind = ModelKind::Cnn;
  CnnConfig cnn;                  // valid when model_kind == Cnn
  std::vector<int> mlp_hidden;    // valid when model_kind == Mlp
  int input_length = 0;
  int num_classes = 0;
  double dropout_rate = 0.0;
  bool uncertainty = false;       // dropout active during training + MC inference
  GridSpec grid;
  std::vector<std::string> class_names;
  std::vector<std::unique_ptr<Layer>> layers;
  std::vector<EpochStats> history;
  int best_epoch = 0;  // 1-based epoch whose parameters these are

  Model() = default;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;
  Model clone() const;

  std::vector<std::vector<double>*> parameter_tensors();
  std::vector<const std::vector<double>*> parameter_tensors() const;
};

// conv1 -> relu -> pool -> dropout -> conv2 -> relu -> pool -> dropout ->
// dense -> relu -> dropout -> dense
Model build_cnn(const CnnConfig& config, const GridSpec& grid,
                const std::vector<std::string>& class_names, bool uncertainty, Rng& rng);

Model build_mlp(const std::vector<int>& hidden_layers, int input_length, int num_classes,
                double dropout_rate, const GridSpec& grid,
                const std::vector<std::string>& class_names, bool uncertainty, Rng& rng);

// Runs the stack; `states` is resized to one entry per layer. Pass
// DropoutMode::Sample with an rng during uncertainty training / MC inference.
std::vector<double> forward(const Model& model, std::span<const double> input,
                            std::vector<LayerState>& states, DropoutMode mode,
                            Rng* rng = nullptr);

// Convenience deterministic pass without keeping states.
std::vector<double> forward(const Model& model, std::span<const double> input);

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d logits
};

// Numerically stable -log softmax(logits)[target] and its gradient.
LossGrad cross_entropy(std::span<const double> logits, int target_class);

// Gradient buffers parallel to the model's layers.
struct Gradients {
  std::vector<std::vector<double>> dw;
  std::vector<std::vector<double>> db;

  static Gradients zeros_like(const Model& model);
  void clear();
  void scale(double s);
  void add(const Gradients& other);
};

// Backward through the recorded states; accumulates into `grads` and returns
// the loss for this sample.
double backward(const Model& model, const std::vector<LayerState>& states,
                std::span<const double> logits, int target_class, Gradients& grads);

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  int64_t step = 0;

  static AdamState zeros_like(const Model& model);
};

// One Adam update with bias correction across every parameter tensor.
void adam_step(Model& model, const Gradients& grads, AdamState& state,
               const TrainConfig& config);

std::vector<double> softmax(std::span<const double> logits);

// ---------------- checkpoint io ----------------

struct CheckpointInfo {
  uint32_t version = 0;
  std::string config_hash;
  uint64_t seed = 0;
};

void save_model(const Model& model, const std::filesystem::path& path,
                const std::string& config_hash, uint64_t seed);
Model load_model(const std::filesystem::path& path, CheckpointInfo* info = nullptr);

}  // namespace rockid::nn
