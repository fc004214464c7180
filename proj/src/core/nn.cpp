#include "core/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "core/binio.hpp"
#include "core/common.hpp"

namespace rockid::nn {

void CnnConfig::validate() const {
  if (conv_channels[0] < 1 || conv_channels[1] < 1)
    fail(Status::InvalidArgument, "cnn: conv channels must be >= 1");
  if (kernel_size < 1) fail(Status::InvalidArgument, "cnn: kernel_size must be >= 1");
  if (pool_size < 1) fail(Status::InvalidArgument, "cnn: pool_size must be >= 1");
  if (hidden_units < 1) fail(Status::InvalidArgument, "cnn: hidden_units must be >= 1");
  if (num_classes < 2) fail(Status::InvalidArgument, "cnn: num_classes must be >= 2");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    fail(Status::InvalidArgument, "cnn: dropout_rate must be in [0,1)");
  if (input_length < kernel_size)
    fail(Status::InvalidArgument, "cnn: input_length shorter than kernel");
  if (pool1_out_length() < kernel_size || pool2_out_length() < 1)
    fail(Status::InvalidArgument, "cnn: input_length too short for the conv/pool stack");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) fail(Status::InvalidArgument, "train: learning_rate must be > 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    fail(Status::InvalidArgument, "train: adam betas must be in [0,1)");
  if (!(adam_epsilon > 0.0)) fail(Status::InvalidArgument, "train: adam_epsilon must be > 0");
  if (batch_size < 1) fail(Status::InvalidArgument, "train: batch_size must be >= 1");
  if (max_epochs < 1) fail(Status::InvalidArgument, "train: max_epochs must be >= 1");
  if (patience < 1) fail(Status::InvalidArgument, "train: patience must be >= 1");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    fail(Status::InvalidArgument, "train: validation_fraction must be in (0,1)");
  if (mc_passes < 1) fail(Status::InvalidArgument, "train: mc_passes must be >= 1");
  if (!(unknown_threshold >= 0.0 && unknown_threshold < 1.0))
    fail(Status::InvalidArgument, "train: unknown_threshold must be in [0,1)");
}

// ---------------- layers ----------------

namespace {

class Conv1d final : public Layer {
 public:
  Conv1d(int in_ch, int out_ch, int k) : in_ch_(in_ch), out_ch_(out_ch), k_(k) {
    w.assign(static_cast<size_t>(out_ch) * in_ch * k, 0.0);
    b.assign(static_cast<size_t>(out_ch), 0.0);
  }

  std::string kind() const override { return "conv1d"; }

  Act forward(const Act& in, LayerState& st, DropoutMode, Rng*) const override {
    if (in.channels != in_ch_)
      fail(Status::ShapeMismatch, "conv1d: expected " + std::to_string(in_ch_) + " channels");
    if (in.length < k_) fail(Status::ShapeMismatch, "conv1d: input shorter than kernel");
    st.input = in;
    const int out_len = in.length - k_ + 1;
    Act out;
    out.channels = out_ch_;
    out.length = out_len;
    out.v.assign(static_cast<size_t>(out_ch_) * out_len, 0.0);
    for (int o = 0; o < out_ch_; ++o) {
      double* dst = out.v.data() + static_cast<size_t>(o) * out_len;
      for (int i = 0; i < out_len; ++i) dst[i] = b[static_cast<size_t>(o)];
      for (int c = 0; c < in_ch_; ++c) {
        const double* src = in.v.data() + static_cast<size_t>(c) * in.length;
        const double* ker = w.data() + (static_cast<size_t>(o) * in_ch_ + c) * k_;
        for (int t = 0; t < k_; ++t) {
          const double wt = ker[t];
          const double* s = src + t;
          for (int i = 0; i < out_len; ++i) dst[i] += wt * s[i];
        }
      }
    }
    return out;
  }

  Act backward(const LayerState& st, const Act& g, std::vector<double>& dw,
               std::vector<double>& db) const override {
    const Act& in = st.input;
    const int out_len = g.length;
    Act gin;
    gin.channels = in.channels;
    gin.length = in.length;
    gin.v.assign(in.v.size(), 0.0);
    for (int o = 0; o < out_ch_; ++o) {
      const double* go = g.v.data() + static_cast<size_t>(o) * out_len;
      for (int i = 0; i < out_len; ++i) db[static_cast<size_t>(o)] += go[i];
      for (int c = 0; c < in_ch_; ++c) {
        const double* src = in.v.data() + static_cast<size_t>(c) * in.length;
        double* gsrc = gin.v.data() + static_cast<size_t>(c) * in.length;
        double* dker = dw.data() + (static_cast<size_t>(o) * in_ch_ + c) * k_;
        const double* ker = w.data() + (static_cast<size_t>(o) * in_ch_ + c) * k_;
        for (int t = 0; t < k_; ++t) {
          double acc = 0.0;
          const double* s = src + t;
          double* gs = gsrc + t;
          const double wt = ker[t];
          for (int i = 0; i < out_len; ++i) {
            acc += go[i] * s[i];
            gs[i] += wt * go[i];
          }
          dker[t] += acc;
        }
      }
    }
    return gin;
  }

 private:
  int in_ch_, out_ch_, k_;
};

class Relu final : public Layer {
 public:
  std::string kind() const override { return "relu"; }

  Act forward(const Act& in, LayerState& st, DropoutMode, Rng*) const override {
    st.input = in;
    Act out = in;
    for (double& x : out.v) x = x > 0.0 ? x : 0.0;
    return out;
  }

  Act backward(const LayerState& st, const Act& g, std::vector<double>&,
               std::vector<double>&) const override {
    Act gin = g;
    for (size_t i = 0; i < gin.v.size(); ++i)
      if (!(st.input.v[i] > 0.0)) gin.v[i] = 0.0;
    return gin;
  }
};

class MaxPool final : public Layer {
 public:
  explicit MaxPool(int p) : p_(p) {}

  std::string kind() const override { return "maxpool"; }

  Act forward(const Act& in, LayerState& st, DropoutMode, Rng*) const override {
    st.input = in;
    const int out_len = in.length / p_;
    Act out;
    out.channels = in.channels;
    out.length = out_len;
    out.v.assign(static_cast<size_t>(in.channels) * out_len, 0.0);
    st.argmax.assign(out.v.size(), 0);
    for (int c = 0; c < in.channels; ++c) {
      const double* src = in.v.data() + static_cast<size_t>(c) * in.length;
      double* dst = out.v.data() + static_cast<size_t>(c) * out_len;
      int* amax = st.argmax.data() + static_cast<size_t>(c) * out_len;
      for (int i = 0; i < out_len; ++i) {
        int best = i * p_;
        double bv = src[best];
        for (int j = 1; j < p_; ++j) {
          int idx = i * p_ + j;
          if (src[idx] > bv) {
            bv = src[idx];
            best = idx;
          }
        }
        dst[i] = bv;
        amax[i] = best;
      }
    }
    return out;
  }

  Act backward(const LayerState& st, const Act& g, std::vector<double>&,
               std::vector<double>&) const override {
    Act gin;
    gin.channels = st.input.channels;
    gin.length = st.input.length;
    gin.v.assign(st.input.v.size(), 0.0);
    const int out_len = g.length;
    for (int c = 0; c < g.channels; ++c) {
      const double* go = g.v.data() + static_cast<size_t>(c) * out_len;
      const int* amax = st.argmax.data() + static_cast<size_t>(c) * out_len;
      double* gi = gin.v.data() + static_cast<size_t>(c) * gin.length;
      for (int i = 0; i < out_len; ++i) gi[amax[i]] += go[i];
    }
    return gin;
  }

 private:
  int p_;
};

class Dropout final : public Layer {
 public:
  explicit Dropout(double rate) : rate_(rate) {}

  std::string kind() const override { return "dropout"; }

  Act forward(const Act& in, LayerState& st, DropoutMode mode, Rng* rng) const override {
    st.input = in;
    if (mode == DropoutMode::Off || rate_ == 0.0) {
      st.mask.clear();
      return in;
    }
    if (mode == DropoutMode::Sample) {
      if (!rng) fail(Status::Internal, "dropout: sampling requires an rng");
      st.mask.resize(in.v.size());
      for (auto& m : st.mask) m = rng->uniform() >= rate_ ? 1 : 0;
    } else if (st.mask.size() != in.v.size()) {
      fail(Status::Internal, "dropout: replay without a recorded mask");
    }
    const double scale = 1.0 / (1.0 - rate_);
    Act out = in;
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = st.mask[i] ? out.v[i] * scale : 0.0;
    return out;
  }

  Act backward(const LayerState& st, const Act& g, std::vector<double>&,
               std::vector<double>&) const override {
    if (st.mask.empty()) return g;  // pass-through (inactive or rate 0)
    const double scale = 1.0 / (1.0 - rate_);
    Act gin = g;
    for (size_t i = 0; i < gin.v.size(); ++i) gin.v[i] = st.mask[i] ? gin.v[i] * scale : 0.0;
    return gin;
  }

 private:
  double rate_;
};

class Dense final : public Layer {
 public:
  Dense(int in_size, int out_size) : in_(in_size), out_(out_size) {
    w.assign(static_cast<size_t>(out_size) * in_size, 0.0);
    b.assign(static_cast<size_t>(out_size), 0.0);
  }

  std::string kind() const override { return "dense"; }

  Act forward(const Act& in, LayerState& st, DropoutMode, Rng*) const override {
    if (static_cast<int>(in.v.size()) != in_)
      fail(Status::ShapeMismatch, "dense: expected input of size " + std::to_string(in_) +
                                      ", got " + std::to_string(in.v.size()));
    st.input = in;
    Act out;
    out.channels = 1;
    out.length = out_;
    out.v.assign(static_cast<size_t>(out_), 0.0);
    for (int o = 0; o < out_; ++o) {
      const double* row = w.data() + static_cast<size_t>(o) * in_;
      double acc = b[static_cast<size_t>(o)];
      for (int i = 0; i < in_; ++i) acc += row[i] * in.v[static_cast<size_t>(i)];
      out.v[static_cast<size_t>(o)] = acc;
    }
    return out;
  }

  Act backward(const LayerState& st, const Act& g, std::vector<double>& dw,
               std::vector<double>& db) const override {
    Act gin;
    gin.channels = st.input.channels;
    gin.length = st.input.length;
    gin.v.assign(st.input.v.size(), 0.0);
    for (int o = 0; o < out_; ++o) {
      const double go = g.v[static_cast<size_t>(o)];
      db[static_cast<size_t>(o)] += go;
      const double* row = w.data() + static_cast<size_t>(o) * in_;
      double* drow = dw.data() + static_cast<size_t>(o) * in_;
      for (int i = 0; i < in_; ++i) {
        drow[i] += go * st.input.v[static_cast<size_t>(i)];
        gin.v[static_cast<size_t>(i)] += go * row[i];
      }
    }
    return gin;
  }

 private:
  int in_, out_;
};

void init_uniform(std::vector<double>& w, int fan_in, Rng& rng) {
  double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& x : w) x = rng.uniform(-bound, bound);
}

}  // namespace

std::unique_ptr<Layer> make_conv1d(int in_channels, int out_channels, int kernel_size) {
  return std::make_unique<Conv1d>(in_channels, out_channels, kernel_size);
}
std::unique_ptr<Layer> make_relu() { return std::make_unique<Relu>(); }
std::unique_ptr<Layer> make_maxpool(int pool_size) { return std::make_unique<MaxPool>(pool_size); }
std::unique_ptr<Layer> make_dropout(double rate) { return std::make_unique<Dropout>(rate); }
std::unique_ptr<Layer> make_dense(int in_size, int out_size) {
  return std::make_unique<Dense>(in_size, out_size);
}

// ---------------- model assembly ----------------

namespace {

void rebuild_layers(Model& model) {
  model.layers.clear();
  if (model.model_kind == ModelKind::Cnn) {
    const CnnConfig& c = model.cnn;
    model.layers.push_back(make_conv1d(1, c.conv_channels[0], c.kernel_size));
    model.layers.push_back(make_relu());
    model.layers.push_back(make_maxpool(c.pool_size));
    model.layers.push_back(make_dropout(c.dropout_rate));
    model.layers.push_back(make_conv1d(c.conv_channels[0], c.conv_channels[1], c.kernel_size));
    model.layers.push_back(make_relu());
    model.layers.push_back(make_maxpool(c.pool_size));
    model.layers.push_back(make_dropout(c.dropout_rate));
    model.layers.push_back(make_dense(c.flattened_size(), c.hidden_units));
    model.layers.push_back(make_relu());
    model.layers.push_back(make_dropout(c.dropout_rate));
    model.layers.push_back(make_dense(c.hidden_units, c.num_classes));
  } else {
    int prev = model.input_length;
    for (int h : model.mlp_hidden) {
      model.layers.push_back(make_dense(prev, h));
      model.layers.push_back(make_relu());
      model.layers.push_back(make_dropout(model.dropout_rate));
      prev = h;
    }
    model.layers.push_back(make_dense(prev, model.num_classes));
  }
}

void init_params(Model& model, Rng& rng) {
  for (auto& layer : model.layers) {
    if (layer->w.empty()) continue;
    int fan_in = static_cast<int>(layer->w.size() / layer->b.size());
    init_uniform(layer->w, fan_in, rng);
    init_uniform(layer->b, fan_in, rng);
  }
}

}  // namespace

Model build_cnn(const CnnConfig& config, const GridSpec& grid,
                const std::vector<std::string>& class_names, bool uncertainty, Rng& rng) {
  config.validate();
  grid.validate();
  if (static_cast<int>(class_names.size()) != config.num_classes)
    fail(Status::InvalidArgument, "build_cnn: class_names size != num_classes");
  if (grid.num_points != config.input_length)
    fail(Status::ShapeMismatch, "build_cnn: grid num_points != input_length");
  Model m;
  m.model_kind = ModelKind::Cnn;
  m.cnn = config;
  m.input_length = config.input_length;
  m.num_classes = config.num_classes;
  m.dropout_rate = config.dropout_rate;
  m.uncertainty = uncertainty;
  m.grid = grid;
  m.class_names = class_names;
  rebuild_layers(m);
  init_params(m, rng);
  return m;
}

Model build_mlp(const std::vector<int>& hidden_layers, int input_length, int num_classes,
                double dropout_rate, const GridSpec& grid,
                const std::vector<std::string>& class_names, bool uncertainty, Rng& rng) {
  if (num_classes < 2) fail(Status::InvalidArgument, "build_mlp: num_classes must be >= 2");
  if (static_cast<int>(class_names.size()) != num_classes)
    fail(Status::InvalidArgument, "build_mlp: class_names size != num_classes");
  if (grid.num_points != input_length)
    fail(Status::ShapeMismatch, "build_mlp: grid num_points != input_length");
  for (int h : hidden_layers)
    if (h < 1) fail(Status::InvalidArgument, "build_mlp: hidden sizes must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    fail(Status::InvalidArgument, "build_mlp: dropout_rate must be in [0,1)");
  Model m;
  m.model_kind = ModelKind::Mlp;
  m.mlp_hidden = hidden_layers;
  m.input_length = input_length;
  m.num_classes = num_classes;
  m.dropout_rate = dropout_rate;
  m.uncertainty = uncertainty;
  m.grid = grid;
  m.class_names = class_names;
  rebuild_layers(m);
  init_params(m, rng);
  return m;
}

Model Model::clone() const {
  Model m;
  m.model_kind = model_kind;
  m.cnn = cnn;
  m.mlp_hidden = mlp_hidden;
  m.input_length = input_length;
  m.num_classes = num_classes;
  m.dropout_rate = dropout_rate;
  m.uncertainty = uncertainty;
  m.grid = grid;
  m.class_names = class_names;
  m.history = history;
  m.best_epoch = best_epoch;
  rebuild_layers(m);
  for (size_t i = 0; i < layers.size(); ++i) {
    m.layers[i]->w = layers[i]->w;
    m.layers[i]->b = layers[i]->b;
  }
  return m;
}

std::vector<std::vector<double>*> Model::parameter_tensors() {
  std::vector<std::vector<double>*> out;
  for (auto& l : layers) {
    if (!l->w.empty()) out.push_back(&l->w);
    if (!l->b.empty()) out.push_back(&l->b);
  }
  return out;
}

std::vector<const std::vector<double>*> Model::parameter_tensors() const {
  std::vector<const std::vector<double>*> out;
  for (const auto& l : layers) {
    if (!l->w.empty()) out.push_back(&l->w);
    if (!l->b.empty()) out.push_back(&l->b);
  }
  return out;
}

// ---------------- forward / loss / backward ----------------

std::vector<double> forward(const Model& model, std::span<const double> input,
                            std::vector<LayerState>& states, DropoutMode mode, Rng* rng) {
  if (static_cast<int>(input.size()) != model.input_length)
    fail(Status::ShapeMismatch, "forward: input length " + std::to_string(input.size()) +
                                    " != model input_length " +
                                    std::to_string(model.input_length));
  states.resize(model.layers.size());
  Act act;
  act.channels = 1;
  act.length = model.input_length;
  act.v.assign(input.begin(), input.end());
  for (size_t i = 0; i < model.layers.size(); ++i)
    act = model.layers[i]->forward(act, states[i], mode, rng);
  return act.v;
}

std::vector<double> forward(const Model& model, std::span<const double> input) {
  std::vector<LayerState> states;
  return forward(model, input, states, DropoutMode::Off, nullptr);
}

std::vector<double> softmax(std::span<const double> logits) {
  double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (double& x : p) x /= sum;
  return p;
}

LossGrad cross_entropy(std::span<const double> logits, int target_class) {
  if (target_class < 0 || static_cast<size_t>(target_class) >= logits.size())
    fail(Status::InvalidArgument, "cross_entropy: target class out of range");
  LossGrad out;
  out.grad = softmax(logits);
  // loss = -log p[t], computed from the stabilized log-sum-exp directly.
  double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - mx);
  out.loss = std::log(sum) - (logits[static_cast<size_t>(target_class)] - mx);
  out.grad[static_cast<size_t>(target_class)] -= 1.0;
  return out;
}

Gradients Gradients::zeros_like(const Model& model) {
  Gradients g;
  g.dw.resize(model.layers.size());
  g.db.resize(model.layers.size());
  for (size_t i = 0; i < model.layers.size(); ++i) {
    g.dw[i].assign(model.layers[i]->w.size(), 0.0);
    g.db[i].assign(model.layers[i]->b.size(), 0.0);
  }
  return g;
}

void Gradients::clear() {
  for (auto& v : dw) std::fill(v.begin(), v.end(), 0.0);
  for (auto& v : db) std::fill(v.begin(), v.end(), 0.0);
}

void Gradients::scale(double s) {
  for (auto& v : dw)
    for (double& x : v) x *= s;
  for (auto& v : db)
    for (double& x : v) x *= s;
}

void Gradients::add(const Gradients& other) {
  for (size_t i = 0; i < dw.size(); ++i) {
    for (size_t j = 0; j < dw[i].size(); ++j) dw[i][j] += other.dw[i][j];
    for (size_t j = 0; j < db[i].size(); ++j) db[i][j] += other.db[i][j];
  }
}

double backward(const Model& model, const std::vector<LayerState>& states,
                std::span<const double> logits, int target_class, Gradients& grads) {
  LossGrad lg = cross_entropy(logits, target_class);
  Act g;
  g.channels = 1;
  g.length = static_cast<int>(lg.grad.size());
  g.v = std::move(lg.grad);
  for (size_t i = model.layers.size(); i-- > 0;)
    g = model.layers[i]->backward(states[i], g, grads.dw[i], grads.db[i]);
  return lg.loss;
}

AdamState AdamState::zeros_like(const Model& model) {
  AdamState s;
  auto tensors = model.parameter_tensors();
  s.m.resize(tensors.size());
  s.v.resize(tensors.size());
  for (size_t i = 0; i < tensors.size(); ++i) {
    s.m[i].assign(tensors[i]->size(), 0.0);
    s.v[i].assign(tensors[i]->size(), 0.0);
  }
  return s;
}

void adam_step(Model& model, const Gradients& grads, AdamState& state,
               const TrainConfig& config) {
  state.step += 1;
  const double b1 = config.adam_beta1, b2 = config.adam_beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));

  size_t t = 0;
  for (size_t li = 0; li < model.layers.size(); ++li) {
    Layer& layer = *model.layers[li];
    for (int part = 0; part < 2; ++part) {
      std::vector<double>& p = part == 0 ? layer.w : layer.b;
      const std::vector<double>& g = part == 0 ? grads.dw[li] : grads.db[li];
      if (p.empty()) continue;
      std::vector<double>& m = state.m[t];
      std::vector<double>& v = state.v[t];
      for (size_t i = 0; i < p.size(); ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        double mhat = m[i] / bc1;
        double vhat = v[i] / bc2;
        p[i] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.adam_epsilon);
      }
      ++t;
    }
  }
}

// ---------------- checkpoint io ----------------

namespace {
constexpr uint32_t kModelMagic = 0x444d4b52;  // "RKMD"
constexpr uint32_t kModelVersion = 1;
}  // namespace

void save_model(const Model& model, const std::filesystem::path& path,
                const std::string& config_hash, uint64_t seed) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(Status::IoError, "cannot write " + path.string());
  binio::put_u32(os, kModelMagic);
  binio::put_u32(os, kModelVersion);
  binio::put_string(os, config_hash);
  binio::put_u64(os, seed);
  binio::put_u8(os, model.model_kind == ModelKind::Cnn ? 0 : 1);
  binio::put_u8(os, model.uncertainty ? 1 : 0);
  binio::put_u32(os, static_cast<uint32_t>(model.input_length));
  binio::put_u32(os, static_cast<uint32_t>(model.num_classes));
  binio::put_f64(os, model.dropout_rate);
  binio::put_u32(os, static_cast<uint32_t>(model.best_epoch));
  binio::put_f64(os, model.grid.min_wavenumber);
  binio::put_f64(os, model.grid.max_wavenumber);
  binio::put_u32(os, static_cast<uint32_t>(model.grid.num_points));
  if (model.model_kind == ModelKind::Cnn) {
    binio::put_u32(os, static_cast<uint32_t>(model.cnn.conv_channels[0]));
    binio::put_u32(os, static_cast<uint32_t>(model.cnn.conv_channels[1]));
    binio::put_u32(os, static_cast<uint32_t>(model.cnn.kernel_size));
    binio::put_u32(os, static_cast<uint32_t>(model.cnn.pool_size));
    binio::put_u32(os, static_cast<uint32_t>(model.cnn.hidden_units));
  } else {
    binio::put_u32(os, static_cast<uint32_t>(model.mlp_hidden.size()));
    for (int h : model.mlp_hidden) binio::put_u32(os, static_cast<uint32_t>(h));
  }
  binio::put_u32(os, static_cast<uint32_t>(model.class_names.size()));
  for (const auto& n : model.class_names) binio::put_string(os, n);
  auto tensors = model.parameter_tensors();
  binio::put_u32(os, static_cast<uint32_t>(tensors.size()));
  for (const auto* t : tensors) binio::put_f64_array(os, *t);
  binio::put_u32(os, static_cast<uint32_t>(model.history.size()));
  for (const auto& h : model.history) {
    binio::put_f64(os, h.train_loss);
    binio::put_f64(os, h.val_loss);
    binio::put_f64(os, h.val_accuracy);
  }
  if (!os) fail(Status::IoError, "write failed: " + path.string());
}

Model load_model(const std::filesystem::path& path, CheckpointInfo* info) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(Status::IoError, "cannot read " + path.string());
  if (binio::get_u32(is) != kModelMagic)
    fail(Status::ParseError, path.string() + ": not a model checkpoint");
  uint32_t version = binio::get_u32(is);
  if (version != kModelVersion)
    fail(Status::ParseError, path.string() + ": unsupported checkpoint version");
  std::string config_hash = binio::get_string(is);
  uint64_t seed = binio::get_u64(is);
  if (info) {
    info->version = version;
    info->config_hash = config_hash;
    info->seed = seed;
  }
  Model m;
  m.model_kind = binio::get_u8(is) == 0 ? ModelKind::Cnn : ModelKind::Mlp;
  m.uncertainty = binio::get_u8(is) != 0;
  m.input_length = static_cast<int>(binio::get_u32(is));
  m.num_classes = static_cast<int>(binio::get_u32(is));
  m.dropout_rate = binio::get_f64(is);
  m.best_epoch = static_cast<int>(binio::get_u32(is));
  m.grid.min_wavenumber = binio::get_f64(is);
  m.grid.max_wavenumber = binio::get_f64(is);
  m.grid.num_points = static_cast<int>(binio::get_u32(is));
  if (m.model_kind == ModelKind::Cnn) {
    m.cnn.conv_channels[0] = static_cast<int>(binio::get_u32(is));
    m.cnn.conv_channels[1] = static_cast<int>(binio::get_u32(is));
    m.cnn.kernel_size = static_cast<int>(binio::get_u32(is));
    m.cnn.pool_size = static_cast<int>(binio::get_u32(is));
    m.cnn.hidden_units = static_cast<int>(binio::get_u32(is));
    m.cnn.num_classes = m.num_classes;
    m.cnn.dropout_rate = m.dropout_rate;
    m.cnn.input_length = m.input_length;
  } else {
    uint32_t nh = binio::get_u32(is);
    m.mlp_hidden.resize(nh);
    for (uint32_t i = 0; i < nh; ++i) m.mlp_hidden[i] = static_cast<int>(binio::get_u32(is));
  }
  uint32_t nc = binio::get_u32(is);
  m.class_names.resize(nc);
  for (uint32_t i = 0; i < nc; ++i) m.class_names[i] = binio::get_string(is);
  rebuild_layers(m);
  auto tensors = m.parameter_tensors();
  uint32_t nt = binio::get_u32(is);
  if (nt != tensors.size())
    fail(Status::ParseError, path.string() + ": tensor count mismatch");
  for (auto* t : tensors) {
    std::vector<double> data = binio::get_f64_array(is);
    if (data.size() != t->size())
      fail(Status::ParseError, path.string() + ": tensor size mismatch");
    *t = std::move(data);
  }
  uint32_t ne = binio::get_u32(is);
  m.history.resize(ne);
  for (uint32_t i = 0; i < ne; ++i) {
    m.history[i].train_loss = binio::get_f64(is);
    m.history[i].val_loss = binio::get_f64(is);
    m.history[i].val_accuracy = binio::get_f64(is);
  }
  return m;
}

}  // namespace rockid::nn
