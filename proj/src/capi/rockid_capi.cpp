#include "rockid.h"

#include <cstring>
#include <string>

#include <json.hpp>

#include "core/dataset.hpp"
#include "core/eval.hpp"
#include "core/knowledge.hpp"
#include "core/pipeline.hpp"
#include "core/synth.hpp"
#include "core/train.hpp"

using namespace rockid;

struct rockid_dataset {
  LabeledDataset ds;
};
struct rockid_model {
  nn::Model model;
};
struct rockid_kb {
  KnowledgeBase kb;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

rockid_status to_c_status(Status s) { return static_cast<rockid_status>(s); }

// All entry points funnel through here: exceptions never cross the ABI.
template <typename Fn>
rockid_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return ROCKID_OK;
  } catch (const Error& e) {
    set_error(e.what());
    return to_c_status(e.status());
  } catch (const std::exception& e) {
    set_error(e.what());
    return ROCKID_E_INTERNAL;
  } catch (...) {
    set_error("unknown error");
    return ROCKID_E_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(bool cond, const char* what) {
  if (!cond) fail(Status::InvalidArgument, what);
}

GridSpec from_c(const rockid_grid& g) {
  GridSpec out;
  out.min_wavenumber = g.min_wavenumber;
  out.max_wavenumber = g.max_wavenumber;
  out.num_points = g.num_points;
  return out;
}

AugmentConfig from_c(const rockid_augment_config& c) {
  AugmentConfig out;
  out.target_multiplier = c.target_multiplier;
  out.pca_min_samples = c.pca_min_samples;
  out.pca_components = c.pca_components;
  out.coeff_sigma_scale = c.coeff_sigma_scale;
  out.noise_sigma = c.noise_sigma;
  out.shift_max = c.shift_max;
  out.scale_range = {c.scale_min, c.scale_max};
  out.seed = c.seed;
  return out;
}

nn::CnnConfig from_c(const rockid_cnn_config& c) {
  nn::CnnConfig out;
  out.conv_channels = {c.conv1_channels, c.conv2_channels};
  out.kernel_size = c.kernel_size;
  out.pool_size = c.pool_size;
  out.hidden_units = c.hidden_units;
  out.dropout_rate = c.dropout_rate;
  return out;
}

nn::TrainConfig from_c(const rockid_train_config& c) {
  nn::TrainConfig out;
  out.learning_rate = c.learning_rate;
  out.adam_beta1 = c.adam_beta1;
  out.adam_beta2 = c.adam_beta2;
  out.adam_epsilon = c.adam_epsilon;
  out.batch_size = c.batch_size;
  out.max_epochs = c.max_epochs;
  out.patience = c.patience;
  out.validation_fraction = c.validation_fraction;
  out.seed = c.seed;
  out.mc_passes = c.mc_passes;
  out.unknown_threshold = c.unknown_threshold;
  return out;
}

std::vector<std::string> collect_strings(const char* const* arr, int32_t n) {
  require(arr != nullptr && n > 0, "string array is null or empty");
  std::vector<std::string> out;
  out.reserve(static_cast<size_t>(n));
  for (int32_t i = 0; i < n; ++i) {
    require(arr[i] != nullptr, "string array contains a null entry");
    out.emplace_back(arr[i]);
  }
  return out;
}

}  // namespace

extern "C" {

const char* rockid_version(void) { return "1.0.0"; }

const char* rockid_status_name(int status) {
  return status_name(static_cast<Status>(status));
}

const char* rockid_last_error(void) { return g_last_error.c_str(); }

void rockid_string_free(char* s) { delete[] s; }

rockid_grid rockid_grid_default(void) {
  GridSpec g;
  return {g.min_wavenumber, g.max_wavenumber, g.num_points};
}

rockid_augment_config rockid_augment_config_default(void) {
  AugmentConfig c;
  return {c.target_multiplier, c.pca_min_samples, c.pca_components, c.coeff_sigma_scale,
          c.noise_sigma,       c.shift_max,       c.scale_range[0], c.scale_range[1],
          c.seed};
}

rockid_cnn_config rockid_cnn_config_default(void) {
  nn::CnnConfig c;
  return {c.conv_channels[0], c.conv_channels[1], c.kernel_size,
          c.pool_size,        c.hidden_units,     c.dropout_rate};
}

rockid_train_config rockid_train_config_default(void) {
  nn::TrainConfig c;
  return {c.learning_rate, c.adam_beta1, c.adam_beta2,          c.adam_epsilon,
          c.batch_size,    c.max_epochs, c.patience,            c.validation_fraction,
          c.seed,          c.mc_passes,  c.unknown_threshold};
}

/* ---------------- datasets ---------------- */

rockid_status rockid_dataset_ingest_dir(const char* dir, const char* const* class_names,
                                        int32_t num_classes, const rockid_grid* grid,
                                        rockid_dataset** out, char** out_report_json) {
  return guarded([&] {
    require(dir && out, "dir and out must be non-null");
    GridSpec g = grid ? from_c(*grid) : GridSpec{};
    LoadReport report;
    auto ds = load_dataset(dir, collect_strings(class_names, num_classes), g, &report);
    *out = new rockid_dataset{std::move(ds)};
    if (out_report_json) *out_report_json = dup_string(report.to_json());
  });
}

rockid_status rockid_dataset_synthetic(int32_t per_class, const rockid_grid* grid,
                                       double noise_sigma, uint64_t seed,
                                       rockid_dataset** out) {
  return guarded([&] {
    require(out != nullptr, "out must be non-null");
    GridSpec g = grid ? from_c(*grid) : GridSpec{};
    *out = new rockid_dataset{
        make_synthetic_corpus(default_mineral_specs(), per_class, g, noise_sigma, seed)};
  });
}

rockid_status rockid_dataset_synthetic_from_spec(const char* spec_path, int32_t per_class,
                                                 const rockid_grid* grid, double noise_sigma,
                                                 uint64_t seed, rockid_dataset** out) {
  return guarded([&] {
    require(spec_path && out, "spec_path and out must be non-null");
    GridSpec g = grid ? from_c(*grid) : GridSpec{};
    *out = new rockid_dataset{
        make_synthetic_corpus(load_mineral_specs(spec_path), per_class, g, noise_sigma, seed)};
  });
}

rockid_status rockid_dataset_expand(const rockid_dataset* in,
                                    const rockid_augment_config* config, rockid_dataset** out,
                                    char** out_manifest_json) {
  return guarded([&] {
    require(in && out, "in and out must be non-null");
    AugmentConfig cfg = config ? from_c(*config) : AugmentConfig{};
    ExpandManifest manifest;
    *out = new rockid_dataset{expand_dataset(in->ds, cfg, &manifest)};
    if (out_manifest_json) *out_manifest_json = dup_string(manifest.to_json());
  });
}

rockid_status rockid_dataset_save(const rockid_dataset* ds, const char* path,
                                  const char* config_hash, uint64_t seed) {
  return guarded([&] {
    require(ds && path, "ds and path must be non-null");
    save_dataset(ds->ds, path, config_hash ? config_hash : "", seed);
  });
}

rockid_status rockid_dataset_open(const char* path, rockid_dataset** out) {
  return guarded([&] {
    require(path && out, "path and out must be non-null");
    *out = new rockid_dataset{load_dataset_file(path)};
  });
}

int32_t rockid_dataset_num_samples(const rockid_dataset* ds) {
  return ds ? static_cast<int32_t>(ds->ds.num_samples()) : 0;
}

int32_t rockid_dataset_num_classes(const rockid_dataset* ds) {
  return ds ? static_cast<int32_t>(ds->ds.class_names.size()) : 0;
}

const char* rockid_dataset_class_name(const rockid_dataset* ds, int32_t idx) {
  if (!ds || idx < 0 || static_cast<size_t>(idx) >= ds->ds.class_names.size()) return nullptr;
  return ds->ds.class_names[static_cast<size_t>(idx)].c_str();
}

void rockid_dataset_free(rockid_dataset* ds) { delete ds; }

/* ---------------- models ---------------- */

rockid_status rockid_model_train(const rockid_dataset* ds, int32_t kind, int32_t uncertainty,
                                 const rockid_cnn_config* cnn, const rockid_train_config* train,
                                 rockid_model** out, char** out_history_json) {
  return guarded([&] {
    require(ds && out, "ds and out must be non-null");
    nn::TrainConfig tc = train ? from_c(*train) : nn::TrainConfig{};
    nn::Model model = [&] {
      if (kind == ROCKID_MODEL_CNN) {
        nn::CnnConfig cc = cnn ? from_c(*cnn) : nn::CnnConfig{};
        return nn::train(ds->ds, cc, tc, uncertainty != 0);
      }
      if (kind == ROCKID_MODEL_MLP) {
        nn::CnnConfig cc = cnn ? from_c(*cnn) : nn::CnnConfig{};
        return nn::train_mlp(ds->ds, {cc.hidden_units}, tc);
      }
      fail(Status::InvalidArgument, "unknown model kind");
    }();
    if (out_history_json) *out_history_json = dup_string(nn::history_to_json(model));
    *out = new rockid_model{std::move(model)};
  });
}

rockid_status rockid_model_save(const rockid_model* model, const char* path,
                                const char* config_hash, uint64_t seed) {
  return guarded([&] {
    require(model && path, "model and path must be non-null");
    nn::save_model(model->model, path, config_hash ? config_hash : "", seed);
  });
}

rockid_status rockid_model_open(const char* path, rockid_model** out) {
  return guarded([&] {
    require(path && out, "path and out must be non-null");
    *out = new rockid_model{nn::load_model(path)};
  });
}

int32_t rockid_model_is_uncertainty(const rockid_model* model) {
  return model && model->model.uncertainty ? 1 : 0;
}

int32_t rockid_model_num_classes(const rockid_model* model) {
  return model ? model->model.num_classes : 0;
}

const char* rockid_model_class_name(const rockid_model* model, int32_t idx) {
  if (!model || idx < 0 ||
      static_cast<size_t>(idx) >= model->model.class_names.size())
    return nullptr;
  return model->model.class_names[static_cast<size_t>(idx)].c_str();
}

void rockid_model_free(rockid_model* model) { delete model; }

rockid_status rockid_model_predict(const rockid_model* model, const double* wavenumbers,
                                   const double* intensities, int32_t n, int32_t mode,
                                   const rockid_train_config* train, char** out_json) {
  return guarded([&] {
    require(model && wavenumbers && intensities && out_json, "null argument");
    require(n >= 2, "spectrum needs at least 2 points");
    Spectrum s;
    s.wavenumbers.assign(wavenumbers, wavenumbers + n);
    s.intensities.assign(intensities, intensities + n);
    std::vector<double> v = normalize(resample(s, model->model.grid));
    nn::TrainConfig tc = train ? from_c(*train) : nn::TrainConfig{};
    nn::Prediction p = (mode == ROCKID_PREDICT_MC) ? nn::mc_predict(model->model, v, tc)
                                                   : nn::predict(model->model, v);
    nlohmann::json j;
    j["label"] = p.label_name(model->model.class_names);
    j["unknown"] = p.unknown;
    j["max_mean_prob"] = p.max_mean_prob;
    j["mean_probs"] = p.mean_probs;
    j["variance"] = p.variance;
    *out_json = dup_string(j.dump());
  });
}

/* ---------------- knowledge base ---------------- */

rockid_status rockid_kb_default(rockid_kb** out) {
  return guarded([&] {
    require(out != nullptr, "out must be non-null");
    *out = new rockid_kb{default_knowledge_base()};
  });
}

rockid_status rockid_kb_load(const char* path, rockid_kb** out) {
  return guarded([&] {
    require(path && out, "path and out must be non-null");
    *out = new rockid_kb{load_knowledge_base(path)};
  });
}

rockid_status rockid_kb_save(const rockid_kb* kb, const char* path) {
  return guarded([&] {
    require(kb && path, "kb and path must be non-null");
    save_knowledge_base(kb->kb, path);
  });
}

void rockid_kb_free(rockid_kb* kb) { delete kb; }

/* ---------------- classification ---------------- */

rockid_status rockid_classify_labels(const rockid_kb* kb, const char* const* labels, int32_t n,
                                     const char* sample_id, char** out_result_json) {
  return guarded([&] {
    require(kb && out_result_json, "kb and out_result_json must be non-null");
    auto seq = collect_strings(labels, n);
    RockResult r = classify_labels(seq, kb->kb, sample_id ? sample_id : "");
    *out_result_json = dup_string(r.to_json());
  });
}

rockid_status rockid_classify_sample_dir(const rockid_model* model, const rockid_kb* kb,
                                         const char* dir, int32_t mode, int32_t min_points,
                                         const rockid_train_config* train,
                                         char** out_result_json) {
  return guarded([&] {
    require(model && kb && dir && out_result_json, "null argument");
    nn::TrainConfig tc = train ? from_c(*train) : nn::TrainConfig{};
    PipelineMode pm =
        (mode == ROCKID_PREDICT_MC) ? PipelineMode::Uncertainty : PipelineMode::Base;
    RockResult r = classify_sample_dir(dir, model->model, kb->kb, pm, tc,
                                       min_points > 0 ? min_points : kDefaultMinPoints);
    *out_result_json = dup_string(r.to_json());
  });
}

/* ---------------- evaluation ---------------- */

rockid_status rockid_eval_golden(const rockid_kb* kb, const char* fixture_path,
                                 char** out_report_json) {
  return guarded([&] {
    require(kb && fixture_path && out_report_json, "null argument");
    auto cases = load_golden_fixture(fixture_path);
    GoldenReport rep = run_golden_suite(kb->kb, cases);
    *out_report_json = dup_string(rep.to_json());
  });
}

rockid_status rockid_eval_cross_validate(const rockid_dataset* ds, int32_t kind,
                                         int32_t uncertainty, const rockid_cnn_config* cnn,
                                         const rockid_train_config* train, int32_t k,
                                         uint64_t seed, char** out_report_json) {
  return guarded([&] {
    require(ds && out_report_json, "ds and out_report_json must be non-null");
    nn::ModelSpec spec;
    spec.kind = (kind == ROCKID_MODEL_MLP) ? nn::ModelKind::Mlp : nn::ModelKind::Cnn;
    spec.uncertainty = uncertainty != 0;
    if (cnn) spec.cnn = from_c(*cnn);
    if (spec.kind == nn::ModelKind::Mlp) spec.mlp_hidden = {spec.cnn.hidden_units};
    nn::TrainConfig tc = train ? from_c(*train) : nn::TrainConfig{};
    CvReport rep = cross_validate(ds->ds, spec, tc, k, seed);
    *out_report_json = dup_string(rep.to_json());
  });
}

rockid_status rockid_metrics_from_confusion(const int64_t* counts,
                                            const char* const* class_names, int32_t n,
                                            char** out_report_json) {
  return guarded([&] {
    require(counts && out_report_json, "counts and out_report_json must be non-null");
    ConfusionMatrix cm;
    cm.class_names = collect_strings(class_names, n);
    cm.counts.assign(counts, counts + static_cast<size_t>(n) * static_cast<size_t>(n));
    *out_report_json = dup_string(metrics(cm).to_json());
  });
}

} /* extern "C" */
