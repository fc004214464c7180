/* rockid — mineral identification from Raman spectra and rule-based rock
 * classification.
 *
 * C API of the shared library. All functions return ROCKID_OK (0) on success
 * or a nonzero status; rockid_last_error() carries the detail message for the
 * calling thread. Objects returned through out-parameters are owned by the
 * caller and must be released with the matching *_free function. Strings
 * returned through char** out-parameters are released with
 * rockid_string_free().
 */
#ifndef ROCKID_H
#define ROCKID_H

#include <stdint.h>
#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

/* ---------------- status ---------------- */

typedef enum rockid_status {
  ROCKID_OK = 0,
  ROCKID_E_INVALID_ARGUMENT = 1,
  ROCKID_E_IO = 2,
  ROCKID_E_PARSE = 3,
  ROCKID_E_EMPTY_INPUT = 4,
  ROCKID_E_SHAPE_MISMATCH = 5,
  ROCKID_E_TOO_FEW_POINTS = 6,
  ROCKID_E_FIXTURE = 7,
  ROCKID_E_TRAINING = 8,
  ROCKID_E_INTERNAL = 9
} rockid_status;

const char* rockid_version(void);
const char* rockid_status_name(int status);
/* Message of the most recent failure on this thread; empty string if none. */
const char* rockid_last_error(void);
void rockid_string_free(char* s);

/* ---------------- configuration ---------------- */

typedef struct rockid_grid {
  double min_wavenumber; /* cm^-1 */
  double max_wavenumber; /* cm^-1 */
  int32_t num_points;
} rockid_grid;

rockid_grid rockid_grid_default(void); /* 150-1500 cm^-1, 1024 points */

typedef struct rockid_augment_config {
  double target_multiplier; /* per-class total = ceil(multiplier * n) */
  int32_t pca_min_samples;
  int32_t pca_components;
  double coeff_sigma_scale;
  double noise_sigma;
  int32_t shift_max;
  double scale_min;
  double scale_max;
  uint64_t seed;
} rockid_augment_config;

rockid_augment_config rockid_augment_config_default(void);

typedef struct rockid_cnn_config {
  int32_t conv1_channels;
  int32_t conv2_channels;
  int32_t kernel_size;
  int32_t pool_size;
  int32_t hidden_units;
  double dropout_rate;
} rockid_cnn_config;

rockid_cnn_config rockid_cnn_config_default(void);

typedef struct rockid_train_config {
  double learning_rate;
  double adam_beta1;
  double adam_beta2;
  double adam_epsilon;
  int32_t batch_size;
  int32_t max_epochs;
  int32_t patience;
  double validation_fraction;
  uint64_t seed;
  int32_t mc_passes;
  double unknown_threshold;
} rockid_train_config;

rockid_train_config rockid_train_config_default(void);

/* ---------------- datasets ---------------- */

typedef struct rockid_dataset rockid_dataset;

/* Parse/resample/normalize every RRUFF-style file under dir whose ##NAMES is
 * one of class_names. out_report_json (optional) receives the skip/failure
 * report. */
rockid_status rockid_dataset_ingest_dir(const char* dir, const char* const* class_names,
                                        int32_t num_classes, const rockid_grid* grid,
                                        rockid_dataset** out, char** out_report_json);

/* Built-in 14-mineral Gaussian-peak corpus (desk-scale stand-in). */
rockid_status rockid_dataset_synthetic(int32_t per_class, const rockid_grid* grid,
                                       double noise_sigma, uint64_t seed,
                                       rockid_dataset** out);

/* Same, from a key-value mineral spec file. */
rockid_status rockid_dataset_synthetic_from_spec(const char* spec_path, int32_t per_class,
                                                 const rockid_grid* grid, double noise_sigma,
                                                 uint64_t seed, rockid_dataset** out);

/* PCA / direct-variation expansion; out_manifest_json (optional) receives the
 * per-class manifest. */
rockid_status rockid_dataset_expand(const rockid_dataset* in,
                                    const rockid_augment_config* config, rockid_dataset** out,
                                    char** out_manifest_json);

rockid_status rockid_dataset_save(const rockid_dataset* ds, const char* path,
                                  const char* config_hash, uint64_t seed);
rockid_status rockid_dataset_open(const char* path, rockid_dataset** out);

int32_t rockid_dataset_num_samples(const rockid_dataset* ds);
int32_t rockid_dataset_num_classes(const rockid_dataset* ds);
/* NULL when idx is out of range; pointer is valid until the dataset is freed. */
const char* rockid_dataset_class_name(const rockid_dataset* ds, int32_t idx);
void rockid_dataset_free(rockid_dataset* ds);

/* ---------------- models ---------------- */

typedef struct rockid_model rockid_model;

enum rockid_model_kind { ROCKID_MODEL_CNN = 0, ROCKID_MODEL_MLP = 1 };
enum rockid_predict_mode { ROCKID_PREDICT_BASE = 0, ROCKID_PREDICT_MC = 1 };

/* Trains a classifier on the dataset. `uncertainty` keeps dropout active for
 * training and MC inference. out_history_json (optional) receives the
 * per-epoch loss history. */
rockid_status rockid_model_train(const rockid_dataset* ds, int32_t kind, int32_t uncertainty,
                                 const rockid_cnn_config* cnn, const rockid_train_config* train,
                                 rockid_model** out, char** out_history_json);

rockid_status rockid_model_save(const rockid_model* model, const char* path,
                                const char* config_hash, uint64_t seed);
rockid_status rockid_model_open(const char* path, rockid_model** out);

int32_t rockid_model_is_uncertainty(const rockid_model* model);
int32_t rockid_model_num_classes(const rockid_model* model);
const char* rockid_model_class_name(const rockid_model* model, int32_t idx);
void rockid_model_free(rockid_model* model);

/* Predict the mineral for one raw spectrum (resampled onto the model grid
 * internally). Result is a JSON record with label, mean probabilities and
 * per-class variance. `train` supplies mc_passes / unknown_threshold / seed
 * for MC mode and may be NULL for defaults. */
rockid_status rockid_model_predict(const rockid_model* model, const double* wavenumbers,
                                   const double* intensities, int32_t n, int32_t mode,
                                   const rockid_train_config* train, char** out_json);

/* ---------------- knowledge base ---------------- */

typedef struct rockid_kb rockid_kb;

rockid_status rockid_kb_default(rockid_kb** out);
rockid_status rockid_kb_load(const char* path, rockid_kb** out);
rockid_status rockid_kb_save(const rockid_kb* kb, const char* path);
void rockid_kb_free(rockid_kb* kb);

/* ---------------- classification ---------------- */

/* Oracle-labels mode: classify a mineral label sequence directly. */
rockid_status rockid_classify_labels(const rockid_kb* kb, const char* const* labels, int32_t n,
                                     const char* sample_id, char** out_result_json);

/* Spectral mode: one directory = one sample, one spectrum file per
 * measurement point. */
rockid_status rockid_classify_sample_dir(const rockid_model* model, const rockid_kb* kb,
                                         const char* dir, int32_t mode, int32_t min_points,
                                         const rockid_train_config* train,
                                         char** out_result_json);

/* ---------------- evaluation ---------------- */

rockid_status rockid_eval_golden(const rockid_kb* kb, const char* fixture_path,
                                 char** out_report_json);

rockid_status rockid_eval_cross_validate(const rockid_dataset* ds, int32_t kind,
                                         int32_t uncertainty, const rockid_cnn_config* cnn,
                                         const rockid_train_config* train, int32_t k,
                                         uint64_t seed, char** out_report_json);

/* Metrics report (accuracy, per-class precision/recall/f1) from a row-major
 * confusion matrix over n classes. */
rockid_status rockid_metrics_from_confusion(const int64_t* counts,
                                            const char* const* class_names, int32_t n,
                                            char** out_report_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* ROCKID_H */
