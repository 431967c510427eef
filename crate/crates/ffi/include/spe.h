#ifndef SPE_H
#define SPE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SpeHardness {
  SPE_HARDNESS_ABSOLUTE = 0,
  SPE_HARDNESS_SQUARED = 1,
  SPE_HARDNESS_CROSS_ENTROPY = 2,
} SpeHardness;

typedef enum SpeLearnerKind {
  SPE_LEARNER_KIND_TREE = 0,
  SPE_LEARNER_KIND_ADA_BOOST = 1,
} SpeLearnerKind;

typedef enum SpeMethod {
  SPE_METHOD_SPE = 0,
  SPE_METHOD_EASY = 1,
  SPE_METHOD_CASCADE = 2,
  SPE_METHOD_RAND_UNDER = 3,
  SPE_METHOD_RAND_OVER = 4,
  SPE_METHOD_NONE = 5,
} SpeMethod;

/**
 * Result code of every call.
 */
typedef enum SpeStatus {
  SPE_STATUS_OK = 0,
  SPE_STATUS_NULL_POINTER = 1,
  SPE_STATUS_INVALID_INPUT = 2,
  SPE_STATUS_INVALID_MODEL = 3,
  SPE_STATUS_DIMENSION = 4,
  SPE_STATUS_RANGE = 5,
  SPE_STATUS_PARAMETER = 6,
  SPE_STATUS_PARSE = 7,
  SPE_STATUS_LABEL = 8,
  SPE_STATUS_IO = 9,
  SPE_STATUS_SERIALIZATION = 10,
  SPE_STATUS_CALLBACK = 11,
  SPE_STATUS_PANIC = 12,
} SpeStatus;

/**
 * Opaque labelled dataset.
 */
typedef struct SpeDataset SpeDataset;

/**
 * Opaque trained ensemble.
 */
typedef struct SpeModel SpeModel;

/**
 * Training settings. Obtain defaults from [`spe_fit_config_default`].
 */
typedef struct SpeFitConfig {
  enum SpeMethod method;
  size_t n_estimators;
  size_t k_bins;
  enum SpeHardness hardness;
  double alpha_cap;
  /**
   * Cascade keep rate in (0, 1]; zero or negative selects the default.
   */
  double keep_fp_rate;
  uint64_t seed;
} SpeFitConfig;

/**
 * Built-in learner settings. Obtain defaults from [`spe_learner_config_default`].
 */
typedef struct SpeLearnerConfig {
  enum SpeLearnerKind kind;
  size_t max_depth;
  size_t min_samples_split;
  double min_impurity_decrease;
  size_t ada_estimators;
  size_t weak_depth;
  double learning_rate;
} SpeLearnerConfig;

/**
 * Caller-supplied classifier.
 *
 * `fit` trains on a row-major matrix and stores an opaque model in
 * `*model_out`; `predict` writes `P(y = 1 | row)` to `*proba_out`;
 * `free_model` releases a model. Nonzero returns signal failure.
 */
typedef struct SpeExternalLearner {
  void *user_data;
  int32_t (*fit)(void *user_data,
                 const double *features,
                 size_t n_rows,
                 size_t n_features,
                 const uint8_t *labels,
                 uint64_t seed,
                 void **model_out);
  int32_t (*predict)(void *user_data,
                     const void *model,
                     const double *row,
                     size_t n_features,
                     double *proba_out);
  void (*free_model)(void *user_data, void *model);
} SpeExternalLearner;

/**
 * Threshold metrics and AUCPRC of one scored sample.
 */
typedef struct SpeMetrics {
  double aucprc;
  double f1;
  double gmean;
  double mcc;
  double precision;
  double recall;
  double threshold;
} SpeMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *spe_last_error(void);

/**
 * Copies a row-major `n_rows × n_features` matrix and its labels.
 */
enum SpeStatus spe_dataset_new(const double *features,
                               size_t n_rows,
                               size_t n_features,
                               const uint8_t *labels,
                               struct SpeDataset **dataset_out);

/**
 * Generates a 4×4 checkerboard of Gaussians.
 */
enum SpeStatus spe_dataset_checkerboard(double cov_scale,
                                        size_t n_minority,
                                        size_t n_majority,
                                        uint64_t seed,
                                        struct SpeDataset **dataset_out);

/**
 * Loads a CSV with a header row; the last column is the label and `1` the
 * positive value.
 */
enum SpeStatus spe_dataset_load_csv(const char *path, struct SpeDataset **dataset_out);

size_t spe_dataset_n_rows(const struct SpeDataset *dataset);

size_t spe_dataset_n_features(const struct SpeDataset *dataset);

size_t spe_dataset_n_minority(const struct SpeDataset *dataset);

/**
 * Copies the feature matrix (`n_rows × n_features` doubles) and the labels
 * (`n_rows` bytes); either destination may be null to skip it.
 */
enum SpeStatus spe_dataset_copy(const struct SpeDataset *dataset,
                                double *features_out,
                                uint8_t *labels_out);

void spe_dataset_free(struct SpeDataset *dataset);

struct SpeFitConfig spe_fit_config_default(void);

struct SpeLearnerConfig spe_learner_config_default(void);

/**
 * Trains an ensemble of built-in learners.
 */
enum SpeStatus spe_fit(const struct SpeDataset *dataset,
                       const struct SpeFitConfig *config,
                       const struct SpeLearnerConfig *learner,
                       struct SpeModel **model_out);

/**
 * Trains an ensemble of caller-supplied classifiers. The callback table is
 * copied; `user_data` must outlive the returned model.
 */
enum SpeStatus spe_fit_external(const struct SpeDataset *dataset,
                                const struct SpeFitConfig *config,
                                const struct SpeExternalLearner *learner,
                                struct SpeModel **model_out);

size_t spe_model_n_members(const struct SpeModel *model);

size_t spe_model_n_features(const struct SpeModel *model);

/**
 * Scores `n_rows` rows of a row-major matrix into `scores_out`.
 */
enum SpeStatus spe_predict(const struct SpeModel *model,
                           const double *features,
                           size_t n_rows,
                           size_t n_features,
                           double *scores_out);

/**
 * Serializes a built-in model to JSON. Release the string with
 * [`spe_string_free`].
 */
enum SpeStatus spe_model_to_json(const struct SpeModel *model, char **json_out);

enum SpeStatus spe_model_from_json(const char *json, struct SpeModel **model_out);

void spe_model_free(struct SpeModel *model);

void spe_string_free(char *s);

enum SpeStatus spe_aucprc(const uint8_t *labels,
                          const double *scores,
                          size_t n,
                          double *aucprc_out);

enum SpeStatus spe_evaluate(const uint8_t *labels,
                            const double *scores,
                            size_t n,
                            double threshold,
                            struct SpeMetrics *metrics_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPE_H */
