#ifndef ARSCOPE_H
#define ARSCOPE_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  ARS_STATUS_OK = 0,
  ARS_STATUS_NULL_POINTER = 1,
  ARS_STATUS_INVALID_INPUT = 2,
  ARS_STATUS_TRAINING_DIVERGED = 3,
  ARS_STATUS_PARSE = 4,
  ARS_STATUS_IO = 5,
  ARS_STATUS_PANIC = 6,
} ArsStatus;

typedef enum {
  ARS_ALGORITHM_PERCEPTRON = 0,
  ARS_ALGORITHM_LINEAR_SVM = 1,
  ARS_ALGORITHM_RBF_SVM = 2,
  ARS_ALGORITHM_RANDOM_FOREST = 3,
  ARS_ALGORITHM_MLP = 4,
  ARS_ALGORITHM_COSINE = 5,
} ArsAlgorithm;

typedef enum {
  ARS_VOLUME_MODE_BINNED = 0,
  ARS_VOLUME_MODE_SPAN = 1,
} ArsVolumeMode;

/**
 * Opaque model handle.
 */
typedef struct ArsModel ArsModel;

/**
 * Opaque population handle.
 */
typedef struct ArsPopulation ArsPopulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *ars_version(void);

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *ars_last_error(void);

/**
 * Synthetic population with the default moments and the given shape.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
ArsStatus ars_population_generate(size_t users,
                                  size_t features,
                                  size_t samples_per_user,
                                  uint64_t seed,
                                  ArsPopulation **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
ArsStatus ars_population_load_csv(const char *path, ArsPopulation **out);

/**
 * # Safety
 * `pop` must be a live handle and `path` a NUL-terminated string.
 */
ArsStatus ars_population_save_csv(const ArsPopulation *pop, const char *path);

/**
 * Min-max normalizes the population in place.
 *
 * # Safety
 * `pop` must be a live handle.
 */
ArsStatus ars_population_normalize(ArsPopulation *pop);

/**
 * # Safety
 * `pop` must be a live handle or null.
 */
size_t ars_population_user_count(const ArsPopulation *pop);

/**
 * # Safety
 * `pop` must be a live handle or null.
 */
size_t ars_population_feature_count(const ArsPopulation *pop);

/**
 * # Safety
 * `pop` must come from this library and not be used afterwards.
 */
void ars_population_free(ArsPopulation *pop);

/**
 * Trains `user` against a balanced sample of the other users, on the
 * train partition of a `train_fraction` split. Default hyperparameters.
 *
 * # Safety
 * `pop` must be a live handle and `out` writable.
 */
ArsStatus ars_model_train(const ArsPopulation *pop,
                          uint32_t user,
                          ArsAlgorithm algorithm,
                          double train_fraction,
                          uint64_t seed,
                          ArsModel **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
ArsStatus ars_model_load(const char *path, ArsModel **out);

/**
 * # Safety
 * `model` must be a live handle and `path` a NUL-terminated string.
 */
ArsStatus ars_model_save(const ArsModel *model, const char *path);

/**
 * # Safety
 * `model` must be a live handle or null.
 */
size_t ars_model_feature_count(const ArsModel *model);

/**
 * # Safety
 * `model` must come from this library and not be used afterwards.
 */
void ars_model_free(ArsModel *model);

/**
 * Score in `[0, 1]` of one feature vector in normalized space.
 *
 * # Safety
 * `x` must point to `len` doubles and `score` be writable.
 */
ArsStatus ars_model_score(const ArsModel *model, const double *x, size_t len, double *score);

/**
 * Monte Carlo acceptance fraction at one threshold.
 *
 * # Safety
 * `model` must be a live handle; `ar` and `std_error` writable.
 */
ArsStatus ars_estimate_ar(const ArsModel *model,
                          uint64_t samples,
                          uint64_t seed,
                          double threshold,
                          double *ar,
                          double *std_error);

/**
 * Writes `count` beta-noise vectors row-major into `out`, which must hold
 * `count * features` doubles.
 *
 * # Safety
 * `means` must point to `features` doubles and `out` to `count * features`.
 */
ArsStatus ars_beta_noise(const double *means,
                         size_t features,
                         size_t count,
                         uint64_t seed,
                         double *out);

/**
 * log10 volume of the bins filled by `rows` row-major samples.
 *
 * # Safety
 * `samples` must point to `rows * features` doubles; `log10_volume` writable.
 */
ArsStatus ars_region_volume(const double *samples,
                            size_t rows,
                            size_t features,
                            size_t bins,
                            size_t cutoff,
                            ArsVolumeMode mode,
                            double *log10_volume);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ARSCOPE_H */
