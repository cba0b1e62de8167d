#ifndef HAWKEYE_H
#define HAWKEYE_H

#include <stddef.h>
#include <stdint.h>

#if defined(HK_BUILDING_LIBRARY)
#define HK_API __attribute__((visibility("default")))
#else
#define HK_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every fallible call returns a status. On failure hk_last_error() holds a
   one-line description for the calling thread. */
typedef enum hk_status {
  HK_OK = 0,
  HK_ERR_INVALID_ARGUMENT = 1,
  HK_ERR_SHAPE = 2,
  HK_ERR_RANGE = 3,
  HK_ERR_STATE = 4,
  HK_ERR_IO = 5,
  HK_ERR_FORMAT = 6,
  HK_ERR_TRUNCATED = 7,
  HK_ERR_COUNT = 8,
  HK_ERR_CHECKSUM = 9,
  HK_ERR_VERSION = 10,
  HK_ERR_MISMATCH = 11,
  HK_ERR_INTERNAL = 12
} hk_status;

HK_API const char* hk_status_name(hk_status status);
HK_API const char* hk_last_error(void);
HK_API const char* hk_version(void);

/* CRC-32 of a byte buffer (the checksum used for models and containers). */
HK_API uint32_t hk_checksum_bytes(const void* data, size_t size);

/* Progress lines from long-running calls; NULL restores silence. */
typedef void (*hk_log_fn)(const char* line, void* user);
HK_API void hk_set_log_callback(hk_log_fn fn, void* user);

typedef struct hk_dataset hk_dataset;
typedef struct hk_classifier hk_classifier;
typedef struct hk_corpus hk_corpus;
typedef struct hk_aed hk_aed;
typedef struct hk_detector hk_detector;
typedef struct hk_report hk_report;
typedef struct hk_roc hk_roc;
typedef struct hk_pcc hk_pcc;

#define HK_IMAGE_SIDE 28
#define HK_IMAGE_SIZE (HK_IMAGE_SIDE * HK_IMAGE_SIDE)
#define HK_CLASSES 10

/* ---- datasets: N images of 28x28x1 floats in [0,1] with labels ---- */

/* Reads the canonical MNIST IDX files from `dir`; train != 0 picks the
   training split. */
HK_API hk_status hk_dataset_load_mnist(const char* dir, int train, hk_dataset** out);
HK_API hk_status hk_dataset_from_arrays(const float* images, const int* labels, size_t n,
                                        hk_dataset** out);
HK_API hk_status hk_dataset_subset(const hk_dataset* data, size_t begin, size_t count,
                                   hk_dataset** out);
HK_API size_t hk_dataset_size(const hk_dataset* data);
/* Copies image i into `image` (HK_IMAGE_SIZE floats) and its label. */
HK_API hk_status hk_dataset_image(const hk_dataset* data, size_t i, float* image, int* label);
HK_API void hk_dataset_free(hk_dataset* data);

/* ---- classifier ---- */

typedef struct hk_train_config {
  int epochs;
  int batch_size;
  float learning_rate;
  uint64_t seed;
  size_t max_steps; /* 0 = run every epoch */
} hk_train_config;

HK_API void hk_train_config_default(hk_train_config* cfg);

typedef void (*hk_progress_fn)(int epoch, size_t step, float loss, void* user);

HK_API hk_status hk_classifier_build(uint64_t seed, hk_classifier** out);
HK_API hk_status hk_classifier_train(hk_classifier* model, const hk_dataset* train,
                                     const hk_train_config* cfg, hk_progress_fn progress,
                                     void* user, float* final_loss);
HK_API hk_status hk_classifier_accuracy(const hk_classifier* model, const hk_dataset* data,
                                        double* accuracy);
HK_API hk_status hk_classifier_logits(const hk_classifier* model, const float* image,
                                      float* logits);
HK_API hk_status hk_classifier_predict(const hk_classifier* model, const float* image,
                                       int* label);
HK_API hk_status hk_classifier_checksum(const hk_classifier* model, uint32_t* checksum);
HK_API hk_status hk_classifier_set_meta(hk_classifier* model, const char* key, const char* value);
/* Copies a metadata value into `buf`; HK_ERR_RANGE if absent or too long. */
HK_API hk_status hk_classifier_meta(const hk_classifier* model, const char* key, char* buf,
                                    size_t cap);
HK_API hk_status hk_classifier_save(const hk_classifier* model, const char* path);
HK_API hk_status hk_classifier_load(const char* path, hk_classifier** out);
HK_API void hk_classifier_free(hk_classifier* model);

/* ---- corpora: perturbed image sets with provenance ---- */

/* method is "fgsm" or "ifgsm"; m is the budget in 1/255 levels. */
HK_API hk_status hk_corpus_craft(const hk_classifier* crafting, const hk_dataset* source,
                                 const char* method, int m, hk_corpus** out);
/* kind is "brightness", "noise_box" or "black_dots". */
HK_API hk_status hk_corpus_distort(const hk_dataset* source, const char* kind, int l, int n,
                                   int w, uint64_t seed, hk_corpus** out);
HK_API size_t hk_corpus_size(const hk_corpus* corpus);
HK_API hk_status hk_corpus_dataset(const hk_corpus* corpus, hk_dataset** out);
HK_API hk_status hk_corpus_set_meta(hk_corpus* corpus, const char* key, const char* value);
HK_API hk_status hk_corpus_meta(const hk_corpus* corpus, const char* key, char* buf, size_t cap);
HK_API hk_status hk_corpus_save(const hk_corpus* corpus, const char* path);
HK_API hk_status hk_corpus_load(const char* path, hk_corpus** out);
/* Provenance problems found by hk_corpus_load, one line each. */
HK_API size_t hk_corpus_warning_count(const hk_corpus* corpus);
HK_API const char* hk_corpus_warning(const hk_corpus* corpus, size_t i);
HK_API void hk_corpus_free(hk_corpus* corpus);

/* ---- adversarial example detectors ---- */

typedef struct hk_aed_config {
  int eps_max; /* largest training perturbation in 1/255 levels */
  int epochs;
  int batch_size;
  float learning_rate;
  uint64_t seed;
  float threshold;
  int cross_entropy_loss; /* 0 = linear objective */
} hk_aed_config;

HK_API void hk_aed_config_default(hk_aed_config* cfg);

/* Trains one detector per entry of `steps`; out[i] receives the detector for
   steps[i]. Each carries the classifier checksum it was trained against. */
HK_API hk_status hk_aed_train(const hk_classifier* model, const hk_dataset* train,
                              const int* steps, size_t n_steps, const hk_aed_config* cfg,
                              hk_aed** out);
HK_API int hk_aed_step(const hk_aed* aed);
HK_API float hk_aed_threshold(const hk_aed* aed);
HK_API hk_status hk_aed_set_threshold(hk_aed* aed, float threshold);
/* Score of one HK_CLASSES-long difference vector. */
HK_API hk_status hk_aed_score(const hk_aed* aed, const float* z, double* score);
HK_API hk_status hk_aed_checksum(const hk_aed* aed, uint32_t* checksum);
/* *present is 0 when the detector does not record its classifier. */
HK_API hk_status hk_aed_classifier_checksum(const hk_aed* aed, uint32_t* checksum, int* present);
HK_API hk_status hk_aed_set_meta(hk_aed* aed, const char* key, const char* value);
HK_API hk_status hk_aed_meta(const hk_aed* aed, const char* key, char* buf, size_t cap);
HK_API hk_status hk_aed_save(const hk_aed* aed, const char* path);
HK_API hk_status hk_aed_load(const char* path, hk_aed** out);
HK_API void hk_aed_free(hk_aed* aed);

/* A detector ready for evaluation. Constructors copy the detectors given. */
HK_API hk_status hk_detector_single(const hk_aed* aed, hk_detector** out);
HK_API hk_status hk_detector_cascade(const hk_aed* const* members, size_t n, hk_detector** out);
/* Feature-squeezing baseline: flags when ||F(x) - F(q(x))||_1 > tau. */
HK_API hk_status hk_detector_squeeze(int step, double tau, hk_detector** out);
/* Sets tau so that at most target_fpr of `clean` is flagged. */
HK_API hk_status hk_detector_calibrate(hk_detector* detector, const hk_classifier* model,
                                       const hk_dataset* clean, double target_fpr);
HK_API hk_status hk_detector_id(const hk_detector* detector, char* buf, size_t cap);
HK_API hk_status hk_detector_detect(const hk_detector* detector, const hk_classifier* model,
                                    const float* image, int* flagged, double* score);
HK_API void hk_detector_free(hk_detector* detector);

/* ---- evaluation ---- */

typedef struct hk_metrics {
  double dr;      /* valid only when dr_defined */
  int dr_defined; /* 0 when no perturbed image counts toward DR */
  double fpr;
  double asr;
  double asr_ad;
  size_t n_clean;
  size_t n_clean_flagged;
  size_t n_adv;
  size_t n_success;
  size_t n_dr_denominator;
  size_t n_dr_flagged;
  size_t n_evaded;
} hk_metrics;

/* FPR over `clean`; ASR, DR and ASR-AD over `adversarial`. DR counts only
   misclassified perturbed images unless dr_over_all != 0. */
HK_API hk_status hk_evaluate(const hk_detector* detector, const hk_classifier* model,
                             const hk_dataset* clean, const hk_dataset* adversarial,
                             int dr_over_all, hk_metrics* out);

/* Rows of the metrics CSV. */
HK_API hk_status hk_report_create(hk_report** out);
HK_API hk_status hk_report_add(hk_report* report, const char* attack, const char* method, int m,
                               const hk_detector* detector, const hk_metrics* metrics);
HK_API size_t hk_report_size(const hk_report* report);
HK_API hk_status hk_report_get(const hk_report* report, size_t i, int* m, int* step,
                               hk_metrics* metrics);
HK_API hk_status hk_report_write_csv(const hk_report* report, const char* path);
HK_API void hk_report_free(hk_report* report);

/* Step-size x perturbation grid: white-box FGSM at every m in `ms` against
   each single detector, appended to `report` row by row. */
HK_API hk_status hk_eval_grid(const hk_classifier* model, const hk_dataset* test,
                              const hk_aed* const* aeds, size_t n_aeds, const int* ms,
                              size_t n_ms, hk_report* report);

/* ROC of a detector's scores: clean images against the misclassified members
   of `adversarial`. quantile_grid != 0 sweeps 201 score quantiles, otherwise
   201 evenly spaced thresholds in [0,1]. */
HK_API hk_status hk_roc_compute(const hk_detector* detector, const hk_classifier* model,
                                const hk_dataset* clean, const hk_dataset* adversarial,
                                int quantile_grid, hk_roc** out);
HK_API hk_status hk_roc_from_scores(const double* clean, size_t n_clean, const double* adv,
                                    size_t n_adv, const double* thresholds, size_t n_thresholds,
                                    hk_roc** out);
HK_API double hk_roc_auc(const hk_roc* roc);
HK_API size_t hk_roc_size(const hk_roc* roc);
HK_API hk_status hk_roc_point(const hk_roc* roc, size_t i, double* threshold, double* fpr,
                              double* dr);
HK_API hk_status hk_roc_write_csv(const hk_roc* roc, const char* detector_id, const char* path);
HK_API void hk_roc_free(hk_roc* roc);

/* Mean Pearson correlation of difference vectors between step sizes. */
HK_API hk_status hk_pcc_compute(const hk_classifier* model, const hk_dataset* images,
                                const int* steps, size_t n_steps, hk_pcc** out);
HK_API hk_status hk_pcc_get(const hk_pcc* pcc, size_t i, size_t j, double* mean,
                            size_t* n_valid);
HK_API hk_status hk_pcc_write_csv(const hk_pcc* pcc, const char* path);
HK_API void hk_pcc_free(hk_pcc* pcc);

#ifdef __cplusplus
}
#endif

#endif
