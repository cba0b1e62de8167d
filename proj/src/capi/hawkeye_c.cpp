#include "hawkeye.h"

#include <cstring>
#include <new>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "attacks/attacks.hpp"
#include "common/error.hpp"
#include "common/log.hpp"
#include "dataio/checkpoint.hpp"
#include "dataio/idx.hpp"
#include "detector/train.hpp"
#include "distortions/distortions.hpp"
#include "evalkit/experiments.hpp"

using namespace hawkeye;

struct hk_dataset {
  LabeledDataset data;
};

struct hk_classifier {
  Classifier model;
  Metadata meta;
};

struct hk_corpus {
  Corpus corpus;
  std::vector<std::string> warnings;
};

struct hk_aed {
  Aed aed;
  Metadata meta;
};

struct hk_detector {
  EvalDetector det;
};

struct hk_report {
  std::vector<MetricsRow> rows;
};

struct hk_roc {
  RocCurve curve;
};

struct hk_pcc {
  PccMatrix matrix;
};

namespace {

thread_local std::string last_error;

hk_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return HK_ERR_INVALID_ARGUMENT;
    case ErrorCode::shape_mismatch: return HK_ERR_SHAPE;
    case ErrorCode::out_of_range: return HK_ERR_RANGE;
    case ErrorCode::bad_state: return HK_ERR_STATE;
    case ErrorCode::io: return HK_ERR_IO;
    case ErrorCode::bad_magic: return HK_ERR_FORMAT;
    case ErrorCode::truncated: return HK_ERR_TRUNCATED;
    case ErrorCode::count_mismatch: return HK_ERR_COUNT;
    case ErrorCode::checksum: return HK_ERR_CHECKSUM;
    case ErrorCode::version: return HK_ERR_VERSION;
    case ErrorCode::model_mismatch: return HK_ERR_MISMATCH;
  }
  return HK_ERR_INTERNAL;
}

template <typename F>
hk_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return HK_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown failure";
  }
  return HK_ERR_INTERNAL;
}

template <typename T>
void need(const T* p, const char* what) {
  require(p != nullptr, ErrorCode::invalid_argument, std::string(what) + " is null");
}

void copy_out(const std::string& value, char* buf, size_t cap) {
  need(buf, "output buffer");
  require(value.size() < cap, ErrorCode::out_of_range,
          "buffer of " + std::to_string(cap) + " bytes cannot hold " +
              std::to_string(value.size() + 1));
  std::memcpy(buf, value.c_str(), value.size() + 1);
}

void copy_meta(const Metadata& meta, const char* key, char* buf, size_t cap) {
  need(key, "metadata key");
  const auto it = meta.find(key);
  require(it != meta.end(), ErrorCode::out_of_range, std::string("no metadata entry '") + key + "'");
  copy_out(it->second, buf, cap);
}

void set_meta(Metadata& meta, const char* key, const char* value) {
  need(key, "metadata key");
  need(value, "metadata value");
  require(*key != '\0', ErrorCode::invalid_argument, "metadata key is empty");
  meta[key] = value;
}

nd::Tensor one_image(const float* image) {
  need(image, "image");
  return nd::Tensor({1, mnist_side, mnist_side, 1}, std::vector<float>(image, image + HK_IMAGE_SIZE));
}

hk_metrics to_c(const Metrics& m) {
  hk_metrics out{};
  out.dr = m.dr.value_or(0.0);
  out.dr_defined = m.dr.has_value();
  out.fpr = m.fpr;
  out.asr = m.asr;
  out.asr_ad = m.asr_ad;
  out.n_clean = m.n_clean;
  out.n_clean_flagged = m.n_clean_flagged;
  out.n_adv = m.n_adv;
  out.n_success = m.n_success;
  out.n_dr_denominator = m.n_dr_denominator;
  out.n_dr_flagged = m.n_dr_flagged;
  out.n_evaded = m.n_evaded;
  return out;
}

Metrics from_c(const hk_metrics& m) {
  Metrics out;
  if (m.dr_defined) out.dr = m.dr;
  out.fpr = m.fpr;
  out.asr = m.asr;
  out.asr_ad = m.asr_ad;
  out.n_clean = m.n_clean;
  out.n_clean_flagged = m.n_clean_flagged;
  out.n_adv = m.n_adv;
  out.n_success = m.n_success;
  out.n_dr_denominator = m.n_dr_denominator;
  out.n_dr_flagged = m.n_dr_flagged;
  out.n_evaded = m.n_evaded;
  return out;
}

}  // namespace

extern "C" {

const char* hk_status_name(hk_status status) {
  switch (status) {
    case HK_OK: return "ok";
    case HK_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case HK_ERR_SHAPE: return "shape_mismatch";
    case HK_ERR_RANGE: return "out_of_range";
    case HK_ERR_STATE: return "bad_state";
    case HK_ERR_IO: return "io";
    case HK_ERR_FORMAT: return "bad_format";
    case HK_ERR_TRUNCATED: return "truncated";
    case HK_ERR_COUNT: return "count_mismatch";
    case HK_ERR_CHECKSUM: return "checksum";
    case HK_ERR_VERSION: return "version";
    case HK_ERR_MISMATCH: return "model_mismatch";
    case HK_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* hk_last_error(void) { return last_error.c_str(); }

const char* hk_version(void) { return "1.0.0"; }

uint32_t hk_checksum_bytes(const void* data, size_t size) {
  if (!data) return crc32_bytes({});
  return crc32_bytes(std::span(static_cast<const std::uint8_t*>(data), size));
}

void hk_set_log_callback(hk_log_fn fn, void* user) {
  if (!fn) {
    set_log_sink({});
    return;
  }
  set_log_sink([fn, user](std::string_view line) { fn(std::string(line).c_str(), user); });
}

// ---- datasets ----

hk_status hk_dataset_load_mnist(const char* dir, int train, hk_dataset** out) {
  return guarded([&] {
    need(dir, "directory");
    need(out, "output handle");
    *out = new hk_dataset{load_mnist_split(dir, train ? Split::train : Split::test)};
  });
}

hk_status hk_dataset_from_arrays(const float* images, const int* labels, size_t n,
                                 hk_dataset** out) {
  return guarded([&] {
    need(images, "images");
    need(labels, "labels");
    need(out, "output handle");
    require(n > 0, ErrorCode::invalid_argument, "dataset must not be empty");
    LabeledDataset d;
    d.images = nd::Tensor(nd::batched(n, {mnist_side, mnist_side, 1}),
                          std::vector<float>(images, images + n * HK_IMAGE_SIZE));
    d.labels.assign(labels, labels + n);
    validate_dataset(d, mnist_classes);
    *out = new hk_dataset{std::move(d)};
  });
}

hk_status hk_dataset_subset(const hk_dataset* data, size_t begin, size_t count,
                            hk_dataset** out) {
  return guarded([&] {
    need(data, "dataset");
    need(out, "output handle");
    require(begin < data->data.size() && count > 0, ErrorCode::out_of_range,
            "subset [" + std::to_string(begin) + ", +" + std::to_string(count) +
                ") is empty for a dataset of " + std::to_string(data->data.size()));
    *out = new hk_dataset{data->data.subset(begin, count)};
  });
}

size_t hk_dataset_size(const hk_dataset* data) { return data ? data->data.size() : 0; }

hk_status hk_dataset_image(const hk_dataset* data, size_t i, float* image, int* label) {
  return guarded([&] {
    need(data, "dataset");
    require(i < data->data.size(), ErrorCode::out_of_range,
            "image index " + std::to_string(i) + " out of range");
    if (image) {
      const auto s = data->data.images.sample(i);
      std::memcpy(image, s.data(), s.size() * sizeof(float));
    }
    if (label) *label = data->data.labels[i];
  });
}

void hk_dataset_free(hk_dataset* data) { delete data; }

// ---- classifier ----

void hk_train_config_default(hk_train_config* cfg) {
  if (!cfg) return;
  const TrainConfig d;
  *cfg = hk_train_config{d.epochs, d.batch_size, d.learning_rate, d.seed, d.max_steps};
}

hk_status hk_classifier_build(uint64_t seed, hk_classifier** out) {
  return guarded([&] {
    need(out, "output handle");
    *out = new hk_classifier{build_mnist_cnn(seed), {}};
  });
}

hk_status hk_classifier_train(hk_classifier* model, const hk_dataset* train,
                              const hk_train_config* cfg, hk_progress_fn progress, void* user,
                              float* final_loss) {
  return guarded([&] {
    need(model, "classifier");
    need(train, "training set");
    require(!train->data.empty(), ErrorCode::invalid_argument, "training set is empty");
    TrainConfig c;
    if (cfg) c = TrainConfig{cfg->epochs, cfg->batch_size, cfg->learning_rate, cfg->seed,
                             cfg->max_steps};
    ProgressFn fn;
    if (progress) {
      fn = [progress, user](const TrainProgress& p) {
        progress(p.epoch, p.step, p.batch_loss, user);
      };
    }
    const TrainResult r = train_classifier(model->model, train->data, c, fn);
    if (final_loss) *final_loss = r.final_loss;
  });
}

hk_status hk_classifier_accuracy(const hk_classifier* model, const hk_dataset* data,
                                 double* accuracy_out) {
  return guarded([&] {
    need(model, "classifier");
    need(data, "dataset");
    need(accuracy_out, "output");
    *accuracy_out = accuracy(model->model, data->data);
  });
}

hk_status hk_classifier_logits(const hk_classifier* model, const float* image, float* logits) {
  return guarded([&] {
    need(model, "classifier");
    need(image, "image");
    need(logits, "logits buffer");
    const auto z = model->model.logits(std::span<const float>(image, HK_IMAGE_SIZE));
    std::memcpy(logits, z.data(), z.size() * sizeof(float));
  });
}

hk_status hk_classifier_predict(const hk_classifier* model, const float* image, int* label) {
  return guarded([&] {
    need(model, "classifier");
    need(image, "image");
    need(label, "label output");
    *label = model->model.predict(std::span<const float>(image, HK_IMAGE_SIZE));
  });
}

hk_status hk_classifier_checksum(const hk_classifier* model, uint32_t* checksum) {
  return guarded([&] {
    need(model, "classifier");
    need(checksum, "checksum output");
    *checksum = model_checksum(model->model.network());
  });
}

hk_status hk_classifier_set_meta(hk_classifier* model, const char* key, const char* value) {
  return guarded([&] {
    need(model, "classifier");
    set_meta(model->meta, key, value);
  });
}

hk_status hk_classifier_meta(const hk_classifier* model, const char* key, char* buf, size_t cap) {
  return guarded([&] {
    need(model, "classifier");
    copy_meta(model->meta, key, buf, cap);
  });
}

hk_status hk_classifier_save(const hk_classifier* model, const char* path) {
  return guarded([&] {
    need(model, "classifier");
    need(path, "path");
    save_classifier(model->model, path, model->meta);
  });
}

hk_status hk_classifier_load(const char* path, hk_classifier** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "output handle");
    auto ck = load_classifier(path);
    *out = new hk_classifier{std::move(ck.model), std::move(ck.metadata)};
  });
}

void hk_classifier_free(hk_classifier* model) { delete model; }

// ---- corpora ----

hk_status hk_corpus_craft(const hk_classifier* crafting, const hk_dataset* source,
                          const char* method, int m, hk_corpus** out) {
  return guarded([&] {
    need(crafting, "crafting classifier");
    need(source, "source dataset");
    need(method, "method");
    need(out, "output handle");
    const AttackMethod am = parse_attack_method(method);
    Corpus c;
    c.data.images = craft(crafting->model, am, source->data.images, source->data.labels, m);
    c.data.labels = source->data.labels;
    c.data.split = source->data.split;
    c.provenance["corpus"] = "attack";
    c.provenance["method"] = attack_method_name(am);
    c.provenance["m"] = std::to_string(m);
    c.provenance["seed"] = std::to_string(crafting->model.seed());
    c.provenance["model_checksum"] = checksum_hex(model_checksum(crafting->model.network()));
    c.provenance["count"] = std::to_string(c.data.size());
    *out = new hk_corpus{std::move(c), {}};
  });
}

hk_status hk_corpus_distort(const hk_dataset* source, const char* kind, int l, int n, int w,
                            uint64_t seed, hk_corpus** out) {
  return guarded([&] {
    need(source, "source dataset");
    need(kind, "distortion kind");
    need(out, "output handle");
    const DistortionSpec spec{parse_distortion_kind(kind), l, n, w, seed};
    Corpus c;
    c.data.images = distort(source->data.images, spec);
    c.data.labels = source->data.labels;
    c.data.split = source->data.split;
    c.provenance["corpus"] = "distortion";
    c.provenance["distortion"] = distortion_kind_name(spec.kind);
    c.provenance["l"] = std::to_string(l);
    c.provenance["n"] = std::to_string(n);
    c.provenance["w"] = std::to_string(w);
    c.provenance["seed"] = std::to_string(seed);
    c.provenance["count"] = std::to_string(c.data.size());
    *out = new hk_corpus{std::move(c), {}};
  });
}

size_t hk_corpus_size(const hk_corpus* corpus) { return corpus ? corpus->corpus.data.size() : 0; }

hk_status hk_corpus_dataset(const hk_corpus* corpus, hk_dataset** out) {
  return guarded([&] {
    need(corpus, "corpus");
    need(out, "output handle");
    *out = new hk_dataset{corpus->corpus.data};
  });
}

hk_status hk_corpus_set_meta(hk_corpus* corpus, const char* key, const char* value) {
  return guarded([&] {
    need(corpus, "corpus");
    set_meta(corpus->corpus.provenance, key, value);
  });
}

hk_status hk_corpus_meta(const hk_corpus* corpus, const char* key, char* buf, size_t cap) {
  return guarded([&] {
    need(corpus, "corpus");
    copy_meta(corpus->corpus.provenance, key, buf, cap);
  });
}

hk_status hk_corpus_save(const hk_corpus* corpus, const char* path) {
  return guarded([&] {
    need(corpus, "corpus");
    need(path, "path");
    save_corpus(corpus->corpus, path);
  });
}

hk_status hk_corpus_load(const char* path, hk_corpus** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "output handle");
    auto loaded = load_corpus(path);
    *out = new hk_corpus{std::move(loaded.corpus), std::move(loaded.warnings)};
  });
}

size_t hk_corpus_warning_count(const hk_corpus* corpus) {
  return corpus ? corpus->warnings.size() : 0;
}

const char* hk_corpus_warning(const hk_corpus* corpus, size_t i) {
  if (!corpus || i >= corpus->warnings.size()) return nullptr;
  return corpus->warnings[i].c_str();
}

void hk_corpus_free(hk_corpus* corpus) { delete corpus; }

// ---- detectors ----

void hk_aed_config_default(hk_aed_config* cfg) {
  if (!cfg) return;
  const AedTrainConfig d;
  *cfg = hk_aed_config{d.eps_max,       d.epochs,    d.batch_size, d.learning_rate,
                       d.seed,          d.threshold, 0};
}

hk_status hk_aed_train(const hk_classifier* model, const hk_dataset* train, const int* steps,
                       size_t n_steps, const hk_aed_config* cfg, hk_aed** out) {
  return guarded([&] {
    need(model, "classifier");
    need(train, "training set");
    need(steps, "step sizes");
    need(out, "output handles");
    require(!train->data.empty(), ErrorCode::invalid_argument, "training set is empty");
    AedTrainConfig c;
    if (cfg) {
      c = AedTrainConfig{cfg->eps_max,    cfg->epochs,
                         cfg->batch_size, cfg->learning_rate,
                         cfg->seed,       cfg->threshold,
                         cfg->cross_entropy_loss ? AedLoss::cross_entropy : AedLoss::linear};
    }
    auto trained = train_aeds(model->model, train->data, std::span(steps, n_steps), c);
    const std::string parent = checksum_hex(model_checksum(model->model.network()));
    for (size_t i = 0; i < trained.size(); ++i) {
      Metadata meta;
      meta["classifier_checksum"] = parent;
      meta["eps_max"] = std::to_string(c.eps_max);
      meta["epochs"] = std::to_string(c.epochs);
      meta["batch_size"] = std::to_string(c.batch_size);
      meta["learning_rate"] = fmt::format("{}", c.learning_rate);
      meta["seed"] = std::to_string(c.seed);
      meta["loss"] = aed_loss_name(c.loss);
      meta["train_images"] = std::to_string(train->data.size());
      meta["final_objective"] = fmt::format("{:.6f}", trained[i].epochs.back().mean_objective);
      out[i] = new hk_aed{std::move(trained[i].aed), std::move(meta)};
    }
  });
}

int hk_aed_step(const hk_aed* aed) { return aed ? aed->aed.step() : 0; }

float hk_aed_threshold(const hk_aed* aed) { return aed ? aed->aed.threshold() : 0.0f; }

hk_status hk_aed_set_threshold(hk_aed* aed, float threshold) {
  return guarded([&] {
    need(aed, "detector");
    aed->aed.set_threshold(threshold);
  });
}

hk_status hk_aed_score(const hk_aed* aed, const float* z, double* score) {
  return guarded([&] {
    need(aed, "detector");
    need(z, "difference vector");
    need(score, "score output");
    *score = aed->aed.score(std::span<const float>(z, static_cast<size_t>(aed->aed.classes())));
  });
}

hk_status hk_aed_checksum(const hk_aed* aed, uint32_t* checksum) {
  return guarded([&] {
    need(aed, "detector");
    need(checksum, "checksum output");
    *checksum = model_checksum(aed->aed.network());
  });
}

hk_status hk_aed_classifier_checksum(const hk_aed* aed, uint32_t* checksum, int* present) {
  return guarded([&] {
    need(aed, "detector");
    need(checksum, "checksum output");
    need(present, "presence output");
    const auto it = aed->meta.find("classifier_checksum");
    *present = it != aed->meta.end();
    *checksum = *present ? parse_checksum(it->second) : 0;
  });
}

hk_status hk_aed_set_meta(hk_aed* aed, const char* key, const char* value) {
  return guarded([&] {
    need(aed, "detector");
    set_meta(aed->meta, key, value);
  });
}

hk_status hk_aed_meta(const hk_aed* aed, const char* key, char* buf, size_t cap) {
  return guarded([&] {
    need(aed, "detector");
    copy_meta(aed->meta, key, buf, cap);
  });
}

hk_status hk_aed_save(const hk_aed* aed, const char* path) {
  return guarded([&] {
    need(aed, "detector");
    need(path, "path");
    save_aed(aed->aed, path, aed->meta);
  });
}

hk_status hk_aed_load(const char* path, hk_aed** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "output handle");
    auto ck = load_aed(path);
    *out = new hk_aed{std::move(ck.aed), std::move(ck.metadata)};
  });
}

void hk_aed_free(hk_aed* aed) { delete aed; }

hk_status hk_detector_single(const hk_aed* aed, hk_detector** out) {
  return guarded([&] {
    need(aed, "detector");
    need(out, "output handle");
    *out = new hk_detector{EvalDetector::single(aed->aed)};
  });
}

hk_status hk_detector_cascade(const hk_aed* const* members, size_t n, hk_detector** out) {
  return guarded([&] {
    need(members, "cascade members");
    need(out, "output handle");
    std::vector<Aed> aeds;
    for (size_t i = 0; i < n; ++i) {
      need(members[i], "cascade member");
      aeds.push_back(members[i]->aed);
    }
    *out = new hk_detector{EvalDetector::cascade(CascadeDetector(std::move(aeds)))};
  });
}

hk_status hk_detector_squeeze(int step, double tau, hk_detector** out) {
  return guarded([&] {
    need(out, "output handle");
    *out = new hk_detector{EvalDetector::squeeze(step, tau)};
  });
}

hk_status hk_detector_calibrate(hk_detector* detector, const hk_classifier* model,
                                const hk_dataset* clean, double target_fpr) {
  return guarded([&] {
    need(detector, "detector");
    need(model, "classifier");
    need(clean, "clean dataset");
    require(detector->det.kind() == EvalDetector::Kind::squeeze, ErrorCode::bad_state,
            "only the feature-squeezing detector has a calibrated threshold");
    const LogitCache cache(model->model, clean->data.images, detector->det.steps());
    const auto scores = cache.squeeze_scores(detector->det.steps().front());
    detector->det.set_squeeze_threshold(calibrate_threshold(scores, target_fpr));
  });
}

hk_status hk_detector_id(const hk_detector* detector, char* buf, size_t cap) {
  return guarded([&] {
    need(detector, "detector");
    copy_out(detector->det.id(), buf, cap);
  });
}

hk_status hk_detector_detect(const hk_detector* detector, const hk_classifier* model,
                             const float* image, int* flagged, double* score) {
  return guarded([&] {
    need(detector, "detector");
    need(model, "classifier");
    const LogitCache cache(model->model, one_image(image), detector->det.steps());
    const Verdicts v = detector->det.run(cache);
    if (flagged) *flagged = v.flagged.front();
    if (score) *score = v.scores.front();
  });
}

void hk_detector_free(hk_detector* detector) { delete detector; }

// ---- evaluation ----

hk_status hk_evaluate(const hk_detector* detector, const hk_classifier* model,
                      const hk_dataset* clean, const hk_dataset* adversarial, int dr_over_all,
                      hk_metrics* out) {
  return guarded([&] {
    need(detector, "detector");
    need(model, "classifier");
    need(clean, "clean dataset");
    need(adversarial, "adversarial dataset");
    need(out, "metrics output");
    const auto steps = detector->det.steps();
    const LogitCache c(model->model, clean->data.images, steps);
    const LogitCache a(model->model, adversarial->data.images, steps);
    *out = to_c(evaluate_detector(detector->det, c, a, adversarial->data.labels,
                                  dr_over_all ? DrDenominator::all : DrDenominator::successful));
  });
}

hk_status hk_report_create(hk_report** out) {
  return guarded([&] {
    need(out, "output handle");
    *out = new hk_report{};
  });
}

hk_status hk_report_add(hk_report* report, const char* attack, const char* method, int m,
                        const hk_detector* detector, const hk_metrics* metrics) {
  return guarded([&] {
    need(report, "report");
    need(attack, "attack label");
    need(method, "method label");
    need(detector, "detector");
    need(metrics, "metrics");
    report->rows.push_back(MetricsRow{attack, method, m, detector->det.id(),
                                      detector->det.step_label(), detector->det.threshold(),
                                      from_c(*metrics)});
  });
}

size_t hk_report_size(const hk_report* report) { return report ? report->rows.size() : 0; }

hk_status hk_report_get(const hk_report* report, size_t i, int* m, int* step,
                        hk_metrics* metrics) {
  return guarded([&] {
    need(report, "report");
    require(i < report->rows.size(), ErrorCode::out_of_range, "report row out of range");
    const MetricsRow& r = report->rows[i];
    if (m) *m = r.m;
    if (step) *step = std::stoi(r.steps);
    if (metrics) *metrics = to_c(r.metrics);
  });
}

hk_status hk_report_write_csv(const hk_report* report, const char* path) {
  return guarded([&] {
    need(report, "report");
    need(path, "path");
    write_text_file(path, metrics_csv(report->rows));
  });
}

void hk_report_free(hk_report* report) { delete report; }

hk_status hk_eval_grid(const hk_classifier* model, const hk_dataset* test,
                       const hk_aed* const* aeds, size_t n_aeds, const int* ms, size_t n_ms,
                       hk_report* report) {
  return guarded([&] {
    need(model, "classifier");
    need(test, "test set");
    need(aeds, "detectors");
    need(ms, "perturbation levels");
    need(report, "report");
    std::vector<EvalDetector> dets;
    for (size_t i = 0; i < n_aeds; ++i) {
      need(aeds[i], "detector");
      dets.push_back(EvalDetector::single(aeds[i]->aed));
    }
    GridSpec spec;
    spec.ms.assign(ms, ms + n_ms);
    auto rows = evaluate_grid(model->model, model->model, test->data, dets, spec);
    report->rows.insert(report->rows.end(), rows.begin(), rows.end());
  });
}

hk_status hk_roc_compute(const hk_detector* detector, const hk_classifier* model,
                         const hk_dataset* clean, const hk_dataset* adversarial,
                         int quantile_grid, hk_roc** out) {
  return guarded([&] {
    need(detector, "detector");
    need(model, "classifier");
    need(clean, "clean dataset");
    need(adversarial, "adversarial dataset");
    need(out, "output handle");
    const auto steps = detector->det.steps();
    const LogitCache c(model->model, clean->data.images, steps);
    const LogitCache a(model->model, adversarial->data.images, steps);
    const auto clean_scores = detector->det.run(c).scores;
    const auto adv_all = detector->det.run(a).scores;
    std::vector<double> adv_scores;
    for (size_t i = 0; i < adv_all.size(); ++i) {
      if (a.predictions()[i] != adversarial->data.labels.at(i)) adv_scores.push_back(adv_all[i]);
    }
    require(!adv_scores.empty(), ErrorCode::invalid_argument,
            "no misclassified adversarial images to build a ROC from");
    const auto thresholds = quantile_grid ? quantile_thresholds(clean_scores, adv_scores)
                                          : linear_thresholds();
    *out = new hk_roc{roc_curve(clean_scores, adv_scores, thresholds)};
  });
}

hk_status hk_roc_from_scores(const double* clean, size_t n_clean, const double* adv,
                             size_t n_adv, const double* thresholds, size_t n_thresholds,
                             hk_roc** out) {
  return guarded([&] {
    need(clean, "clean scores");
    need(adv, "adversarial scores");
    need(out, "output handle");
    const std::span<const double> c(clean, n_clean), a(adv, n_adv);
    const auto grid = thresholds ? std::vector<double>(thresholds, thresholds + n_thresholds)
                                 : linear_thresholds();
    *out = new hk_roc{roc_curve(c, a, grid)};
  });
}

double hk_roc_auc(const hk_roc* roc) { return roc ? roc->curve.auc : 0.0; }

size_t hk_roc_size(const hk_roc* roc) { return roc ? roc->curve.points.size() : 0; }

hk_status hk_roc_point(const hk_roc* roc, size_t i, double* threshold, double* fpr, double* dr) {
  return guarded([&] {
    need(roc, "roc");
    require(i < roc->curve.points.size(), ErrorCode::out_of_range, "ROC point out of range");
    const RocPoint& p = roc->curve.points[i];
    if (threshold) *threshold = p.threshold;
    if (fpr) *fpr = p.fpr;
    if (dr) *dr = p.dr;
  });
}

hk_status hk_roc_write_csv(const hk_roc* roc, const char* detector_id, const char* path) {
  return guarded([&] {
    need(roc, "roc");
    need(detector_id, "detector id");
    need(path, "path");
    write_text_file(path, roc_csv(detector_id, roc->curve));
  });
}

void hk_roc_free(hk_roc* roc) { delete roc; }

hk_status hk_pcc_compute(const hk_classifier* model, const hk_dataset* images, const int* steps,
                         size_t n_steps, hk_pcc** out) {
  return guarded([&] {
    need(model, "classifier");
    need(images, "images");
    need(steps, "step sizes");
    need(out, "output handle");
    const std::span<const int> s(steps, n_steps);
    const LogitCache cache(model->model, images->data.images, s);
    std::vector<nd::Tensor> diffs;
    for (int step : s) diffs.push_back(cache.diffs(step));
    *out = new hk_pcc{pcc_matrix(s, diffs)};
  });
}

hk_status hk_pcc_get(const hk_pcc* pcc, size_t i, size_t j, double* mean, size_t* n_valid) {
  return guarded([&] {
    need(pcc, "pcc");
    const size_t k = pcc->matrix.steps.size();
    require(i < k && j < k, ErrorCode::out_of_range, "PCC index out of range");
    if (mean) *mean = pcc->matrix.at(i, j);
    if (n_valid) *n_valid = pcc->matrix.valid(i, j);
  });
}

hk_status hk_pcc_write_csv(const hk_pcc* pcc, const char* path) {
  return guarded([&] {
    need(pcc, "pcc");
    need(path, "path");
    write_text_file(path, pcc_csv(pcc->matrix));
  });
}

void hk_pcc_free(hk_pcc* pcc) { delete pcc; }

}  // extern "C"
