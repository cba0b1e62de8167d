// Command-line driver for the detection laboratory. Every subcommand works
// through the C API in libhawkeye.

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "hawkeye.h"

namespace fs = std::filesystem;

namespace {

// Exit codes, one per failure family.
enum Exit {
  exit_ok = 0,
  exit_failure = 1,
  exit_usage = 2,
  exit_missing = 3,
  exit_mismatch = 4,
  exit_format = 5,
};

struct CliError {
  int exit;
  std::string code;
  std::string message;
};

int exit_for(hk_status s) {
  switch (s) {
    case HK_ERR_INVALID_ARGUMENT:
    case HK_ERR_RANGE: return exit_usage;
    case HK_ERR_SHAPE:
    case HK_ERR_MISMATCH: return exit_mismatch;
    case HK_ERR_FORMAT:
    case HK_ERR_TRUNCATED:
    case HK_ERR_COUNT:
    case HK_ERR_CHECKSUM:
    case HK_ERR_VERSION: return exit_format;
    case HK_ERR_IO: return exit_missing;
    default: return exit_failure;
  }
}

void check(hk_status s) {
  if (s != HK_OK) throw CliError{exit_for(s), hk_status_name(s), hk_last_error()};
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Dataset = std::unique_ptr<hk_dataset, Deleter<hk_dataset, hk_dataset_free>>;
using Model = std::unique_ptr<hk_classifier, Deleter<hk_classifier, hk_classifier_free>>;
using CorpusPtr = std::unique_ptr<hk_corpus, Deleter<hk_corpus, hk_corpus_free>>;
using AedPtr = std::unique_ptr<hk_aed, Deleter<hk_aed, hk_aed_free>>;
using Detector = std::unique_ptr<hk_detector, Deleter<hk_detector, hk_detector_free>>;
using Report = std::unique_ptr<hk_report, Deleter<hk_report, hk_report_free>>;
using Roc = std::unique_ptr<hk_roc, Deleter<hk_roc, hk_roc_free>>;
using Pcc = std::unique_ptr<hk_pcc, Deleter<hk_pcc, hk_pcc_free>>;

struct RunConfig {
  std::string data_dir = "data/mnist";
  std::string artifact_dir = "artifacts";
  std::uint64_t classifier_seed = 1;
  std::uint64_t substitute_seed = 2;
  std::uint64_t aed_seed = 7;
  std::uint64_t eval_seed = 11;
  int epochs = 5;
  int batch_size = 100;
  double learning_rate = 2e-4;
  std::size_t max_steps = 0;
  int aed_epochs = 5;
  int aed_batch_size = 100;
  double aed_learning_rate = 2e-4;
  int eps_max = 32;
  double threshold = 0.5;
  std::string aed_loss = "linear";
  std::vector<int> eps_grid{2, 4, 8, 16, 32};
  std::vector<int> table_steps{2, 4, 8, 16, 32, 64, 128};
  bool mini = false;
  std::size_t train_limit = 0;  // 0: 60000, or 10000 in mini mode
  std::size_t eval_limit = 0;   // 0: 10000, or 2000 in mini mode
  double fs_target_fpr = 0.05;
  std::string dr_over = "successful";

  std::size_t train_images() const { return train_limit ? train_limit : (mini ? 10000 : 60000); }
  std::size_t eval_images() const { return eval_limit ? eval_limit : (mini ? 2000 : 10000); }
  int classifier_epochs() const { return mini ? std::min(epochs, 2) : epochs; }
  int detector_epochs() const { return mini ? std::min(aed_epochs, 2) : aed_epochs; }
};

std::string join(const std::vector<int>& v) {
  std::string out;
  for (int x : v) out += (out.empty() ? "" : ",") + std::to_string(x);
  return out;
}

// The configuration as resolved after config file, environment and flags.
// Output paths are not part of it, so the hash names the experiment only.
std::string resolved_text(const RunConfig& c) {
  std::ostringstream o;
  o << "data_dir=" << c.data_dir << "\n"
    << "classifier_seed=" << c.classifier_seed << "\n"
    << "substitute_seed=" << c.substitute_seed << "\n"
    << "aed_seed=" << c.aed_seed << "\n"
    << "eval_seed=" << c.eval_seed << "\n"
    << "epochs=" << c.classifier_epochs() << "\n"
    << "batch_size=" << c.batch_size << "\n"
    << "learning_rate=" << c.learning_rate << "\n"
    << "max_steps=" << c.max_steps << "\n"
    << "aed_epochs=" << c.detector_epochs() << "\n"
    << "aed_batch_size=" << c.aed_batch_size << "\n"
    << "aed_learning_rate=" << c.aed_learning_rate << "\n"
    << "eps_max=" << c.eps_max << "\n"
    << "threshold=" << c.threshold << "\n"
    << "aed_loss=" << c.aed_loss << "\n"
    << "eps_grid=" << join(c.eps_grid) << "\n"
    << "table_steps=" << join(c.table_steps) << "\n"
    << "mini=" << (c.mini ? "true" : "false") << "\n"
    << "train_images=" << c.train_images() << "\n"
    << "eval_images=" << c.eval_images() << "\n"
    << "fs_target_fpr=" << c.fs_target_fpr << "\n"
    << "dr_over=" << c.dr_over << "\n";
  return o.str();
}

std::string config_hash(const RunConfig& c) {
  const std::string text = resolved_text(c);
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", hk_checksum_bytes(text.data(), text.size()));
  return buf;
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CliError{exit_missing, "io", "cannot write " + path.string()};
  f << text;
}

// Records the resolved configuration next to an output file.
void write_config_beside(const RunConfig& c, const fs::path& output) {
  write_file(output.string() + ".config",
             resolved_text(c) + "config_hash=" + config_hash(c) + "\n");
}

std::string hex(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) {
    throw CliError{exit_missing, "missing_artifact", what + " not found at " + p.string()};
  }
}

std::string meta_or(hk_status (*get)(const hk_corpus*, const char*, char*, size_t),
                    const hk_corpus* c, const char* key, const std::string& fallback) {
  char buf[256];
  return get(c, key, buf, sizeof buf) == HK_OK ? std::string(buf) : fallback;
}

class Lab {
 public:
  explicit Lab(RunConfig cfg) : cfg_(std::move(cfg)), hash_(config_hash(cfg_)) {
    fs::create_directories(cfg_.artifact_dir);
  }

  const RunConfig& config() const { return cfg_; }
  fs::path artifact(const std::string& name) const { return fs::path(cfg_.artifact_dir) / name; }
  fs::path classifier_path(bool substitute) const {
    return artifact(substitute ? "substitute.hwk" : "classifier.hwk");
  }
  fs::path aed_path(int s) const { return artifact("aed_s" + std::to_string(s) + ".hwk"); }

  Dataset split(bool train) const {
    hk_dataset* all = nullptr;
    const fs::path dir(cfg_.data_dir);
    if (!fs::exists(dir)) {
      throw CliError{exit_missing, "missing_artifact", "MNIST directory " + dir.string() +
                                                           " not found (set HAWKEYE_DATA_DIR)"};
    }
    check(hk_dataset_load_mnist(dir.c_str(), train ? 1 : 0, &all));
    Dataset full(all);
    const std::size_t limit = train ? cfg_.train_images() : cfg_.eval_images();
    if (limit >= hk_dataset_size(full.get())) return full;
    hk_dataset* part = nullptr;
    check(hk_dataset_subset(full.get(), 0, limit, &part));
    return Dataset(part);
  }

  Model train_classifier(bool substitute) const {
    const std::uint64_t seed = substitute ? cfg_.substitute_seed : cfg_.classifier_seed;
    if (substitute && seed == cfg_.classifier_seed) {
      throw CliError{exit_usage, "invalid_argument",
                     "substitute seed must differ from the classifier seed"};
    }
    const Dataset train = split(true);
    const Dataset test = split(false);
    hk_classifier* raw = nullptr;
    check(hk_classifier_build(seed, &raw));
    Model model(raw);
    hk_train_config tc;
    hk_train_config_default(&tc);
    tc.epochs = cfg_.classifier_epochs();
    tc.batch_size = cfg_.batch_size;
    tc.learning_rate = static_cast<float>(cfg_.learning_rate);
    tc.seed = seed;
    tc.max_steps = cfg_.max_steps;
    float loss = 0.0f;
    check(hk_classifier_train(model.get(), train.get(), &tc, nullptr, nullptr, &loss));
    double acc = 0.0;
    check(hk_classifier_accuracy(model.get(), test.get(), &acc));
    check(hk_classifier_set_meta(model.get(), "config_hash", hash_.c_str()));
    check(hk_classifier_set_meta(model.get(), "role", substitute ? "substitute" : "target"));
    check(hk_classifier_set_meta(model.get(), "test_accuracy", std::to_string(acc).c_str()));
    check(hk_classifier_set_meta(model.get(), "train_images",
                                 std::to_string(hk_dataset_size(train.get())).c_str()));
    const fs::path out = classifier_path(substitute);
    check(hk_classifier_save(model.get(), out.c_str()));
    write_config_beside(cfg_, out);
    std::uint32_t checksum = 0;
    check(hk_classifier_checksum(model.get(), &checksum));
    nlohmann::json report = {{"role", substitute ? "substitute" : "target"},
                             {"seed", seed},
                             {"test_accuracy", acc},
                             {"test_images", hk_dataset_size(test.get())},
                             {"train_images", hk_dataset_size(train.get())},
                             {"final_loss", loss},
                             {"checksum", hex(checksum)},
                             {"config_hash", hash_}};
    write_file(out.string() + ".report.json", report.dump(2) + "\n");
    std::cout << (substitute ? "substitute" : "classifier") << " accuracy " << acc << " -> "
              << out.string() << "\n";
    return model;
  }

  Model load_classifier(bool substitute) const {
    const fs::path p = classifier_path(substitute);
    require_file(p, substitute ? "substitute checkpoint" : "classifier checkpoint");
    hk_classifier* raw = nullptr;
    check(hk_classifier_load(p.c_str(), &raw));
    return Model(raw);
  }

  Model classifier_or_train(bool substitute) const {
    if (fs::exists(classifier_path(substitute))) return load_classifier(substitute);
    return train_classifier(substitute);
  }

  std::vector<AedPtr> train_aeds(const hk_classifier* model, const std::vector<int>& steps) const {
    const Dataset train = split(true);
    hk_aed_config ac;
    hk_aed_config_default(&ac);
    ac.eps_max = cfg_.eps_max;
    ac.epochs = cfg_.detector_epochs();
    ac.batch_size = cfg_.aed_batch_size;
    ac.learning_rate = static_cast<float>(cfg_.aed_learning_rate);
    ac.seed = cfg_.aed_seed;
    ac.threshold = static_cast<float>(cfg_.threshold);
    if (cfg_.aed_loss == "cross_entropy") {
      ac.cross_entropy_loss = 1;
    } else if (cfg_.aed_loss != "linear") {
      throw CliError{exit_usage, "invalid_argument", "aed_loss must be linear or cross_entropy"};
    }
    std::vector<hk_aed*> raw(steps.size(), nullptr);
    check(hk_aed_train(model, train.get(), steps.data(), steps.size(), &ac, raw.data()));
    std::vector<AedPtr> out;
    for (hk_aed* a : raw) out.emplace_back(a);
    for (std::size_t i = 0; i < steps.size(); ++i) {
      check(hk_aed_set_meta(out[i].get(), "config_hash", hash_.c_str()));
      const fs::path p = aed_path(steps[i]);
      check(hk_aed_save(out[i].get(), p.c_str()));
      write_config_beside(cfg_, p);
      std::cout << "detector s=" << steps[i] << " -> " << p.string() << "\n";
    }
    return out;
  }

  // Loads the detector for step s and refuses one trained on another model.
  AedPtr load_aed(int s, const hk_classifier* model) const {
    const fs::path p = aed_path(s);
    require_file(p, "detector checkpoint for step " + std::to_string(s));
    hk_aed* raw = nullptr;
    check(hk_aed_load(p.c_str(), &raw));
    AedPtr aed(raw);
    std::uint32_t parent = 0, current = 0;
    int present = 0;
    check(hk_aed_classifier_checksum(aed.get(), &parent, &present));
    check(hk_classifier_checksum(model, &current));
    if (!present) {
      std::cerr << "warning: " << p.string() << " does not record its classifier\n";
    } else if (parent != current) {
      throw CliError{exit_mismatch, "model_mismatch",
                     p.string() + " was trained against classifier " + hex(parent) +
                         ", loaded classifier is " + hex(current)};
    }
    if (cfg_.threshold != 0.5) check(hk_aed_set_threshold(aed.get(), static_cast<float>(cfg_.threshold)));
    return aed;
  }

  const std::string& hash() const { return hash_; }

 private:
  RunConfig cfg_;
  std::string hash_;
};

std::vector<int> parse_steps(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw CliError{exit_usage, "invalid_argument", "bad step size '" + item + "'"};
    }
  }
  return out;
}

// "single:64", "cascade:64,128" or "fs:64".
Detector make_detector(const Lab& lab, const std::string& spec, const hk_classifier* model,
                       const hk_dataset* clean, double fs_tau) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) {
    throw CliError{exit_usage, "invalid_argument", "detector spec '" + spec + "' lacks ':'"};
  }
  const std::string kind = spec.substr(0, colon);
  const std::vector<int> steps = parse_steps(spec.substr(colon + 1));
  hk_detector* raw = nullptr;
  if (kind == "single" && steps.size() == 1) {
    const AedPtr aed = lab.load_aed(steps[0], model);
    check(hk_detector_single(aed.get(), &raw));
  } else if (kind == "cascade" && steps.size() >= 2) {
    std::vector<AedPtr> owned;
    std::vector<const hk_aed*> members;
    for (int s : steps) {
      owned.push_back(lab.load_aed(s, model));
      members.push_back(owned.back().get());
    }
    check(hk_detector_cascade(members.data(), members.size(), &raw));
  } else if (kind == "fs" && steps.size() == 1) {
    check(hk_detector_squeeze(steps[0], fs_tau >= 0.0 ? fs_tau : 0.0, &raw));
    if (fs_tau < 0.0) {
      check(hk_detector_calibrate(raw, model, clean, lab.config().fs_target_fpr));
    }
  } else {
    throw CliError{exit_usage, "invalid_argument", "cannot parse detector spec '" + spec + "'"};
  }
  return Detector(raw);
}

std::string detector_id(const hk_detector* d) {
  char buf[128];
  check(hk_detector_id(d, buf, sizeof buf));
  return buf;
}

struct LoadedCorpus {
  CorpusPtr corpus;
  Dataset data;
  std::string attack;
  std::string method;
  int m = 0;
};

LoadedCorpus load_attack_corpus(const fs::path& path, const hk_classifier* target) {
  require_file(path, "corpus");
  hk_corpus* raw = nullptr;
  check(hk_corpus_load(path.c_str(), &raw));
  LoadedCorpus out;
  out.corpus.reset(raw);
  for (std::size_t i = 0; i < hk_corpus_warning_count(raw); ++i) {
    std::cerr << "warning: " << hk_corpus_warning(raw, i) << "\n";
  }
  hk_dataset* d = nullptr;
  check(hk_corpus_dataset(raw, &d));
  out.data.reset(d);
  std::uint32_t target_sum = 0;
  check(hk_classifier_checksum(target, &target_sum));
  const std::string kind = meta_or(hk_corpus_meta, raw, "corpus", "");
  if (kind == "distortion") {
    out.attack = "distortion";
    out.method = meta_or(hk_corpus_meta, raw, "distortion", "unknown");
  } else {
    const std::string crafted = meta_or(hk_corpus_meta, raw, "model_checksum", "");
    out.attack = crafted.empty() ? "unknown" : crafted == hex(target_sum) ? "whitebox" : "blackbox";
    out.method = meta_or(hk_corpus_meta, raw, "method", "unknown");
    out.m = std::atoi(meta_or(hk_corpus_meta, raw, "m", "0").c_str());
  }
  return out;
}

void log_to_stderr(const char* line, void*) { std::cerr << line << "\n"; }

int run(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"Quantization-reference adversarial example detection lab", "hawkeye"};
  app.set_config("--config", "", "Flat key=value configuration file");
  app.option_defaults()->always_capture_default();
  app.add_option("--data_dir,--data-dir", cfg.data_dir, "Directory with the MNIST IDX files");
  app.add_option("--artifact_dir,--artifact-dir", cfg.artifact_dir, "Where artifacts go");
  app.add_option("--classifier_seed", cfg.classifier_seed);
  app.add_option("--substitute_seed", cfg.substitute_seed);
  app.add_option("--aed_seed", cfg.aed_seed);
  app.add_option("--eval_seed", cfg.eval_seed);
  app.add_option("--epochs", cfg.epochs)->check(CLI::PositiveNumber);
  app.add_option("--batch_size", cfg.batch_size)->check(CLI::PositiveNumber);
  app.add_option("--learning_rate", cfg.learning_rate)->check(CLI::PositiveNumber);
  app.add_option("--max_steps", cfg.max_steps, "Cap on classifier optimizer steps (0 = none)");
  app.add_option("--aed_epochs", cfg.aed_epochs)->check(CLI::PositiveNumber);
  app.add_option("--aed_batch_size", cfg.aed_batch_size)->check(CLI::PositiveNumber);
  app.add_option("--aed_learning_rate", cfg.aed_learning_rate)->check(CLI::PositiveNumber);
  app.add_option("--eps_max", cfg.eps_max)->check(CLI::Range(1, 255));
  app.add_option("--threshold", cfg.threshold)->check(CLI::Range(0.0, 1.0));
  app.add_option("--aed_loss", cfg.aed_loss)->check(CLI::IsMember({"linear", "cross_entropy"}));
  app.add_option("--eps_grid", cfg.eps_grid)->delimiter(',');
  app.add_option("--table_steps", cfg.table_steps)->delimiter(',');
  app.add_flag("--mini", cfg.mini, "10k training images, 2 epochs, 2k evaluation images");
  app.add_option("--train_limit", cfg.train_limit, "Training images (0 = mode default)");
  app.add_option("--eval_limit", cfg.eval_limit, "Evaluation images (0 = mode default)");
  app.add_option("--fs_target_fpr", cfg.fs_target_fpr)->check(CLI::Range(0.0, 1.0));
  app.add_option("--dr_over", cfg.dr_over)->check(CLI::IsMember({"successful", "all"}));
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Progress lines on stderr");
  app.require_subcommand(1);

  auto* train_cls = app.add_subcommand("train-classifier", "Train the target or substitute CNN");
  std::string which_model = "target";
  train_cls->add_option("--model", which_model)->check(CLI::IsMember({"target", "substitute"}));

  auto* train_aed = app.add_subcommand("train-aed", "Train one detector per --step");
  std::vector<int> aed_steps;
  train_aed->add_option("--step", aed_steps, "Quantization step (repeatable)")
      ->required()
      ->check(CLI::Range(1, 255));

  auto* attack = app.add_subcommand("attack", "Craft an adversarial corpus on the eval images");
  std::string method = "fgsm";
  int attack_m = 32;
  std::string attack_out;
  attack->add_option("--method", method)->check(CLI::IsMember({"fgsm", "ifgsm"}));
  attack->add_option("--m", attack_m, "Budget in 1/255 levels")->check(CLI::Range(1, 255));
  attack->add_option("--model", which_model)->check(CLI::IsMember({"target", "substitute"}));
  attack->add_option("--out", attack_out);

  auto* evaluate = app.add_subcommand("evaluate", "Metrics CSV for a detector over corpora");
  std::string det_spec;
  std::vector<std::string> corpora;
  std::string out_path;
  double fs_tau = -1.0;
  evaluate->add_option("--detector", det_spec, "single:S | cascade:S1,S2 | fs:S")->required();
  evaluate->add_option("--attack-corpus,--attack_corpus", corpora)->required();
  evaluate->add_option("--out", out_path);
  evaluate->add_option("--fs_tau", fs_tau, "Fixed squeezing threshold (default: calibrated)");

  auto* roc = app.add_subcommand("roc", "ROC CSV of a detector against one corpus");
  std::string roc_corpus;
  roc->add_option("--detector", det_spec)->required();
  roc->add_option("--attack-corpus,--attack_corpus", roc_corpus)->required();
  roc->add_option("--out", out_path);

  auto* pcc = app.add_subcommand("pcc", "Mean PCC of difference vectors between step sizes");
  std::string pcc_steps = "2,4,8,16,32,64,128";
  std::string pcc_corpus;
  pcc->add_option("--steps", pcc_steps);
  pcc->add_option("--attack-corpus,--attack_corpus", pcc_corpus,
                  "Images to correlate on (default: fresh FGSM at m=32)");
  pcc->add_option("--out", out_path);

  auto* distort = app.add_subcommand("distort", "Environmental distortion corpus of eval images");
  std::string kind = "brightness";
  int dl = 64, dn = 10, dw = 1;
  distort->add_option("--kind", kind)->check(
      CLI::IsMember({"brightness", "noise_box", "black_dots"}));
  distort->add_option("--l", dl)->check(CLI::PositiveNumber);
  distort->add_option("--n", dn)->check(CLI::PositiveNumber);
  distort->add_option("--w", dw)->check(CLI::PositiveNumber);
  distort->add_option("--out", out_path);

  auto* table = app.add_subcommand("reproduce-table3a",
                                   "Step size x perturbation grid, training what is missing");
  table->add_option("--out", out_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    throw CliError{exit_usage, "usage", e.what()};
  }

  // The environment overrides the config file; an explicit flag beats both.
  bool flag_given = false;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a.rfind("--data_dir", 0) == 0 || a.rfind("--data-dir", 0) == 0) flag_given = true;
  }
  if (const char* env = std::getenv("HAWKEYE_DATA_DIR"); env && *env && !flag_given) {
    cfg.data_dir = env;
  }
  if (verbose) hk_set_log_callback(log_to_stderr, nullptr);

  Lab lab(cfg);

  if (*train_cls) {
    lab.train_classifier(which_model == "substitute");
  } else if (*train_aed) {
    const Model model = lab.load_classifier(false);
    lab.train_aeds(model.get(), aed_steps);
  } else if (*attack) {
    const bool substitute = which_model == "substitute";
    const Model target = lab.load_classifier(false);
    const Model crafting = substitute ? lab.load_classifier(true) : nullptr;
    const Dataset test = lab.split(false);
    hk_corpus* raw = nullptr;
    check(hk_corpus_craft(substitute ? crafting.get() : target.get(), test.get(), method.c_str(),
                          attack_m, &raw));
    CorpusPtr corpus(raw);
    check(hk_corpus_set_meta(raw, "config_hash", lab.hash().c_str()));
    check(hk_corpus_set_meta(raw, "eval_seed", std::to_string(cfg.eval_seed).c_str()));
    const fs::path out = attack_out.empty()
                             ? lab.artifact("corpus_" + method + "_m" + std::to_string(attack_m) +
                                            "_" + which_model + ".hwk")
                             : fs::path(attack_out);
    check(hk_corpus_save(raw, out.c_str()));
    write_config_beside(cfg, out);
    std::cout << "corpus " << hk_corpus_size(raw) << " images -> " << out.string() << "\n";
  } else if (*distort) {
    const Dataset test = lab.split(false);
    hk_corpus* raw = nullptr;
    check(hk_corpus_distort(test.get(), kind.c_str(), dl, dn, dw, cfg.eval_seed, &raw));
    CorpusPtr corpus(raw);
    check(hk_corpus_set_meta(raw, "config_hash", lab.hash().c_str()));
    const fs::path out =
        out_path.empty() ? lab.artifact("corpus_" + kind + ".hwk") : fs::path(out_path);
    check(hk_corpus_save(raw, out.c_str()));
    write_config_beside(cfg, out);
    std::cout << "corpus " << hk_corpus_size(raw) << " images -> " << out.string() << "\n";
  } else if (*evaluate) {
    const Model model = lab.load_classifier(false);
    const Dataset clean = lab.split(false);
    const Detector det = make_detector(lab, det_spec, model.get(), clean.get(), fs_tau);
    hk_report* raw_report = nullptr;
    check(hk_report_create(&raw_report));
    Report report(raw_report);
    for (const auto& path : corpora) {
      const LoadedCorpus c = load_attack_corpus(path, model.get());
      hk_metrics m{};
      check(hk_evaluate(det.get(), model.get(), clean.get(), c.data.get(),
                        cfg.dr_over == "all", &m));
      check(hk_report_add(report.get(), c.attack.c_str(), c.method.c_str(), c.m, det.get(), &m));
    }
    const fs::path out =
        out_path.empty() ? lab.artifact("metrics_" + detector_id(det.get()) + ".csv")
                         : fs::path(out_path);
    check(hk_report_write_csv(report.get(), out.c_str()));
    write_config_beside(cfg, out);
    std::cout << "metrics -> " << out.string() << "\n";
  } else if (*roc) {
    const Model model = lab.load_classifier(false);
    const Dataset clean = lab.split(false);
    const Detector det = make_detector(lab, det_spec, model.get(), clean.get(), -1.0);
    const LoadedCorpus c = load_attack_corpus(roc_corpus, model.get());
    const bool squeeze = det_spec.rfind("fs:", 0) == 0;
    hk_roc* raw = nullptr;
    check(hk_roc_compute(det.get(), model.get(), clean.get(), c.data.get(), squeeze ? 1 : 0,
                         &raw));
    Roc curve(raw);
    const std::string id = detector_id(det.get());
    const fs::path out =
        out_path.empty() ? lab.artifact("roc_" + id + ".csv") : fs::path(out_path);
    check(hk_roc_write_csv(curve.get(), id.c_str(), out.c_str()));
    write_config_beside(cfg, out);
    std::cout << id << " AUC " << hk_roc_auc(curve.get()) << " -> " << out.string() << "\n";
  } else if (*pcc) {
    const Model model = lab.load_classifier(false);
    const std::vector<int> steps = parse_steps(pcc_steps);
    Dataset images;
    CorpusPtr owned;
    if (!pcc_corpus.empty()) {
      LoadedCorpus c = load_attack_corpus(pcc_corpus, model.get());
      images = std::move(c.data);
    } else {
      const Dataset test = lab.split(false);
      hk_corpus* raw = nullptr;
      check(hk_corpus_craft(model.get(), test.get(), "fgsm", 32, &raw));
      owned.reset(raw);
      hk_dataset* d = nullptr;
      check(hk_corpus_dataset(raw, &d));
      images.reset(d);
    }
    hk_pcc* raw = nullptr;
    check(hk_pcc_compute(model.get(), images.get(), steps.data(), steps.size(), &raw));
    Pcc matrix(raw);
    const fs::path out = out_path.empty() ? lab.artifact("pcc.csv") : fs::path(out_path);
    check(hk_pcc_write_csv(matrix.get(), out.c_str()));
    write_config_beside(cfg, out);
    std::cout << "pcc -> " << out.string() << "\n";
  } else if (*table) {
    const Model model = lab.classifier_or_train(false);
    std::vector<int> missing;
    for (int s : cfg.table_steps) {
      if (!fs::exists(lab.aed_path(s))) missing.push_back(s);
    }
    if (!missing.empty()) lab.train_aeds(model.get(), missing);
    std::vector<AedPtr> owned;
    std::vector<const hk_aed*> aeds;
    for (int s : cfg.table_steps) {
      owned.push_back(lab.load_aed(s, model.get()));
      aeds.push_back(owned.back().get());
    }
    const Dataset test = lab.split(false);
    hk_report* raw_report = nullptr;
    check(hk_report_create(&raw_report));
    Report report(raw_report);
    check(hk_eval_grid(model.get(), test.get(), aeds.data(), aeds.size(), cfg.eps_grid.data(),
                       cfg.eps_grid.size(), report.get()));
    const fs::path out = out_path.empty() ? lab.artifact("grid.csv") : fs::path(out_path);
    check(hk_report_write_csv(report.get(), out.c_str()));
    write_config_beside(cfg, out);
    std::cout << "grid " << hk_report_size(report.get()) << " cells -> " << out.string() << "\n";
  }
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const CliError& e) {
    std::string msg = e.message;
    for (char& ch : msg) {
      if (ch == '"' || ch == '\n') ch = '\'';
    }
    std::cerr << "error code=" << e.code << " msg=\"" << msg << "\"\n";
    return e.exit;
  } catch (const std::exception& e) {
    std::cerr << "error code=internal msg=\"" << e.what() << "\"\n";
    return exit_failure;
  }
}
