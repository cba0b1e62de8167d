#include "support/properties.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "attacks/attacks.hpp"
#include "classifier/classifier.hpp"
#include "dataio/checkpoint.hpp"
#include "detector/aed.hpp"
#include "detector/quantize.hpp"
#include "evalkit/metrics.hpp"
#include "evalkit/roc.hpp"
#include "support/oracles.hpp"

namespace hawkeye::testing {

namespace {

void randomize(nd::Network& net, std::uint64_t seed) {
  auto params = net.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    *params[i] = random_tensor(params[i]->shape(), seed * 131 + i, -0.5f, 0.5f);
  }
}

struct Family {
  const char* name;
  nd::Shape input;
  std::vector<nd::LayerSpec> (*layers)();
};

const Family families[] = {
    {"dense-relu-dense", {6},
     [] { return std::vector<nd::LayerSpec>{nd::dense(6, 5), nd::relu(), nd::dense(5, 3)}; }},
    {"conv3-same-pool", {6, 6, 2},
     [] {
       return std::vector<nd::LayerSpec>{nd::conv2d(3, 2, 3), nd::relu(), nd::maxpool2x2(),
                                         nd::flatten(), nd::dense(27, 4)};
     }},
    {"conv5-valid-pool", {8, 8, 3},
     [] {
       return std::vector<nd::LayerSpec>{nd::conv2d(5, 3, 4, nd::Padding::valid), nd::relu(),
                                         nd::maxpool2x2(), nd::flatten(), nd::dense(16, 3)};
     }},
};

std::vector<float> random_levels(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> level(0, max_level);
  std::vector<float> out(n);
  for (float& v : out) v = static_cast<float>(level(rng)) / 255.0f;
  return out;
}

}  // namespace

PropertyResult gradient_property(int instances) {
  PropertyResult r{"gradient finite differences", true, ""};
  std::size_t checked = 0, skipped = 0;
  double worst = 0.0;
  for (const auto& fam : families) {
    for (int k = 0; k < instances; ++k) {
      const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(k);
      nd::Network net(fam.input, fam.layers());
      randomize(net, seed);
      const int n = 3;
      const nd::Tensor x = random_tensor(nd::batched(n, fam.input), seed ^ 0x5eed, -1.0f, 1.0f);
      std::mt19937_64 rng(seed);
      std::vector<int> labels(n);
      for (int& y : labels) y = static_cast<int>(rng() % net.output_shape()[0]);
      const auto rep = check_gradients(net, x, labels);
      checked += rep.checked;
      skipped += rep.skipped;
      worst = std::max(worst, rep.worst_abs);
      if (rep.failed > 0 && r.ok) {
        r.ok = false;
        r.detail = fmt::format("{} instance {}: {} failures, first {}", fam.name, k, rep.failed,
                               rep.first_failure);
      }
    }
  }
  // Kink-straddling coordinates are expected to be rare; many of them would
  // mean the check is not testing anything.
  if (r.ok && skipped * 10 > checked + skipped) {
    r.ok = false;
    r.detail = fmt::format("{} of {} coordinates straddled a kink", skipped, checked + skipped);
  }
  if (r.ok) {
    r.detail = fmt::format("{} coordinates over {} networks, {} skipped at kinks, worst |diff| {:.2e}",
                           checked, instances * 3, skipped, worst);
  }
  return r;
}

PropertyResult quantization_property(int pixels) {
  PropertyResult r{"quantization idempotence and lattice", true, ""};
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> level(0, max_level);
  std::uniform_int_distribution<int> step(1, max_level);
  nd::Tensor x({pixels});
  std::vector<int> steps(static_cast<std::size_t>(pixels));
  for (int i = 0; i < pixels; ++i) {
    x[i] = static_cast<float>(level(rng)) / 255.0f;
    steps[i] = step(rng);
  }
  auto bad = [&](const std::string& what) {
    if (r.ok) r.detail = what;
    r.ok = false;
  };
  for (int i = 0; i < pixels && r.ok; ++i) {
    const int s = steps[i];
    const int k = raw_level(x[i]);
    const float q = quantize_value(x[i], s);
    const int qk = raw_level(q);
    if (qk % s != 0) bad(fmt::format("raw {} s {} -> {} not on the lattice", k, s, qk));
    if (qk != s * (k / s)) bad(fmt::format("raw {} s {} -> {}, expected {}", k, s, qk, s * (k / s)));
    if (quantize_value(q, s) != q) bad(fmt::format("raw {} s {} not idempotent", k, s));
    // Reference stability against a neighbour less than one step away.
    std::uniform_int_distribution<int> offset(-(s - 1), s - 1);
    const int kb = std::clamp(k + offset(rng), 0, max_level);
    const float qb = quantize_value(static_cast<float>(kb) / 255.0f, s);
    if (std::abs(q - qb) > static_cast<float>(s) / 255.0f + 1e-6f) {
      bad(fmt::format("raw {} and {} at s {} quantize {} apart", k, kb, s, std::abs(q - qb) * 255));
    }
  }
  // The batch form agrees with the scalar form, and is idempotent as a whole.
  for (int s : {1, 2, 16, 64, 128, 255}) {
    const nd::Tensor q = quantize(x, s);
    if (!(quantize(q, s) == q)) bad(fmt::format("batch quantize not idempotent at s {}", s));
    for (int i = 0; i < pixels && r.ok; ++i) {
      if (q[i] != quantize_value(x[i], s)) bad(fmt::format("batch and scalar differ at s {}", s));
    }
  }
  if (r.ok) r.detail = fmt::format("{} random pixels", pixels);
  return r;
}

PropertyResult attack_bounds_property(int images) {
  PropertyResult r{"attack L-inf and range bounds", true, ""};
  const Classifier model = build_mnist_cnn(99);
  const auto n = static_cast<std::size_t>(images);
  nd::Tensor x(nd::batched(n, model.input_shape()),
               random_levels(n * nd::element_count(model.input_shape()), 77));
  std::vector<int> labels(n);
  std::mt19937_64 rng(78);
  for (int& y : labels) y = static_cast<int>(rng() % mnist_classes);

  auto check = [&](const nd::Tensor& adv, int m, const char* method) {
    const float eps = perturbation(m);
    double worst = 0.0;
    for (std::size_t i = 0; i < adv.size(); ++i) {
      const float v = adv[i];
      if (!(v >= 0.0f && v <= 1.0f)) {
        r.ok = false;
        r.detail = fmt::format("{} m={} pixel {} = {} outside [0,1]", method, m, i, v);
        return;
      }
      worst = std::max(worst, static_cast<double>(std::abs(v - x[i])));
    }
    if (worst > eps + 1e-6) {
      r.ok = false;
      r.detail = fmt::format("{} m={} moved a pixel by {} > eps {}", method, m, worst, eps);
    }
  };

  const nd::Tensor signs = gradient_sign(model, x, labels);
  for (int m : {1, 8, 32, 255}) {
    check(apply_signed_step(x, signs, perturbation(m)), m, "fgsm");
    if (!r.ok) return r;
  }
  for (int m : {1, 4}) {
    check(ifgsm(model, x, labels, m), m, "ifgsm");
    if (!r.ok) return r;
  }
  r.detail = fmt::format("{} images, fgsm m in {{1,8,32,255}}, ifgsm m in {{1,4}}", images);
  return r;
}

PropertyResult roc_property() {
  PropertyResult r{"ROC monotonicity and AUC bounds", true, ""};
  auto bad = [&](const std::string& what) {
    if (r.ok) r.detail = what;
    r.ok = false;
  };
  std::mt19937_64 rng(31);
  const auto grid = linear_thresholds(201);
  for (int trial = 0; trial < 50 && r.ok; ++trial) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> clean(200), adv(150);
    const double shift = u(rng) - 0.5;
    for (double& v : clean) v = u(rng);
    for (double& v : adv) v = std::clamp(u(rng) + shift, 0.0, 1.0);
    for (const auto& thresholds : {grid, quantile_thresholds(clean, adv, 201)}) {
      const RocCurve c = roc_curve(clean, adv, thresholds);
      for (std::size_t i = 1; i < c.points.size(); ++i) {
        if (c.points[i].threshold < c.points[i - 1].threshold) bad("thresholds not ascending");
        if (c.points[i].fpr > c.points[i - 1].fpr || c.points[i].dr > c.points[i - 1].dr) {
          bad(fmt::format("trial {}: rates rise between T={} and T={}", trial,
                          c.points[i - 1].threshold, c.points[i].threshold));
        }
      }
      if (!(c.auc >= 0.0 && c.auc <= 1.0)) bad(fmt::format("trial {}: AUC {}", trial, c.auc));
    }
  }
  const std::vector<double> low(100, 0.2), high(100, 0.8);
  const double separated = roc_curve(low, high, grid).auc;
  if (std::abs(separated - 1.0) > 1e-12) bad(fmt::format("separated scores give AUC {}", separated));
  const std::vector<double> flat(100, 0.3);
  const RocCurve constant = roc_curve(flat, flat, grid);
  if (std::abs(constant.auc - 0.5) > 1e-12) bad(fmt::format("constant scores give AUC {}", constant.auc));
  for (const auto& p : constant.points) {
    if (!((p.fpr == 0.0 && p.dr == 0.0) || (p.fpr == 1.0 && p.dr == 1.0))) {
      bad(fmt::format("constant scores give point ({}, {})", p.fpr, p.dr));
    }
  }
  if (r.ok) r.detail = "50 random score sets on linear and quantile grids";
  return r;
}

PropertyResult asr_ad_property(int trials) {
  PropertyResult r{"ASR-AD identity", true, ""};
  std::mt19937_64 rng(41);
  for (int t = 0; t < trials && r.ok; ++t) {
    const std::size_t n = 1 + rng() % 500;
    const double p_wrong = static_cast<double>(rng() % 101) / 100.0;
    const double p_flag = static_cast<double>(rng() % 101) / 100.0;
    std::bernoulli_distribution wrong(p_wrong), flag(p_flag);
    std::vector<int> labels(n), preds(n);
    std::vector<std::uint8_t> adv_flags(n), clean_flags(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = static_cast<int>(rng() % 10);
      preds[i] = wrong(rng) ? (labels[i] + 1 + static_cast<int>(rng() % 9)) % 10 : labels[i];
      adv_flags[i] = flag(rng);
      clean_flags[i] = flag(rng);
    }
    const Metrics m = compute_metrics(labels, preds, clean_flags, adv_flags);
    const double expected = m.dr ? m.asr * (1.0 - *m.dr) : m.asr;
    if (std::abs(m.asr_ad - expected) > 1e-9 || m.asr_ad > m.asr + 1e-12) {
      r.ok = false;
      r.detail = fmt::format("trial {}: ASR {} DR {} ASR-AD {}", t, m.asr, m.dr.value_or(-1.0),
                             m.asr_ad);
    }
  }
  if (r.ok) r.detail = fmt::format("{} random verdict sets", trials);
  return r;
}

PropertyResult checkpoint_property(const std::filesystem::path& dir) {
  PropertyResult r{"checkpoint round trip", true, ""};
  auto bad = [&](const std::string& what) {
    if (r.ok) r.detail = what;
    r.ok = false;
  };
  std::filesystem::create_directories(dir);

  const Classifier model = build_mnist_cnn(5);
  save_classifier(model, dir / "model.hwk");
  const auto loaded = load_classifier(dir / "model.hwk");
  const auto a = model.network().parameters();
  const auto b = loaded.model.network().parameters();
  if (a.size() != b.size()) bad("classifier parameter count changed");
  for (std::size_t i = 0; i < a.size() && r.ok; ++i) {
    if (!(*a[i] == *b[i])) bad(fmt::format("classifier tensor {} differs", i));
  }
  if (loaded.checksum != model_checksum(model.network())) bad("classifier checksum differs");
  const std::size_t n = 100;
  const nd::Tensor x(nd::batched(n, model.input_shape()),
                     random_levels(n * nd::element_count(model.input_shape()), 5));
  if (!(model.logits_batch(x) == loaded.model.logits_batch(x))) bad("classifier logits differ");

  const Aed aed(build_aed_network(mnist_classes, 9), 64, 0.375f);
  save_aed(aed, dir / "aed.hwk");
  const auto back = load_aed(dir / "aed.hwk");
  if (back.aed.step() != 64 || back.aed.threshold() != 0.375f) bad("AED step or threshold lost");
  const auto pa = aed.network().parameters();
  const auto pb = back.aed.network().parameters();
  for (std::size_t i = 0; i < pa.size() && r.ok; ++i) {
    if (!(*pa[i] == *pb[i])) bad(fmt::format("AED tensor {} differs", i));
  }

  Corpus corpus;
  corpus.data.images = x;
  corpus.data.labels.assign(n, 3);
  corpus.provenance = {{"corpus", "attack"}, {"method", "fgsm"}, {"m", "32"}, {"seed", "1"},
                       {"model_checksum", checksum_hex(loaded.checksum)}};
  save_corpus(corpus, dir / "corpus.hwk");
  const auto lc = load_corpus(dir / "corpus.hwk");
  if (!(lc.corpus.data.images == x) || lc.corpus.data.labels != corpus.data.labels) {
    bad("corpus images or labels differ");
  }
  if (lc.corpus.provenance.at("m") != "32" || !lc.warnings.empty()) bad("corpus provenance lost");
  if (r.ok) r.detail = "classifier, AED and corpus reload bit-exactly";
  return r;
}

std::vector<PropertyResult> all_properties(const std::filesystem::path& scratch) {
  return {gradient_property(), quantization_property(), attack_bounds_property(),
          roc_property(),      asr_ad_property(),       checkpoint_property(scratch)};
}

}  // namespace hawkeye::testing
