#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "common/error.hpp"
#include "evalkit/experiments.hpp"
#include "evalkit/metrics.hpp"
#include "evalkit/pcc.hpp"
#include "evalkit/report.hpp"
#include "evalkit/roc.hpp"
#include "support/oracles.hpp"
#include "support/properties.hpp"

using namespace hawkeye;
using hawkeye::testing::random_tensor;

namespace {

Aed constant_aed(int step, float u) {
  nd::Network net = build_aed_network(10, 1);
  for (nd::Tensor* p : net.parameters()) p->fill(0.0f);
  net.layers().back().bias[0] = u;
  return Aed(std::move(net), step);
}

Classifier tiny_classifier(std::uint64_t seed) {
  nd::Network net({28, 28, 1}, {nd::flatten(), nd::dense(784, 10)});
  net.init_parameters(seed);
  *net.parameters()[0] = random_tensor({784, 10}, seed, -0.3f, 0.3f);
  return Classifier(std::move(net), seed);
}

LabeledDataset random_dataset(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  LabeledDataset d;
  d.images = nd::Tensor({static_cast<int>(n), 28, 28, 1});
  for (float& v : d.images.data()) v = static_cast<float>(rng() % 256) / 255.0f;
  for (std::size_t i = 0; i < n; ++i) d.labels.push_back(static_cast<int>(rng() % 10));
  return d;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("always-flag and never-flag detectors") {
  const std::vector<int> labels{0, 1, 2, 3};
  const std::vector<int> preds{1, 1, 0, 3};  // two successes
  const std::vector<std::uint8_t> ones(4, 1), zeros(4, 0);
  const auto always = compute_metrics(labels, preds, ones, ones);
  CHECK(*always.dr == 1.0);
  CHECK(always.fpr == 1.0);
  CHECK(always.asr == 0.5);
  CHECK(always.asr_ad == 0.0);
  const auto never = compute_metrics(labels, preds, zeros, zeros);
  CHECK(*never.dr == 0.0);
  CHECK(never.fpr == 0.0);
  CHECK(never.asr_ad == never.asr);
  CHECK(never.n_success == 2);
  CHECK(never.n_dr_denominator == 2);
}

TEST_CASE("DR denominator") {
  const std::vector<int> labels{0, 1, 2, 3};
  const std::vector<int> preds{1, 1, 2, 3};
  const std::vector<std::uint8_t> clean{0, 0, 0, 0}, adv{1, 1, 0, 0};
  CHECK(*compute_metrics(labels, preds, clean, adv).dr == 1.0);
  const auto all = compute_metrics(labels, preds, clean, adv, DrDenominator::all);
  CHECK(*all.dr == 0.5);
  CHECK(all.n_dr_denominator == 4);
  // No successful perturbation: DR is undefined, not zero.
  const auto none = compute_metrics(labels, labels, clean, adv);
  CHECK_FALSE(none.dr.has_value());
  CHECK(none.n_dr_denominator == 0);
  CHECK(none.asr == 0.0);
}

TEST_CASE("ASR at zero perturbation is the clean error rate") {
  const auto model = tiny_classifier(1);
  const auto d = random_dataset(200, 2);
  CHECK(attack_success_rate(d.labels, model.predict_batch(d.images)) ==
        doctest::Approx(1.0 - accuracy(model, d)));
}

TEST_CASE("ASR-AD identity on synthetic verdicts") {
  const auto r = hawkeye::testing::asr_ad_property(500);
  INFO(r.detail);
  CHECK(r.ok);
}

TEST_CASE("ROC") {
  const auto r = hawkeye::testing::roc_property();
  INFO(r.detail);
  CHECK(r.ok);

  const auto grid = linear_thresholds(201);
  REQUIRE(grid.size() == 201);
  CHECK(grid.front() == 0.0);
  CHECK(grid.back() == 1.0);
  CHECK(grid[100] == 0.5);

  // Hand-checked staircase: clean {0.1, 0.4}, adv {0.3, 0.8} at T in {0, 0.2, 0.5, 1}.
  const std::vector<double> clean{0.1, 0.4}, adv{0.3, 0.8}, ts{0.5, 0.0, 0.2, 1.0};
  const auto c = roc_curve(clean, adv, ts);
  REQUIRE(c.points.size() == 4);
  CHECK(c.points[0].threshold == 0.0);
  CHECK(c.points[1].fpr == 0.5);
  CHECK(c.points[1].dr == 1.0);
  CHECK(c.points[2].fpr == 0.0);
  CHECK(c.points[2].dr == 0.5);
  // Points (0,0) (0,0.5) (0.5,1) (1,1): area 0.5*0.75 + 0.5*1 = 0.875.
  CHECK(c.auc == doctest::Approx(0.875));

  const std::vector<double> empty;
  CHECK_THROWS_AS(roc_curve(empty, adv, ts), Error);

  const auto q = quantile_thresholds(clean, adv, 5);
  CHECK(q.front() == 0.1);
  CHECK(q.back() == 0.8);
}

TEST_CASE("pearson") {
  const std::vector<double> u{1, 2, 3}, v{1, 2, 4}, w{3, 2, 1}, flat{2, 2, 2};
  // Centered: (-1,0,1) and (-4/3,-1/3,5/3); cov 3, variances 2 and 14/3.
  CHECK(*pearson(u, v) == doctest::Approx(3.0 / std::sqrt(2.0 * 14.0 / 3.0)).epsilon(1e-12));
  CHECK(*pearson(u, u) == doctest::Approx(1.0));
  CHECK(*pearson(u, w) == doctest::Approx(-1.0));
  CHECK_FALSE(pearson(u, flat).has_value());
  CHECK_FALSE(pearson(flat, flat).has_value());
  CHECK_THROWS_AS(pearson(std::vector<double>{1}, std::vector<double>{1}), Error);
}

TEST_CASE("PCC matrix is symmetric with a unit diagonal") {
  std::vector<nd::Tensor> diffs;
  for (std::uint64_t s = 0; s < 3; ++s) diffs.push_back(random_tensor({50, 10}, 30 + s, -1.0f, 1.0f));
  diffs[0].sample(3)[0] = 0.0f;
  for (float& v : diffs[1].sample(7)) v = 0.25f;  // constant: undefined for that image
  const std::vector<int> steps{32, 64, 128};
  const auto m = pcc_matrix(steps, diffs);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(m.at(i, j) == doctest::Approx(m.at(j, i)));
      CHECK(m.at(i, j) >= -1.0);
      CHECK(m.at(i, j) <= 1.0);
    }
    CHECK(m.at(i, i) == doctest::Approx(1.0).epsilon(1e-6));
  }
  CHECK(m.valid(0, 0) == 50);
  CHECK(m.valid(1, 1) == 49);
  CHECK(m.valid(0, 1) == 49);
  CHECK_THROWS_AS(pcc_matrix(std::vector<int>{64}, std::span(diffs).first(1)), Error);
}

TEST_CASE("threshold calibration") {
  std::vector<double> scores;
  for (int i = 0; i < 100; ++i) scores.push_back(i / 100.0);
  const double tau = calibrate_threshold(scores, 0.05);
  std::size_t above = 0;
  for (double s : scores) above += s > tau;
  CHECK(above == 5);
  CHECK(calibrate_threshold(scores, 0.0) == 0.99);
}

TEST_CASE("evaluation detectors") {
  const auto model = tiny_classifier(5);
  const auto data = random_dataset(60, 6);
  const std::vector<int> steps{64, 128};
  const LogitCache clean(model, data.images, steps);
  CHECK(clean.size() == 60);
  CHECK(clean.has_step(64));
  CHECK_FALSE(clean.has_step(32));
  CHECK_THROWS_AS(clean.diffs(32), Error);

  const auto single = EvalDetector::single(Aed(build_aed_network(10, 3), 64));
  const auto cascade = EvalDetector::cascade(
      CascadeDetector({Aed(build_aed_network(10, 3), 64), Aed(build_aed_network(10, 4), 128)}));
  const auto fs = EvalDetector::squeeze(64, 0.1);
  CHECK(single.id() == "aed-s64");
  CHECK(cascade.id() == "cascade-s64-s128");
  CHECK(cascade.step_label() == "64+128");
  CHECK(fs.id() == "fs-s64");
  CHECK(fs.threshold() == 0.1);
  CHECK_THROWS_AS(EvalDetector::squeeze(64, 3.0), Error);

  const auto adv = fgsm(model, data.images, data.labels, 32);
  const LogitCache perturbed(model, adv, steps);
  const auto ms = evaluate_detector(single, clean, perturbed, data.labels);
  const auto mc = evaluate_detector(cascade, clean, perturbed, data.labels);
  CHECK(mc.fpr <= ms.fpr);
  CHECK(mc.n_clean == 60);
  CHECK(mc.asr == ms.asr);
}

TEST_CASE("grid rows and CSV") {
  const auto model = tiny_classifier(7);
  const auto data = random_dataset(40, 8);
  const std::vector<EvalDetector> detectors{EvalDetector::single(constant_aed(64, 1.0f)),
                                            EvalDetector::single(constant_aed(128, -1.0f))};
  GridSpec spec;
  spec.ms = {2, 32};
  const auto rows = evaluate_grid(model, model, data, detectors, spec);
  REQUIRE(rows.size() == 4);
  const auto* r = find_row(rows, 32, "aed-s128");
  REQUIRE(r != nullptr);
  CHECK(r->metrics.fpr == 0.0);
  CHECK(find_row(rows, 16, "aed-s64") == nullptr);
  CHECK(find_row(rows, 2, "aed-s64")->metrics.fpr == 1.0);

  const std::string csv = metrics_csv(rows);
  std::istringstream lines(csv);
  std::string header, first;
  std::getline(lines, header);
  std::getline(lines, first);
  CHECK(header == "attack,method,m,detector_id,s,T,DR,FPR,ASR,ASR_AD,n_clean,n_adv");
  CHECK(first.rfind("whitebox,fgsm,2,aed-s64,64,0.500000,", 0) == 0);
  CHECK(first.find(",1.000000,") != std::string::npos);
  CHECK(first.substr(first.size() - 6) == ",40,40");

  // An undefined DR leaves its column empty.
  MetricsRow blank{"whitebox", "fgsm", 2, "aed-s64", "64", 0.5, {}};
  blank.metrics.n_clean = 10;
  blank.metrics.n_adv = 10;
  CHECK(metrics_csv(std::span(&blank, 1)).find(",0.500000,,0.000000,") != std::string::npos);
}

TEST_CASE("ROC and PCC CSV") {
  RocCurve c;
  c.points = {{0.0, 1.0, 1.0}, {0.5, 0.25, 0.75}};
  c.auc = 0.8125;
  CHECK(roc_csv("aed-s64", c) ==
        "detector_id,T,FPR,DR\naed-s64,0.000000,1.000000,1.000000\n"
        "aed-s64,0.500000,0.250000,0.750000\naed-s64,AUC,0.812500,\n");
  PccMatrix m;
  m.steps = {64, 128};
  m.mean = {1.0, 0.5, 0.5, 1.0};
  m.n_valid = {3, 0, 0, 3};
  CHECK(pcc_csv(m) == "s1,s2,mean_pcc,n_valid\n64,64,1.000000,3\n64,128,,0\n128,64,,0\n"
                      "128,128,1.000000,3\n");
}

TEST_CASE("text files are written whole") {
  const auto dir = std::filesystem::temp_directory_path() / "hawkeye_report_test";
  std::filesystem::remove_all(dir);
  write_text_file(dir / "sub" / "out.csv", "a,b\n1,2\n");
  CHECK(read_file(dir / "sub" / "out.csv") == "a,b\n1,2\n");
  CHECK_FALSE(std::filesystem::exists(dir / "sub" / "out.csv.tmp"));
  std::filesystem::remove_all(dir);
}
