#include <cmath>
#include <random>

#include "doctest.h"
#include "common/error.hpp"
#include "detector/aed.hpp"
#include "detector/quantize.hpp"
#include "detector/train.hpp"
#include "support/oracles.hpp"
#include "support/properties.hpp"

using namespace hawkeye;
using hawkeye::testing::random_tensor;

namespace {

// An AED whose score is sigmoid(u) for every input: all weights zero and the
// output bias set to u.
Aed constant_aed(int step, float u, float threshold = default_threshold) {
  nd::Network net = build_aed_network(10, 1);
  for (nd::Tensor* p : net.parameters()) p->fill(0.0f);
  net.layers().back().bias[0] = u;
  return Aed(std::move(net), step, threshold);
}

// Cheap stand-in classifier on 28x28x1 inputs.
Classifier tiny_classifier(std::uint64_t seed) {
  nd::Network net({28, 28, 1}, {nd::flatten(), nd::dense(784, 16), nd::relu(), nd::dense(16, 10)});
  net.init_parameters(seed);
  auto params = net.parameters();
  for (std::size_t i = 0; i < params.size(); i += 2) {
    *params[i] = random_tensor(params[i]->shape(), seed + i, -0.2f, 0.2f);
  }
  return Classifier(std::move(net), seed);
}

LabeledDataset random_levels_dataset(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  LabeledDataset d;
  d.images = nd::Tensor({static_cast<int>(n), 28, 28, 1});
  for (float& v : d.images.data()) v = static_cast<float>(rng() % 256) / 255.0f;
  for (std::size_t i = 0; i < n; ++i) d.labels.push_back(static_cast<int>(rng() % 10));
  return d;
}

}  // namespace

TEST_CASE("quantize on the raw scale") {
  CHECK(raw_level(quantize_value(200.0f / 255.0f, 128)) == 128);
  CHECK(raw_level(quantize_value(127.0f / 255.0f, 128)) == 0);
  CHECK(raw_level(quantize_value(255.0f / 255.0f, 64)) == 192);
  CHECK(quantize_value(1.0f, 1) == 1.0f);
  CHECK(quantize_value(0.0f, 255) == 0.0f);
  // Every stored level maps back to itself before quantizing.
  for (int k = 0; k <= 255; ++k) CHECK(raw_level(static_cast<float>(k) / 255.0f) == k);
  CHECK_THROWS_AS(quantize_value(0.5f, 0), Error);
  CHECK_THROWS_AS(quantize_value(0.5f, 256), Error);
}

TEST_CASE("quantization properties on random pixels") {
  const auto r = hawkeye::testing::quantization_property(10000);
  INFO(r.detail);
  CHECK(r.ok);
}

TEST_CASE("difference vectors and squeeze scores") {
  const auto model = tiny_classifier(3);
  SUBCASE("images already on the lattice give zero") {
    nd::Tensor x({3, 28, 28, 1});
    std::mt19937_64 rng(5);
    for (float& v : x.data()) v = static_cast<float>(64 * (rng() % 4)) / 255.0f;
    const auto z = diff_vectors(model, x, 64);
    REQUIRE(z.shape() == nd::Shape{3, 10});
    for (float v : z.data()) CHECK(v == 0.0f);
    for (double s : squeeze_scores(model, x, 64)) CHECK(s == 0.0);
  }
  SUBCASE("squeeze scores lie in [0, 2]") {
    const auto d = random_levels_dataset(50, 6);
    for (int s : {2, 64, 255}) {
      for (double v : squeeze_scores(model, d.images, s)) {
        CHECK(v >= 0.0);
        CHECK(v <= 2.0);
      }
    }
  }
}

TEST_CASE("AED scores") {
  SUBCASE("zero weights give one half") {
    const Aed aed = constant_aed(64, 0.0f);
    const std::vector<float> z{1, -2, 3, 0, 5, 6, -7, 8, 9, 10};
    CHECK(aed.score(z) == 0.5);
  }
  SUBCASE("scores stay strictly inside (0, 1)") {
    for (float u : {-1e4f, -50.0f, 0.0f, 50.0f, 1e4f}) {
      const double d = constant_aed(64, u).score(std::vector<float>(10, 0.0f));
      CHECK(d > 0.0);
      CHECK(d < 1.0);
    }
  }
  SUBCASE("wrong length is rejected") {
    CHECK_THROWS_AS(constant_aed(64, 0.0f).score(std::vector<float>(9, 0.0f)), Error);
  }
  SUBCASE("architecture") {
    const auto net = build_aed_network(10, 2);
    CHECK(net.input_shape() == nd::Shape{10});
    CHECK(net.output_shape() == nd::Shape{1});
    CHECK(net.parameter_count() == (10 * 10 + 10) * 3 + 10 + 1);
  }
}

TEST_CASE("threshold decisions are strict") {
  const std::vector<float> z(10, 0.0f);
  const nd::Tensor batch({1, 10});
  CHECK_FALSE(constant_aed(64, 0.0f, 0.5f).detect(batch).flagged[0]);  // D == T
  for (float u : {-30.0f, 0.0f, 30.0f}) {
    CHECK_FALSE(constant_aed(64, u, 1.0f).detect(batch).flagged[0]);
    CHECK(constant_aed(64, u, 0.0f).detect(batch).flagged[0]);
  }
  // Raising T never turns a negative verdict positive.
  const auto scores = random_tensor({200, 10}, 4, -3.0f, 3.0f);
  Aed aed(build_aed_network(10, 4), 64);
  std::vector<std::uint8_t> prev(200, 1);
  for (int t = 0; t <= 20; ++t) {
    aed.set_threshold(static_cast<float>(t) / 20.0f);
    const auto v = aed.detect(scores);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(v.flagged[i] <= prev[i]);
    prev = v.flagged;
  }
  CHECK_THROWS_AS(aed.set_threshold(1.5f), Error);
}

TEST_CASE("cascade is the unanimous AND of its members") {
  const nd::Tensor z({1, 10});
  const std::vector<nd::Tensor> diffs{z, z};
  const CascadeDetector yes_yes({constant_aed(64, 2.0f), constant_aed(128, 3.0f)});
  const CascadeDetector yes_no({constant_aed(64, 2.0f), constant_aed(128, -2.0f)});
  const CascadeDetector no_yes({constant_aed(64, -2.0f), constant_aed(128, 2.0f)});
  CHECK(yes_yes.detect(diffs).flagged[0]);
  CHECK_FALSE(yes_no.detect(diffs).flagged[0]);
  CHECK_FALSE(no_yes.detect(diffs).flagged[0]);
  CHECK(yes_yes.detect(diffs).scores[0] == doctest::Approx(sigmoid(2.0)));
  CHECK(yes_no.steps() == std::vector<int>{64, 128});

  CHECK_THROWS_AS(CascadeDetector({constant_aed(64, 0.0f)}), Error);
  CHECK_THROWS_AS(CascadeDetector({constant_aed(64, 0.0f), constant_aed(64, 1.0f)}), Error);

  // Flag sets: the cascade's is the intersection of its members'.
  const Aed a(build_aed_network(10, 11), 64, 0.5f), b(build_aed_network(10, 12), 128, 0.5f);
  const auto za = random_tensor({300, 10}, 13, -2.0f, 2.0f);
  const auto zb = random_tensor({300, 10}, 14, -2.0f, 2.0f);
  const auto va = a.detect(za), vb = b.detect(zb);
  const std::vector<nd::Tensor> pair{za, zb};
  const auto vc = CascadeDetector({a, b}).detect(pair);
  for (std::size_t i = 0; i < 300; ++i) CHECK(vc.flagged[i] == (va.flagged[i] && vb.flagged[i]));
  CHECK(vc.count_flagged() <= std::min(va.count_flagged(), vb.count_flagged()));
}

TEST_CASE("detector training") {
  const auto model = tiny_classifier(21);
  const auto data = random_levels_dataset(120, 22);
  AedTrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 25;
  cfg.learning_rate = 1e-2f;

  SUBCASE("joint training equals training each step alone") {
    const std::vector<int> steps{64, 128};
    const auto joint = train_aeds(model, data, steps, cfg);
    for (std::size_t j = 0; j < steps.size(); ++j) {
      const auto alone = train_aed(model, data, steps[j], cfg);
      const auto pa = joint[j].aed.network().parameters();
      const auto pb = alone.aed.network().parameters();
      for (std::size_t i = 0; i < pa.size(); ++i) CHECK(*pa[i] == *pb[i]);
      CHECK(joint[j].aed.step() == steps[j]);
    }
  }
  SUBCASE("objective per pair stays in [0, 2] and the run is recorded") {
    for (AedLoss loss : {AedLoss::linear, AedLoss::cross_entropy}) {
      cfg.loss = loss;
      const auto t = train_aed(model, data, 64, cfg);
      REQUIRE(t.epochs.size() == 3);
      CHECK(t.optimizer_steps == 3 * 5);  // five batches of at most 25 per epoch
      for (const auto& e : t.epochs) {
        CHECK(e.min_objective >= 0.0);
        CHECK(e.max_objective <= 2.0);
        CHECK(e.mean_objective >= e.min_objective);
        CHECK(e.mean_objective <= e.max_objective);
      }
    }
  }
  SUBCASE("training raises the objective") {
    cfg.epochs = 20;
    const auto t = train_aed(model, data, 64, cfg);
    CHECK(t.epochs.back().mean_objective > t.epochs.front().mean_objective);
  }
  SUBCASE("bad configurations are rejected") {
    LabeledDataset empty;
    CHECK_THROWS_AS(train_aed(model, empty, 64, cfg), Error);
    CHECK_THROWS_AS(train_aed(model, data, 0, cfg), Error);
    const std::vector<int> dup{64, 64};
    CHECK_THROWS_AS(train_aeds(model, data, dup, cfg), Error);
    cfg.eps_max = 256;
    CHECK_THROWS_AS(train_aed(model, data, 64, cfg), Error);
  }
  SUBCASE("same seed, same detector") {
    const auto a = train_aed(model, data, 32, cfg);
    const auto b = train_aed(model, data, 32, cfg);
    CHECK(*a.aed.network().parameters()[0] == *b.aed.network().parameters()[0]);
    cfg.seed = 8;
    const auto c = train_aed(model, data, 32, cfg);
    CHECK_FALSE(*a.aed.network().parameters()[0] == *c.aed.network().parameters()[0]);
  }
}

TEST_CASE("loss names") {
  CHECK(parse_aed_loss("linear") == AedLoss::linear);
  CHECK(parse_aed_loss("cross_entropy") == AedLoss::cross_entropy);
  CHECK_THROWS_AS(parse_aed_loss("hinge"), Error);
}
