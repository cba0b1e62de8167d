#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "common/error.hpp"
#include "dataio/checkpoint.hpp"
#include "dataio/container.hpp"
#include "dataio/idx.hpp"
#include "support/properties.hpp"

using namespace hawkeye;
namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path dir;
  explicit Scratch(const char* name) : dir(fs::temp_directory_path() / name) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
};

void put_be32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(v >> s));
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& b) {
  std::ofstream f(p, std::ios::binary);
  f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

std::vector<std::uint8_t> idx_images(std::uint32_t magic, std::uint32_t n, std::size_t payload) {
  std::vector<std::uint8_t> b;
  put_be32(b, magic);
  put_be32(b, n);
  put_be32(b, 28);
  put_be32(b, 28);
  for (std::size_t i = 0; i < payload; ++i) b.push_back(static_cast<std::uint8_t>(i % 256));
  return b;
}

std::vector<std::uint8_t> idx_labels(std::uint32_t magic, std::uint32_t n) {
  std::vector<std::uint8_t> b;
  put_be32(b, magic);
  put_be32(b, n);
  for (std::uint32_t i = 0; i < n; ++i) b.push_back(static_cast<std::uint8_t>(i % 10));
  return b;
}

ErrorCode load_error(const fs::path& images, const fs::path& labels) {
  try {
    load_mnist(images, labels, Split::test);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected rejection");
  return ErrorCode::invalid_argument;
}

ErrorCode decode_error(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_container(bytes, "test");
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected rejection");
  return ErrorCode::invalid_argument;
}

}  // namespace

TEST_CASE("IDX parsing") {
  Scratch s("hawkeye_idx_test");
  const auto img = s.dir / "img", lab = s.dir / "lab";

  write_bytes(img, idx_images(2051, 3, 3 * 784));
  write_bytes(lab, idx_labels(2049, 3));
  const auto d = load_mnist(img, lab, Split::train);
  CHECK(d.size() == 3);
  CHECK(d.images.shape() == nd::Shape{3, 28, 28, 1});
  CHECK(d.labels == std::vector<int>{0, 1, 2});
  CHECK(d.images[255] == 1.0f);
  CHECK(d.images[256] == 0.0f);
  for (float v : d.images.data()) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }

  SUBCASE("label file passed as images") {
    CHECK(load_error(lab, lab) == ErrorCode::bad_magic);
  }
  SUBCASE("wrong label magic") {
    write_bytes(lab, idx_labels(2051, 3));
    CHECK(load_error(img, lab) == ErrorCode::bad_magic);
  }
  SUBCASE("truncated pixels") {
    write_bytes(img, idx_images(2051, 3, 3 * 784 - 1));
    CHECK(load_error(img, lab) == ErrorCode::truncated);
  }
  SUBCASE("truncated header") {
    write_bytes(img, {0, 0, 8, 3, 0, 0});
    CHECK(load_error(img, lab) == ErrorCode::truncated);
  }
  SUBCASE("count mismatch") {
    write_bytes(lab, idx_labels(2049, 2));
    CHECK(load_error(img, lab) == ErrorCode::count_mismatch);
  }
  SUBCASE("missing file") {
    CHECK(load_error(s.dir / "nope", lab) == ErrorCode::io);
  }
}

TEST_CASE("canonical MNIST files" * doctest::skip(std::getenv("HAWKEYE_MNIST_DIR") == nullptr)) {
  const fs::path dir = std::getenv("HAWKEYE_MNIST_DIR");
  CHECK(load_mnist_split(dir, Split::train).size() == 60000);
  CHECK(load_mnist_split(dir, Split::test).size() == 10000);
}

TEST_CASE("container format") {
  Container c;
  c.metadata = {{"kind", "test"}, {"note", "a b=c"}};
  c.tensors.push_back({"w", nd::Tensor({2, 3}, {1, -2, 3.5f, 0, 1e-30f, -0.0f})});
  c.tensors.push_back({"b", nd::Tensor({1}, {7})});
  const auto bytes = encode_container(c);
  const auto back = decode_container(bytes);
  CHECK(back.metadata == c.metadata);
  REQUIRE(back.tensors.size() == 2);
  CHECK(back.tensor("w") == c.tensor("w"));
  CHECK(std::signbit(back.tensor("w")[5]));
  CHECK(*back.meta("note") == "a b=c");
  CHECK_FALSE(back.meta("absent").has_value());

  SUBCASE("every single-byte corruption is caught") {
    for (std::size_t i = 0; i < bytes.size(); ++i) {
      auto bad = bytes;
      bad[i] ^= 0x10;
      CHECK_THROWS_AS(decode_container(bad), Error);
    }
  }
  SUBCASE("payload corruption is a checksum failure") {
    auto bad = bytes;
    bad[bytes.size() - 12] ^= 1;
    CHECK(decode_error(bad) == ErrorCode::checksum);
  }
  SUBCASE("unknown version") {
    auto bad = bytes;
    bad[4] = 2;
    CHECK(decode_error(bad) == ErrorCode::version);
  }
  SUBCASE("wrong magic") {
    auto bad = bytes;
    bad[0] = 'X';
    CHECK(decode_error(bad) == ErrorCode::bad_magic);
  }
  SUBCASE("truncated") {
    CHECK(decode_error({bytes.begin(), bytes.begin() + 10}) == ErrorCode::truncated);
    CHECK(decode_error({bytes.begin(), bytes.end() - 3}) == ErrorCode::checksum);
  }
  SUBCASE("model checksum covers only the tensors") {
    Container d = c;
    d.metadata["extra"] = "1";
    CHECK(tensor_payload_crc(d.tensors) == tensor_payload_crc(c.tensors));
    d.tensors[1].tensor[0] = 8;
    CHECK(tensor_payload_crc(d.tensors) != tensor_payload_crc(c.tensors));
  }
}

TEST_CASE("checkpoints round trip bit-exactly") {
  Scratch s("hawkeye_ckpt_test");
  const auto r = hawkeye::testing::checkpoint_property(s.dir);
  INFO(r.detail);
  CHECK(r.ok);

  SUBCASE("loading leaves the file untouched") {
    const auto before = read_bytes(s.dir / "model.hwk");
    load_classifier(s.dir / "model.hwk");
    CHECK(read_bytes(s.dir / "model.hwk") == before);
  }
  SUBCASE("corrupted checkpoint is rejected") {
    auto bytes = read_bytes(s.dir / "model.hwk");
    bytes[bytes.size() / 2] ^= 0x40;
    write_bytes(s.dir / "bad.hwk", bytes);
    try {
      load_classifier(s.dir / "bad.hwk");
      FAIL("expected rejection");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::checksum);
    }
  }
  SUBCASE("a detector is not a classifier") {
    try {
      load_classifier(s.dir / "aed.hwk");
      FAIL("expected rejection");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::model_mismatch);
    }
  }
  SUBCASE("detector metadata") {
    const auto a = load_aed(s.dir / "aed.hwk");
    CHECK(a.metadata.at("step") == "64");
    CHECK_FALSE(a.classifier_checksum.has_value());
    save_aed(a.aed, s.dir / "aed2.hwk", {{"classifier_checksum", "0badf00d"}});
    CHECK(load_aed(s.dir / "aed2.hwk").classifier_checksum == 0x0badf00du);
  }
}

TEST_CASE("corpus provenance") {
  Scratch s("hawkeye_corpus_test");
  Corpus c;
  c.data.images = nd::Tensor({2, 28, 28, 1}, 0.25f);
  c.data.labels = {4, 9};
  save_corpus(c, s.dir / "bare.hwk");
  const auto bare = load_corpus(s.dir / "bare.hwk");
  REQUIRE(bare.warnings.size() == 1);
  CHECK(bare.warnings[0].find("no provenance record") != std::string::npos);
  CHECK(bare.corpus.data.labels == c.data.labels);

  c.provenance = {{"corpus", "attack"}, {"method", "fgsm"}, {"m", "32"}};
  save_corpus(c, s.dir / "partial.hwk");
  const auto partial = load_corpus(s.dir / "partial.hwk");
  CHECK(partial.warnings.size() == 2);  // seed and model_checksum
  CHECK(partial.corpus.provenance.at("m") == "32");

  c.provenance = {{"corpus", "distortion"}, {"distortion", "black_dots"}, {"l", "64"},
                  {"n", "10"}, {"w", "1"}, {"seed", "11"}};
  save_corpus(c, s.dir / "full.hwk");
  CHECK(load_corpus(s.dir / "full.hwk").warnings.empty());
}

TEST_CASE("checksum text") {
  CHECK(checksum_hex(0xdeadbeef) == "deadbeef");
  CHECK(parse_checksum("deadbeef") == 0xdeadbeefu);
  CHECK_THROWS_AS(parse_checksum("xyz"), Error);
  CHECK_THROWS_AS(parse_checksum(""), Error);
}
