#include "dataio/checkpoint.hpp"

#include <cmath>
#include <cstring>

#include <fmt/format.h>

#include "common/error.hpp"

namespace hawkeye {

namespace {

constexpr const char* classifier_arch = "mnist-cnn";
constexpr const char* aed_arch = "aed-dense-10x3";

void expect_kind(const Container& c, const char* kind, const std::filesystem::path& path) {
  const auto found = c.meta("kind");
  require(found.has_value() && *found == kind, ErrorCode::model_mismatch,
          path.string() + " holds a " + found.value_or("untyped") + " file, expected " + kind);
}

Container with_metadata(std::vector<NamedTensor> tensors, const Metadata& extra) {
  Container c;
  c.tensors = std::move(tensors);
  c.metadata = extra;
  return c;
}

template <typename T>
T parse_number(const Container& c, const std::string& key, const std::filesystem::path& path) {
  const std::string& v = c.require_meta(key);
  try {
    std::size_t used = 0;
    if constexpr (std::is_floating_point_v<T>) {
      const double d = std::stod(v, &used);
      if (used == v.size()) return static_cast<T>(d);
    } else {
      const long long i = std::stoll(v, &used);
      if (used == v.size()) return static_cast<T>(i);
    }
  } catch (const std::exception&) {
  }
  fail(ErrorCode::bad_magic, path.string() + ": metadata " + key + "='" + v + "' is not a number");
}

}  // namespace

std::vector<NamedTensor> network_tensors(const nd::Network& net) {
  std::vector<NamedTensor> out;
  const auto layers = net.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (!layers[i].has_parameters()) continue;
    out.push_back({fmt::format("layer{}.weight", i), layers[i].weight});
    out.push_back({fmt::format("layer{}.bias", i), layers[i].bias});
  }
  return out;
}

void restore_network(nd::Network& net, const Container& c, const std::string& origin) {
  const auto expected = network_tensors(net);
  require(expected.size() == c.tensors.size(), ErrorCode::shape_mismatch,
          fmt::format("{}: {} parameter tensors stored, network has {}", origin, c.tensors.size(),
                      expected.size()));
  auto layers = net.layers();
  std::size_t t = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (!layers[i].has_parameters()) continue;
    for (nd::Tensor* dst : {&layers[i].weight, &layers[i].bias}) {
      const NamedTensor& src = c.tensors[t];
      require(src.name == expected[t].name && src.tensor.shape() == dst->shape(),
              ErrorCode::shape_mismatch,
              fmt::format("{}: tensor '{}' {} does not fit '{}' {}", origin, src.name,
                          nd::shape_string(src.tensor.shape()), expected[t].name,
                          nd::shape_string(dst->shape())));
      *dst = src.tensor;
      ++t;
    }
  }
}

std::uint32_t model_checksum(const nd::Network& net) {
  return tensor_payload_crc(network_tensors(net));
}

std::uint32_t parse_checksum(const std::string& hex) {
  std::size_t used = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(hex, &used, 16);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used == hex.size() && used > 0 && v <= 0xffffffffUL, ErrorCode::invalid_argument,
          "'" + hex + "' is not a hex checksum");
  return static_cast<std::uint32_t>(v);
}

void save_classifier(const Classifier& model, const std::filesystem::path& path,
                     const Metadata& extra) {
  Container c = with_metadata(network_tensors(model.network()), extra);
  c.metadata["kind"] = "classifier";
  c.metadata["arch"] = classifier_arch;
  c.metadata["seed"] = std::to_string(model.seed());
  c.metadata["classes"] = std::to_string(model.classes());
  write_container(c, path);
}

ClassifierCheckpoint load_classifier(const std::filesystem::path& path) {
  const Container c = read_container(path);
  expect_kind(c, "classifier", path);
  require(c.require_meta("arch") == classifier_arch, ErrorCode::model_mismatch,
          path.string() + ": unsupported classifier architecture '" + c.require_meta("arch") + "'");
  ClassifierCheckpoint out;
  out.model = build_mnist_cnn(parse_number<std::uint64_t>(c, "seed", path));
  restore_network(out.model.network(), c, path.string());
  out.metadata = c.metadata;
  out.checksum = tensor_payload_crc(c.tensors);
  return out;
}

void save_aed(const Aed& aed, const std::filesystem::path& path, const Metadata& extra) {
  Container c = with_metadata(network_tensors(aed.network()), extra);
  c.metadata["kind"] = "aed";
  c.metadata["arch"] = aed_arch;
  c.metadata["step"] = std::to_string(aed.step());
  c.metadata["threshold"] = fmt::format("{}", aed.threshold());
  c.metadata["classes"] = std::to_string(aed.classes());
  write_container(c, path);
}

AedCheckpoint load_aed(const std::filesystem::path& path) {
  const Container c = read_container(path);
  expect_kind(c, "aed", path);
  require(c.require_meta("arch") == aed_arch, ErrorCode::model_mismatch,
          path.string() + ": unsupported detector architecture '" + c.require_meta("arch") + "'");
  const int classes = parse_number<int>(c, "classes", path);
  nd::Network net = build_aed_network(classes, 0);
  restore_network(net, c, path.string());
  AedCheckpoint out;
  out.aed = Aed(std::move(net), parse_number<int>(c, "step", path),
                parse_number<float>(c, "threshold", path));
  out.metadata = c.metadata;
  out.checksum = tensor_payload_crc(c.tensors);
  if (const auto cs = c.meta("classifier_checksum")) out.classifier_checksum = parse_checksum(*cs);
  return out;
}

std::vector<std::string> required_provenance(const std::string& corpus_kind) {
  if (corpus_kind == "attack") return {"method", "m", "seed", "model_checksum"};
  if (corpus_kind == "distortion") return {"distortion", "l", "n", "w", "seed"};
  return {};
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  validate_dataset(corpus.data, 1 << 30);
  Container c;
  c.metadata = corpus.provenance;
  c.metadata["kind"] = "corpus";
  std::vector<float> labels(corpus.data.labels.begin(), corpus.data.labels.end());
  const int n = static_cast<int>(labels.size());
  c.tensors.push_back({"images", corpus.data.images});
  c.tensors.push_back({"labels", nd::Tensor({n}, std::move(labels))});
  write_container(c, path);
}

LoadedCorpus load_corpus(const std::filesystem::path& path) {
  const Container c = read_container(path);
  expect_kind(c, "corpus", path);
  LoadedCorpus out;
  out.corpus.provenance = c.metadata;
  out.corpus.data.images = c.tensor("images");
  const nd::Tensor& labels = c.tensor("labels");
  require(labels.rank() == 1 && out.corpus.data.images.rank() >= 1 &&
              labels.dim(0) == out.corpus.data.images.dim(0),
          ErrorCode::count_mismatch,
          path.string() + ": corpus image and label counts differ");
  for (float v : labels.data()) {
    require(v >= 0.0f && v == std::floor(v), ErrorCode::out_of_range,
            path.string() + ": corpus label is not a class index");
    out.corpus.data.labels.push_back(static_cast<int>(v));
  }
  const auto kind = c.meta("corpus");
  if (!kind) {
    out.warnings.push_back(path.string() + ": no provenance record (corpus kind unknown)");
  } else {
    for (const auto& key : required_provenance(*kind)) {
      if (!c.meta(key)) out.warnings.push_back(path.string() + ": provenance lacks '" + key + "'");
    }
  }
  return out;
}

}  // namespace hawkeye
