#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "classifier/classifier.hpp"
#include "dataio/container.hpp"
#include "detector/aed.hpp"

namespace hawkeye {

// Parameters of a network as named tensors ("layer3.weight", ...).
std::vector<NamedTensor> network_tensors(const nd::Network& net);
// Copies the stored parameters into `net`, checking names and shapes.
void restore_network(nd::Network& net, const Container& c, const std::string& origin);

// CRC-32 of a network's parameter payload as stored on disk; identifies a
// trained model independently of its metadata.
std::uint32_t model_checksum(const nd::Network& net);

struct ClassifierCheckpoint {
  Classifier model;
  Metadata metadata;
  std::uint32_t checksum = 0;
};

// Records kind, architecture and seed; `extra` entries are added verbatim.
void save_classifier(const Classifier& model, const std::filesystem::path& path,
                     const Metadata& extra = {});
ClassifierCheckpoint load_classifier(const std::filesystem::path& path);

struct AedCheckpoint {
  Aed aed;
  Metadata metadata;
  std::uint32_t checksum = 0;
  // Checksum of the classifier the detector was trained against, if recorded.
  std::optional<std::uint32_t> classifier_checksum;
};

void save_aed(const Aed& aed, const std::filesystem::path& path, const Metadata& extra = {});
AedCheckpoint load_aed(const std::filesystem::path& path);

// A batch of images with labels and a record of how it was produced.
struct Corpus {
  LabeledDataset data;
  Metadata provenance;
};

// Provenance keys expected for each corpus kind ("attack", "distortion").
std::vector<std::string> required_provenance(const std::string& corpus_kind);

void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

struct LoadedCorpus {
  Corpus corpus;
  std::vector<std::string> warnings;  // missing provenance, one line each
};

LoadedCorpus load_corpus(const std::filesystem::path& path);

std::uint32_t parse_checksum(const std::string& hex);

}  // namespace hawkeye
