#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ndgrad/tensor.hpp"

namespace hawkeye {

// On-disk layout of the 'HWKE' container, all integers little-endian u32:
//
//   "HWKE" | version
//   meta_count  { key_len key_bytes value_len value_bytes }*
//   tensor_count { name_len name_bytes rank dims[rank] f32[prod(dims)] }*
//   tensor_crc  CRC-32 of the tensor section (tensor_count .. last float)
//   body_crc    CRC-32 of everything between version and tensor_crc
inline constexpr char container_magic[4] = {'H', 'W', 'K', 'E'};
inline constexpr std::uint32_t container_version = 1;

struct NamedTensor {
  std::string name;
  nd::Tensor tensor;
};

using Metadata = std::map<std::string, std::string>;

struct Container {
  Metadata metadata;
  std::vector<NamedTensor> tensors;

  const nd::Tensor& tensor(const std::string& name) const;
  std::optional<std::string> meta(const std::string& key) const;
  const std::string& require_meta(const std::string& key) const;
};

std::vector<std::uint8_t> encode_container(const Container& c);
// Validates magic, version and both CRCs before returning anything.
Container decode_container(std::span<const std::uint8_t> bytes, const std::string& origin = "");

void write_container(const Container& c, const std::filesystem::path& path);
Container read_container(const std::filesystem::path& path);

std::uint32_t crc32_bytes(std::span<const std::uint8_t> bytes);
// CRC-32 over the little-endian encoding of the tensors, exactly as the
// container stores them. Used as the identity checksum of a model.
std::uint32_t tensor_payload_crc(std::span<const NamedTensor> tensors);

std::string checksum_hex(std::uint32_t crc);

}  // namespace hawkeye
