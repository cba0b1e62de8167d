#include "dataio/container.hpp"

#include <bit>
#include <fstream>

#include <fmt/format.h>
#include <zlib.h>

#include "common/error.hpp"

namespace hawkeye {
namespace {

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }
  std::size_t size() const { return bytes_.size(); }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  Reader(std::span<const std::uint8_t> b, std::string origin) : b_(b), origin_(std::move(origin)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{b_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::size_t pos() const { return pos_; }
  void need(std::size_t n) const {
    require(pos_ + n <= b_.size(), ErrorCode::truncated, origin_ + ": container truncated");
  }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
  std::string origin_;
};

void encode_tensors(Writer& w, std::span<const NamedTensor> tensors) {
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    w.str(t.name);
    w.u32(static_cast<std::uint32_t>(t.tensor.rank()));
    for (int d : t.tensor.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (float v : t.tensor.data()) w.f32(v);
  }
}

}  // namespace

const nd::Tensor& Container::tensor(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t.tensor;
  }
  fail(ErrorCode::bad_magic, "container has no tensor named '" + name + "'");
}

std::optional<std::string> Container::meta(const std::string& key) const {
  auto it = metadata.find(key);
  if (it == metadata.end()) return std::nullopt;
  return it->second;
}

const std::string& Container::require_meta(const std::string& key) const {
  auto it = metadata.find(key);
  require(it != metadata.end(), ErrorCode::bad_magic, "container metadata lacks '" + key + "'");
  return it->second;
}

std::uint32_t crc32_bytes(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const std::size_t n = std::min<std::size_t>(bytes.size() - off, 1u << 30);
    crc = crc32(crc, bytes.data() + off, static_cast<uInt>(n));
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

std::uint32_t tensor_payload_crc(std::span<const NamedTensor> tensors) {
  Writer w;
  encode_tensors(w, tensors);
  return crc32_bytes(w.bytes());
}

std::string checksum_hex(std::uint32_t crc) { return fmt::format("{:08x}", crc); }

std::vector<std::uint8_t> encode_container(const Container& c) {
  Writer w;
  for (char ch : container_magic) w.bytes().push_back(static_cast<std::uint8_t>(ch));
  w.u32(container_version);
  const std::size_t body_start = w.size();
  w.u32(static_cast<std::uint32_t>(c.metadata.size()));
  for (const auto& [k, v] : c.metadata) {
    w.str(k);
    w.str(v);
  }
  const std::size_t tensor_start = w.size();
  encode_tensors(w, c.tensors);
  auto& b = w.bytes();
  const auto tensor_crc =
      crc32_bytes(std::span<const std::uint8_t>(b).subspan(tensor_start));
  const auto body_crc = crc32_bytes(std::span<const std::uint8_t>(b).subspan(body_start));
  w.u32(tensor_crc);
  w.u32(body_crc);
  return std::move(b);
}

Container decode_container(std::span<const std::uint8_t> bytes, const std::string& origin) {
  require(bytes.size() >= 8 && std::equal(container_magic, container_magic + 4, bytes.begin()),
          ErrorCode::bad_magic, origin + ": not a HWKE container");
  Reader r(bytes.subspan(4), origin);
  const std::uint32_t version = r.u32();
  require(version == container_version, ErrorCode::version,
          origin + ": unsupported container version " + std::to_string(version));
  require(bytes.size() >= 16, ErrorCode::truncated, origin + ": container truncated");

  // Checksums first: the trailer is the last eight bytes.
  const std::size_t body_begin = 8;
  const std::size_t body_end = bytes.size() - 8;
  Reader trailer(bytes.subspan(body_end), origin);
  const std::uint32_t stored_tensor_crc = trailer.u32();
  const std::uint32_t stored_body_crc = trailer.u32();
  const auto body = bytes.subspan(body_begin, body_end - body_begin);
  require(crc32_bytes(body) == stored_body_crc, ErrorCode::checksum,
          origin + ": checksum mismatch, file is corrupted");

  Reader br(body, origin);
  Container c;
  const std::uint32_t n_meta = br.u32();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    auto k = br.str();
    auto v = br.str();
    c.metadata.emplace(std::move(k), std::move(v));
  }
  const std::size_t tensor_begin = br.pos();
  const std::uint32_t n_tensors = br.u32();
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    NamedTensor t;
    t.name = br.str();
    const std::uint32_t rank = br.u32();
    require(rank >= 1 && rank <= 8, ErrorCode::bad_magic, origin + ": bad tensor rank");
    nd::Shape shape(rank);
    std::size_t count = 1;
    for (auto& d : shape) {
      d = static_cast<int>(br.u32());
      require(d > 0, ErrorCode::bad_magic, origin + ": bad tensor dimension");
      count *= static_cast<std::size_t>(d);
    }
    br.need(count * 4);
    std::vector<float> data(count);
    for (auto& v : data) v = br.f32();
    t.tensor = nd::Tensor(std::move(shape), std::move(data));
    c.tensors.push_back(std::move(t));
  }
  require(br.pos() == body.size(), ErrorCode::bad_magic, origin + ": trailing bytes in container");
  require(crc32_bytes(body.subspan(tensor_begin)) == stored_tensor_crc, ErrorCode::checksum,
          origin + ": tensor payload checksum mismatch");
  return c;
}

void write_container(const Container& c, const std::filesystem::path& path) {
  const auto bytes = encode_container(c);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::io, "cannot write " + tmp);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(out), ErrorCode::io, "short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Container read_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes(std::istreambuf_iterator<char>(in), {});
  return decode_container(bytes, path.string());
}

}  // namespace hawkeye
