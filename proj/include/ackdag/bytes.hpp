#pragma once

// Byte-buffer primitives shared by the canonical codec and the hash/key
// abstractions: little-endian integer append/read, length-prefixed blobs,
// and hex rendering for logs and reports.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ackdag {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline void append_u8(Bytes &out, std::uint8_t v) { out.push_back(v); }

inline void append_u32(Bytes &out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

inline void append_u64(Bytes &out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

inline void append_raw(Bytes &out, ByteView data) {
  out.insert(out.end(), data.begin(), data.end());
}

// Length-prefixed blob: u32 length followed by the raw bytes. Used for every
// variable-length field so the encoding stays injective.
inline void append_blob(Bytes &out, ByteView data) {
  append_u32(out, static_cast<std::uint32_t>(data.size()));
  append_raw(out, data);
}

// Cursor-based reader; every accessor returns nullopt on truncation so decode
// failures surface as errors instead of undefined reads.
class ByteReader {
 public:
  explicit ByteReader(ByteView data) : data_(data) {}

  std::optional<std::uint8_t> read_u8() {
    if (pos_ + 1 > data_.size()) return std::nullopt;
    return data_[pos_++];
  }

  std::optional<std::uint32_t> read_u32() {
    if (pos_ + 4 > data_.size()) return std::nullopt;
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  std::optional<std::uint64_t> read_u64() {
    if (pos_ + 8 > data_.size()) return std::nullopt;
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  std::optional<ByteView> read_raw(std::size_t n) {
    if (pos_ + n > data_.size()) return std::nullopt;
    ByteView v = data_.subspan(pos_, n);
    pos_ += n;
    return v;
  }

  std::optional<ByteView> read_blob() {
    auto len = read_u32();
    if (!len) return std::nullopt;
    return read_raw(*len);
  }

  bool at_end() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  ByteView data_;
  std::size_t pos_ = 0;
};

std::string to_hex(ByteView data);
std::optional<Bytes> from_hex(std::string_view hex);

}  // namespace ackdag
