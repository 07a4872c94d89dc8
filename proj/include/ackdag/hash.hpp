#pragma once

// 32-byte content digest used for message identifiers and checkpoint
// commitments. Backed by SHA-256 (OpenSSL) so identifiers are collision
// resistant and stable across platforms and runs.

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <string>

#include "ackdag/bytes.hpp"

namespace ackdag {

struct Digest {
  std::array<std::uint8_t, 32> bytes{};

  auto operator<=>(const Digest &) const = default;

  std::string hex() const { return to_hex(ByteView(bytes.data(), bytes.size())); }
  // Short prefix used in event logs and reports; 8 hex chars is enough to be
  // unambiguous at simulation scale while keeping lines readable.
  std::string short_hex() const { return hex().substr(0, 8); }
};

Digest sha256(ByteView data);

}  // namespace ackdag

template <>
struct std::hash<ackdag::Digest> {
  std::size_t operator()(const ackdag::Digest &d) const noexcept {
    std::size_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::size_t>(d.bytes[i]) << (8 * i);
    }
    return v;
  }
};
