#pragma once

// Key and signature abstraction. The protocol only needs: deterministic key
// generation from a seed, signing a byte payload, and verification against a
// public key. The scheme is pluggable behind the KeyScheme interface; the
// default is a deterministic hash-based test scheme whose verification is a
// pure function of (public key, payload, signature). It is NOT
// cryptographically secure and exists so simulations are reproducible and
// fast; a production deployment would drop in a real signature scheme.

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <string>

#include "ackdag/bytes.hpp"

namespace ackdag {

inline constexpr std::size_t kKeyBytes = 16;
inline constexpr std::size_t kSignatureBytes = 8;

struct PublicKey {
  std::array<std::uint8_t, kKeyBytes> bytes{};
  auto operator<=>(const PublicKey &) const = default;
  std::string hex() const { return to_hex(ByteView(bytes.data(), bytes.size())); }
  std::string short_hex() const { return hex().substr(0, 8); }
};

struct SecretKey {
  std::array<std::uint8_t, kKeyBytes> bytes{};
  auto operator<=>(const SecretKey &) const = default;
};

struct Signature {
  std::array<std::uint8_t, kSignatureBytes> bytes{};
  auto operator<=>(const Signature &) const = default;
};

struct KeyPair {
  PublicKey pk;
  SecretKey sk;
};

class KeyScheme {
 public:
  virtual ~KeyScheme() = default;
  // Deterministic: the same seed always yields the same pair, distinct seeds
  // yield distinct keys (up to hash collision).
  virtual KeyPair keygen(std::uint64_t seed) const = 0;
  virtual Signature sign(const SecretKey &sk, ByteView payload) const = 0;
  virtual bool verify(const PublicKey &pk, ByteView payload,
                      const Signature &sig) const = 0;
};

// Deterministic test scheme: sk = H(tag || seed), pk = sk XOR fixed mask,
// sig = H(tag || sk || payload) truncated. verify() recovers sk from pk and
// recomputes, so it is a pure function with no registry.
const KeyScheme &test_key_scheme();

}  // namespace ackdag

template <>
struct std::hash<ackdag::PublicKey> {
  std::size_t operator()(const ackdag::PublicKey &k) const noexcept {
    std::size_t v = 0;
    for (std::size_t i = 0; i < 8; ++i) {
      v |= static_cast<std::size_t>(k.bytes[i]) << (8 * i);
    }
    return v;
  }
};
