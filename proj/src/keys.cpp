#include "ackdag/keys.hpp"

#include <cstring>

#include "ackdag/hash.hpp"

namespace ackdag {

namespace {

// Fixed mask relating pk and sk in the test scheme. Derived from a domain
// separation tag so it is stable and has no low-entropy structure.
const std::array<std::uint8_t, kKeyBytes> &pk_mask() {
  static const std::array<std::uint8_t, kKeyBytes> mask = [] {
    const char tag[] = "ackdag.test-scheme.pk-mask";
    Digest d = sha256(ByteView(reinterpret_cast<const std::uint8_t *>(tag),
                               sizeof(tag) - 1));
    std::array<std::uint8_t, kKeyBytes> m{};
    std::memcpy(m.data(), d.bytes.data(), kKeyBytes);
    return m;
  }();
  return mask;
}

SecretKey recover_sk(const PublicKey &pk) {
  SecretKey sk;
  for (std::size_t i = 0; i < kKeyBytes; ++i) {
    sk.bytes[i] = pk.bytes[i] ^ pk_mask()[i];
  }
  return sk;
}

class TestKeyScheme final : public KeyScheme {
 public:
  KeyPair keygen(std::uint64_t seed) const override {
    Bytes buf;
    const char tag[] = "ackdag.test-scheme.keygen";
    append_raw(buf, ByteView(reinterpret_cast<const std::uint8_t *>(tag),
                             sizeof(tag) - 1));
    append_u64(buf, seed);
    Digest d = sha256(buf);
    KeyPair kp;
    std::memcpy(kp.sk.bytes.data(), d.bytes.data(), kKeyBytes);
    for (std::size_t i = 0; i < kKeyBytes; ++i) {
      kp.pk.bytes[i] = kp.sk.bytes[i] ^ pk_mask()[i];
    }
    return kp;
  }

  Signature sign(const SecretKey &sk, ByteView payload) const override {
    Bytes buf;
    const char tag[] = "ackdag.test-scheme.sign";
    append_raw(buf, ByteView(reinterpret_cast<const std::uint8_t *>(tag),
                             sizeof(tag) - 1));
    append_raw(buf, ByteView(sk.bytes.data(), sk.bytes.size()));
    append_raw(buf, payload);
    Digest d = sha256(buf);
    Signature sig;
    std::memcpy(sig.bytes.data(), d.bytes.data(), kSignatureBytes);
    return sig;
  }

  bool verify(const PublicKey &pk, ByteView payload,
              const Signature &sig) const override {
    return sign(recover_sk(pk), payload) == sig;
  }
};

}  // namespace

const KeyScheme &test_key_scheme() {
  static const TestKeyScheme scheme;
  return scheme;
}

}  // namespace ackdag
