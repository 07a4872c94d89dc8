#include "ackdag/hash.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace ackdag {

Digest sha256(ByteView data) {
  Digest d;
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), d.bytes.data(), &len, EVP_sha256(),
                 nullptr) != 1 ||
      len != d.bytes.size()) {
    throw std::runtime_error("sha256: EVP_Digest failed");
  }
  return d;
}

}  // namespace ackdag
