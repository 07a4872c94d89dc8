#pragma once

// Canonical message codec. Properties the rest of the system relies on:
//   - deterministic: one byte string per message value,
//   - injective: distinct message values encode to distinct byte strings
//     (every variable-length field is length-prefixed, every encoding starts
//     with a version and kind tag),
//   - self-describing enough to decode without context.
// Message ids are the SHA-256 of the canonical encoding. Signing payloads are
// the canonical encoding with the signature fields omitted, so a signature
// covers every other field of its message.
//
// Layout (all integers little-endian):
//   [0] version (kFormatVersion)
//   [1] kind    (MessageKind)
//   fields in declaration order; vectors as u32 count + elements; optional
//   ids as u8 presence flag + 32 bytes when present.

#include <optional>
#include <string>
#include <vector>

#include "ackdag/bytes.hpp"
#include "ackdag/messages.hpp"

namespace ackdag {

inline constexpr std::uint8_t kFormatVersion = 1;

Bytes canonical_encode(const Message &m);

// Identifier of a message: sha256(canonical_encode(m)).
MessageId id_of(const Message &m);

// Signing payloads: canonical encoding with signature fields omitted. The
// version/kind prefix is kept so payloads of different kinds never collide.
Bytes transaction_signing_payload(const Transaction &t);
Bytes ack_signing_payload(const Ack &a);
Bytes checkpoint_signing_payload(const Checkpoint &c);

// Digest of the checkpoint's content fields (frontier, summary, stakes,
// total_money); ignores the commitment/creator/signature currently stored in
// the struct. make_checkpoint fills Checkpoint::commitment with this value
// and verify_message recomputes it.
Digest checkpoint_commitment(const Checkpoint &c);

struct DecodeError {
  std::string reason;
};

// Strict inverse of canonical_encode: rejects unknown version/kind, trailing
// bytes, truncation, and non-canonical optionals.
std::optional<Message> decode_message(ByteView data, DecodeError *err = nullptr);

// Container format for persisted stores and message batches:
//   "ADG1" magic, u32 count, then count length-prefixed canonical encodings.
Bytes encode_message_file(const std::vector<Message> &messages);
std::optional<std::vector<Message>> decode_message_file(ByteView data,
                                                        DecodeError *err = nullptr);

}  // namespace ackdag
