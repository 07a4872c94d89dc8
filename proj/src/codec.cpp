#include "ackdag/codec.hpp"

#include <cstring>

namespace ackdag {

namespace {

void append_digest(Bytes &out, const Digest &d) {
  append_raw(out, ByteView(d.bytes.data(), d.bytes.size()));
}

void append_key(Bytes &out, const PublicKey &k) {
  append_raw(out, ByteView(k.bytes.data(), k.bytes.size()));
}

void append_signature(Bytes &out, const Signature &s) {
  append_raw(out, ByteView(s.bytes.data(), s.bytes.size()));
}

void append_output(Bytes &out, const Output &o) {
  append_u64(out, o.value);
  append_key(out, o.owner_key);
}

void append_output_ref(Bytes &out, const OutputRef &r) {
  append_digest(out, r.tx);
  append_u32(out, r.index);
}

void append_optional_digest(Bytes &out, const std::optional<MessageId> &d) {
  if (d) {
    append_u8(out, 1);
    append_digest(out, *d);
  } else {
    append_u8(out, 0);
  }
}

void append_header(Bytes &out, MessageKind kind) {
  append_u8(out, kFormatVersion);
  append_u8(out, static_cast<std::uint8_t>(kind));
}

void encode_genesis(Bytes &out, const Genesis &g) {
  append_header(out, MessageKind::Genesis);
  append_u32(out, static_cast<std::uint32_t>(g.outputs.size()));
  for (const Output &o : g.outputs) append_output(out, o);
  append_u32(out, static_cast<std::uint32_t>(g.validator_keys.size()));
  for (const PublicKey &k : g.validator_keys) append_key(out, k);
}

void encode_transaction_fields(Bytes &out, const Transaction &t) {
  append_u32(out, static_cast<std::uint32_t>(t.inputs.size()));
  for (const OutputRef &r : t.inputs) append_output_ref(out, r);
  append_u32(out, static_cast<std::uint32_t>(t.outputs.size()));
  for (const Output &o : t.outputs) append_output(out, o);
  append_key(out, t.validator_key);
}

void encode_transaction(Bytes &out, const Transaction &t) {
  append_header(out, MessageKind::Transaction);
  encode_transaction_fields(out, t);
  append_u32(out, static_cast<std::uint32_t>(t.signatures.size()));
  for (const Signature &s : t.signatures) append_signature(out, s);
}

void encode_ack_fields(Bytes &out, const Ack &a) {
  append_key(out, a.validator_key);
  append_optional_digest(out, a.prev_ack);
  append_u32(out, static_cast<std::uint32_t>(a.signed_ids.size()));
  for (const MessageId &id : a.signed_ids) append_digest(out, id);
  append_optional_digest(out, a.checkpoint_ref);
}

void encode_ack(Bytes &out, const Ack &a) {
  append_header(out, MessageKind::Ack);
  encode_ack_fields(out, a);
  append_signature(out, a.signature);
}

void encode_checkpoint_fields(Bytes &out, const Checkpoint &c) {
  append_u32(out, static_cast<std::uint32_t>(c.frontier.size()));
  for (const MessageId &id : c.frontier) append_digest(out, id);
  append_u32(out, static_cast<std::uint32_t>(c.summary.size()));
  for (const CheckpointEntry &e : c.summary) {
    append_output_ref(out, e.origin);
    append_output(out, e.output);
    append_key(out, e.validator_key);
  }
  append_u32(out, static_cast<std::uint32_t>(c.stakes.size()));
  for (const StakeEntry &s : c.stakes) {
    append_key(out, s.validator_key);
    append_u64(out, s.stake);
  }
  append_u64(out, c.total_money);
}

void encode_checkpoint(Bytes &out, const Checkpoint &c) {
  append_header(out, MessageKind::Checkpoint);
  encode_checkpoint_fields(out, c);
  append_digest(out, c.commitment);
  append_key(out, c.creator_key);
  append_signature(out, c.signature);
}

// ---- decoding helpers ----

std::optional<Digest> read_digest(ByteReader &r) {
  auto raw = r.read_raw(32);
  if (!raw) return std::nullopt;
  Digest d;
  std::memcpy(d.bytes.data(), raw->data(), 32);
  return d;
}

std::optional<PublicKey> read_key(ByteReader &r) {
  auto raw = r.read_raw(kKeyBytes);
  if (!raw) return std::nullopt;
  PublicKey k;
  std::memcpy(k.bytes.data(), raw->data(), kKeyBytes);
  return k;
}

std::optional<Signature> read_signature(ByteReader &r) {
  auto raw = r.read_raw(kSignatureBytes);
  if (!raw) return std::nullopt;
  Signature s;
  std::memcpy(s.bytes.data(), raw->data(), kSignatureBytes);
  return s;
}

std::optional<Output> read_output(ByteReader &r) {
  auto value = r.read_u64();
  if (!value) return std::nullopt;
  auto key = read_key(r);
  if (!key) return std::nullopt;
  return Output{*value, *key};
}

std::optional<OutputRef> read_output_ref(ByteReader &r) {
  auto tx = read_digest(r);
  if (!tx) return std::nullopt;
  auto index = r.read_u32();
  if (!index) return std::nullopt;
  return OutputRef{*tx, *index};
}

bool read_optional_digest(ByteReader &r, std::optional<MessageId> &out) {
  auto flag = r.read_u8();
  if (!flag || (*flag != 0 && *flag != 1)) return false;
  if (*flag == 0) {
    out.reset();
    return true;
  }
  auto d = read_digest(r);
  if (!d) return false;
  out = *d;
  return true;
}

// Vector counts are bounded to keep hostile input from triggering huge
// allocations before the truncation check fires.
constexpr std::uint32_t kMaxCount = 1u << 20;

bool read_count(ByteReader &r, std::uint32_t &n) {
  auto v = r.read_u32();
  if (!v || *v > kMaxCount) return false;
  n = *v;
  return true;
}

std::optional<Message> decode_body(MessageKind kind, ByteReader &r) {
  switch (kind) {
    case MessageKind::Genesis: {
      Genesis g;
      std::uint32_t n = 0;
      if (!read_count(r, n)) return std::nullopt;
      g.outputs.reserve(n);
      for (std::uint32_t i = 0; i < n; ++i) {
        auto o = read_output(r);
        if (!o) return std::nullopt;
        g.outputs.push_back(*o);
      }
      if (!read_count(r, n)) return std::nullopt;
      g.validator_keys.reserve(n);
      for (std::uint32_t i = 0; i < n; ++i) {
        auto k = read_key(r);
        if (!k) return std::nullopt;
        g.validator_keys.push_back(*k);
      }
      return Message{std::move(g)};
    }
    case MessageKind::Transaction: {
      Transaction t;
      std::uint32_t n = 0;
      if (!read_count(r, n)) return std::nullopt;
      t.inputs.reserve(n);
      for (std::uint32_t i = 0; i < n; ++i) {
        auto ref = read_output_ref(r);
        if (!ref) return std::nullopt;
        t.inputs.push_back(*ref);
      }
      if (!read_count(r, n)) return std::nullopt;
      t.outputs.reserve(n);
      for (std::uint32_t i = 0; i < n; ++i) {
        auto o = read_output(r);
        if (!o) return std::nullopt;
        t.outputs.push_back(*o);
      }
      auto vk = read_key(r);
      if (!vk) return std::nullopt;
      t.validator_key = *vk;
      if (!read_count(r, n)) return std::nullopt;
      t.signatures.reserve(n);
      for (std::uint32_t i = 0; i < n; ++i) {
        auto s = read_signature(r);
        if (!s) return std::nullopt;
        t.signatures.push_back(*s);
      }
      return Message{std::move(t)};
    }
    case MessageKind::Ack: {
      Ack a;
      auto vk = read_key(r);
      if (!vk) return std::nullopt;
      a.validator_key = *vk;
      if (!read_optional_digest(r, a.prev_ack)) return std::nullopt;
      std::uint32_t n = 0;
      if (!read_count(r, n)) return std::nullopt;
      a.signed_ids.reserve(n);
      for (std::uint32_t i = 0; i < n; ++i) {
        auto d = read_digest(r);
        if (!d) return std::nullopt;
        a.signed_ids.push_back(*d);
      }
      if (!read_optional_digest(r, a.checkpoint_ref)) return std::nullopt;
      auto s = read_signature(r);
      if (!s) return std::nullopt;
      a.signature = *s;
      return Message{std::move(a)};
    }
    case MessageKind::Checkpoint: {
      Checkpoint c;
      std::uint32_t n = 0;
      if (!read_count(r, n)) return std::nullopt;
      c.frontier.reserve(n);
      for (std::uint32_t i = 0; i < n; ++i) {
        auto d = read_digest(r);
        if (!d) return std::nullopt;
        c.frontier.push_back(*d);
      }
      if (!read_count(r, n)) return std::nullopt;
      c.summary.reserve(n);
      for (std::uint32_t i = 0; i < n; ++i) {
        CheckpointEntry e;
        auto origin = read_output_ref(r);
        if (!origin) return std::nullopt;
        e.origin = *origin;
        auto o = read_output(r);
        if (!o) return std::nullopt;
        e.output = *o;
        auto vk = read_key(r);
        if (!vk) return std::nullopt;
        e.validator_key = *vk;
        c.summary.push_back(e);
      }
      if (!read_count(r, n)) return std::nullopt;
      c.stakes.reserve(n);
      for (std::uint32_t i = 0; i < n; ++i) {
        StakeEntry s;
        auto vk = read_key(r);
        if (!vk) return std::nullopt;
        s.validator_key = *vk;
        auto stake = r.read_u64();
        if (!stake) return std::nullopt;
        s.stake = *stake;
        c.stakes.push_back(s);
      }
      auto total = r.read_u64();
      if (!total) return std::nullopt;
      c.total_money = *total;
      auto commitment = read_digest(r);
      if (!commitment) return std::nullopt;
      c.commitment = *commitment;
      auto creator = read_key(r);
      if (!creator) return std::nullopt;
      c.creator_key = *creator;
      auto sig = read_signature(r);
      if (!sig) return std::nullopt;
      c.signature = *sig;
      return Message{std::move(c)};
    }
  }
  return std::nullopt;
}

}  // namespace

Bytes canonical_encode(const Message &m) {
  Bytes out;
  std::visit(
      [&out](const auto &msg) {
        using T = std::decay_t<decltype(msg)>;
        if constexpr (std::is_same_v<T, Genesis>) {
          encode_genesis(out, msg);
        } else if constexpr (std::is_same_v<T, Transaction>) {
          encode_transaction(out, msg);
        } else if constexpr (std::is_same_v<T, Ack>) {
          encode_ack(out, msg);
        } else {
          encode_checkpoint(out, msg);
        }
      },
      m);
  return out;
}

MessageId id_of(const Message &m) { return sha256(canonical_encode(m)); }

Bytes transaction_signing_payload(const Transaction &t) {
  Bytes out;
  append_header(out, MessageKind::Transaction);
  encode_transaction_fields(out, t);
  return out;
}

Bytes ack_signing_payload(const Ack &a) {
  Bytes out;
  append_header(out, MessageKind::Ack);
  encode_ack_fields(out, a);
  return out;
}

Bytes checkpoint_signing_payload(const Checkpoint &c) {
  Bytes out;
  append_header(out, MessageKind::Checkpoint);
  encode_checkpoint_fields(out, c);
  append_digest(out, c.commitment);
  append_key(out, c.creator_key);
  return out;
}

Digest checkpoint_commitment(const Checkpoint &c) {
  Bytes out;
  append_header(out, MessageKind::Checkpoint);
  encode_checkpoint_fields(out, c);
  return sha256(out);
}

std::optional<Message> decode_message(ByteView data, DecodeError *err) {
  auto fail = [err](const char *reason) -> std::optional<Message> {
    if (err) err->reason = reason;
    return std::nullopt;
  };
  ByteReader r(data);
  auto version = r.read_u8();
  if (!version) return fail("truncated header");
  if (*version != kFormatVersion) return fail("unsupported format version");
  auto kind = r.read_u8();
  if (!kind) return fail("truncated header");
  if (*kind < static_cast<std::uint8_t>(MessageKind::Genesis) ||
      *kind > static_cast<std::uint8_t>(MessageKind::Checkpoint)) {
    return fail("unknown message kind");
  }
  auto msg = decode_body(static_cast<MessageKind>(*kind), r);
  if (!msg) return fail("malformed body");
  if (!r.at_end()) return fail("trailing bytes");
  return msg;
}

namespace {
constexpr char kFileMagic[4] = {'A', 'D', 'G', '1'};
}

Bytes encode_message_file(const std::vector<Message> &messages) {
  Bytes out;
  append_raw(out, ByteView(reinterpret_cast<const std::uint8_t *>(kFileMagic), 4));
  append_u32(out, static_cast<std::uint32_t>(messages.size()));
  for (const Message &m : messages) {
    append_blob(out, canonical_encode(m));
  }
  return out;
}

std::optional<std::vector<Message>> decode_message_file(ByteView data,
                                                        DecodeError *err) {
  auto fail = [err](const char *reason) -> std::optional<std::vector<Message>> {
    if (err) err->reason = reason;
    return std::nullopt;
  };
  ByteReader r(data);
  auto magic = r.read_raw(4);
  if (!magic || std::memcmp(magic->data(), kFileMagic, 4) != 0) {
    return fail("bad file magic");
  }
  auto count = r.read_u32();
  if (!count) return fail("truncated count");
  std::vector<Message> out;
  out.reserve(*count);
  for (std::uint32_t i = 0; i < *count; ++i) {
    auto blob = r.read_blob();
    if (!blob) return fail("truncated message blob");
    auto msg = decode_message(*blob, err);
    if (!msg) return std::nullopt;
    out.push_back(std::move(*msg));
  }
  if (!r.at_end()) return fail("trailing bytes");
  return out;
}

}  // namespace ackdag
