#include "ackdag/messages.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "ackdag/codec.hpp"

namespace ackdag {

MessageKind kind_of(const Message &m) {
  return std::visit(
      [](const auto &msg) {
        using T = std::decay_t<decltype(msg)>;
        if constexpr (std::is_same_v<T, Genesis>) return MessageKind::Genesis;
        if constexpr (std::is_same_v<T, Transaction>)
          return MessageKind::Transaction;
        if constexpr (std::is_same_v<T, Ack>) return MessageKind::Ack;
        if constexpr (std::is_same_v<T, Checkpoint>)
          return MessageKind::Checkpoint;
      },
      m);
}

const char *kind_name(MessageKind k) {
  switch (k) {
    case MessageKind::Genesis:
      return "genesis";
    case MessageKind::Transaction:
      return "transaction";
    case MessageKind::Ack:
      return "ack";
    case MessageKind::Checkpoint:
      return "checkpoint";
  }
  return "unknown";
}

namespace {

VerifyResult fail(std::string reason) { return {false, std::move(reason)}; }

bool add_overflows(Money acc, Money v) { return acc > ~v; }

template <typename T, typename Key>
bool strictly_ascending(const std::vector<T> &xs, Key key) {
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(key(xs[i - 1]) < key(xs[i]))) return false;
  }
  return true;
}

VerifyResult verify_genesis(const Genesis &g) {
  if (g.outputs.empty()) return fail("genesis has no outputs");
  if (g.outputs.size() != g.validator_keys.size()) {
    return fail("genesis outputs and validator_keys differ in length");
  }
  Money total = 0;
  std::set<PublicKey> owners;
  for (const Output &o : g.outputs) {
    if (o.value < 1) return fail("genesis output value below 1");
    if (add_overflows(total, o.value)) return fail("genesis total overflows");
    total += o.value;
    if (!owners.insert(o.owner_key).second) {
      return fail("duplicate owner key in genesis");
    }
  }
  return {};
}

VerifyResult verify_transaction(const Transaction &t) {
  if (t.inputs.empty()) return fail("transaction has no inputs");
  if (t.outputs.empty()) return fail("transaction has no outputs");
  if (t.signatures.size() != t.inputs.size()) {
    return fail("transaction signature count does not match input count");
  }
  std::set<OutputRef> refs(t.inputs.begin(), t.inputs.end());
  if (refs.size() != t.inputs.size()) {
    return fail("duplicate input reference in transaction");
  }
  Money total = 0;
  std::set<PublicKey> owners;
  for (const Output &o : t.outputs) {
    if (o.value < 1) return fail("transaction output value below 1");
    if (add_overflows(total, o.value)) {
      return fail("transaction output total overflows");
    }
    total += o.value;
    if (!owners.insert(o.owner_key).second) {
      return fail("duplicate owner key in transaction outputs");
    }
  }
  return {};
}

VerifyResult verify_ack(const Ack &a, const KeyScheme &scheme) {
  if (a.signed_ids.empty()) return fail("ack signs no messages");
  if (!strictly_ascending(a.signed_ids, [](const MessageId &id) { return id; })) {
    return fail("ack signed_ids not sorted unique");
  }
  if (!scheme.verify(a.validator_key, ack_signing_payload(a), a.signature)) {
    return fail("ack signature invalid");
  }
  return {};
}

VerifyResult verify_checkpoint(const Checkpoint &c, const KeyScheme &scheme) {
  if (c.frontier.empty()) return fail("checkpoint frontier empty");
  if (!strictly_ascending(c.frontier, [](const MessageId &id) { return id; })) {
    return fail("checkpoint frontier not sorted unique");
  }
  Money total = 0;
  for (const CheckpointEntry &e : c.summary) {
    if (e.output.value < 1) return fail("checkpoint summary value below 1");
    if (add_overflows(total, e.output.value)) {
      return fail("checkpoint summary total overflows");
    }
    total += e.output.value;
  }
  // Sorted by owner key; origin breaks ties (one owner can hold several
  // unspent outputs) and rules out duplicate entries.
  if (!strictly_ascending(c.summary, [](const CheckpointEntry &e) {
        return std::tuple(e.output.owner_key, e.origin.tx, e.origin.index);
      })) {
    return fail("checkpoint summary not sorted by owner key");
  }
  if (total != c.total_money) {
    return fail("checkpoint summary does not sum to total_money");
  }
  Money stake_total = 0;
  for (const StakeEntry &s : c.stakes) {
    if (add_overflows(stake_total, s.stake)) {
      return fail("checkpoint stake total overflows");
    }
    stake_total += s.stake;
  }
  if (!strictly_ascending(c.stakes, [](const StakeEntry &s) {
        return s.validator_key;
      })) {
    return fail("checkpoint stakes not sorted by validator key");
  }
  if (stake_total != c.total_money) {
    return fail("checkpoint stakes do not sum to total_money");
  }
  if (checkpoint_commitment(c) != c.commitment) {
    return fail("checkpoint commitment mismatch");
  }
  if (!scheme.verify(c.creator_key, checkpoint_signing_payload(c), c.signature)) {
    return fail("checkpoint signature invalid");
  }
  return {};
}

}  // namespace

VerifyResult verify_message(const Message &m, const KeyScheme &scheme) {
  return std::visit(
      [&scheme](const auto &msg) {
        using T = std::decay_t<decltype(msg)>;
        if constexpr (std::is_same_v<T, Genesis>) {
          return verify_genesis(msg);
        } else if constexpr (std::is_same_v<T, Transaction>) {
          return verify_transaction(msg);
        } else if constexpr (std::is_same_v<T, Ack>) {
          return verify_ack(msg, scheme);
        } else {
          return verify_checkpoint(msg, scheme);
        }
      },
      m);
}

}  // namespace ackdag
