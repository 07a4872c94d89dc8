#pragma once

// Message vocabulary for the ledger DAG: genesis, transactions, acks, and
// checkpoints, plus the small value types they are built from. Construction
// invariants that need no store context are checked by verify_message();
// context-dependent checks (input ownership signatures, value conservation,
// owner-key uniqueness) complete at DagStore::ingest once the referenced
// producers are admitted.

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ackdag/hash.hpp"
#include "ackdag/keys.hpp"

namespace ackdag {

using MessageId = Digest;
using Money = std::uint64_t;

// A value parcel owned by owner_key. Owner keys are single-use: the protocol
// requires every output's owner key to be globally unique, which ingest
// enforces.
struct Output {
  Money value = 0;  // must be >= 1 in any admitted message
  PublicKey owner_key;
  auto operator<=>(const Output &) const = default;
};

// Position of an output inside the message that produced it.
struct OutputRef {
  MessageId tx;
  std::uint32_t index = 0;
  auto operator<=>(const OutputRef &) const = default;
};

// Spends inputs, creates outputs, and delegates the stake of every created
// output to validator_key. signatures[i] is by the owner key of inputs[i]
// over the signing payload (all fields except signatures).
struct Transaction {
  std::vector<OutputRef> inputs;
  std::vector<Output> outputs;
  PublicKey validator_key;
  std::vector<Signature> signatures;
};

// Unique DAG root. outputs[i] is delegated to validator_keys[i]; the two
// arrays are parallel and equally sized. The sum of output values is the
// total money supply M, constant for the lifetime of the system.
struct Genesis {
  std::vector<Output> outputs;
  std::vector<PublicKey> validator_keys;
};

// Validator endorsement. signed_ids lists transaction (or checkpoint) ids the
// validator vouches for, sorted ascending and duplicate-free. prev_ack chains
// the validator's acks; honest validators keep a single chain. checkpoint_ref
// names the checkpoint the validator builds on after a pruning point; it is
// also how a bootstrapped store decides that a missing prev_ack was pruned.
struct Ack {
  PublicKey validator_key;
  std::optional<MessageId> prev_ack;
  std::vector<MessageId> signed_ids;
  std::optional<MessageId> checkpoint_ref;
  Signature signature;
};

// One confirmed-but-unspent output carried across a pruning point. origin is
// the output's position in the pruned region, kept so later spends that
// reference the old position still resolve after bootstrap.
struct CheckpointEntry {
  OutputRef origin;
  Output output;
  PublicKey validator_key;  // delegation carried with the output
  auto operator<=>(const CheckpointEntry &) const = default;
};

struct StakeEntry {
  PublicKey validator_key;
  Money stake = 0;
  auto operator<=>(const StakeEntry &) const = default;
};

// Prunable summary of the DAG below a reference frontier. summary holds every
// confirmed output not spent by any confirmed transaction in the frontier's
// past, sorted by owner key; its values sum to M. stakes is the delegation
// snapshot at the end of the frontier evaluation, sorted by validator key.
// commitment binds the summary and stake snapshot.
struct Checkpoint {
  // Message ids whose joint past is summarised (usually acks, but any
  // admitted ids work), sorted ascending.
  std::vector<MessageId> frontier;
  std::vector<CheckpointEntry> summary;
  std::vector<StakeEntry> stakes;
  Money total_money = 0;
  Digest commitment;
  PublicKey creator_key;
  Signature signature;
};

using Message = std::variant<Genesis, Transaction, Ack, Checkpoint>;

enum class MessageKind : std::uint8_t {
  Genesis = 1,
  Transaction = 2,
  Ack = 3,
  Checkpoint = 4,
};

MessageKind kind_of(const Message &m);
const char *kind_name(MessageKind k);

struct VerifyResult {
  bool ok = true;
  std::string reason;
};

// Store-free validation: structural invariants of the message type plus every
// signature that can be checked without resolving references (ack and
// checkpoint signatures; transaction input signatures need the owner keys of
// the referenced outputs and are completed at ingest).
VerifyResult verify_message(const Message &m,
                            const KeyScheme &scheme = test_key_scheme());

}  // namespace ackdag
