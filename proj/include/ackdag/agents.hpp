#pragma once

// Honest participant state machines.
//
// Wallet: owns outputs (ref -> secret key), composes payments with
// deterministic coin selection (ascending output ref), gives every created
// output a fresh key, and never signs two spends of the same ref - the
// honesty contract. Exact change goes to a fresh self-owned output.
//
// ValidatorState: first-seen-wins signing. The validator records the first
// transaction it sees spending each output ref - whatever the verdict - and
// signs a transaction only if none of its inputs was first seen spent by a
// different transaction. Signed subjects queue in an outbox; emit_ack drains
// the outbox into one chained ack per activation. After adopting a confirmed
// checkpoint, subsequent acks carry checkpoint_ref and the validator re-lists
// its signed transactions that the checkpoint did not summarize.
//
// Both machines are deterministic: identical call sequences produce
// identical messages.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "ackdag/keys.hpp"
#include "ackdag/messages.hpp"

namespace ackdag {

class Wallet {
 public:
  // `seed_base` namespaces this wallet's deterministic key derivation.
  explicit Wallet(std::uint64_t seed_base);

  // Mints a fresh public key for receiving (the secret is retained so a
  // matching output can be adopted by scan()).
  PublicKey fresh_key();

  // Adopts the outputs of `producer` owned by one of this wallet's minted
  // keys. Works for genesis, transaction and checkpoint-summary outputs.
  void scan(const MessageId &producer, const std::vector<Output> &outputs);

  // Builds a signed transaction paying `recipients`, delegating to
  // `validator_key`, with exact change to a fresh self-owned key. Returns
  // std::nullopt when the unspent balance cannot cover the total
  // (InsufficientFunds); the wallet is unchanged in that case. On success
  // the spent refs are removed immediately and are never spent again.
  std::optional<Transaction> pay(
      const std::vector<std::pair<Money, PublicKey>> &recipients,
      const PublicKey &validator_key);

  Money balance() const;
  std::size_t owned_count() const { return owned_.size(); }
  std::vector<OutputRef> owned_refs() const;

 private:
  struct Owned {
    Output out;
    SecretKey sk;
  };

  KeyPair mint();

  std::uint64_t seed_base_;
  std::uint64_t counter_ = 0;
  std::map<OutputRef, Owned> owned_;
  std::map<PublicKey, SecretKey> pending_;  // minted, not yet adopted
};

enum class SignVerdict : std::uint8_t { Sign, RefuseConflict };

struct SignDecision {
  SignVerdict verdict = SignVerdict::Sign;
  // The first-seen spender that caused a RefuseConflict.
  std::optional<MessageId> conflicting;
};

class ValidatorState {
 public:
  explicit ValidatorState(const KeyPair &keys) : keys_(keys) {}

  const PublicKey &key() const { return keys_.pk; }

  // First-seen-wins decision for an admitted transaction. Decisions are
  // recorded: re-delivery returns the original verdict without re-queueing.
  SignDecision on_transaction(const MessageId &id, const Transaction &tx);

  // Queues a checkpoint the caller has already verified against its own
  // recomputation; it will be signed by the next ack.
  void queue_checkpoint(const MessageId &cp_id);

  // After a checkpoint is confirmed: future acks reference it, and signed
  // transactions outside `summarized` (the checkpoint's past) are re-listed
  // so they survive pruning.
  void adopt_checkpoint(const MessageId &cp_id,
                        const std::set<MessageId> &summarized);

  // Drains the outbox into one ack chained to the previous one; nullopt when
  // there is nothing to sign.
  std::optional<Ack> emit_ack();

  const std::optional<MessageId> &last_ack() const { return last_ack_; }
  const std::vector<MessageId> &signed_log() const { return signed_log_; }
  bool outbox_empty() const { return outbox_.empty(); }

 private:
  KeyPair keys_;
  std::optional<MessageId> last_ack_;
  std::optional<MessageId> checkpoint_ref_;
  std::map<OutputRef, MessageId> seen_spends_;
  std::map<MessageId, SignDecision> decided_;
  std::vector<MessageId> outbox_;
  std::vector<MessageId> signed_log_;  // every subject this validator signed
};

}  // namespace ackdag
