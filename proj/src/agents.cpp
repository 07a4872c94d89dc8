// Honest wallet and validator state machines. See agents.hpp for semantics.

#include "ackdag/agents.hpp"

#include <algorithm>
#include <cassert>

#include "ackdag/codec.hpp"
#include "ackdag/hash.hpp"

namespace ackdag {

namespace {

// Namespaced deterministic key seed: distinct (base, counter) pairs map to
// independent keygen seeds without coordination between wallets.
std::uint64_t derived_seed(std::uint64_t base, std::uint64_t counter) {
  Bytes buf;
  buf.reserve(16);
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>(base >> (8 * i)));
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>(counter >> (8 * i)));
  Digest d = sha256(ByteView(buf.data(), buf.size()));
  std::uint64_t seed = 0;
  for (int i = 0; i < 8; ++i) seed |= static_cast<std::uint64_t>(d.bytes[i]) << (8 * i);
  return seed;
}

}  // namespace

Wallet::Wallet(std::uint64_t seed_base) : seed_base_(seed_base) {}

KeyPair Wallet::mint() {
  return test_key_scheme().keygen(derived_seed(seed_base_, counter_++));
}

PublicKey Wallet::fresh_key() {
  KeyPair kp = mint();
  pending_.emplace(kp.pk, kp.sk);
  return kp.pk;
}

void Wallet::scan(const MessageId &producer, const std::vector<Output> &outputs) {
  for (std::uint32_t i = 0; i < outputs.size(); ++i) {
    auto it = pending_.find(outputs[i].owner_key);
    if (it == pending_.end()) continue;
    owned_[OutputRef{producer, i}] = Owned{outputs[i], it->second};
    pending_.erase(it);
  }
}

Money Wallet::balance() const {
  Money sum = 0;
  for (const auto &[ref, o] : owned_) sum += o.out.value;
  return sum;
}

std::vector<OutputRef> Wallet::owned_refs() const {
  std::vector<OutputRef> refs;
  refs.reserve(owned_.size());
  for (const auto &[ref, o] : owned_) refs.push_back(ref);
  return refs;
}

std::optional<Transaction> Wallet::pay(
    const std::vector<std::pair<Money, PublicKey>> &recipients,
    const PublicKey &validator_key) {
  Money total = 0;
  for (const auto &[value, key] : recipients) {
    assert(value > 0);
    total += value;
  }
  assert(total > 0);

  // Deterministic coin selection: ascending output ref until covered.
  Money gathered = 0;
  std::vector<std::map<OutputRef, Owned>::iterator> picks;
  for (auto it = owned_.begin(); it != owned_.end() && gathered < total; ++it) {
    picks.push_back(it);
    gathered += it->second.out.value;
  }
  if (gathered < total) return std::nullopt;  // InsufficientFunds

  Transaction tx;
  tx.validator_key = validator_key;
  std::vector<SecretKey> spend_keys;
  for (auto it : picks) {
    tx.inputs.push_back(it->first);
    spend_keys.push_back(it->second.sk);
  }
  for (const auto &[value, key] : recipients) tx.outputs.push_back(Output{value, key});

  std::optional<KeyPair> change_key;
  if (gathered > total) {
    change_key = mint();
    tx.outputs.push_back(Output{gathered - total, change_key->pk});
  }

  Bytes payload = transaction_signing_payload(tx);
  const KeyScheme &scheme = test_key_scheme();
  for (const SecretKey &sk : spend_keys) {
    tx.signatures.push_back(scheme.sign(sk, ByteView(payload.data(), payload.size())));
  }

  // Commit: refs are spent locally and never offered again.
  for (auto it : picks) owned_.erase(it);
  if (change_key) {
    MessageId id = id_of(Message{tx});
    std::uint32_t change_index = static_cast<std::uint32_t>(tx.outputs.size() - 1);
    owned_[OutputRef{id, change_index}] =
        Owned{tx.outputs.back(), change_key->sk};
  }
  return tx;
}

SignDecision ValidatorState::on_transaction(const MessageId &id,
                                            const Transaction &tx) {
  if (auto it = decided_.find(id); it != decided_.end()) return it->second;

  SignDecision decision;
  for (const OutputRef &ref : tx.inputs) {
    auto seen = seen_spends_.find(ref);
    if (seen != seen_spends_.end() && seen->second != id) {
      decision.verdict = SignVerdict::RefuseConflict;
      decision.conflicting = seen->second;
      break;
    }
  }
  // First sight of each ref is attributed regardless of the verdict: having
  // *seen* a spender is what makes later spenders incorrect.
  for (const OutputRef &ref : tx.inputs) seen_spends_.emplace(ref, id);

  if (decision.verdict == SignVerdict::Sign) {
    outbox_.push_back(id);
    signed_log_.push_back(id);
  }
  decided_.emplace(id, decision);
  return decision;
}

void ValidatorState::queue_checkpoint(const MessageId &cp_id) {
  outbox_.push_back(cp_id);
}

void ValidatorState::adopt_checkpoint(const MessageId &cp_id,
                                      const std::set<MessageId> &summarized) {
  checkpoint_ref_ = cp_id;
  for (const MessageId &id : signed_log_) {
    if (summarized.count(id) != 0) continue;
    if (std::find(outbox_.begin(), outbox_.end(), id) != outbox_.end()) continue;
    outbox_.push_back(id);
  }
}

std::optional<Ack> ValidatorState::emit_ack() {
  if (outbox_.empty()) return std::nullopt;
  Ack a;
  a.validator_key = keys_.pk;
  a.prev_ack = last_ack_;
  a.signed_ids = outbox_;
  std::sort(a.signed_ids.begin(), a.signed_ids.end());
  a.signed_ids.erase(std::unique(a.signed_ids.begin(), a.signed_ids.end()),
                     a.signed_ids.end());
  a.checkpoint_ref = checkpoint_ref_;
  Bytes payload = ack_signing_payload(a);
  a.signature = test_key_scheme().sign(keys_.sk, ByteView(payload.data(), payload.size()));
  last_ack_ = id_of(Message{a});
  outbox_.clear();
  return a;
}

}  // namespace ackdag
