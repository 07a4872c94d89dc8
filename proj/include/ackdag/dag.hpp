#pragma once

// Append-only DAG store. Handles admission (verify, buffer until references
// are present, then complete the reference-dependent checks), assigns dense
// indices, and maintains the reachability and spend indexes every higher
// layer queries: past closures, input-dependency closures, conflict tests,
// and output resolution.
//
// A store is rooted either at a Genesis or at a Checkpoint (bootstrap). For a
// checkpoint root, the summary entries stand in for the pruned region: input
// references into the pruned region resolve through the summary origins, and
// an ack whose prev_ack is missing is admissible when its checkpoint_ref
// names the root.
//
// Two distinct encodings hashing to the same id would break every invariant
// downstream; ingest treats it as a fatal error (IdCollisionError) rather
// than a rejection.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "ackdag/codec.hpp"
#include "ackdag/messages.hpp"

namespace ackdag {

// Dense bitset over store indices. Sets are append-friendly: indices are
// assigned in admission order and never reused.
class IndexBits {
 public:
  void set(std::uint32_t i) {
    std::size_t w = i / 64;
    if (w >= words_.size()) words_.resize(w + 1, 0);
    words_[w] |= std::uint64_t{1} << (i % 64);
  }

  bool test(std::uint32_t i) const {
    std::size_t w = i / 64;
    if (w >= words_.size()) return false;
    return (words_[w] >> (i % 64)) & 1;
  }

  IndexBits &operator|=(const IndexBits &other) {
    if (other.words_.size() > words_.size()) words_.resize(other.words_.size(), 0);
    for (std::size_t i = 0; i < other.words_.size(); ++i) words_[i] |= other.words_[i];
    return *this;
  }

  bool intersects(const IndexBits &other) const {
    std::size_t n = std::min(words_.size(), other.words_.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (words_[i] & other.words_[i]) return true;
    }
    return false;
  }

  IndexBits intersect(const IndexBits &other) const {
    IndexBits out;
    std::size_t n = std::min(words_.size(), other.words_.size());
    out.words_.resize(n, 0);
    for (std::size_t i = 0; i < n; ++i) out.words_[i] = words_[i] & other.words_[i];
    return out;
  }

  bool contains(const IndexBits &other) const {
    for (std::size_t i = 0; i < other.words_.size(); ++i) {
      std::uint64_t w = other.words_[i];
      if (i >= words_.size() ? w != 0 : (w & ~words_[i]) != 0) return false;
    }
    return true;
  }

  std::size_t count() const {
    std::size_t c = 0;
    for (std::uint64_t w : words_) c += static_cast<std::size_t>(__builtin_popcountll(w));
    return c;
  }

  bool empty() const {
    for (std::uint64_t w : words_) {
      if (w != 0) return false;
    }
    return true;
  }

  template <typename Fn>
  void for_each_set(Fn fn) const {
    for (std::size_t wi = 0; wi < words_.size(); ++wi) {
      std::uint64_t w = words_[wi];
      while (w != 0) {
        int bit = __builtin_ctzll(w);
        fn(static_cast<std::uint32_t>(wi * 64 + bit));
        w &= w - 1;
      }
    }
  }

  // Canonical word vector (trailing zero words trimmed) for memo keys and
  // equality independent of capacity history.
  std::vector<std::uint64_t> canonical_words() const {
    std::vector<std::uint64_t> w = words_;
    while (!w.empty() && w.back() == 0) w.pop_back();
    return w;
  }

  bool operator==(const IndexBits &other) const {
    return canonical_words() == other.canonical_words();
  }

 private:
  std::vector<std::uint64_t> words_;
};

enum class IngestStatus { Admitted, Buffered, Rejected };

struct IngestResult {
  IngestStatus status = IngestStatus::Rejected;
  std::string reason;               // set when Rejected
  std::vector<MessageId> missing;   // set when Buffered
  // Messages admitted by this call, in admission order. Contains the ingested
  // message first, then any buffered dependents that became complete.
  std::vector<MessageId> admitted;
};

// Duplicate id with different canonical bytes: a hash collision or memory
// corruption. Not recoverable by protocol rules.
class IdCollisionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An output as the store resolves it: its value, the validator its stake is
// delegated to, and the producing entry's dense index.
struct ResolvedOutput {
  Output output;
  PublicKey validator_key;
  std::uint32_t producer_index = 0;
  bool from_summary = false;  // resolved through a checkpoint-root summary
};

class DagStore {
 public:
  struct Entry {
    Message msg;
    MessageId id;
    MessageKind kind = MessageKind::Genesis;
    std::uint32_t index = 0;
    // Reflexive past closure over all admitted reference edges.
    IndexBits past;
    // Reflexive closure over input edges only (transactions and the root).
    IndexBits dep;
    // Topological depth over reference edges (root = 0), used for canonical
    // content ordering that is independent of ingest order.
    std::uint32_t depth = 0;
    // Acks only: length of the prev_ack chain within this store.
    std::uint32_t ack_chain_depth = 0;
  };

  static DagStore from_genesis(const Genesis &g,
                               const KeyScheme &scheme = test_key_scheme());
  static DagStore from_checkpoint(const Checkpoint &c,
                                  const KeyScheme &scheme = test_key_scheme());

  IngestResult ingest(const Message &m);

  // ---- lookup ----
  bool contains(const MessageId &id) const { return index_.count(id) != 0; }
  std::optional<std::uint32_t> index_of(const MessageId &id) const;
  const Entry &entry(std::uint32_t idx) const { return entries_[idx]; }
  const Entry *find(const MessageId &id) const;
  std::size_t size() const { return entries_.size(); }
  // Monotone counter incremented on every admission; memoization anchor.
  std::uint64_t version() const { return entries_.size(); }
  const std::vector<MessageId> &admitted_ids() const { return admitted_ids_; }
  // Number of admitted acks; certificate searches that failed retry only
  // after this (or the confirmed set) advances.
  std::size_t ack_count() const { return ack_count_; }

  const MessageId &root_id() const { return entries_[0].id; }
  bool root_is_checkpoint() const {
    return entries_[0].kind == MessageKind::Checkpoint;
  }
  Money total_money() const { return total_money_; }

  // ---- reachability ----
  // Reflexive transitive closure over reference edges, as ids.
  std::vector<MessageId> past(const std::vector<MessageId> &ids) const;
  // Same closure as dense bits (admitted ids only; unknown ids ignored).
  IndexBits past_bits(const std::vector<MessageId> &ids) const;

  // depends(t1, t2): t1 transitively consumes outputs of t2 (reflexive
  // closure over input edges). Both must be admitted transactions (or the
  // root); false otherwise.
  bool depends(const MessageId &t1, const MessageId &t2) const;

  // conflicts(t1, t2): some dependency of t1 and some dependency of t2 are
  // distinct transactions spending a common output, i.e. the two cannot both
  // be confirmed.
  bool conflicts(const MessageId &t1, const MessageId &t2) const;

  // Raw spent predicate: true iff some admitted transaction in `scope` spends
  // `ref`. Deliberately counts unconfirmed spenders; confirmation-aware
  // spend-filtering lives in the confirmation layer.
  bool spent_in(const OutputRef &ref, const std::set<MessageId> &scope) const;

  // ---- outputs ----
  std::optional<ResolvedOutput> resolve(const OutputRef &ref) const;
  // Admitted transactions spending ref, as dense indices in admission order.
  const std::vector<std::uint32_t> *spenders_of(const OutputRef &ref) const;
  // Every resolvable output position, ordered by (producing id, index).
  const std::map<OutputRef, ResolvedOutput> &all_outputs() const { return outputs_; }
  const std::map<OutputRef, std::vector<std::uint32_t>> &all_spenders() const {
    return spenders_;
  }

  // ---- validators ----
  // Acks of one validator, dense indices in admission order.
  const std::vector<std::uint32_t> *acks_of(const PublicKey &validator) const;
  // Admitted acks whose signed_ids contain `id`, dense indices in admission
  // order; null when none.
  const std::vector<std::uint32_t> *signers_of(const MessageId &id) const;
  const std::map<PublicKey, std::vector<std::uint32_t>> &acks_by_validator() const {
    return acks_by_validator_;
  }
  bool is_byzantine(const PublicKey &validator) const {
    return byzantine_.count(validator) != 0;
  }
  const std::set<PublicKey> &byzantine_validators() const { return byzantine_; }

  // ---- buffering ----
  std::size_t buffered_count() const { return pending_.size(); }
  bool is_buffered(const MessageId &id) const { return pending_.count(id) != 0; }
  // Called with a human-readable line when the pending buffer evicts the
  // oldest entry or drops an entry that failed late validation.
  void set_warn_hook(std::function<void(const std::string &)> hook) {
    warn_hook_ = std::move(hook);
  }

  static constexpr std::size_t kPendingCap = 10000;

 private:
  DagStore() = default;

  struct Pending {
    Message msg;
    MessageId id;
    std::set<MessageId> missing;
  };

  IngestResult admit_or_buffer(Message m, MessageId id);
  // Completes reference-dependent validation and installs the entry.
  // Returns an error reason, or empty string on success.
  std::string admit_complete(const Message &m, const MessageId &id);
  void install_entry(const Message &m, const MessageId &id);
  std::vector<MessageId> drain_ready(const MessageId &admitted);
  void warn(const std::string &line);

  // References of a message with bootstrap waivers applied; `missing` gets
  // ids that are neither admitted nor waived.
  std::vector<MessageId> references(const Message &m) const;

  std::vector<Entry> entries_;
  std::vector<MessageId> admitted_ids_;
  std::unordered_map<MessageId, std::uint32_t> index_;
  std::unordered_map<MessageId, Bytes> encodings_;
  Money total_money_ = 0;

  std::map<OutputRef, ResolvedOutput> outputs_;
  std::map<OutputRef, std::vector<std::uint32_t>> spenders_;
  std::map<PublicKey, OutputRef> owner_index_;

  std::map<PublicKey, std::vector<std::uint32_t>> acks_by_validator_;
  std::unordered_map<MessageId, std::vector<std::uint32_t>> signers_of_;
  // Fork detection: one ack per (validator, prev) slot; nullopt prev = chain
  // start. A second occupant marks the validator Byzantine.
  std::map<std::pair<PublicKey, std::optional<MessageId>>, MessageId> chain_slots_;
  std::set<PublicKey> byzantine_;

  std::map<MessageId, Pending> pending_;
  std::deque<MessageId> pending_order_;
  std::map<MessageId, std::vector<MessageId>> waiters_;
  std::size_t ack_count_ = 0;

  const KeyScheme *scheme_ = &test_key_scheme();
  std::function<void(const std::string &)> warn_hook_;
};

}  // namespace ackdag
