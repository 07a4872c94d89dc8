#pragma once

// Confirmation layer: delegated stake evaluation, certificate search and
// verification, the confirmed-set fixed point, and fast stake bounds.
//
// The semantics below are normative for this codebase;
// tests/support/oracles.cpp re-implements them independently and the two are
// required to agree.
//
// Scope evaluation. A scope is a past-closed set P of admitted messages
// (always of the form past(A) for an ack set A, or the past of a
// checkpoint). eval(P, exclude) computes the confirmed subset C(P) and the
// delegated stake trajectory by cumulative induction:
//   - State 0: C = {root}. Every root output is active; validator v's stake
//     is the sum of active output values delegated to v.
//   - Scan the transactions of P in canonical order (topological depth, then
//     id). A transaction u (u != exclude, u not in C) joins C when (a) every
//     producer of u's inputs is in C and (b) the in-scope certificate search
//     below succeeds for u against the current C. Joining deactivates the
//     outputs u consumes, activates the outputs u creates, and appends one
//     stake state to the trajectory. After every join the scan restarts from
//     the canonically least transaction, so the least eligible member always
//     joins first; evaluation stops when a full pass adds nothing. The
//     restart matters: a join can retract stake another candidate relies on,
//     so the closure is defined by this canonical join order rather than by
//     arbitrary scan progress.
//   - Checkpoints other than the store root are inert: they never join C and
//     carry no stake; they only extend pasts.
//
// Certificate judgement for subject u against evidence A (an ack set):
//   (1) every producer of u's inputs is confirmed,
//   (2) P' = past(A) contains no transaction t' != u sharing an input
//       with u,
//   (3) the validators having an ack in A that signs u jointly hold strictly
//       more than 2/3 of the supply M (3*stake > 2*M in wide arithmetic),
//       counting an output for its delegate when its producer is confirmed
//       in scope and no transaction confirmed in scope spends it.
//   For the in-scope search, "confirmed in scope" means the running
//   C intersected with P'. For the store-level search, P' is evaluated from
//   scratch with the subject excluded — eval(P', exclude = u) — producers
//   are required in C(P') and stakes come from the final state of that
//   evaluation, which makes the resulting certificate self-contained: it
//   stays valid in any store that contains past(A).
//
// An ack is *clean* for subject u when its past contains no transaction
// t' != u sharing an input with u; no valid evidence set can contain a
// non-clean ack (its past would violate (2)), so searches only consider
// clean acks. Search phases (first success wins; every ordering is
// content-derived, never ingest-order-derived):
//   1a. For each validator with acks signing u: the first clean signing ack
//       by (chain depth, id). Judge that set.
//   1b. 1a plus, for every validator not contributing to 1a, its latest
//       clean ack by (chain depth, id) descending, as context. Judge once.
//   1c. Every clean ack in the universe. Judge once.
//   2.  (store-level search only) Bounded exhaustive enumeration: pool of
//       all clean acks sorted by (validator key, chain depth, id); subsets
//       in (popcount, lexicographic bitmask) order, skipping sets with no
//       signing ack. Exceeding exhaustive_max_candidates judged candidates,
//       or a pool larger than exhaustive_max_pool, yields Unresolved.
// The in-scope search stops after 1c. Phase 2 over clean acks is a complete
// decision procedure, so an exhausted enumeration is a definitive NotFound
// for the store-level judgement.
//
// Confirmed set. confirmed_set(store) is the least fixed point of "u joins
// when its producers are in the set and the store-level search finds a
// certificate". Because certificates are self-contained, membership is
// permanent and independent of ingest order: any two stores holding the same
// admitted message set agree.
//
// Checkpoint confirmation. A checkpoint's scope is its own past; its stake
// trajectory is eval(past(cp)). The checkpoint is confirmed when the
// validators with acks signing it jointly pass the 2/3 threshold at SOME
// state of that trajectory: delegations move while the summarised region
// settles, so the signers' combined weight is compared against every
// recorded state, not only the final one.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>
#include <unordered_map>

#include "ackdag/dag.hpp"

namespace ackdag {

struct StakeMap {
  std::map<PublicKey, Money> stakes;

  Money of(const PublicKey &v) const {
    auto it = stakes.find(v);
    return it == stakes.end() ? 0 : it->second;
  }
  Money total() const {
    Money t = 0;
    for (const auto &[k, m] : stakes) t += m;
    return t;
  }
  bool operator==(const StakeMap &) const = default;
};

// 3*stake > 2*total in 128-bit arithmetic; immune to Money-range overflow.
inline bool threshold_met(Money stake, Money total) {
  return 3 * static_cast<unsigned __int128>(stake) >
         2 * static_cast<unsigned __int128>(total);
}

struct ConfirmationCertificate {
  MessageId subject;                // transaction or checkpoint id
  std::vector<MessageId> acks;      // evidence set A, sorted ascending
  StakeMap signer_stakes;           // stake of each signing validator
  Money signed_stake = 0;           // sum of signer_stakes
  Money total_money = 0;            // supply M the threshold was taken over
  // Index of the trajectory state the threshold was met at: checkpoints may
  // pass at any recorded state; transaction certificates always use the
  // final state.
  std::uint32_t stake_state = 0;

  bool operator==(const ConfirmationCertificate &) const = default;
};

enum class CertStatus { Found, NotFound, Unresolved };

struct CertSearchResult {
  CertStatus status = CertStatus::NotFound;
  std::optional<ConfirmationCertificate> cert;
  // NotFound only: the subject conflicts with a confirmed transaction, so no
  // future message can ever confirm it.
  bool permanently_unconfirmable = false;
};

struct ConfirmConfig {
  // Cap on judged candidates across all phases of one search.
  std::uint64_t exhaustive_max_candidates = 1ull << 16;
  // Clean-ack pool size above which phase 2 is not attempted.
  std::uint32_t exhaustive_max_pool = 20;
};

// Bracket of the combined stake currently delegated to the validators that
// signed a transaction. exact counts outputs whose producer is confirmed and
// that no confirmed transaction spends; lower additionally drops outputs a
// pending (unconfirmed, not conflict-blocked) transaction tries to spend;
// upper additionally counts outputs pending transactions would create. The
// subject itself is excluded from the pending deltas. lower <= exact <=
// upper always holds, and the value is independent of how many partitions
// the output scan is split into.
struct StakeBounds {
  Money lower = 0;
  Money upper = 0;
  Money exact = 0;
};

// Certificate file format: "ACT1" magic, then fixed-order fields (subject,
// acks, signer stakes, sums, stake state). Certificates are portable proofs;
// any store containing the evidence past re-verifies them offline.
Bytes encode_certificate(const ConfirmationCertificate &cert);
std::optional<ConfirmationCertificate> decode_certificate(
    ByteView data, DecodeError *err = nullptr);

// Per-store confirmation engine. Holds the scope-evaluation memo, found
// certificates (permanent), and failure caches keyed by how much evidence
// the store held when the search failed. All queries advance the engine to
// the store's current version first; the store must outlive the Confirmer
// and only grow through DagStore::ingest.
class Confirmer {
 public:
  explicit Confirmer(const DagStore &store, ConfirmConfig cfg = ConfirmConfig{});

  const DagStore &store() const { return store_; }

  // Confirmed transaction ids plus the root id. Monotone.
  const std::set<MessageId> &confirmed();
  bool is_confirmed(const MessageId &id);
  // Certificate recorded when `id` was confirmed (transactions; root and
  // checkpoints have their own entry points). Null when not confirmed.
  const ConfirmationCertificate *certificate_of(const MessageId &id);

  CertSearchResult find_certificate(const MessageId &tx);
  bool verify_certificate(const ConfirmationCertificate &cert);
  StakeMap delegated_stake(const std::vector<MessageId> &acks,
                           std::optional<MessageId> exclude = std::nullopt);
  // Full result of evaluating past(acks): the in-scope confirmed set (root
  // included) and the final delegation state. This is the self-contained
  // view a checkpoint summarises — it never consults evidence outside the
  // frontier's past, so any verifier holding that past recomputes it
  // exactly.
  struct FrontierEval {
    std::set<MessageId> confirmed;
    StakeMap final_stakes;
  };
  FrontierEval eval_frontier(const std::vector<MessageId> &acks);
  CertSearchResult confirm_checkpoint(const MessageId &checkpoint_id);
  const std::map<MessageId, ConfirmationCertificate> &confirmed_checkpoints();
  StakeBounds stake_bounds(const MessageId &tx, unsigned partitions = 1);

 private:
  struct ScopeKey {
    std::vector<std::uint64_t> words;
    std::uint32_t exclude;
    bool operator==(const ScopeKey &) const = default;
  };
  struct ScopeKeyHash {
    std::size_t operator()(const ScopeKey &k) const noexcept {
      std::size_t h = k.exclude * 0x9e3779b97f4a7c15ull;
      for (std::uint64_t w : k.words) h = (h * 1099511628211ull) ^ w;
      return h;
    }
  };

  struct ScopeEval {
    IndexBits confirmed;
    std::vector<std::uint32_t> join_order;
    std::vector<StakeMap> trajectory;  // state 0 = root only, one per join
  };

  struct Judgement {
    StakeMap signer_stakes;
    Money signed_stake = 0;
    std::uint32_t stake_state = 0;
  };

  static constexpr std::uint32_t kNoExclude = 0xffffffffu;

  const ScopeEval &eval_scope(const IndexBits &scope, std::uint32_t exclude);

  // True when some admitted transaction s != tx_idx spending one of
  // tx_idx's inputs lies within `within`.
  bool has_direct_sharer(std::uint32_t tx_idx, const IndexBits &within) const;
  bool producers_in(std::uint32_t tx_idx, const IndexBits &confirmed) const;
  // Clean signing/context ack pools, grouped per validator, content-ordered.
  std::map<PublicKey, std::vector<std::uint32_t>> clean_acks_by_validator(
      std::uint32_t subject, const std::vector<std::uint32_t> &ack_pool) const;

  // Stake of `signers` counting outputs produced in `confirmed_mask` and not
  // spent within it.
  StakeMap stake_within(const IndexBits &confirmed_mask,
                        const std::set<PublicKey> &signers) const;

  // In-scope judgement (running C) used by eval_scope.
  std::optional<Judgement> judge_in_scope(std::uint32_t subject,
                                          const std::vector<std::uint32_t> &acks,
                                          const IndexBits &running_confirmed);
  bool search_in_scope(std::uint32_t subject, const IndexBits &running_confirmed,
                       const std::vector<std::uint32_t> &scope_acks);

  // Store-level judgement: full re-evaluation with the subject excluded.
  std::optional<Judgement> judge_store_level(std::uint32_t subject,
                                             const std::vector<std::uint32_t> &acks);

  // Search bodies used by advance(); the public entry points advance first.
  CertSearchResult find_certificate_inner(std::uint32_t tx_idx);
  CertSearchResult confirm_checkpoint_inner(std::uint32_t cp_idx);
  bool conflicts_confirmed(std::uint32_t tx_idx);

  void advance();

  const DagStore &store_;
  ConfirmConfig cfg_;

  std::unordered_map<ScopeKey, std::unique_ptr<ScopeEval>, ScopeKeyHash> scope_memo_;

  std::set<MessageId> confirmed_ids_;
  IndexBits confirmed_bits_;
  std::map<MessageId, ConfirmationCertificate> certs_;
  std::map<MessageId, ConfirmationCertificate> checkpoint_certs_;

  // (ack_count, confirmed count) at the time a search failed; retried only
  // after either grows.
  struct FailStamp {
    std::size_t acks = 0;
    std::size_t confirmed = 0;
    bool unresolved = false;
    bool operator==(const FailStamp &) const = default;
  };
  std::map<MessageId, FailStamp> fail_cache_;
  std::map<MessageId, std::size_t> checkpoint_fail_cache_;

  std::uint64_t advanced_version_ = 0;
};

// Spec-level entry points; each builds a transient Confirmer. Prefer holding
// a Confirmer when issuing many queries against one store.
StakeMap delegated_stake(const std::vector<MessageId> &acks, const DagStore &store,
                         std::optional<MessageId> exclude = std::nullopt);
std::set<MessageId> confirmed_set(const DagStore &store);
CertSearchResult find_certificate(const MessageId &tx, const DagStore &store);
bool verify_certificate(const ConfirmationCertificate &cert, const DagStore &store);
StakeBounds stake_bounds(const MessageId &tx, const DagStore &store,
                         unsigned partitions = 1);

}  // namespace ackdag
