#include "ackdag/confirm.hpp"

#include <algorithm>
#include <thread>

namespace ackdag {

namespace {

// Outputs an entry contributes to the ledger: genesis outputs, transaction
// outputs, or — for a checkpoint acting as store root — the summary entries.
template <typename Fn>
void for_each_output_of(const DagStore &store, std::uint32_t idx, Fn fn) {
  const DagStore::Entry &e = store.entry(idx);
  if (const auto *g = std::get_if<Genesis>(&e.msg)) {
    for (std::size_t i = 0; i < g->outputs.size(); ++i) {
      fn(OutputRef{e.id, static_cast<std::uint32_t>(i)}, g->outputs[i],
         g->validator_keys[i]);
    }
  } else if (const auto *tx = std::get_if<Transaction>(&e.msg)) {
    for (std::size_t i = 0; i < tx->outputs.size(); ++i) {
      fn(OutputRef{e.id, static_cast<std::uint32_t>(i)}, tx->outputs[i],
         tx->validator_key);
    }
  } else if (const auto *cp = std::get_if<Checkpoint>(&e.msg)) {
    if (idx == 0) {
      for (const CheckpointEntry &s : cp->summary) {
        fn(s.origin, s.output, s.validator_key);
      }
    }
  }
}

template <typename Fn>
void for_each_input_of(const DagStore &store, std::uint32_t idx, Fn fn) {
  const DagStore::Entry &e = store.entry(idx);
  const auto *tx = std::get_if<Transaction>(&e.msg);
  if (!tx) return;
  for (const OutputRef &ref : tx->inputs) {
    auto ro = store.resolve(ref);
    if (ro) fn(ref, *ro);
  }
}

bool ack_signs(const Ack &a, const MessageId &id) {
  return std::binary_search(a.signed_ids.begin(), a.signed_ids.end(), id);
}

const Ack &ack_of(const DagStore &store, std::uint32_t idx) {
  return std::get<Ack>(store.entry(idx).msg);
}

// Content order for ack selection: chain depth first, id as tie break.
struct AckOrder {
  const DagStore &store;
  bool operator()(std::uint32_t a, std::uint32_t b) const {
    const auto &ea = store.entry(a);
    const auto &eb = store.entry(b);
    if (ea.ack_chain_depth != eb.ack_chain_depth) {
      return ea.ack_chain_depth < eb.ack_chain_depth;
    }
    return ea.id < eb.id;
  }
};

std::set<PublicKey> signing_validators(const DagStore &store,
                                       const std::vector<std::uint32_t> &acks,
                                       const MessageId &subject) {
  std::set<PublicKey> out;
  for (std::uint32_t a : acks) {
    const Ack &ack = ack_of(store, a);
    if (ack_signs(ack, subject)) out.insert(ack.validator_key);
  }
  return out;
}

std::vector<MessageId> sorted_ids(const DagStore &store,
                                  const std::vector<std::uint32_t> &acks) {
  std::vector<MessageId> ids;
  ids.reserve(acks.size());
  for (std::uint32_t a : acks) ids.push_back(store.entry(a).id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace

Confirmer::Confirmer(const DagStore &store, ConfirmConfig cfg)
    : store_(store), cfg_(cfg) {
  confirmed_bits_.set(0);
  confirmed_ids_.insert(store.root_id());
}

bool Confirmer::has_direct_sharer(std::uint32_t tx_idx,
                                  const IndexBits &within) const {
  bool found = false;
  for_each_input_of(store_, tx_idx, [&](const OutputRef &ref, const ResolvedOutput &) {
    if (found) return;
    const auto *spenders = store_.spenders_of(ref);
    if (!spenders) return;
    for (std::uint32_t s : *spenders) {
      if (s != tx_idx && within.test(s)) {
        found = true;
        return;
      }
    }
  });
  return found;
}

bool Confirmer::producers_in(std::uint32_t tx_idx, const IndexBits &confirmed) const {
  bool ok = true;
  for_each_input_of(store_, tx_idx, [&](const OutputRef &, const ResolvedOutput &ro) {
    if (!confirmed.test(ro.producer_index)) ok = false;
  });
  return ok;
}

std::map<PublicKey, std::vector<std::uint32_t>> Confirmer::clean_acks_by_validator(
    std::uint32_t subject, const std::vector<std::uint32_t> &ack_pool) const {
  std::map<PublicKey, std::vector<std::uint32_t>> groups;
  for (std::uint32_t a : ack_pool) {
    if (has_direct_sharer(subject, store_.entry(a).past)) continue;
    groups[ack_of(store_, a).validator_key].push_back(a);
  }
  AckOrder order{store_};
  for (auto &[v, list] : groups) std::sort(list.begin(), list.end(), order);
  return groups;
}

StakeMap Confirmer::stake_within(const IndexBits &confirmed_mask,
                                 const std::set<PublicKey> &signers) const {
  StakeMap result;
  for (const PublicKey &v : signers) result.stakes[v] = 0;
  confirmed_mask.for_each_set([&](std::uint32_t member) {
    for_each_output_of(
        store_, member,
        [&](const OutputRef &ref, const Output &out, const PublicKey &delegate) {
          if (signers.count(delegate) == 0) return;
          const auto *spenders = store_.spenders_of(ref);
          if (spenders) {
            for (std::uint32_t s : *spenders) {
              if (confirmed_mask.test(s)) return;  // spent within the mask
            }
          }
          result.stakes[delegate] += out.value;
        });
  });
  return result;
}

std::optional<Confirmer::Judgement> Confirmer::judge_in_scope(
    std::uint32_t subject, const std::vector<std::uint32_t> &acks,
    const IndexBits &running_confirmed) {
  if (acks.empty()) return std::nullopt;
  IndexBits evidence_past;
  for (std::uint32_t a : acks) evidence_past |= store_.entry(a).past;
  if (has_direct_sharer(subject, evidence_past)) return std::nullopt;
  IndexBits mask = running_confirmed.intersect(evidence_past);
  if (!producers_in(subject, mask)) return std::nullopt;
  std::set<PublicKey> signers =
      signing_validators(store_, acks, store_.entry(subject).id);
  if (signers.empty()) return std::nullopt;
  StakeMap stakes = stake_within(mask, signers);
  Money sum = stakes.total();
  if (!threshold_met(sum, store_.total_money())) return std::nullopt;
  Judgement j;
  j.signer_stakes = std::move(stakes);
  j.signed_stake = sum;
  return j;
}

bool Confirmer::search_in_scope(std::uint32_t subject,
                                const IndexBits &running_confirmed,
                                const std::vector<std::uint32_t> &scope_acks) {
  const MessageId &subject_id = store_.entry(subject).id;

  std::vector<std::uint32_t> signing_pool;
  for (std::uint32_t a : scope_acks) {
    if (ack_signs(ack_of(store_, a), subject_id)) signing_pool.push_back(a);
  }
  if (signing_pool.empty()) return false;
  auto signing_groups = clean_acks_by_validator(subject, signing_pool);
  if (signing_groups.empty()) return false;

  // Phase 1a: first clean signing ack per validator.
  std::vector<std::uint32_t> candidate;
  for (const auto &[v, list] : signing_groups) candidate.push_back(list.front());
  if (judge_in_scope(subject, candidate, running_confirmed)) return true;

  // Phase 1b: add the latest clean ack of every non-contributing validator
  // as context.
  auto context_groups = clean_acks_by_validator(subject, scope_acks);
  std::vector<std::uint32_t> extended = candidate;
  for (const auto &[v, list] : context_groups) {
    if (signing_groups.count(v) != 0) continue;
    extended.push_back(list.back());  // lists are sorted ascending
  }
  if (extended.size() != candidate.size() &&
      judge_in_scope(subject, extended, running_confirmed)) {
    return true;
  }

  // Phase 1c: every clean ack in the scope.
  std::vector<std::uint32_t> all_clean;
  for (const auto &[v, list] : context_groups) {
    all_clean.insert(all_clean.end(), list.begin(), list.end());
  }
  if (all_clean.size() != extended.size() &&
      judge_in_scope(subject, all_clean, running_confirmed)) {
    return true;
  }
  return false;
}

const Confirmer::ScopeEval &Confirmer::eval_scope(const IndexBits &scope,
                                                  std::uint32_t exclude) {
  ScopeKey key{scope.canonical_words(), exclude};
  if (auto it = scope_memo_.find(key); it != scope_memo_.end()) {
    return *it->second;
  }

  auto ev = std::make_unique<ScopeEval>();

  std::vector<std::uint32_t> members;  // transactions in the scope
  std::vector<std::uint32_t> scope_acks;
  scope.for_each_set([&](std::uint32_t idx) {
    switch (store_.entry(idx).kind) {
      case MessageKind::Transaction:
        members.push_back(idx);
        break;
      case MessageKind::Ack:
        scope_acks.push_back(idx);
        break;
      default:
        break;
    }
  });
  std::sort(members.begin(), members.end(), [&](std::uint32_t a, std::uint32_t b) {
    const auto &ea = store_.entry(a);
    const auto &eb = store_.entry(b);
    if (ea.depth != eb.depth) return ea.depth < eb.depth;
    return ea.id < eb.id;
  });

  std::map<OutputRef, std::pair<Money, PublicKey>> active;
  StakeMap stakes;
  if (scope.test(0)) {
    ev->confirmed.set(0);
    for_each_output_of(store_, 0,
                       [&](const OutputRef &ref, const Output &out,
                           const PublicKey &delegate) {
                         active[ref] = {out.value, delegate};
                         stakes.stakes[delegate] += out.value;
                       });
  }
  ev->trajectory.push_back(stakes);

  bool progress = true;
  while (progress) {
    progress = false;
    for (std::uint32_t u : members) {
      if (u == exclude || ev->confirmed.test(u)) continue;
      if (!producers_in(u, ev->confirmed)) continue;
      if (!search_in_scope(u, ev->confirmed, scope_acks)) continue;

      ev->confirmed.set(u);
      ev->join_order.push_back(u);
      for_each_input_of(store_, u,
                        [&](const OutputRef &ref, const ResolvedOutput &) {
                          auto it = active.find(ref);
                          if (it == active.end()) return;
                          stakes.stakes[it->second.second] -= it->second.first;
                          active.erase(it);
                        });
      for_each_output_of(store_, u,
                         [&](const OutputRef &ref, const Output &out,
                             const PublicKey &delegate) {
                           active[ref] = {out.value, delegate};
                           stakes.stakes[delegate] += out.value;
                         });
      ev->trajectory.push_back(stakes);
      progress = true;
      break;  // restart: the least eligible member (by depth, id) joins first
    }
  }

  auto [it, inserted] = scope_memo_.emplace(std::move(key), std::move(ev));
  return *it->second;
}

std::optional<Confirmer::Judgement> Confirmer::judge_store_level(
    std::uint32_t subject, const std::vector<std::uint32_t> &acks) {
  if (acks.empty()) return std::nullopt;
  IndexBits evidence_past;
  for (std::uint32_t a : acks) evidence_past |= store_.entry(a).past;
  const ScopeEval &ev = eval_scope(evidence_past, subject);
  if (!producers_in(subject, ev.confirmed)) return std::nullopt;
  if (has_direct_sharer(subject, evidence_past)) return std::nullopt;
  std::set<PublicKey> signers =
      signing_validators(store_, acks, store_.entry(subject).id);
  if (signers.empty()) return std::nullopt;

  const StakeMap &final_state = ev.trajectory.back();
  Judgement j;
  for (const PublicKey &v : signers) j.signer_stakes.stakes[v] = final_state.of(v);
  j.signed_stake = j.signer_stakes.total();
  j.stake_state = static_cast<std::uint32_t>(ev.trajectory.size() - 1);
  if (!threshold_met(j.signed_stake, store_.total_money())) return std::nullopt;
  return j;
}

CertSearchResult Confirmer::find_certificate(const MessageId &tx) {
  advance();
  const DagStore::Entry *e = store_.find(tx);
  if (!e || e->kind != MessageKind::Transaction) {
    return CertSearchResult{CertStatus::NotFound, std::nullopt, false};
  }
  return find_certificate_inner(e->index);
}

CertSearchResult Confirmer::find_certificate_inner(std::uint32_t tx_idx) {
  const DagStore::Entry *e = &store_.entry(tx_idx);
  const MessageId tx = e->id;

  if (auto it = certs_.find(tx); it != certs_.end()) {
    return CertSearchResult{CertStatus::Found, it->second, false};
  }

  FailStamp now{store_.ack_count(), confirmed_ids_.size(), false};
  if (auto it = fail_cache_.find(tx); it != fail_cache_.end()) {
    if (it->second.acks == now.acks && it->second.confirmed == now.confirmed) {
      CertSearchResult r;
      r.status = it->second.unresolved ? CertStatus::Unresolved : CertStatus::NotFound;
      if (r.status == CertStatus::NotFound) {
        r.permanently_unconfirmable = conflicts_confirmed(e->index);
      }
      return r;
    }
  }

  std::uint64_t judged = 0;
  auto judge = [&](const std::vector<std::uint32_t> &acks)
      -> std::optional<Judgement> {
    ++judged;
    return judge_store_level(e->index, acks);
  };
  auto found = [&](const std::vector<std::uint32_t> &acks,
                   Judgement j) -> CertSearchResult {
    ConfirmationCertificate cert;
    cert.subject = tx;
    cert.acks = sorted_ids(store_, acks);
    cert.signer_stakes = std::move(j.signer_stakes);
    cert.signed_stake = j.signed_stake;
    cert.total_money = store_.total_money();
    cert.stake_state = j.stake_state;
    auto [it, inserted] = certs_.emplace(tx, std::move(cert));
    fail_cache_.erase(tx);
    return CertSearchResult{CertStatus::Found, it->second, false};
  };
  auto fail = [&](bool unresolved) -> CertSearchResult {
    now.unresolved = unresolved;
    fail_cache_[tx] = now;
    CertSearchResult r;
    r.status = unresolved ? CertStatus::Unresolved : CertStatus::NotFound;
    if (!unresolved) r.permanently_unconfirmable = conflicts_confirmed(e->index);
    return r;
  };

  const auto *signing_pool = store_.signers_of(tx);
  if (!signing_pool || signing_pool->empty()) return fail(false);
  auto signing_groups = clean_acks_by_validator(e->index, *signing_pool);
  if (signing_groups.empty()) return fail(false);

  // Phase 1a.
  std::vector<std::uint32_t> candidate;
  for (const auto &[v, list] : signing_groups) candidate.push_back(list.front());
  if (auto j = judge(candidate)) return found(candidate, std::move(*j));

  // Phase 1b: context acks from non-contributing validators.
  std::vector<std::uint32_t> every_ack;
  for (const auto &[v, list] : store_.acks_by_validator()) {
    every_ack.insert(every_ack.end(), list.begin(), list.end());
  }
  auto context_groups = clean_acks_by_validator(e->index, every_ack);
  std::vector<std::uint32_t> extended = candidate;
  for (const auto &[v, list] : context_groups) {
    if (signing_groups.count(v) != 0) continue;
    extended.push_back(list.back());
  }
  if (extended.size() != candidate.size()) {
    if (auto j = judge(extended)) return found(extended, std::move(*j));
  }

  // Phase 1c: every clean admitted ack.
  std::vector<std::uint32_t> all_clean;
  for (const auto &[v, list] : context_groups) {
    all_clean.insert(all_clean.end(), list.begin(), list.end());
  }
  if (all_clean.size() != extended.size()) {
    if (auto j = judge(all_clean)) return found(all_clean, std::move(*j));
  }

  // Phase 2: bounded exhaustive enumeration over the clean pool.
  std::vector<std::uint32_t> pool = all_clean;
  std::sort(pool.begin(), pool.end(), [&](std::uint32_t a, std::uint32_t b) {
    const Ack &aa = ack_of(store_, a);
    const Ack &ab = ack_of(store_, b);
    if (aa.validator_key != ab.validator_key) {
      return aa.validator_key < ab.validator_key;
    }
    return AckOrder{store_}(a, b);
  });
  if (pool.size() > cfg_.exhaustive_max_pool) return fail(true);

  std::uint64_t signing_mask = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (ack_signs(ack_of(store_, pool[i]), tx)) signing_mask |= 1ull << i;
  }
  if (signing_mask == 0) return fail(false);

  const std::size_t n = pool.size();
  for (std::size_t k = 1; k <= n; ++k) {
    // Gosper's hack: all n-bit masks with popcount k in increasing order.
    std::uint64_t mask = (1ull << k) - 1;
    const std::uint64_t limit = n == 64 ? ~0ull : (1ull << n);
    while (mask < limit) {
      if (mask & signing_mask) {
        if (judged >= cfg_.exhaustive_max_candidates) return fail(true);
        std::vector<std::uint32_t> subset;
        subset.reserve(k);
        for (std::size_t i = 0; i < n; ++i) {
          if (mask & (1ull << i)) subset.push_back(pool[i]);
        }
        if (auto j = judge(subset)) return found(subset, std::move(*j));
      }
      std::uint64_t c = mask & -mask;
      std::uint64_t r = mask + c;
      mask = (((r ^ mask) >> 2) / c) | r;
    }
  }
  return fail(false);
}

bool Confirmer::conflicts_confirmed(std::uint32_t tx_idx) {
  const MessageId &id = store_.entry(tx_idx).id;
  for (const MessageId &c : confirmed_ids_) {
    if (c == id) continue;
    if (store_.conflicts(id, c)) return true;
  }
  return false;
}

void Confirmer::advance() {
  if (advanced_version_ == store_.version()) return;
  advanced_version_ = store_.version();

  std::vector<std::uint32_t> txs;
  for (std::uint32_t i = 0; i < store_.size(); ++i) {
    if (store_.entry(i).kind == MessageKind::Transaction &&
        !confirmed_bits_.test(i)) {
      txs.push_back(i);
    }
  }
  std::sort(txs.begin(), txs.end(), [&](std::uint32_t a, std::uint32_t b) {
    const auto &ea = store_.entry(a);
    const auto &eb = store_.entry(b);
    if (ea.depth != eb.depth) return ea.depth < eb.depth;
    return ea.id < eb.id;
  });

  bool progress = true;
  while (progress) {
    progress = false;
    for (std::uint32_t u : txs) {
      if (confirmed_bits_.test(u)) continue;
      if (!producers_in(u, confirmed_bits_)) continue;
      CertSearchResult r = find_certificate_inner(u);
      if (r.status == CertStatus::Found) {
        confirmed_bits_.set(u);
        confirmed_ids_.insert(store_.entry(u).id);
        progress = true;
      }
    }
  }

  for (std::uint32_t i = 1; i < store_.size(); ++i) {
    const auto &e = store_.entry(i);
    if (e.kind != MessageKind::Checkpoint) continue;
    if (checkpoint_certs_.count(e.id) != 0) continue;
    CertSearchResult r = confirm_checkpoint_inner(i);
    if (r.status == CertStatus::Found) {
      checkpoint_certs_.emplace(e.id, *r.cert);
    }
  }
}

const std::set<MessageId> &Confirmer::confirmed() {
  advance();
  return confirmed_ids_;
}

bool Confirmer::is_confirmed(const MessageId &id) {
  advance();
  return confirmed_ids_.count(id) != 0;
}

const ConfirmationCertificate *Confirmer::certificate_of(const MessageId &id) {
  advance();
  auto it = certs_.find(id);
  if (it != certs_.end()) return &it->second;
  auto cit = checkpoint_certs_.find(id);
  if (cit != checkpoint_certs_.end()) return &cit->second;
  return nullptr;
}

const std::map<MessageId, ConfirmationCertificate> &Confirmer::confirmed_checkpoints() {
  advance();
  return checkpoint_certs_;
}

CertSearchResult Confirmer::confirm_checkpoint(const MessageId &checkpoint_id) {
  advance();
  const DagStore::Entry *e = store_.find(checkpoint_id);
  if (!e || e->kind != MessageKind::Checkpoint) {
    return CertSearchResult{CertStatus::NotFound, std::nullopt, false};
  }
  if (e->index == 0) {
    // Root checkpoint: trusted by construction of the store.
    ConfirmationCertificate cert;
    cert.subject = checkpoint_id;
    cert.signed_stake = store_.total_money();
    cert.total_money = store_.total_money();
    return CertSearchResult{CertStatus::Found, cert, false};
  }
  if (auto it = checkpoint_certs_.find(checkpoint_id); it != checkpoint_certs_.end()) {
    return CertSearchResult{CertStatus::Found, it->second, false};
  }
  CertSearchResult r = confirm_checkpoint_inner(e->index);
  if (r.status == CertStatus::Found) {
    checkpoint_certs_.emplace(checkpoint_id, *r.cert);
  }
  return r;
}

CertSearchResult Confirmer::confirm_checkpoint_inner(std::uint32_t cp_idx) {
  const MessageId &id = store_.entry(cp_idx).id;
  if (auto it = checkpoint_fail_cache_.find(id);
      it != checkpoint_fail_cache_.end() && it->second == store_.ack_count()) {
    return CertSearchResult{CertStatus::NotFound, std::nullopt, false};
  }
  auto fail = [&]() {
    checkpoint_fail_cache_[id] = store_.ack_count();
    return CertSearchResult{CertStatus::NotFound, std::nullopt, false};
  };

  const auto *signing_pool = store_.signers_of(id);
  if (!signing_pool || signing_pool->empty()) return fail();

  // Earliest signing ack per validator; checkpoints have no inputs, so every
  // signing ack is usable and more signers only help.
  std::map<PublicKey, std::uint32_t> chosen;
  AckOrder order{store_};
  for (std::uint32_t a : *signing_pool) {
    const PublicKey &v = ack_of(store_, a).validator_key;
    auto it = chosen.find(v);
    if (it == chosen.end() || order(a, it->second)) {
      chosen[v] = a;
    }
  }
  std::vector<std::uint32_t> acks;
  std::set<PublicKey> signers;
  for (const auto &[v, a] : chosen) {
    acks.push_back(a);
    signers.insert(v);
  }

  const ScopeEval &ev = eval_scope(store_.entry(cp_idx).past, kNoExclude);
  for (std::size_t k = 0; k < ev.trajectory.size(); ++k) {
    const StakeMap &state = ev.trajectory[k];
    StakeMap signer_stakes;
    for (const PublicKey &v : signers) signer_stakes.stakes[v] = state.of(v);
    Money sum = signer_stakes.total();
    if (threshold_met(sum, store_.total_money())) {
      ConfirmationCertificate cert;
      cert.subject = id;
      cert.acks = sorted_ids(store_, acks);
      cert.signer_stakes = std::move(signer_stakes);
      cert.signed_stake = sum;
      cert.total_money = store_.total_money();
      cert.stake_state = static_cast<std::uint32_t>(k);
      checkpoint_fail_cache_.erase(id);
      return CertSearchResult{CertStatus::Found, std::move(cert), false};
    }
  }
  return fail();
}

bool Confirmer::verify_certificate(const ConfirmationCertificate &cert) {
  const DagStore::Entry *subject = store_.find(cert.subject);
  if (!subject) return false;
  if (cert.total_money != store_.total_money()) return false;

  if (subject->index == 0) {
    // Root: trusted, certified by fiat with no acks.
    return cert.acks.empty() && cert.signer_stakes.stakes.empty() &&
           cert.signed_stake == store_.total_money();
  }

  if (!std::is_sorted(cert.acks.begin(), cert.acks.end()) ||
      std::adjacent_find(cert.acks.begin(), cert.acks.end()) != cert.acks.end()) {
    return false;
  }
  std::vector<std::uint32_t> acks;
  for (const MessageId &aid : cert.acks) {
    const DagStore::Entry *ae = store_.find(aid);
    if (!ae || ae->kind != MessageKind::Ack) return false;
    acks.push_back(ae->index);
  }

  if (subject->kind == MessageKind::Transaction) {
    auto j = judge_store_level(subject->index, acks);
    if (!j) return false;
    return j->signer_stakes == cert.signer_stakes &&
           j->signed_stake == cert.signed_stake &&
           j->stake_state == cert.stake_state;
  }

  if (subject->kind == MessageKind::Checkpoint) {
    std::set<PublicKey> signers = signing_validators(store_, acks, cert.subject);
    if (signers.empty()) return false;
    const ScopeEval &ev = eval_scope(subject->past, kNoExclude);
    if (cert.stake_state >= ev.trajectory.size()) return false;
    const StakeMap &state = ev.trajectory[cert.stake_state];
    StakeMap signer_stakes;
    for (const PublicKey &v : signers) signer_stakes.stakes[v] = state.of(v);
    Money sum = signer_stakes.total();
    return signer_stakes == cert.signer_stakes && sum == cert.signed_stake &&
           threshold_met(sum, store_.total_money());
  }
  return false;
}

StakeMap Confirmer::delegated_stake(const std::vector<MessageId> &acks,
                                    std::optional<MessageId> exclude) {
  IndexBits scope = store_.past_bits(acks);
  std::uint32_t excl = kNoExclude;
  if (exclude) {
    auto idx = store_.index_of(*exclude);
    if (idx) excl = *idx;
  }
  const ScopeEval &ev = eval_scope(scope, excl);
  return ev.trajectory.back();
}

Confirmer::FrontierEval Confirmer::eval_frontier(
    const std::vector<MessageId> &acks) {
  IndexBits scope = store_.past_bits(acks);
  const ScopeEval &ev = eval_scope(scope, kNoExclude);
  FrontierEval out;
  ev.confirmed.for_each_set(
      [&](std::uint32_t i) { out.confirmed.insert(store_.entry(i).id); });
  out.final_stakes = ev.trajectory.back();
  return out;
}

StakeBounds Confirmer::stake_bounds(const MessageId &tx, unsigned partitions) {
  advance();
  StakeBounds bounds;
  const DagStore::Entry *subject = store_.find(tx);
  if (!subject || subject->kind != MessageKind::Transaction) return bounds;
  if (partitions == 0 || (partitions & (partitions - 1)) != 0 || partitions > 256) {
    partitions = 1;
  }

  const auto *signing = store_.signers_of(tx);
  if (!signing || signing->empty()) return bounds;
  std::set<PublicKey> signers;
  for (std::uint32_t a : *signing) signers.insert(ack_of(store_, a).validator_key);

  // First confirmed spender per output, for conflict blocking.
  std::map<OutputRef, std::uint32_t> confirmed_spender;
  for (const auto &[ref, spenders] : store_.all_spenders()) {
    for (std::uint32_t s : spenders) {
      if (confirmed_bits_.test(s)) {
        confirmed_spender.emplace(ref, s);
        break;
      }
    }
  }

  // Pending = unconfirmed, not the subject, and not blocked by a conflict
  // with a confirmed transaction anywhere in its dependency closure.
  IndexBits pending;
  for (std::uint32_t i = 0; i < store_.size(); ++i) {
    const auto &e = store_.entry(i);
    if (e.kind != MessageKind::Transaction) continue;
    if (i == subject->index || confirmed_bits_.test(i)) continue;
    bool blocked = false;
    e.dep.for_each_set([&](std::uint32_t u) {
      if (blocked) return;
      if (store_.entry(u).kind != MessageKind::Transaction) return;
      for_each_input_of(store_, u,
                        [&](const OutputRef &ref, const ResolvedOutput &) {
                          auto it = confirmed_spender.find(ref);
                          if (it != confirmed_spender.end() && it->second != u) {
                            blocked = true;
                          }
                        });
    });
    if (!blocked) pending.set(i);
  }

  const unsigned shift_bits = [&] {
    unsigned b = 0;
    for (unsigned p = partitions; p > 1; p >>= 1) ++b;
    return b;
  }();

  struct PartitionSums {
    std::map<PublicKey, Money> exact, lower, upper;
  };
  std::vector<PartitionSums> sums(partitions);

  auto worker = [&](unsigned p) {
    PartitionSums &out = sums[p];
    for (const auto &[ref, ro] : store_.all_outputs()) {
      unsigned part = partitions == 1
                          ? 0
                          : static_cast<unsigned>(ro.output.owner_key.bytes[0]) >>
                                (8 - shift_bits);
      if (part != p) continue;
      const PublicKey &v = ro.validator_key;
      if (signers.count(v) == 0) continue;
      if (!confirmed_bits_.test(ro.producer_index)) {
        if (pending.test(ro.producer_index)) out.upper[v] += ro.output.value;
        continue;
      }
      bool confirmed_spent = false;
      bool pending_spent = false;
      if (const auto *spenders = store_.spenders_of(ref)) {
        for (std::uint32_t s : *spenders) {
          if (confirmed_bits_.test(s)) confirmed_spent = true;
          if (pending.test(s)) pending_spent = true;
        }
      }
      if (confirmed_spent) continue;
      out.exact[v] += ro.output.value;
      out.upper[v] += ro.output.value;
      if (!pending_spent) out.lower[v] += ro.output.value;
    }
  };

  if (partitions == 1) {
    worker(0);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(partitions);
    for (unsigned p = 0; p < partitions; ++p) threads.emplace_back(worker, p);
    for (std::thread &t : threads) t.join();
  }

  for (unsigned p = 0; p < partitions; ++p) {
    for (const auto &[v, m] : sums[p].exact) bounds.exact += m;
    for (const auto &[v, m] : sums[p].lower) bounds.lower += m;
    for (const auto &[v, m] : sums[p].upper) bounds.upper += m;
  }
  return bounds;
}

StakeMap delegated_stake(const std::vector<MessageId> &acks, const DagStore &store,
                         std::optional<MessageId> exclude) {
  Confirmer c(store);
  return c.delegated_stake(acks, exclude);
}

std::set<MessageId> confirmed_set(const DagStore &store) {
  Confirmer c(store);
  return c.confirmed();
}

CertSearchResult find_certificate(const MessageId &tx, const DagStore &store) {
  Confirmer c(store);
  return c.find_certificate(tx);
}

bool verify_certificate(const ConfirmationCertificate &cert, const DagStore &store) {
  Confirmer c(store);
  return c.verify_certificate(cert);
}

StakeBounds stake_bounds(const MessageId &tx, const DagStore &store,
                         unsigned partitions) {
  Confirmer c(store);
  return c.stake_bounds(tx, partitions);
}

namespace {
constexpr char kCertMagic[4] = {'A', 'C', 'T', '1'};
}

Bytes encode_certificate(const ConfirmationCertificate &cert) {
  Bytes out;
  append_raw(out, ByteView(reinterpret_cast<const std::uint8_t *>(kCertMagic),
                           sizeof kCertMagic));
  append_raw(out, ByteView(cert.subject.bytes.data(), cert.subject.bytes.size()));
  append_u32(out, static_cast<std::uint32_t>(cert.acks.size()));
  for (const MessageId &a : cert.acks) {
    append_raw(out, ByteView(a.bytes.data(), a.bytes.size()));
  }
  append_u32(out, static_cast<std::uint32_t>(cert.signer_stakes.stakes.size()));
  for (const auto &[pk, m] : cert.signer_stakes.stakes) {
    append_raw(out, ByteView(pk.bytes.data(), pk.bytes.size()));
    append_u64(out, m);
  }
  append_u64(out, cert.signed_stake);
  append_u64(out, cert.total_money);
  append_u32(out, cert.stake_state);
  return out;
}

std::optional<ConfirmationCertificate> decode_certificate(ByteView data,
                                                          DecodeError *err) {
  auto fail = [&](const char *why) -> std::optional<ConfirmationCertificate> {
    if (err != nullptr) err->reason = why;
    return std::nullopt;
  };
  ByteReader r(data);
  std::optional<ByteView> magic = r.read_raw(sizeof kCertMagic);
  if (!magic ||
      !std::equal(magic->begin(), magic->end(),
                  reinterpret_cast<const std::uint8_t *>(kCertMagic))) {
    return fail("bad certificate magic");
  }
  ConfirmationCertificate cert;
  auto read_digest = [&](Digest &d) {
    std::optional<ByteView> raw = r.read_raw(d.bytes.size());
    if (!raw) return false;
    std::copy(raw->begin(), raw->end(), d.bytes.begin());
    return true;
  };
  if (!read_digest(cert.subject)) return fail("truncated subject");
  std::optional<std::uint32_t> n = r.read_u32();
  if (!n) return fail("truncated ack count");
  for (std::uint32_t i = 0; i < *n; ++i) {
    MessageId id;
    if (!read_digest(id)) return fail("truncated ack id");
    cert.acks.push_back(id);
  }
  std::optional<std::uint32_t> ns = r.read_u32();
  if (!ns) return fail("truncated stake count");
  for (std::uint32_t i = 0; i < *ns; ++i) {
    PublicKey pk;
    std::optional<ByteView> raw = r.read_raw(pk.bytes.size());
    std::optional<std::uint64_t> m = raw ? r.read_u64() : std::nullopt;
    if (!raw || !m) return fail("truncated stake entry");
    std::copy(raw->begin(), raw->end(), pk.bytes.begin());
    if (!cert.signer_stakes.stakes.emplace(pk, *m).second) {
      return fail("duplicate stake key");
    }
  }
  std::optional<std::uint64_t> signed_stake = r.read_u64();
  std::optional<std::uint64_t> total = r.read_u64();
  std::optional<std::uint32_t> state = r.read_u32();
  if (!signed_stake || !total || !state) return fail("truncated sums");
  if (!r.at_end()) return fail("trailing bytes");
  cert.signed_stake = *signed_stake;
  cert.total_money = *total;
  cert.stake_state = *state;
  return cert;
}

}  // namespace ackdag
