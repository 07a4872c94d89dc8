#include "ackdag/dag.hpp"

#include <algorithm>

namespace ackdag {

namespace {

unsigned __int128 wide_sum(unsigned __int128 acc, Money v) {
  return acc + static_cast<unsigned __int128>(v);
}

}  // namespace

DagStore DagStore::from_genesis(const Genesis &g, const KeyScheme &scheme) {
  Message m{g};
  VerifyResult vr = verify_message(m, scheme);
  if (!vr.ok) throw std::invalid_argument("genesis root: " + vr.reason);
  DagStore s;
  s.scheme_ = &scheme;
  unsigned __int128 total = 0;
  for (const Output &o : g.outputs) total = wide_sum(total, o.value);
  if (total > ~Money{0}) throw std::invalid_argument("genesis total overflows");
  s.total_money_ = static_cast<Money>(total);
  s.install_entry(m, id_of(m));
  return s;
}

DagStore DagStore::from_checkpoint(const Checkpoint &c, const KeyScheme &scheme) {
  Message m{c};
  VerifyResult vr = verify_message(m, scheme);
  if (!vr.ok) throw std::invalid_argument("checkpoint root: " + vr.reason);
  DagStore s;
  s.scheme_ = &scheme;
  s.total_money_ = c.total_money;
  s.install_entry(m, id_of(m));
  return s;
}

std::optional<std::uint32_t> DagStore::index_of(const MessageId &id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const DagStore::Entry *DagStore::find(const MessageId &id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return nullptr;
  return &entries_[it->second];
}

void DagStore::warn(const std::string &line) {
  if (warn_hook_) warn_hook_(line);
}

// Missing references with bootstrap waivers applied. An input reference is
// satisfied if its producing message is admitted or the exact output position
// is carried by a checkpoint-root summary. A missing prev_ack is waived when
// the ack names the checkpoint root it builds on.
namespace {
struct MissingCollector {
  const DagStore &store;
  std::set<MessageId> missing;

  void need(const MessageId &id) {
    if (!store.contains(id)) missing.insert(id);
  }
};
}  // namespace

IngestResult DagStore::ingest(const Message &m) {
  Bytes encoding = canonical_encode(m);
  MessageId id = sha256(encoding);

  if (auto it = index_.find(id); it != index_.end()) {
    if (encodings_.at(id) != encoding) {
      throw IdCollisionError("distinct encodings share id " + id.hex());
    }
    IngestResult r;
    r.status = IngestStatus::Admitted;  // idempotent re-ingest
    return r;
  }
  if (auto it = pending_.find(id); it != pending_.end()) {
    if (canonical_encode(it->second.msg) != encoding) {
      throw IdCollisionError("distinct encodings share id " + id.hex());
    }
    IngestResult r;
    r.status = IngestStatus::Buffered;
    r.missing.assign(it->second.missing.begin(), it->second.missing.end());
    return r;
  }

  VerifyResult vr = verify_message(m, *scheme_);
  if (!vr.ok) {
    IngestResult r;
    r.status = IngestStatus::Rejected;
    r.reason = vr.reason;
    return r;
  }
  if (kind_of(m) == MessageKind::Genesis) {
    IngestResult r;
    r.status = IngestStatus::Rejected;
    r.reason = "genesis is not the root of this store";
    return r;
  }

  return admit_or_buffer(std::move(m), id);
}

IngestResult DagStore::admit_or_buffer(Message m, MessageId id) {
  MissingCollector mc{*this, {}};
  if (const auto *tx = std::get_if<Transaction>(&m)) {
    for (const OutputRef &ref : tx->inputs) {
      if (outputs_.count(ref) != 0) continue;  // summary-resolved or admitted
      mc.need(ref.tx);
    }
  } else if (const auto *ack = std::get_if<Ack>(&m)) {
    if (ack->prev_ack) {
      bool waived = !contains(*ack->prev_ack) && root_is_checkpoint() &&
                    ack->checkpoint_ref && *ack->checkpoint_ref == root_id();
      if (!waived) mc.need(*ack->prev_ack);
    }
    for (const MessageId &sid : ack->signed_ids) mc.need(sid);
    if (ack->checkpoint_ref) mc.need(*ack->checkpoint_ref);
  } else if (const auto *cp = std::get_if<Checkpoint>(&m)) {
    for (const MessageId &fid : cp->frontier) mc.need(fid);
  }

  if (!mc.missing.empty()) {
    while (pending_.size() >= kPendingCap) {
      // Drop the oldest buffered message to bound memory under partitions or
      // hostile spam; late copies can be re-gossiped.
      while (!pending_order_.empty() && pending_.count(pending_order_.front()) == 0) {
        pending_order_.pop_front();
      }
      if (pending_order_.empty()) break;
      MessageId victim = pending_order_.front();
      pending_order_.pop_front();
      auto vit = pending_.find(victim);
      for (const MessageId &miss : vit->second.missing) {
        auto wit = waiters_.find(miss);
        if (wit != waiters_.end()) {
          std::erase(wit->second, victim);
          if (wit->second.empty()) waiters_.erase(wit);
        }
      }
      pending_.erase(vit);
      warn("pending buffer full; evicted oldest buffered message " +
           victim.short_hex());
    }
    Pending p;
    p.msg = std::move(m);
    p.id = id;
    p.missing = mc.missing;
    for (const MessageId &miss : p.missing) waiters_[miss].push_back(id);
    pending_.emplace(id, std::move(p));
    pending_order_.push_back(id);
    IngestResult r;
    r.status = IngestStatus::Buffered;
    r.missing.assign(mc.missing.begin(), mc.missing.end());
    return r;
  }

  std::string reason = admit_complete(m, id);
  if (!reason.empty()) {
    IngestResult r;
    r.status = IngestStatus::Rejected;
    r.reason = reason;
    return r;
  }
  IngestResult r;
  r.status = IngestStatus::Admitted;
  r.admitted.push_back(id);
  for (MessageId drained : drain_ready(id)) r.admitted.push_back(drained);
  return r;
}

std::string DagStore::admit_complete(const Message &m, const MessageId &id) {
  if (const auto *tx = std::get_if<Transaction>(&m)) {
    unsigned __int128 in_total = 0;
    Bytes payload = transaction_signing_payload(*tx);
    for (std::size_t i = 0; i < tx->inputs.size(); ++i) {
      auto ro = resolve(tx->inputs[i]);
      if (!ro) return "input does not resolve to an output";
      if (!scheme_->verify(ro->output.owner_key, payload, tx->signatures[i])) {
        return "input signature invalid";
      }
      in_total = wide_sum(in_total, ro->output.value);
    }
    unsigned __int128 out_total = 0;
    for (const Output &o : tx->outputs) {
      out_total = wide_sum(out_total, o.value);
      if (owner_index_.count(o.owner_key) != 0) return "owner key reuse";
    }
    if (in_total != out_total) return "value not conserved";
  } else if (const auto *ack = std::get_if<Ack>(&m)) {
    if (ack->prev_ack && contains(*ack->prev_ack)) {
      const Entry *prev = find(*ack->prev_ack);
      if (prev->kind != MessageKind::Ack) return "prev_ack is not an ack";
    }
    for (const MessageId &sid : ack->signed_ids) {
      const Entry *target = find(sid);
      if (target->kind != MessageKind::Transaction &&
          target->kind != MessageKind::Checkpoint) {
        return "ack signs a message that is not a transaction or checkpoint";
      }
    }
    if (ack->checkpoint_ref) {
      const Entry *cp = find(*ack->checkpoint_ref);
      if (cp->kind != MessageKind::Checkpoint) {
        return "checkpoint_ref is not a checkpoint";
      }
    }
  } else if (const auto *cp = std::get_if<Checkpoint>(&m)) {
    // Frontier entries may be acks, transactions, the root, or earlier
    // checkpoints; admission (checked by the missing collector) is the only
    // requirement, since the frontier exists to define a past.
    if (cp->total_money != total_money_) {
      return "checkpoint total_money does not match the supply";
    }
  }
  install_entry(m, id);
  return {};
}

void DagStore::install_entry(const Message &m, const MessageId &id) {
  Entry e;
  e.msg = m;
  e.id = id;
  e.kind = kind_of(m);
  e.index = static_cast<std::uint32_t>(entries_.size());
  e.past.set(e.index);

  auto absorb_ref = [&](const MessageId &ref) {
    const Entry *r = find(ref);
    if (!r) return;  // waived bootstrap reference
    e.past |= r->past;
    e.depth = std::max(e.depth, r->depth + 1);
  };

  if (const auto *g = std::get_if<Genesis>(&m)) {
    e.dep.set(e.index);
    for (std::size_t i = 0; i < g->outputs.size(); ++i) {
      OutputRef ref{id, static_cast<std::uint32_t>(i)};
      outputs_[ref] = ResolvedOutput{g->outputs[i], g->validator_keys[i], e.index, false};
      owner_index_[g->outputs[i].owner_key] = ref;
    }
  } else if (const auto *tx = std::get_if<Transaction>(&m)) {
    e.dep.set(e.index);
    for (const OutputRef &ref : tx->inputs) {
      const ResolvedOutput &ro = outputs_.at(ref);
      const Entry &producer = entries_[ro.producer_index];
      e.past |= producer.past;
      e.dep |= producer.dep;
      e.depth = std::max(e.depth, producer.depth + 1);
      spenders_[ref].push_back(e.index);
    }
    for (std::size_t i = 0; i < tx->outputs.size(); ++i) {
      OutputRef ref{id, static_cast<std::uint32_t>(i)};
      outputs_[ref] = ResolvedOutput{tx->outputs[i], tx->validator_key, e.index, false};
      owner_index_[tx->outputs[i].owner_key] = ref;
    }
  } else if (const auto *ack = std::get_if<Ack>(&m)) {
    if (ack->prev_ack && contains(*ack->prev_ack)) {
      absorb_ref(*ack->prev_ack);
      e.ack_chain_depth = find(*ack->prev_ack)->ack_chain_depth + 1;
    }
    for (const MessageId &sid : ack->signed_ids) absorb_ref(sid);
    if (ack->checkpoint_ref) absorb_ref(*ack->checkpoint_ref);

    const Entry *prev_entry =
        ack->prev_ack && contains(*ack->prev_ack) ? find(*ack->prev_ack) : nullptr;
    if (prev_entry) {
      const auto &prev_ack_msg = std::get<Ack>(prev_entry->msg);
      if (prev_ack_msg.validator_key != ack->validator_key) {
        byzantine_.insert(ack->validator_key);
      }
    }
    auto slot = std::make_pair(ack->validator_key, ack->prev_ack);
    auto [it, inserted] = chain_slots_.emplace(slot, id);
    if (!inserted) byzantine_.insert(ack->validator_key);
    acks_by_validator_[ack->validator_key].push_back(e.index);
    for (const MessageId &sid : ack->signed_ids) {
      signers_of_[sid].push_back(e.index);
    }
    ++ack_count_;
  } else if (const auto *cp = std::get_if<Checkpoint>(&m)) {
    if (entries_.empty()) {
      // Checkpoint root: the summary stands in for the pruned region.
      e.dep.set(e.index);
      for (const CheckpointEntry &entry : cp->summary) {
        outputs_[entry.origin] =
            ResolvedOutput{entry.output, entry.validator_key, e.index, true};
        owner_index_[entry.output.owner_key] = entry.origin;
      }
    } else {
      for (const MessageId &fid : cp->frontier) absorb_ref(fid);
    }
  }

  index_.emplace(id, e.index);
  admitted_ids_.push_back(id);
  entries_.push_back(std::move(e));
  if (encodings_.count(id) == 0) {
    encodings_.emplace(id, canonical_encode(m));
  }
}

std::vector<MessageId> DagStore::drain_ready(const MessageId &admitted) {
  std::vector<MessageId> out;
  std::vector<MessageId> queue{admitted};
  while (!queue.empty()) {
    MessageId cur = queue.front();
    queue.erase(queue.begin());
    auto wit = waiters_.find(cur);
    if (wit == waiters_.end()) continue;
    std::vector<MessageId> waiting = std::move(wit->second);
    waiters_.erase(wit);
    for (const MessageId &pid : waiting) {
      auto pit = pending_.find(pid);
      if (pit == pending_.end()) continue;
      pit->second.missing.erase(cur);
      if (!pit->second.missing.empty()) continue;
      Message msg = std::move(pit->second.msg);
      pending_.erase(pit);
      std::string reason = admit_complete(msg, pid);
      if (!reason.empty()) {
        warn("dropped buffered message " + pid.short_hex() + ": " + reason);
        continue;
      }
      out.push_back(pid);
      queue.push_back(pid);
    }
  }
  return out;
}

std::vector<MessageId> DagStore::past(const std::vector<MessageId> &ids) const {
  IndexBits bits = past_bits(ids);
  std::vector<MessageId> out;
  bits.for_each_set([&](std::uint32_t idx) { out.push_back(entries_[idx].id); });
  std::sort(out.begin(), out.end());
  return out;
}

IndexBits DagStore::past_bits(const std::vector<MessageId> &ids) const {
  IndexBits bits;
  for (const MessageId &id : ids) {
    const Entry *e = find(id);
    if (e) bits |= e->past;
  }
  return bits;
}

bool DagStore::depends(const MessageId &t1, const MessageId &t2) const {
  const Entry *e1 = find(t1);
  const Entry *e2 = find(t2);
  if (!e1 || !e2) return false;
  return e1->dep.test(e2->index);
}

bool DagStore::conflicts(const MessageId &t1, const MessageId &t2) const {
  const Entry *e1 = find(t1);
  const Entry *e2 = find(t2);
  if (!e1 || !e2 || e1->index == e2->index) return false;
  bool found = false;
  e1->dep.for_each_set([&](std::uint32_t u) {
    if (found) return;
    const Entry &ue = entries_[u];
    if (ue.kind != MessageKind::Transaction) return;
    for (const OutputRef &ref : std::get<Transaction>(ue.msg).inputs) {
      auto sit = spenders_.find(ref);
      if (sit == spenders_.end()) continue;
      for (std::uint32_t s : sit->second) {
        if (s != u && e2->dep.test(s)) {
          found = true;
          return;
        }
      }
    }
  });
  return found;
}

bool DagStore::spent_in(const OutputRef &ref, const std::set<MessageId> &scope) const {
  auto sit = spenders_.find(ref);
  if (sit == spenders_.end()) return false;
  for (std::uint32_t s : sit->second) {
    if (scope.count(entries_[s].id) != 0) return true;
  }
  return false;
}

std::optional<ResolvedOutput> DagStore::resolve(const OutputRef &ref) const {
  auto it = outputs_.find(ref);
  if (it == outputs_.end()) return std::nullopt;
  return it->second;
}

const std::vector<std::uint32_t> *DagStore::spenders_of(const OutputRef &ref) const {
  auto it = spenders_.find(ref);
  if (it == spenders_.end()) return nullptr;
  return &it->second;
}

const std::vector<std::uint32_t> *DagStore::acks_of(const PublicKey &validator) const {
  auto it = acks_by_validator_.find(validator);
  if (it == acks_by_validator_.end()) return nullptr;
  return &it->second;
}

const std::vector<std::uint32_t> *DagStore::signers_of(const MessageId &id) const {
  auto it = signers_of_.find(id);
  if (it == signers_of_.end()) return nullptr;
  return &it->second;
}

}  // namespace ackdag
