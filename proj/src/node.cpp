#include "ackdag/node.hpp"

#include <algorithm>
#include <stdexcept>

#include "ackdag/codec.hpp"

namespace ackdag {

std::vector<MessageId> latest_ack_frontier(const DagStore &store) {
  std::vector<MessageId> out;
  for (const auto &[validator, acks] : store.acks_by_validator()) {
    const DagStore::Entry *best = nullptr;
    for (std::uint32_t idx : acks) {
      const DagStore::Entry &e = store.entry(idx);
      if (!best || e.ack_chain_depth > best->ack_chain_depth ||
          (e.ack_chain_depth == best->ack_chain_depth && e.id > best->id)) {
        best = &e;
      }
    }
    if (best) out.push_back(best->id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Node::Node(std::string name, const Genesis &g,
           std::optional<KeyPair> validator_keys)
    : name_(std::move(name)),
      store_(DagStore::from_genesis(g)),
      confirmer_(store_) {
  if (validator_keys) validator_.emplace(*validator_keys);
}

Node::Node(std::string name, const Checkpoint &cp,
           const ConfirmationCertificate &cert,
           const std::vector<Message> &messages,
           std::optional<KeyPair> validator_keys)
    : name_(std::move(name)),
      store_(bootstrap(cp, cert, messages)),
      confirmer_(store_) {
  if (validator_keys) validator_.emplace(*validator_keys);
  // Catch up on what the bootstrap batch already admitted; network actions
  // wait until the node is on a World, so only the validator log fills here.
  if (validator_) {
    // The joiner builds on the summary: acks carry the root checkpoint.
    validator_->adopt_checkpoint(store_.root_id(), {});
    adopted_checkpoints_.insert(store_.root_id());
    for (const MessageId &id : store_.admitted_ids()) {
      const DagStore::Entry *e = store_.find(id);
      if (e->kind == MessageKind::Transaction) {
        validator_->on_transaction(id, std::get<Transaction>(e->msg));
      }
    }
  }
}

void Node::on_deliver(World &world, const Message &msg) {
  IngestResult r = store_.ingest(msg);
  if (r.status == IngestStatus::Rejected || r.admitted.empty()) return;
  process_admitted(world, r.admitted);
}

MessageId Node::submit(World &world, const Message &msg) {
  IngestResult r = store_.ingest(msg);
  if (r.status != IngestStatus::Admitted) {
    throw std::invalid_argument("submitted message not admissible: " +
                                r.reason);
  }
  world.broadcast(name_, msg);
  process_admitted(world, r.admitted);
  return id_of(msg);
}

MessageId Node::create_checkpoint(World &world, const KeyPair &creator) {
  return create_checkpoint(world, creator, latest_ack_frontier(store_));
}

MessageId Node::create_checkpoint(World &world, const KeyPair &creator,
                                  std::vector<MessageId> frontier) {
  Checkpoint cp = make_checkpoint(confirmer_, std::move(frontier), creator);
  Message m{cp};
  IngestResult r = store_.ingest(m);
  world.broadcast(name_, m);
  if (!r.admitted.empty()) process_admitted(world, r.admitted);
  return id_of(m);
}

void Node::process_admitted(World &world, const std::vector<MessageId> &ids) {
  if (!validator_) return;
  std::vector<Message> rebroadcast;
  for (const MessageId &id : ids) {
    const DagStore::Entry *e = store_.find(id);
    if (e->kind == MessageKind::Transaction) {
      validator_->on_transaction(id, std::get<Transaction>(e->msg));
    } else if (e->kind == MessageKind::Checkpoint) {
      if (adopted_checkpoints_.count(id) != 0) continue;
      const Checkpoint &cp = std::get<Checkpoint>(e->msg);
      if (!checkpoint_is_accurate(confirmer_, cp)) {
        refused_checkpoints_.push_back(id);
        continue;
      }
      // Collect the bodies the summary does not account for before the
      // adoption drains them into the outbox.
      std::set<MessageId> summarized = summarized_ids(confirmer_, cp);
      for (const MessageId &sid : validator_->signed_log()) {
        if (summarized.count(sid) != 0) continue;
        if (const DagStore::Entry *se = store_.find(sid)) {
          rebroadcast.push_back(se->msg);
        }
      }
      validator_->queue_checkpoint(id);
      validator_->adopt_checkpoint(id, summarized);
      adopted_checkpoints_.insert(id);
    }
  }
  if (std::optional<Ack> a = validator_->emit_ack()) {
    Message am{*a};
    store_.ingest(am);
    world.broadcast(name_, am);
    for (const Message &b : rebroadcast) world.broadcast(name_, b);
  }
}

}  // namespace ackdag
