#pragma once

// A full node on the simulated network: a message store, a confirmation
// engine, and optionally a validator role. Deliveries are ingested (with
// buffering for out-of-order arrival); each newly admitted transaction is
// put before the validator exactly once, and everything the validator
// decided during one activation leaves as a single ack, self-ingested and
// broadcast.
//
// Checkpoints are endorsed on accuracy: when an admitted checkpoint's body
// matches the node's own recomputation over the frontier, the validator's
// next ack signs it, carries it as checkpoint_ref, and re-lists signed
// transactions the summary does not account for. The bodies of re-listed
// transactions are re-broadcast alongside, so late joiners can resolve
// them. Inaccurate checkpoints are recorded and never endorsed.

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ackdag/agents.hpp"
#include "ackdag/checkpoint.hpp"
#include "ackdag/confirm.hpp"
#include "ackdag/dag.hpp"
#include "ackdag/netsim.hpp"

namespace ackdag {

// The deepest ack of every validator present in the store — the natural
// frontier to summarise behind.
std::vector<MessageId> latest_ack_frontier(const DagStore &store);

class Node : public Participant {
 public:
  // Fresh node from the genesis; pass keys to take on the validator role.
  Node(std::string name, const Genesis &g,
       std::optional<KeyPair> validator_keys = std::nullopt);
  // Joining node: verifies the certificate and starts from the summary.
  Node(std::string name, const Checkpoint &cp,
       const ConfirmationCertificate &cert,
       const std::vector<Message> &messages,
       std::optional<KeyPair> validator_keys = std::nullopt);

  Node(const Node &) = delete;
  Node &operator=(const Node &) = delete;

  const std::string &name() const override { return name_; }
  void on_deliver(World &world, const Message &msg) override;

  // Originate a message: ingest it locally (a validator also reacts to it,
  // e.g. signs a submitted transaction), then broadcast the body. Throws
  // std::invalid_argument if the local store cannot admit it outright.
  MessageId submit(World &world, const Message &msg);

  // Build, sign, self-ingest and broadcast a checkpoint over the given
  // frontier (default: the node's latest-ack frontier). The node reacts to
  // its own checkpoint as it would to a received one.
  MessageId create_checkpoint(World &world, const KeyPair &creator);
  MessageId create_checkpoint(World &world, const KeyPair &creator,
                              std::vector<MessageId> frontier);

  DagStore &store() { return store_; }
  const DagStore &store() const { return store_; }
  Confirmer &confirmer() { return confirmer_; }
  bool is_validator() const { return validator_.has_value(); }
  ValidatorState *validator() {
    return validator_ ? &*validator_ : nullptr;
  }
  const std::vector<MessageId> &refused_checkpoints() const {
    return refused_checkpoints_;
  }

 private:
  void process_admitted(World &world, const std::vector<MessageId> &ids);

  std::string name_;
  DagStore store_;
  Confirmer confirmer_;  // must outlive store_: declared after it
  std::optional<ValidatorState> validator_;
  std::set<MessageId> adopted_checkpoints_;
  std::vector<MessageId> refused_checkpoints_;
};

}  // namespace ackdag
