#pragma once

// Hand-fixture builder for tests: constructs canonical messages through the
// real codec and key scheme while tracking coins and keys by short
// human-readable names ("p1", "v2"). Every helper returns a fully signed
// message; ids are computed through the production codec.

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "ackdag/codec.hpp"
#include "ackdag/dag.hpp"
#include "ackdag/keys.hpp"
#include "ackdag/messages.hpp"

namespace ackdag::test {

struct Coin {
  OutputRef ref;
  Money value = 0;
  std::string owner;  // key name
};

class Fixture {
 public:
  // Deterministic keypair per name; created on first use.
  const KeyPair &key(const std::string &name);
  PublicKey pk(const std::string &name) { return key(name).pk; }

  // Genesis from (owner, value, validator) triples. Registers one coin per
  // owner name.
  Genesis genesis(
      const std::vector<std::tuple<std::string, Money, std::string>> &outputs);

  // Transaction spending the named coins, producing (owner, value) outputs
  // delegated to `validator`. Inputs are signed by the coin owners.
  Transaction tx(const std::vector<std::string> &spends,
                 const std::vector<std::pair<std::string, Money>> &makes,
                 const std::string &validator);

  // Ack by `validator` over the given subjects (sorted internally).
  Ack ack(const std::string &validator, std::vector<MessageId> signs,
          std::optional<MessageId> prev = std::nullopt,
          std::optional<MessageId> checkpoint_ref = std::nullopt);

  // Checkpoint over the given frontier, summarising the named coins
  // (delegate taken from `delegates` by coin name) with the given stake
  // table. The commitment and signature are computed, not supplied.
  Checkpoint checkpoint(
      const std::string &creator, std::vector<MessageId> frontier,
      const std::vector<std::pair<std::string, std::string>> &summary_coins,
      const std::vector<std::pair<std::string, Money>> &stakes,
      Money total_money);

  const Coin &coin(const std::string &name) const;
  // Registers a coin produced outside the helpers (e.g. by a Wallet).
  void register_coin(const std::string &name, OutputRef ref, Money value,
                     const std::string &owner);

  MessageId id(const Message &m) const { return id_of(m); }

 private:
  std::map<std::string, KeyPair> keys_;
  std::map<std::string, Coin> coins_;
};

// Ingests and requires admission; returns the id. Aborts the test on
// rejection or buffering.
MessageId must_admit(DagStore &store, const Message &m);

}  // namespace ackdag::test
