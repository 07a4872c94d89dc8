#include "support/fixture.hpp"

#include <algorithm>
#include <stdexcept>

#include "ackdag/hash.hpp"

namespace ackdag::test {

namespace {

std::uint64_t name_seed(const std::string &name) {
  Bytes b(name.begin(), name.end());
  Digest d = sha256(b);
  std::uint64_t seed = 0;
  for (int i = 0; i < 8; ++i) seed |= std::uint64_t{d.bytes[i]} << (8 * i);
  return seed;
}

}  // namespace

const KeyPair &Fixture::key(const std::string &name) {
  auto it = keys_.find(name);
  if (it != keys_.end()) return it->second;
  KeyPair kp = test_key_scheme().keygen(name_seed(name));
  return keys_.emplace(name, kp).first->second;
}

Genesis Fixture::genesis(
    const std::vector<std::tuple<std::string, Money, std::string>> &outputs) {
  Genesis g;
  for (const auto &[owner, value, validator] : outputs) {
    g.outputs.push_back(Output{value, pk(owner)});
    g.validator_keys.push_back(pk(validator));
  }
  MessageId gid = id_of(g);
  for (std::size_t i = 0; i < g.outputs.size(); ++i) {
    const auto &[owner, value, validator] = outputs[i];
    coins_[owner] = Coin{OutputRef{gid, static_cast<std::uint32_t>(i)}, value, owner};
  }
  return g;
}

Transaction Fixture::tx(const std::vector<std::string> &spends,
                        const std::vector<std::pair<std::string, Money>> &makes,
                        const std::string &validator) {
  Transaction t;
  for (const std::string &name : spends) t.inputs.push_back(coin(name).ref);
  for (const auto &[owner, value] : makes) t.outputs.push_back(Output{value, pk(owner)});
  t.validator_key = pk(validator);

  Bytes payload = transaction_signing_payload(t);
  for (const std::string &name : spends) {
    t.signatures.push_back(
        test_key_scheme().sign(key(coin(name).owner).sk, payload));
  }
  MessageId tid = id_of(t);
  for (std::size_t i = 0; i < makes.size(); ++i) {
    coins_[makes[i].first] =
        Coin{OutputRef{tid, static_cast<std::uint32_t>(i)}, makes[i].second,
             makes[i].first};
  }
  return t;
}

Ack Fixture::ack(const std::string &validator, std::vector<MessageId> signs,
                 std::optional<MessageId> prev,
                 std::optional<MessageId> checkpoint_ref) {
  Ack a;
  a.validator_key = pk(validator);
  a.prev_ack = prev;
  std::sort(signs.begin(), signs.end());
  signs.erase(std::unique(signs.begin(), signs.end()), signs.end());
  a.signed_ids = std::move(signs);
  a.checkpoint_ref = checkpoint_ref;
  a.signature = test_key_scheme().sign(key(validator).sk,
                                       ack_signing_payload(a));
  return a;
}

Checkpoint Fixture::checkpoint(
    const std::string &creator, std::vector<MessageId> frontier,
    const std::vector<std::pair<std::string, std::string>> &summary_coins,
    const std::vector<std::pair<std::string, Money>> &stakes, Money total_money) {
  Checkpoint c;
  std::sort(frontier.begin(), frontier.end());
  c.frontier = std::move(frontier);
  for (const auto &[coin_name, validator] : summary_coins) {
    const Coin &cn = coin(coin_name);
    c.summary.push_back(
        CheckpointEntry{cn.ref, Output{cn.value, pk(cn.owner)}, pk(validator)});
  }
  std::sort(c.summary.begin(), c.summary.end(),
            [](const CheckpointEntry &a, const CheckpointEntry &b) {
              return std::tuple(a.output.owner_key, a.origin.tx, a.origin.index) <
                     std::tuple(b.output.owner_key, b.origin.tx, b.origin.index);
            });
  for (const auto &[validator, stake] : stakes) {
    c.stakes.push_back(StakeEntry{pk(validator), stake});
  }
  std::sort(c.stakes.begin(), c.stakes.end(),
            [](const StakeEntry &a, const StakeEntry &b) {
              return a.validator_key < b.validator_key;
            });
  c.total_money = total_money;
  c.commitment = checkpoint_commitment(c);
  c.creator_key = pk(creator);
  c.signature = test_key_scheme().sign(key(creator).sk,
                                       checkpoint_signing_payload(c));
  return c;
}

const Coin &Fixture::coin(const std::string &name) const {
  auto it = coins_.find(name);
  if (it == coins_.end()) {
    throw std::out_of_range("fixture has no coin named " + name);
  }
  return it->second;
}

void Fixture::register_coin(const std::string &name, OutputRef ref, Money value,
                            const std::string &owner) {
  coins_[name] = Coin{ref, value, owner};
}

MessageId must_admit(DagStore &store, const Message &m) {
  IngestResult r = store.ingest(m);
  if (r.status != IngestStatus::Admitted) {
    std::string what = "fixture message not admitted: ";
    what += r.status == IngestStatus::Rejected ? ("rejected: " + r.reason)
                                               : "buffered";
    throw std::runtime_error(what);
  }
  return id_of(m);
}

}  // namespace ackdag::test
