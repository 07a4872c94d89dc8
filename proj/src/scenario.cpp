#include "ackdag/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "ackdag/adversary.hpp"
#include "ackdag/checkpoint.hpp"
#include "ackdag/codec.hpp"
#include "ackdag/hash.hpp"
#include "ackdag/node.hpp"

namespace ackdag {

namespace {

std::uint64_t name_seed(const std::string &name) {
  Bytes b(name.begin(), name.end());
  Digest d = sha256(b);
  std::uint64_t seed = 0;
  for (int i = 0; i < 8; ++i) seed |= std::uint64_t{d.bytes[i]} << (8 * i);
  return seed;
}

std::uint64_t parse_u64(const Scenario *, std::size_t line,
                        const std::string &tok, const char *what) {
  try {
    std::size_t used = 0;
    std::uint64_t v = std::stoull(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception &) {
    throw ScenarioError(line, std::string("expected a number for ") + what +
                                  ", got '" + tok + "'");
  }
}

}  // namespace

const char *tx_status_name(TxStatus s) {
  switch (s) {
    case TxStatus::Confirmed: return "Confirmed";
    case TxStatus::Unconfirmed: return "Unconfirmed";
    case TxStatus::Unresolved: return "Unresolved";
  }
  return "?";
}

int RunReport::exit_code() const {
  if (!safety_ok) return 3;
  if (!failures.empty()) return 1;
  return 0;
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

Scenario Scenario::parse(const std::string &text) {
  Scenario s;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  bool have_genesis = false;
  std::set<std::string> coin_names;
  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) {
      raw.resize(hash);
    }
    std::istringstream ls(raw);
    Directive d{line_no, {}};
    for (std::string tok; ls >> tok;) d.tokens.push_back(tok);
    if (d.tokens.empty()) continue;
    const std::string &verb = d.tokens[0];
    auto need = [&](std::size_t n) {
      if (d.tokens.size() < n) {
        throw ScenarioError(line_no, "'" + verb + "' needs at least " +
                                         std::to_string(n - 1) + " arguments");
      }
    };
    if (verb == "scenario") {
      need(2);
      s.name_ = d.tokens[1];
    } else if (verb == "policy") {
      need(2);
      s.override_policy(d.tokens[1]);
    } else if (verb == "seed") {
      need(2);
      s.seed_ = parse_u64(&s, line_no, d.tokens[1], "seed");
    } else if (verb == "horizon") {
      need(2);
      s.horizon_ = parse_u64(&s, line_no, d.tokens[1], "horizon");
    } else if (verb == "delay") {
      need(3);
      s.delays_.push_back(
          DelayRule{parse_u64(&s, line_no, d.tokens[1], "delay seq"),
                    parse_u64(&s, line_no, d.tokens[2], "delay amount")});
    } else if (verb == "total") {
      need(2);
      s.declared_total_ = parse_u64(&s, line_no, d.tokens[1], "total");
    } else if (verb == "fee") {
      need(4);
      s.fee_.base_fee = parse_u64(&s, line_no, d.tokens[1], "base fee");
      s.fee_.per_input = parse_u64(&s, line_no, d.tokens[2], "per-input fee");
      s.fee_.per_output = parse_u64(&s, line_no, d.tokens[3], "per-output fee");
      if (d.tokens.size() >= 6) {
        s.fee_.alpha_num = parse_u64(&s, line_no, d.tokens[4], "alpha num");
        s.fee_.alpha_den = parse_u64(&s, line_no, d.tokens[5], "alpha den");
      }
      if (d.tokens.size() >= 8) {
        s.fee_.theta_num = parse_u64(&s, line_no, d.tokens[6], "theta num");
        s.fee_.theta_den = parse_u64(&s, line_no, d.tokens[7], "theta den");
      }
      if (s.fee_.alpha_den == 0 || s.fee_.theta_den == 0) {
        throw ScenarioError(line_no, "fee denominators must be nonzero");
      }
    } else if (verb == "report-node") {
      need(2);
      s.report_node_ = d.tokens[1];
    } else if (verb == "genesis" || verb == "validator" ||
               verb == "observer" || verb == "adversary" || verb == "control") {
      if (verb == "genesis") {
        need(4);
        have_genesis = true;
      } else {
        need(2);
      }
      s.cast_.push_back(std::move(d));
    } else if (verb == "submit" || verb == "send" || verb == "withhold" ||
               verb == "release" || verb == "ack" || verb == "checkpoint" ||
               verb == "bootstrap" || verb == "join" || verb == "leave" ||
               verb == "step" || verb == "run" || verb == "expect" ||
               verb == "expect-at" || verb == "expect-hop" ||
               verb == "expect-byzantine" || verb == "expect-signers") {
      s.timeline_.push_back(std::move(d));
    } else {
      throw ScenarioError(line_no, "unknown directive '" + verb + "'");
    }
  }
  if (!have_genesis) {
    throw ScenarioError(line_no, "scenario has no genesis outputs");
  }
  return s;
}

Scenario Scenario::parse_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError(0, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void Scenario::override_seed(std::uint64_t seed) { seed_ = seed; }
void Scenario::override_horizon(std::uint64_t horizon) { horizon_ = horizon; }

void Scenario::override_policy(const std::string &policy) {
  if (policy == "fifo") {
    policy_ = SchedulePolicy::Fifo;
  } else if (policy == "random") {
    policy_ = SchedulePolicy::SeededRandom;
  } else if (policy == "delay") {
    policy_ = SchedulePolicy::ScriptedDelay;
  } else {
    throw ScenarioError(0, "unknown policy '" + policy +
                               "' (fifo|random|delay)");
  }
  policy_name_ = policy;
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

namespace {

struct CoinInfo {
  OutputRef ref;
  Money value = 0;
  std::string owner;  // key name
};

// Keyword-split: "spend a b make c:2 delegate k to r1" ->
// {spend:[a,b], make:[c:2], delegate:[k], to:[r1]}.
std::map<std::string, std::vector<std::string>> split_clauses(
    const std::vector<std::string> &tokens, std::size_t start,
    const std::set<std::string> &keywords, std::size_t line) {
  std::map<std::string, std::vector<std::string>> out;
  std::string current;
  for (std::size_t i = start; i < tokens.size(); ++i) {
    if (keywords.count(tokens[i]) != 0) {
      current = tokens[i];
      if (!out.emplace(current, std::vector<std::string>{}).second) {
        throw ScenarioError(line, "duplicate clause '" + current + "'");
      }
    } else if (current.empty()) {
      throw ScenarioError(line, "unexpected token '" + tokens[i] + "'");
    } else {
      out[current].push_back(tokens[i]);
    }
  }
  return out;
}

struct Exec {
  const FeePolicy &fee;
  std::map<std::string, KeyPair> keys;
  std::map<PublicKey, std::string> key_names;
  std::map<std::string, CoinInfo> coins;

  const KeyPair &key(const std::string &name) {
    auto it = keys.find(name);
    if (it != keys.end()) return it->second;
    KeyPair kp = test_key_scheme().keygen(name_seed(name));
    key_names.emplace(kp.pk, name);
    return keys.emplace(name, kp).first->second;
  }
  PublicKey pk(const std::string &name) { return key(name).pk; }
  std::string name_of(const PublicKey &k) const {
    auto it = key_names.find(k);
    return it == key_names.end() ? k.short_hex() : it->second;
  }
};

enum class NodeKind : std::uint8_t { Validator, Observer, Adversary };

struct CastEntry {
  NodeKind kind = NodeKind::Observer;
  bool late = false;
};

struct CraftedTx {
  std::string name;
  Transaction tx;
  MessageId id;
  std::size_t line = 0;
};

struct Expectation {
  std::size_t line = 0;
  std::vector<std::string> tokens;  // original directive
};

}  // namespace

RunReport Scenario::run() const {
  Exec ex{fee_, {}, {}, {}};

  // ---- cast ----
  Genesis genesis;
  std::vector<std::pair<std::string, CastEntry>> cast_order;
  std::map<std::string, CastEntry> cast;
  std::set<PublicKey> controlled;
  for (const Directive &d : cast_) {
    const std::string &verb = d.tokens[0];
    if (verb == "genesis") {
      const std::string &coin = d.tokens[1];
      Money value = parse_u64(this, d.line, d.tokens[2], "genesis value");
      if (value == 0) throw ScenarioError(d.line, "genesis outputs are >= 1");
      if (ex.coins.count(coin) != 0) {
        throw ScenarioError(d.line, "duplicate coin '" + coin + "'");
      }
      genesis.outputs.push_back(Output{value, ex.pk(coin)});
      genesis.validator_keys.push_back(ex.pk(d.tokens[3]));
      ex.coins[coin] = CoinInfo{{}, value, coin};  // ref filled below
    } else if (verb == "control") {
      for (std::size_t i = 1; i < d.tokens.size(); ++i) {
        controlled.insert(ex.pk(d.tokens[i]));
      }
    } else {
      CastEntry e;
      e.kind = verb == "validator"  ? NodeKind::Validator
               : verb == "observer" ? NodeKind::Observer
                                    : NodeKind::Adversary;
      e.late = d.tokens.size() > 2 && d.tokens[2] == "late";
      if (!cast.emplace(d.tokens[1], e).second) {
        throw ScenarioError(d.line, "duplicate agent '" + d.tokens[1] + "'");
      }
      cast_order.push_back({d.tokens[1], e});
    }
  }
  MessageId genesis_id = id_of(Message{genesis});
  {
    // Coin refs follow genesis output order, which is cast-file order.
    std::uint32_t idx = 0;
    for (const Directive &d : cast_) {
      if (d.tokens[0] != "genesis") continue;
      ex.coins[d.tokens[1]].ref = OutputRef{genesis_id, idx++};
    }
  }
  Money total = 0;
  for (const Output &o : genesis.outputs) total += o.value;
  if (declared_total_ && *declared_total_ != total) {
    throw ScenarioError(0, "genesis sums to " + std::to_string(total) +
                               ", declared total " +
                               std::to_string(*declared_total_));
  }

  // ---- generation: craft every scripted message, charging the budget ----
  DagStore reference = DagStore::from_genesis(genesis);
  std::optional<AdversaryBudget> budget_slot;
  try {
    budget_slot.emplace(controlled, genesis);
  } catch (const BudgetViolation &v) {
    throw ScenarioError(0, std::string("adversary budget: ") + v.what());
  }
  AdversaryBudget &budget = *budget_slot;
  std::map<std::string, CraftedTx> txs;
  std::vector<std::string> tx_order;
  std::map<std::string, std::pair<Ack, MessageId>> acks;
  const std::set<std::string> tx_clauses{"spend", "make", "delegate",
                                         "to", "until"};
  const std::set<std::string> ack_clauses{"by", "sign", "prev", "to"};

  auto require_agent = [&](const std::string &name, std::size_t line) {
    if (cast.count(name) == 0) {
      throw ScenarioError(line, "unknown agent '" + name + "'");
    }
  };

  for (const Directive &d : timeline_) {
    const std::string &verb = d.tokens[0];
    if (verb == "submit" || verb == "send" || verb == "withhold") {
      if (d.tokens.size() < 3) {
        throw ScenarioError(d.line, "'" + verb + "' needs agent and name");
      }
      require_agent(d.tokens[1], d.line);
      const std::string &name = d.tokens[2];
      if (txs.count(name) != 0) {
        throw ScenarioError(d.line, "duplicate transaction '" + name + "'");
      }
      auto clauses = split_clauses(d.tokens, 3, tx_clauses, d.line);
      if (clauses["spend"].empty() || clauses["make"].empty() ||
          clauses["delegate"].size() != 1) {
        throw ScenarioError(
            d.line, "need 'spend C..', 'make C:V..' and 'delegate KEY'");
      }
      Transaction t;
      std::vector<std::string> owners;
      for (const std::string &cn : clauses["spend"]) {
        auto it = ex.coins.find(cn);
        if (it == ex.coins.end()) {
          throw ScenarioError(d.line, "unknown coin '" + cn + "'");
        }
        t.inputs.push_back(it->second.ref);
        owners.push_back(it->second.owner);
      }
      std::vector<std::pair<std::string, Money>> makes;
      for (const std::string &mk : clauses["make"]) {
        auto colon = mk.find(':');
        if (colon == std::string::npos || colon + 1 >= mk.size()) {
          throw ScenarioError(d.line, "make wants COIN:VALUE, got '" + mk +
                                          "'");
        }
        std::string cn = mk.substr(0, colon);
        Money v = parse_u64(this, d.line, mk.substr(colon + 1), "make value");
        if (ex.coins.count(cn) != 0) {
          throw ScenarioError(d.line, "duplicate coin '" + cn + "'");
        }
        makes.push_back({cn, v});
        t.outputs.push_back(Output{v, ex.pk(cn)});
      }
      t.validator_key = ex.pk(clauses["delegate"][0]);
      Bytes payload = transaction_signing_payload(t);
      for (const std::string &owner : owners) {
        t.signatures.push_back(
            test_key_scheme().sign(ex.key(owner).sk, payload));
      }
      MessageId tid = id_of(Message{t});
      for (std::size_t i = 0; i < makes.size(); ++i) {
        ex.coins[makes[i].first] = CoinInfo{
            OutputRef{tid, static_cast<std::uint32_t>(i)}, makes[i].second,
            makes[i].first};
      }
      try {
        budget.apply(t, BudgetEvent::Issued, reference);
      } catch (const BudgetViolation &v) {
        throw ScenarioError(d.line, std::string("adversary budget: ") +
                                        v.what());
      }
      reference.ingest(Message{t});
      txs.emplace(name, CraftedTx{name, t, tid, d.line});
      tx_order.push_back(name);
    } else if (verb == "ack") {
      if (d.tokens.size() < 3) {
        throw ScenarioError(d.line, "'ack' needs agent and name");
      }
      require_agent(d.tokens[1], d.line);
      const std::string &name = d.tokens[2];
      if (acks.count(name) != 0) {
        throw ScenarioError(d.line, "duplicate ack '" + name + "'");
      }
      auto clauses = split_clauses(d.tokens, 3, ack_clauses, d.line);
      if (clauses["by"].size() != 1 || clauses["sign"].empty()) {
        throw ScenarioError(d.line, "need 'by KEY' and 'sign TX..'");
      }
      std::vector<MessageId> signs;
      for (const std::string &tn : clauses["sign"]) {
        auto it = txs.find(tn);
        if (it == txs.end()) {
          throw ScenarioError(d.line, "unknown transaction '" + tn + "'");
        }
        signs.push_back(it->second.id);
      }
      std::optional<MessageId> prev;
      if (auto p = clauses.find("prev"); p != clauses.end()) {
        if (p->second.size() != 1) {
          throw ScenarioError(d.line, "prev wants one ack name");
        }
        auto it = acks.find(p->second[0]);
        if (it == acks.end()) {
          throw ScenarioError(d.line, "unknown ack '" + p->second[0] + "'");
        }
        prev = it->second.second;
      }
      Ack a = craft_ack(ex.key(clauses["by"][0]), std::move(signs), prev);
      MessageId aid = id_of(Message{a});
      reference.ingest(Message{a});
      acks.emplace(name, std::make_pair(std::move(a), aid));
    }
  }

  // ---- world ----
  World world(policy_, seed_, delays_);
  std::map<std::string, std::unique_ptr<Node>> nodes;
  std::vector<std::string> honest_order;
  std::set<std::string> joined;
  for (const auto &[name, entry] : cast_order) {
    std::optional<KeyPair> vk;
    if (entry.kind == NodeKind::Validator) vk = ex.key(name);
    nodes.emplace(name, std::make_unique<Node>(name, genesis, vk));
    if (entry.kind != NodeKind::Adversary) honest_order.push_back(name);
    if (!entry.late) {
      world.join(*nodes[name]);
      joined.insert(name);
    }
  }
  auto node_of = [&](const std::string &name, std::size_t line) -> Node & {
    auto it = nodes.find(name);
    if (it == nodes.end()) {
      throw ScenarioError(line, "unknown agent '" + name + "'");
    }
    return *it->second;
  };
  auto check_recipients = [&](const std::vector<std::string> &rs,
                              std::size_t line) {
    for (const std::string &r : rs) {
      if (nodes.count(r) == 0) {
        throw ScenarioError(line, "unknown recipient '" + r + "'");
      }
    }
  };

  // Hop bookkeeping: a transaction's hop is taken from the delivery after
  // which every joined honest node reports it confirmed.
  std::map<MessageId, std::string> watch;
  std::map<std::string, std::uint64_t> hops;
  auto after_step = [&]() {
    for (auto it = watch.begin(); it != watch.end();) {
      bool everywhere = true;
      for (const std::string &hn : honest_order) {
        if (joined.count(hn) == 0) continue;
        if (!nodes[hn]->confirmer().is_confirmed(it->first)) {
          everywhere = false;
          break;
        }
      }
      if (everywhere) {
        hops[it->second] = world.last_hop();
        it = watch.erase(it);
      } else {
        ++it;
      }
    }
  };
  bool hit_horizon = false;
  auto run_world = [&](std::uint64_t until_step) {
    while (world.steps() < until_step && world.step()) after_step();
    if (world.steps() >= until_step && world.pending_count() > 0) {
      hit_horizon = true;
    }
  };

  // ---- timeline ----
  std::map<std::string, std::pair<Message, std::uint64_t>> pocket;
  std::map<std::string, std::pair<MessageId, std::string>> checkpoints;
  std::vector<Expectation> expectations;

  for (const Directive &d : timeline_) {
    const std::string &verb = d.tokens[0];
    if (verb == "submit") {
      const CraftedTx &ct = txs.at(d.tokens[2]);
      node_of(d.tokens[1], d.line).submit(world, Message{ct.tx});
      watch.emplace(ct.id, ct.name);
    } else if (verb == "send") {
      const CraftedTx &ct = txs.at(d.tokens[2]);
      auto clauses = split_clauses(d.tokens, 3, tx_clauses, d.line);
      if (clauses.count("to") == 0 || clauses["to"].empty()) {
        throw ScenarioError(d.line, "'send' needs 'to R..'");
      }
      check_recipients(clauses["to"], d.line);
      node_of(d.tokens[1], d.line);
      world.send_to(d.tokens[1], Message{ct.tx}, clauses["to"]);
      watch.emplace(ct.id, ct.name);
    } else if (verb == "withhold") {
      const CraftedTx &ct = txs.at(d.tokens[2]);
      auto clauses = split_clauses(d.tokens, 3, tx_clauses, d.line);
      std::uint64_t until = 0;
      if (auto u = clauses.find("until"); u != clauses.end()) {
        if (u->second.size() != 1) {
          throw ScenarioError(d.line, "until wants one step number");
        }
        until = parse_u64(this, d.line, u->second[0], "until");
      }
      pocket[ct.name] = {Message{ct.tx}, until};
      watch.emplace(ct.id, ct.name);
    } else if (verb == "release") {
      if (d.tokens.size() < 3) {
        throw ScenarioError(d.line, "'release' needs agent and name");
      }
      auto it = pocket.find(d.tokens[2]);
      if (it == pocket.end()) {
        throw ScenarioError(d.line,
                            "'" + d.tokens[2] + "' was never withheld");
      }
      node_of(d.tokens[1], d.line);
      auto clauses = split_clauses(d.tokens, 3, std::set<std::string>{"to"},
                                   d.line);
      run_world(std::min<std::uint64_t>(it->second.second, horizon_));
      if (clauses.count("to") != 0 && !clauses["to"].empty()) {
        check_recipients(clauses["to"], d.line);
        world.send_to(d.tokens[1], it->second.first, clauses["to"]);
      } else {
        world.broadcast(d.tokens[1], it->second.first);
      }
      pocket.erase(it);
    } else if (verb == "ack") {
      const auto &[a, aid] = acks.at(d.tokens[2]);
      (void)aid;
      auto clauses = split_clauses(d.tokens, 3, ack_clauses, d.line);
      node_of(d.tokens[1], d.line);
      if (clauses.count("to") != 0 && !clauses["to"].empty()) {
        check_recipients(clauses["to"], d.line);
        world.send_to(d.tokens[1], Message{a}, clauses["to"]);
      } else {
        world.broadcast(d.tokens[1], Message{a});
      }
    } else if (verb == "checkpoint") {
      if (d.tokens.size() < 3) {
        throw ScenarioError(d.line, "'checkpoint' needs node and name");
      }
      Node &n = node_of(d.tokens[1], d.line);
      std::string creator = d.tokens[1];
      if (d.tokens.size() >= 5 && d.tokens[3] == "creator") {
        creator = d.tokens[4];
      }
      if (checkpoints.count(d.tokens[2]) != 0) {
        throw ScenarioError(d.line, "duplicate checkpoint '" + d.tokens[2] +
                                        "'");
      }
      MessageId cp = n.create_checkpoint(world, ex.key(creator));
      checkpoints.emplace(d.tokens[2], std::make_pair(cp, d.tokens[1]));
    } else if (verb == "bootstrap") {
      if (d.tokens.size() < 4 || d.tokens[2] != "from") {
        throw ScenarioError(d.line, "'bootstrap NAME from CP [validator K]'");
      }
      auto cit = checkpoints.find(d.tokens[3]);
      if (cit == checkpoints.end()) {
        throw ScenarioError(d.line, "unknown checkpoint '" + d.tokens[3] +
                                        "'");
      }
      if (nodes.count(d.tokens[1]) != 0) {
        throw ScenarioError(d.line, "duplicate agent '" + d.tokens[1] + "'");
      }
      Node &creator = node_of(cit->second.second, d.line);
      const MessageId &cp_id = cit->second.first;
      const Checkpoint &cp =
          std::get<Checkpoint>(creator.store().find(cp_id)->msg);
      CertSearchResult cr = creator.confirmer().confirm_checkpoint(cp_id);
      if (cr.status != CertStatus::Found) {
        throw ScenarioError(d.line, "checkpoint '" + d.tokens[3] +
                                        "' is not confirmed at its creator");
      }
      std::set<MessageId> summarized =
          summarized_ids(creator.confirmer(), cp);
      std::vector<Message> package;
      for (const MessageId &aid : cr.cert->acks) {
        const DagStore::Entry *ae = creator.store().find(aid);
        package.push_back(ae->msg);
        for (const MessageId &sid : std::get<Ack>(ae->msg).signed_ids) {
          if (sid == cp_id || summarized.count(sid) != 0) continue;
          const DagStore::Entry *se = creator.store().find(sid);
          if (se != nullptr && se->kind == MessageKind::Transaction) {
            package.push_back(se->msg);
          }
        }
      }
      std::optional<KeyPair> vk;
      if (d.tokens.size() >= 6 && d.tokens[4] == "validator") {
        vk = ex.key(d.tokens[5]);
      }
      nodes.emplace(d.tokens[1], std::make_unique<Node>(d.tokens[1], cp,
                                                        *cr.cert, package,
                                                        vk));
      honest_order.push_back(d.tokens[1]);
      world.join(*nodes[d.tokens[1]]);
      joined.insert(d.tokens[1]);
    } else if (verb == "join") {
      Node &n = node_of(d.tokens[1], d.line);
      bool replay = d.tokens.size() > 2 && d.tokens[2] == "replay";
      world.join(n, replay);
      joined.insert(d.tokens[1]);
    } else if (verb == "leave") {
      node_of(d.tokens[1], d.line);
      world.leave(d.tokens[1]);
      joined.erase(d.tokens[1]);
    } else if (verb == "step") {
      std::uint64_t n = parse_u64(this, d.line, d.tokens[1], "step count");
      for (std::uint64_t i = 0; i < n && world.steps() < horizon_; ++i) {
        if (!world.step()) break;
        after_step();
      }
    } else if (verb == "run") {
      run_world(horizon_);
    } else {
      expectations.push_back(Expectation{d.line, d.tokens});
    }
  }

  // ---- evaluation ----
  RunReport rep;
  rep.name = name_;
  rep.policy = policy_name_;
  rep.seed = seed_;
  rep.horizon = horizon_;
  rep.steps = world.steps();
  rep.deadlocked = hit_horizon;
  rep.event_log = world.event_log_text();

  std::string report_name;
  if (report_node_) {
    if (nodes.count(*report_node_) == 0) {
      throw ScenarioError(0, "unknown report-node '" + *report_node_ + "'");
    }
    report_name = *report_node_;
  } else {
    for (const auto &[name, entry] : cast_order) {
      if (entry.kind == NodeKind::Observer) {
        report_name = name;
        break;
      }
    }
    if (report_name.empty()) {
      for (const auto &[name, entry] : cast_order) {
        if (entry.kind == NodeKind::Validator) {
          report_name = name;
          break;
        }
      }
    }
    if (report_name.empty()) {
      throw ScenarioError(0, "no honest node to report from");
    }
  }
  Node &report_node = *nodes[report_name];

  FeeLedger ledger;
  std::map<std::string, TxStatus> statuses;
  for (const std::string &tn : tx_order) {
    const CraftedTx &ct = txs.at(tn);
    TxReport tr;
    tr.name = tn;
    tr.id = ct.id;
    for (const Output &o : ct.tx.outputs) tr.value += o.value;
    tr.fee = fee_of(fee_, ct.tx);
    CertSearchResult r = report_node.confirmer().find_certificate(ct.id);
    if (r.status == CertStatus::Found) {
      tr.status = TxStatus::Confirmed;
      tr.cert = r.cert;
      ledger.accrue(fee_, ct.tx, *r.cert);
      rep.certificates.push_back({tn, *r.cert});
      rep.confirmed_value += tr.value;
      budget.apply(ct.tx, BudgetEvent::Confirmed, report_node.store());
    } else {
      tr.status = r.status == CertStatus::Unresolved ? TxStatus::Unresolved
                                                     : TxStatus::Unconfirmed;
      rep.unconfirmed_value += tr.value;
    }
    if (auto h = hops.find(tn); h != hops.end()) tr.hop = h->second;
    statuses[tn] = tr.status;
    rep.txs.push_back(std::move(tr));
  }
  rep.charged = ledger.total_charged();
  rep.accrued = ledger.total_accrued();
  rep.destroyed = rep.charged - rep.accrued;
  for (const auto &[pk, m] : ledger.accrued()) {
    rep.fee_shares.push_back({ex.name_of(pk), m});
  }
  std::sort(rep.fee_shares.begin(), rep.fee_shares.end());

  // Safety: at every honest node, no two confirmed transactions share an
  // input. A violation is an internal invariant failure, never an
  // expectation failure.
  for (const std::string &hn : honest_order) {
    const DagStore &s = nodes[hn]->store();
    std::map<OutputRef, MessageId> spent;
    for (const MessageId &cid : nodes[hn]->confirmer().confirmed()) {
      const DagStore::Entry *e = s.find(cid);
      if (e == nullptr || e->kind != MessageKind::Transaction) continue;
      for (const OutputRef &ref : std::get<Transaction>(e->msg).inputs) {
        auto [it, fresh] = spent.emplace(ref, cid);
        if (!fresh && it->second != cid) {
          rep.safety_ok = false;
        }
      }
    }
  }

  // ---- expectations ----
  rep.expectations = expectations.size();
  auto fail = [&](std::size_t line, const std::string &msg) {
    rep.failures.push_back("line " + std::to_string(line) + ": " + msg);
  };
  auto status_at = [&](Node &n, const std::string &tn) -> TxStatus {
    CertSearchResult r = n.confirmer().find_certificate(txs.at(tn).id);
    if (r.status == CertStatus::Found) return TxStatus::Confirmed;
    return r.status == CertStatus::Unresolved ? TxStatus::Unresolved
                                              : TxStatus::Unconfirmed;
  };
  auto parse_status = [&](const std::string &s,
                          std::size_t line) -> TxStatus {
    if (s == "confirmed") return TxStatus::Confirmed;
    if (s == "unconfirmed") return TxStatus::Unconfirmed;
    if (s == "unresolved") return TxStatus::Unresolved;
    throw ScenarioError(line, "unknown status '" + s + "'");
  };
  for (const Expectation &e : expectations) {
    const std::string &verb = e.tokens[0];
    try {
      if (verb == "expect") {
        if (e.tokens.size() != 3) {
          throw ScenarioError(e.line, "'expect TX STATUS'");
        }
        if (txs.count(e.tokens[1]) == 0) {
          throw ScenarioError(e.line, "unknown transaction '" + e.tokens[1] +
                                          "'");
        }
        TxStatus want = parse_status(e.tokens[2], e.line);
        TxStatus got = statuses.at(e.tokens[1]);
        if (got != want) {
          fail(e.line, e.tokens[1] + " is " + tx_status_name(got) +
                           ", expected " + tx_status_name(want));
        }
      } else if (verb == "expect-at") {
        if (e.tokens.size() != 4) {
          throw ScenarioError(e.line, "'expect-at NODE TX STATUS'");
        }
        Node &n = node_of(e.tokens[1], e.line);
        if (txs.count(e.tokens[2]) == 0) {
          throw ScenarioError(e.line, "unknown transaction '" + e.tokens[2] +
                                          "'");
        }
        TxStatus want = parse_status(e.tokens[3], e.line);
        TxStatus got = status_at(n, e.tokens[2]);
        if (got != want) {
          fail(e.line, e.tokens[2] + " at " + e.tokens[1] + " is " +
                           tx_status_name(got) + ", expected " +
                           tx_status_name(want));
        }
      } else if (verb == "expect-hop") {
        if (e.tokens.size() != 3) {
          throw ScenarioError(e.line, "'expect-hop TX N'");
        }
        std::uint64_t want = parse_u64(this, e.line, e.tokens[2], "hop");
        auto h = hops.find(e.tokens[1]);
        if (h == hops.end()) {
          fail(e.line, e.tokens[1] + " never confirmed everywhere; expected "
                           "hop " + std::to_string(want));
        } else if (h->second != want) {
          fail(e.line, e.tokens[1] + " confirmed at hop " +
                           std::to_string(h->second) + ", expected " +
                           std::to_string(want));
        }
      } else if (verb == "expect-byzantine") {
        if (e.tokens.size() != 2) {
          throw ScenarioError(e.line, "'expect-byzantine KEY'");
        }
        if (!report_node.store().is_byzantine(ex.pk(e.tokens[1]))) {
          fail(e.line, e.tokens[1] + " is not marked byzantine");
        }
      } else if (verb == "expect-signers") {
        if (e.tokens.size() < 3) {
          throw ScenarioError(e.line, "'expect-signers TX KEY..'");
        }
        if (txs.count(e.tokens[1]) == 0) {
          throw ScenarioError(e.line, "unknown transaction '" + e.tokens[1] +
                                          "'");
        }
        CertSearchResult r =
            report_node.confirmer().find_certificate(txs.at(e.tokens[1]).id);
        if (r.status != CertStatus::Found) {
          fail(e.line, e.tokens[1] + " has no certificate");
        } else {
          std::vector<std::string> got;
          for (const MessageId &aid : r.cert->acks) {
            const DagStore::Entry *ae = report_node.store().find(aid);
            got.push_back(
                ex.name_of(std::get<Ack>(ae->msg).validator_key));
          }
          std::sort(got.begin(), got.end());
          got.erase(std::unique(got.begin(), got.end()), got.end());
          std::vector<std::string> want(e.tokens.begin() + 2, e.tokens.end());
          std::sort(want.begin(), want.end());
          if (got != want) {
            std::string gs;
            for (const std::string &g : got) gs += (gs.empty() ? "" : ",") + g;
            std::string ws;
            for (const std::string &w : want) ws += (ws.empty() ? "" : ",") + w;
            fail(e.line, e.tokens[1] + " certificate acks by {" + gs +
                             "}, expected {" + ws + "}");
          }
        }
      }
    } catch (const ScenarioError &) {
      throw;  // configuration mistakes stay fatal
    }
  }

  return rep;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

std::string render_text(const RunReport &r) {
  std::ostringstream out;
  out << "scenario " << r.name << "\n";
  out << "policy " << r.policy << " seed " << r.seed << " horizon "
      << r.horizon << "\n";
  out << "steps " << r.steps << " deadlocked " << (r.deadlocked ? "yes" : "no")
      << "\n";
  for (const TxReport &t : r.txs) {
    out << "tx " << t.name << " " << t.id.short_hex() << " "
        << tx_status_name(t.status) << " hop ";
    if (t.hop) {
      out << *t.hop;
    } else {
      out << "-";
    }
    out << " value " << t.value << " fee " << t.fee << "\n";
  }
  out << "fees charged " << r.charged << " accrued " << r.accrued
      << " destroyed " << r.destroyed << "\n";
  for (const auto &[name, m] : r.fee_shares) {
    out << "share " << name << " " << m << "\n";
  }
  out << "reconcile confirmed " << r.confirmed_value << " unconfirmed "
      << r.unconfirmed_value << " total "
      << (r.confirmed_value + r.unconfirmed_value) << "\n";
  out << "safety " << (r.safety_ok ? "ok" : "VIOLATED") << "\n";
  for (const std::string &f : r.failures) out << "fail " << f << "\n";
  out << "expectations " << (r.expectations - r.failures.size()) << "/"
      << r.expectations << "\n";
  out << "verdict " << (r.exit_code() == 0 ? "PASS" : "FAIL") << "\n";
  return out.str();
}

std::string render_json(const RunReport &r) {
  nlohmann::ordered_json j;
  j["scenario"] = r.name;
  j["policy"] = r.policy;
  j["seed"] = r.seed;
  j["horizon"] = r.horizon;
  j["steps"] = r.steps;
  j["deadlocked"] = r.deadlocked;
  j["txs"] = nlohmann::ordered_json::array();
  for (const TxReport &t : r.txs) {
    nlohmann::ordered_json tj;
    tj["name"] = t.name;
    tj["id"] = t.id.hex();
    tj["status"] = tx_status_name(t.status);
    if (t.hop) {
      tj["hop"] = *t.hop;
    } else {
      tj["hop"] = nullptr;
    }
    tj["value"] = t.value;
    tj["fee"] = t.fee;
    if (t.cert) {
      nlohmann::ordered_json cj;
      cj["subject"] = t.cert->subject.hex();
      cj["acks"] = nlohmann::ordered_json::array();
      for (const MessageId &a : t.cert->acks) cj["acks"].push_back(a.hex());
      cj["stakes"] = nlohmann::ordered_json::object();
      for (const auto &[pk, m] : t.cert->signer_stakes.stakes) {
        cj["stakes"][pk.hex()] = m;
      }
      cj["signed_stake"] = t.cert->signed_stake;
      cj["total_money"] = t.cert->total_money;
      cj["stake_state"] = t.cert->stake_state;
      tj["certificate"] = std::move(cj);
    }
    j["txs"].push_back(std::move(tj));
  }
  j["fees"] = {{"charged", r.charged},
               {"accrued", r.accrued},
               {"destroyed", r.destroyed}};
  j["fees"]["shares"] = nlohmann::ordered_json::object();
  for (const auto &[name, m] : r.fee_shares) j["fees"]["shares"][name] = m;
  j["reconcile"] = {{"confirmed", r.confirmed_value},
                    {"unconfirmed", r.unconfirmed_value},
                    {"total", r.confirmed_value + r.unconfirmed_value}};
  j["safety"] = r.safety_ok;
  j["failures"] = r.failures;
  j["expectations"] = r.expectations;
  j["verdict"] = r.exit_code() == 0 ? "PASS" : "FAIL";
  return j.dump(2) + "\n";
}

}  // namespace ackdag
