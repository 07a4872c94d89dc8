#include "ackdag/adversary.hpp"

#include <algorithm>

#include "ackdag/codec.hpp"

namespace ackdag {

namespace {

bool budget_ok(Money x, Money total) {
  return static_cast<unsigned __int128>(x) * 3 <
         static_cast<unsigned __int128>(total);
}

}  // namespace

AdversaryBudget::AdversaryBudget(std::set<PublicKey> adversary_validators,
                                 const Genesis &g)
    : adversary_(std::move(adversary_validators)) {
  for (std::size_t i = 0; i < g.outputs.size(); ++i) {
    total_ += g.outputs[i].value;
    if (controls(g.validator_keys[i])) x0_ += g.outputs[i].value;
  }
  x_ = x0_;
  if (!budget_ok(x_, total_)) {
    throw BudgetViolation("genesis already delegates one third of the money " +
                          std::to_string(x_) + "/" + std::to_string(total_) +
                          " to the adversary");
  }
}

Money AdversaryBudget::adversary_sourced(const Transaction &tx,
                                         const DagStore &resolver) const {
  Money m = 0;
  for (const OutputRef &ref : tx.inputs) {
    std::optional<ResolvedOutput> ro = resolver.resolve(ref);
    if (ro && controls(ro->validator_key)) m += ro->output.value;
  }
  return m;
}

void AdversaryBudget::apply(const Transaction &tx, BudgetEvent event,
                            const DagStore &resolver) {
  MessageId tid = id_of(Message{tx});
  if (!applied_.insert({tid, event}).second) return;

  bool to_adversary = controls(tx.validator_key);
  if (event == BudgetEvent::Issued && to_adversary) {
    Money m_t = 0;
    for (const Output &o : tx.outputs) m_t += o.value;
    Money gained = m_t - adversary_sourced(tx, resolver);
    x_ += gained;
    log_.push_back({tid, event, true, gained, x_});
    if (!budget_ok(x_, total_)) {
      throw BudgetViolation("issuing " + tid.hex().substr(0, 8) +
                            " delegates " + std::to_string(x_) + "/" +
                            std::to_string(total_) + " to the adversary");
    }
  } else if (event == BudgetEvent::Confirmed && !to_adversary) {
    Money released = adversary_sourced(tx, resolver);
    if (released > x_) {
      throw BudgetViolation("budget underflow: releasing " +
                            std::to_string(released) + " from x=" +
                            std::to_string(x_));
    }
    x_ -= released;
    log_.push_back({tid, event, false, released, x_});
  }
  // Issued+honest-delegating and Confirmed+adversary-delegating move nothing.
}

namespace {

void send(World &world, const std::string &actor, const Message &msg,
          const std::vector<std::string> &to,
          std::vector<MessageId> &emitted) {
  if (to.empty()) {
    world.broadcast(actor, msg);
  } else {
    world.send_to(actor, msg, to);
  }
  emitted.push_back(id_of(msg));
}

struct Pocketed {
  Message msg;
  std::uint64_t until_step = 0;
};

}  // namespace

ScriptResult run_script(const AdversaryScript &script, World &world,
                        AdversaryBudget *budget, const DagStore *resolver) {
  if (budget != nullptr && resolver == nullptr) {
    throw std::invalid_argument("budget accounting requires a resolver store");
  }
  ScriptResult res;
  std::map<MessageId, Pocketed> pocket;
  for (const AdversaryAction &action : script.actions) {
    if (const auto *a = std::get_if<IssueDoubleSpend>(&action)) {
      if (budget) {
        budget->apply(a->first, BudgetEvent::Issued, *resolver);
        budget->apply(a->second, BudgetEvent::Issued, *resolver);
      }
      send(world, script.actor, Message{a->first}, a->first_to, res.emitted);
      send(world, script.actor, Message{a->second}, a->second_to, res.emitted);
    } else if (const auto *f = std::get_if<ForkAckChain>(&action)) {
      send(world, script.actor, Message{f->first}, f->first_to, res.emitted);
      send(world, script.actor, Message{f->second}, f->second_to, res.emitted);
    } else if (const auto *s = std::get_if<SignSelective>(&action)) {
      send(world, script.actor, Message{s->ack}, s->to, res.emitted);
    } else if (const auto *w = std::get_if<Withhold>(&action)) {
      if (budget) {
        if (const auto *t = std::get_if<Transaction>(&w->msg)) {
          budget->apply(*t, BudgetEvent::Issued, *resolver);
        }
      }
      pocket[id_of(w->msg)] = Pocketed{w->msg, w->until_step};
    } else if (const auto *r = std::get_if<ReleaseTo>(&action)) {
      auto it = pocket.find(r->msg);
      if (it == pocket.end()) {
        throw std::invalid_argument("release of a message never withheld");
      }
      while (world.steps() < it->second.until_step && world.step()) {
      }
      send(world, script.actor, it->second.msg, r->to, res.emitted);
      pocket.erase(it);
    }
  }
  return res;
}

AdversaryBudget precheck_script(const AdversaryScript &script,
                                AdversaryBudget budget, DagStore resolver) {
  for (const AdversaryAction &action : script.actions) {
    const Transaction *txs[2] = {nullptr, nullptr};
    if (const auto *a = std::get_if<IssueDoubleSpend>(&action)) {
      txs[0] = &a->first;
      txs[1] = &a->second;
    } else if (const auto *w = std::get_if<Withhold>(&action)) {
      txs[0] = std::get_if<Transaction>(&w->msg);
    }
    for (const Transaction *t : txs) {
      if (t == nullptr) continue;
      budget.apply(*t, BudgetEvent::Issued, resolver);
      // Best effort: later scripted transactions may spend this one.
      resolver.ingest(Message{*t});
    }
  }
  return budget;
}

Transaction craft_transfer(
    const std::vector<std::pair<OutputRef, KeyPair>> &inputs,
    const std::vector<Output> &outputs, const PublicKey &delegate) {
  Transaction t;
  for (const auto &[ref, keys] : inputs) t.inputs.push_back(ref);
  t.outputs = outputs;
  t.validator_key = delegate;
  Bytes payload = transaction_signing_payload(t);
  for (const auto &[ref, keys] : inputs) {
    t.signatures.push_back(test_key_scheme().sign(keys.sk, payload));
  }
  return t;
}

Ack craft_ack(const KeyPair &validator, std::vector<MessageId> signs,
              std::optional<MessageId> prev,
              std::optional<MessageId> checkpoint_ref) {
  Ack a;
  a.validator_key = validator.pk;
  a.prev_ack = std::move(prev);
  std::sort(signs.begin(), signs.end());
  signs.erase(std::unique(signs.begin(), signs.end()), signs.end());
  a.signed_ids = std::move(signs);
  a.checkpoint_ref = std::move(checkpoint_ref);
  a.signature = test_key_scheme().sign(validator.sk, ack_signing_payload(a));
  return a;
}

std::pair<Ack, Ack> forked_acks(const KeyPair &validator,
                                std::optional<MessageId> prev,
                                const MessageId &sign_first,
                                const MessageId &sign_second,
                                std::optional<MessageId> checkpoint_ref) {
  return {craft_ack(validator, {sign_first}, prev, checkpoint_ref),
          craft_ack(validator, {sign_second}, prev, checkpoint_ref)};
}

}  // namespace ackdag
