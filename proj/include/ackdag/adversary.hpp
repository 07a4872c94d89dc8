#pragma once

// Scripted Byzantine behaviour and the adversary-stake budget.
//
// Budget. The model assumes strictly less than one third of the money is
// delegated to adversary-controlled validators at all times (3·x < M). x
// starts at the genesis value delegated to adversary keys and moves by two
// rules, applied per transaction t with value m_t of which m_{t,A} is
// sourced from adversary-delegated outputs:
//   - t delegates to the adversary: x += m_t - m_{t,A} when t is ISSUED;
//   - t delegates to an honest validator: x -= m_{t,A} when t is CONFIRMED.
// Gains count early and losses count late, so the tracked x never
// understates the adversary; a trace that keeps 3·x < M is a valid scenario
// under every delivery schedule. The invariant is a model assumption, not a
// protocol mechanism: it is enforced when scenarios are generated, by
// throwing BudgetViolation, never during simulation.
//
// Scripts. An ordered action list executed inside the scheduler loop. Each
// action sends concrete pre-signed messages - possibly different ones to
// different recipients (equivocation), possibly late (withholding). The
// factories below build the standard equivocation artifacts: a conflicting
// transaction pair and a forked ack chain (two acks extending the same
// predecessor).

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ackdag/dag.hpp"
#include "ackdag/keys.hpp"
#include "ackdag/messages.hpp"
#include "ackdag/netsim.hpp"

namespace ackdag {

// A generated scenario stepped outside the model assumption; the scenario is
// invalid, not the protocol run.
class BudgetViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BudgetEvent : std::uint8_t { Issued, Confirmed };

struct BudgetChange {
  MessageId tx;
  BudgetEvent event = BudgetEvent::Issued;
  bool acquired = false;  // true: x += amount; false: x -= amount
  Money amount = 0;
  Money x_after = 0;
};

class AdversaryBudget {
 public:
  // x starts at the genesis value delegated to `adversary_validators`;
  // throws BudgetViolation if that already breaks 3·x < M.
  AdversaryBudget(std::set<PublicKey> adversary_validators, const Genesis &g);

  bool controls(const PublicKey &validator_key) const {
    return adversary_.count(validator_key) != 0;
  }
  Money x() const { return x_; }
  Money total_money() const { return total_; }

  // Applies the rule for (tx, event). `resolver` supplies input provenance;
  // inputs it cannot resolve count as honest-sourced (the direction that
  // overstates the adversary). Repeated (tx, event) pairs are no-ops, so the
  // caller may sweep a monotone confirmed set. Throws BudgetViolation when
  // the invariant breaks.
  void apply(const Transaction &tx, BudgetEvent event,
             const DagStore &resolver);

  // Effective rule applications in order; replaying them from x0 yields x().
  const std::vector<BudgetChange> &log() const { return log_; }
  Money initial_x() const { return x0_; }

 private:
  Money adversary_sourced(const Transaction &tx,
                          const DagStore &resolver) const;  // m_{t,A}

  std::set<PublicKey> adversary_;
  Money total_ = 0;
  Money x0_ = 0;
  Money x_ = 0;
  std::set<std::pair<MessageId, BudgetEvent>> applied_;
  std::vector<BudgetChange> log_;
};

// ---- script actions ----

// Send `first` and `second` - a pre-signed conflicting pair - to the named
// recipients (empty list = broadcast to everyone).
struct IssueDoubleSpend {
  Transaction first, second;
  std::vector<std::string> first_to, second_to;
};

// Two acks extending the same predecessor (or both chain starts), as a
// validator that "forgets" its own ack history; typically each signs one
// side of a conflicting pair.
struct ForkAckChain {
  Ack first, second;
  std::vector<std::string> first_to, second_to;
};

// An ack over a chosen transaction subset, sent to a chosen recipient
// subset.
struct SignSelective {
  Ack ack;
  std::vector<std::string> to;
};

// Keep a message in the pocket; it becomes releasable once the world clock
// reaches `until_step` (or the world has gone quiescent before then).
struct Withhold {
  Message msg;
  std::uint64_t until_step = 0;
};

// Send the withheld message with the given id to the named recipients
// (empty list = broadcast).
struct ReleaseTo {
  MessageId msg;
  std::vector<std::string> to;
};

using AdversaryAction = std::variant<IssueDoubleSpend, ForkAckChain,
                                     SignSelective, Withhold, ReleaseTo>;

struct AdversaryScript {
  std::string actor;  // sending participant; must be active in the world
  std::vector<AdversaryAction> actions;
};

struct ScriptResult {
  // Ids of messages the script put on the wire, in emission order.
  std::vector<MessageId> emitted;
};

// Executes the script against the world. Before a ReleaseTo, the world is
// stepped until the withheld message's until_step is reached or nothing is
// left to deliver. When `budget` is given, the Issued rule is applied (via
// `resolver`) to every scripted transaction the moment the adversary creates
// it - at IssueDoubleSpend and at Withhold - propagating BudgetViolation.
ScriptResult run_script(const AdversaryScript &script, World &world,
                        AdversaryBudget *budget = nullptr,
                        const DagStore *resolver = nullptr);

// Generation-time gate: applies the Issued rule for every transaction the
// script would emit, against copies of the budget and resolver, in script
// order. Throws BudgetViolation for an over-budget script; returns the
// post-script budget otherwise.
AdversaryBudget precheck_script(const AdversaryScript &script,
                                AdversaryBudget budget, DagStore resolver);

// ---- equivocation factories ----

// A transfer signed directly with the spent outputs' owner keys (the
// adversary does not run a wallet). Call twice with overlapping inputs to
// craft a conflicting pair.
Transaction craft_transfer(
    const std::vector<std::pair<OutputRef, KeyPair>> &inputs,
    const std::vector<Output> &outputs, const PublicKey &delegate);

// An ack by `validator` over exactly `signs` (sorted, deduplicated).
Ack craft_ack(const KeyPair &validator, std::vector<MessageId> signs,
              std::optional<MessageId> prev = std::nullopt,
              std::optional<MessageId> checkpoint_ref = std::nullopt);

// The forked pair: both acks extend `prev` (or are both chain starts), the
// first signing `sign_first`, the second `sign_second`.
std::pair<Ack, Ack> forked_acks(
    const KeyPair &validator, std::optional<MessageId> prev,
    const MessageId &sign_first, const MessageId &sign_second,
    std::optional<MessageId> checkpoint_ref = std::nullopt);

}  // namespace ackdag
