#pragma once

// Scenario files: a line-oriented format describing a cast of agents, a
// genesis, and an ordered timeline of actions, executed deterministically
// against the network simulation. '#' starts a comment; tokens are
// whitespace-separated. Directives:
//
//   scenario NAME
//   policy fifo|random|delay        seed N        horizon N
//   delay SEQ EXTRA                 (repeatable; only under policy delay)
//   total M                         (declared supply, checked against genesis)
//   genesis COIN VALUE VKEY         (one output; COIN doubles as owner key)
//   validator NAME [late]           (honest validator node, key name = NAME)
//   observer NAME [late]            (honest wallet node without a validator)
//   adversary NAME                  (the adversary's network presence)
//   control KEY...                  (validator keys the adversary controls)
//   fee BASE PERIN PEROUT [ANUM ADEN [TNUM TDEN]]
//   report-node NAME                (default: first observer, else validator)
//
//   submit AGENT TX spend C... make C:V... delegate KEY
//   send AGENT TX spend C... make C:V... delegate KEY to R...
//   withhold AGENT TX spend C... make C:V... delegate KEY until STEP
//   release AGENT TX [to R...]
//   ack AGENT ACK by KEY sign TX... [prev ACK2] [to R...]
//   checkpoint NODE CP [creator KEY]
//   bootstrap NAME from CP [validator KEY]
//   join NAME [replay]              leave NAME
//   step N                          run
//   expect TX confirmed|unconfirmed|unresolved
//   expect-at NODE TX STATUS        expect-hop TX N
//   expect-byzantine KEY            expect-signers TX KEY...
//
// Transactions are crafted before the world runs (generation time); the
// adversary budget's Issued rule is applied to each in timeline order, so an
// over-budget scenario fails as a configuration error before any delivery.
// Statuses are read from the report node at the end: a certificate maps to
// Confirmed, a definitive miss to Unconfirmed, an exhausted search to
// Unresolved. A transaction's hop is the hop number of the delivery after
// which every honest joined node confirmed it (2 = one round trip).

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ackdag/confirm.hpp"
#include "ackdag/econ.hpp"
#include "ackdag/messages.hpp"
#include "ackdag/netsim.hpp"

namespace ackdag {

// Parse or configuration problem (CLI exit 2).
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::size_t line, const std::string &what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

enum class TxStatus : std::uint8_t { Confirmed, Unconfirmed, Unresolved };
const char *tx_status_name(TxStatus s);

struct TxReport {
  std::string name;
  MessageId id;
  Money value = 0;  // sum of outputs
  Money fee = 0;    // price under the scenario's fee policy
  TxStatus status = TxStatus::Unresolved;
  std::optional<std::uint64_t> hop;  // see header comment
  std::optional<ConfirmationCertificate> cert;
};

struct RunReport {
  std::string name;
  std::string policy;
  std::uint64_t seed = 0;
  std::uint64_t horizon = 0;
  std::uint64_t steps = 0;
  bool deadlocked = false;

  std::vector<TxReport> txs;  // timeline order
  Money charged = 0;          // fees of confirmed transactions
  Money accrued = 0;          // validator fee shares credited
  // charged - accrued (theta cutoffs and rounding), destroyed by the rules
  Money destroyed = 0;
  std::vector<std::pair<std::string, Money>> fee_shares;  // by key name

  Money confirmed_value = 0;
  Money unconfirmed_value = 0;  // includes unresolved

  bool safety_ok = true;       // no two confirmed transactions conflict
  std::vector<std::string> failures;  // unmet expectations, in order
  std::size_t expectations = 0;

  std::string event_log;
  // (tx name, certificate) for every confirmed transaction, timeline order.
  std::vector<std::pair<std::string, ConfirmationCertificate>> certificates;

  // 0 pass, 1 expectation failures, 3 safety violation.
  int exit_code() const;
};

class Scenario {
 public:
  // Throws ScenarioError on malformed input.
  static Scenario parse(const std::string &text);
  static Scenario parse_file(const std::string &path);

  // Command-line overrides applied over the file's header values.
  void override_seed(std::uint64_t seed);
  void override_horizon(std::uint64_t horizon);
  void override_policy(const std::string &policy);  // throws on junk

  const std::string &name() const { return name_; }

  // Executes a fresh deterministic run. Throws ScenarioError for semantic
  // configuration problems (unresolvable names, budget violations).
  RunReport run() const;

 private:
  struct Directive {
    std::size_t line = 0;
    std::vector<std::string> tokens;
  };

  std::string name_ = "unnamed";
  SchedulePolicy policy_ = SchedulePolicy::Fifo;
  std::string policy_name_ = "fifo";
  std::uint64_t seed_ = 0;
  std::uint64_t horizon_ = 100000;
  std::vector<DelayRule> delays_;
  std::optional<Money> declared_total_;
  FeePolicy fee_;
  std::vector<Directive> cast_;      // genesis/cast/control directives
  std::vector<Directive> timeline_;  // actions + expectations
  std::optional<std::string> report_node_;
};

// Stable-order renderings of a run report.
std::string render_text(const RunReport &r);
std::string render_json(const RunReport &r);

}  // namespace ackdag
