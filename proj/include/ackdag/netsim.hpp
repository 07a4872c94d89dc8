#pragma once

// Deterministic discrete-event network simulation.
//
// The world delivers exactly one message per step (serial asynchrony). A
// broadcast enqueues one delivery per other current participant; delivery
// order is chosen by the schedule policy:
//   Fifo          - lowest sequence number first (prompt delivery),
//   SeededRandom  - uniform choice among eligible deliveries via a seeded
//                   mt19937_64 (raw modulo, never std distributions, so the
//                   sequence is identical across platforms),
//   ScriptedDelay - FIFO, but listed sequence numbers become eligible only
//                   after their extra delay has elapsed (idle steps tick the
//                   clock when nothing is eligible).
//
// Hop clock: a message broadcast from outside any delivery carries hop 1;
// a message emitted while handling a delivery carries the triggering
// delivery's hop + 1. One request/response exchange is therefore 2 hops.
//
// Joining with replay enqueues the prior broadcast history for the joiner;
// leaving purges the participant and its pending deliveries. cut_link marks
// a (sender, recipient) pair undeliverable forever - broadcasts skip it -
// which is only used by non-termination scenarios.
//
// Every state change appends one line to the event log:
//   "<step> <kind> <short-id> <actor>"
// with kind in {send, recv, join, leave, idle, cut}. Identical (scenario,
// seed) runs produce byte-identical logs; this is the fixture diff surface.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "ackdag/codec.hpp"
#include "ackdag/messages.hpp"

namespace ackdag {

enum class SchedulePolicy : std::uint8_t { Fifo, SeededRandom, ScriptedDelay };

// Extra delay for the delivery with the given global sequence number.
struct DelayRule {
  std::uint64_t seq = 0;
  std::uint64_t delay = 0;
};

class World;

class Participant {
 public:
  virtual ~Participant() = default;
  virtual const std::string &name() const = 0;
  // Handle one delivered message; emit responses via world.broadcast().
  virtual void on_deliver(World &world, const Message &msg) = 0;
};

class World {
 public:
  explicit World(SchedulePolicy policy = SchedulePolicy::Fifo,
                 std::uint64_t seed = 0, std::vector<DelayRule> rules = {});

  // Participants. `replay_history` delivers all prior broadcasts to the
  // joiner (per policy), realizing join-and-catch-up.
  void join(Participant &p, bool replay_history = false);
  void leave(const std::string &name);
  bool is_active(const std::string &name) const;
  std::vector<std::string> participants() const;

  // One delivery per other participant; the eavesdropper (the adversary)
  // sees the message at enqueue time.
  void broadcast(const std::string &sender, const Message &msg);
  // Targeted variant for selective adversary sends; not part of the replay
  // history.
  void send_to(const std::string &sender, const Message &msg,
               const std::vector<std::string> &recipients);
  void cut_link(const std::string &from, const std::string &to);
  void set_eavesdropper(std::function<void(const Message &)> fn);

  // Applies the next delivery (or an idle tick when deliveries exist but
  // none is eligible yet). Returns false, consuming nothing, when no
  // delivery is pending.
  bool step();
  // Convenience: steps until quiescent or `horizon` total steps elapsed.
  void run_until_quiescent(std::uint64_t horizon);

  std::uint64_t steps() const { return steps_; }
  std::size_t pending_count() const { return pending_.size(); }
  // Hop of the most recent delivery (0 before any).
  std::uint64_t last_hop() const { return last_hop_; }
  // True when the horizon was reached with undelivered messages.
  bool deadlocked() const { return deadlocked_; }

  const std::vector<std::string> &event_log() const { return log_; }
  std::string event_log_text() const;

 private:
  struct Delivery {
    std::uint64_t seq = 0;
    Message msg;
    MessageId id;
    std::string recipient;
    std::uint64_t eligible_step = 0;
    std::uint64_t hop = 1;
  };

  void enqueue(const Message &msg, const MessageId &id,
               const std::string &recipient, std::uint64_t hop);
  void log_event(std::uint64_t step, const char *kind, const std::string &id,
                 const std::string &actor);

  SchedulePolicy policy_;
  std::mt19937_64 rng_;
  std::map<std::uint64_t, std::uint64_t> delays_;  // seq -> extra delay

  std::map<std::string, Participant *> active_;
  std::set<std::pair<std::string, std::string>> cut_;
  std::function<void(const Message &)> eavesdropper_;

  std::deque<Delivery> pending_;
  std::vector<std::pair<Message, std::uint64_t>> history_;  // broadcasts + hop
  std::uint64_t next_seq_ = 0;
  std::uint64_t steps_ = 0;
  std::uint64_t last_hop_ = 0;
  std::uint64_t delivering_hop_ = 0;  // nonzero while inside on_deliver
  bool deadlocked_ = false;

  std::vector<std::string> log_;
};

}  // namespace ackdag
