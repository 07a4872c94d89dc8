// Discrete-event network world. See netsim.hpp for the model.

#include "ackdag/netsim.hpp"

#include <algorithm>
#include <stdexcept>

namespace ackdag {

World::World(SchedulePolicy policy, std::uint64_t seed,
             std::vector<DelayRule> rules)
    : policy_(policy), rng_(seed) {
  for (const DelayRule &r : rules) delays_[r.seq] = r.delay;
}

void World::log_event(std::uint64_t step, const char *kind,
                      const std::string &id, const std::string &actor) {
  log_.push_back(std::to_string(step) + " " + kind + " " + id + " " + actor);
}

void World::join(Participant &p, bool replay_history) {
  if (active_.count(p.name()) != 0) {
    throw std::invalid_argument("participant name already active: " + p.name());
  }
  active_[p.name()] = &p;
  log_event(steps_, "join", "-", p.name());
  if (replay_history) {
    for (const auto &[msg, hop] : history_) {
      enqueue(msg, id_of(msg), p.name(), hop);
    }
  }
}

void World::leave(const std::string &name) {
  if (active_.erase(name) == 0) return;
  pending_.erase(std::remove_if(pending_.begin(), pending_.end(),
                                [&](const Delivery &d) {
                                  return d.recipient == name;
                                }),
                 pending_.end());
  log_event(steps_, "leave", "-", name);
}

bool World::is_active(const std::string &name) const {
  return active_.count(name) != 0;
}

std::vector<std::string> World::participants() const {
  std::vector<std::string> names;
  names.reserve(active_.size());
  for (const auto &[name, p] : active_) names.push_back(name);
  return names;
}

void World::enqueue(const Message &msg, const MessageId &id,
                    const std::string &recipient, std::uint64_t hop) {
  Delivery d;
  d.seq = next_seq_++;
  d.msg = msg;
  d.id = id;
  d.recipient = recipient;
  d.hop = hop;
  d.eligible_step = steps_;
  if (auto it = delays_.find(d.seq); it != delays_.end()) {
    d.eligible_step += it->second;
  }
  pending_.push_back(std::move(d));
}

void World::broadcast(const std::string &sender, const Message &msg) {
  MessageId id = id_of(msg);
  std::uint64_t hop = delivering_hop_ == 0 ? 1 : delivering_hop_ + 1;
  log_event(steps_, "send", id.short_hex(), sender);
  if (eavesdropper_) eavesdropper_(msg);
  history_.emplace_back(msg, hop);
  for (const auto &[name, p] : active_) {
    if (name == sender) continue;
    if (cut_.count({sender, name}) != 0) continue;
    enqueue(msg, id, name, hop);
  }
}

void World::send_to(const std::string &sender, const Message &msg,
                    const std::vector<std::string> &recipients) {
  MessageId id = id_of(msg);
  std::uint64_t hop = delivering_hop_ == 0 ? 1 : delivering_hop_ + 1;
  log_event(steps_, "send", id.short_hex(), sender);
  if (eavesdropper_) eavesdropper_(msg);
  for (const std::string &name : recipients) {
    if (name == sender || active_.count(name) == 0) continue;
    if (cut_.count({sender, name}) != 0) continue;
    enqueue(msg, id, name, hop);
  }
}

void World::cut_link(const std::string &from, const std::string &to) {
  cut_.insert({from, to});
  log_event(steps_, "cut", "-", from + ">" + to);
}

void World::set_eavesdropper(std::function<void(const Message &)> fn) {
  eavesdropper_ = std::move(fn);
}

bool World::step() {
  if (pending_.empty()) return false;
  ++steps_;

  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < pending_.size(); ++i) {
    if (pending_[i].eligible_step < steps_) eligible.push_back(i);
  }
  if (eligible.empty()) {
    log_event(steps_, "idle", "-", "-");
    return true;
  }

  std::size_t pick = eligible.front();  // Fifo and ScriptedDelay: lowest seq
  if (policy_ == SchedulePolicy::SeededRandom) {
    pick = eligible[rng_() % eligible.size()];
  }

  Delivery d = std::move(pending_[pick]);
  pending_.erase(pending_.begin() + static_cast<std::ptrdiff_t>(pick));

  log_event(steps_, "recv", d.id.short_hex(), d.recipient);
  last_hop_ = d.hop;
  auto it = active_.find(d.recipient);
  if (it != active_.end()) {
    delivering_hop_ = d.hop;
    it->second->on_deliver(*this, d.msg);
    delivering_hop_ = 0;
  }
  return true;
}

void World::run_until_quiescent(std::uint64_t horizon) {
  while (steps_ < horizon) {
    if (!step()) return;
  }
  if (!pending_.empty()) deadlocked_ = true;
}

std::string World::event_log_text() const {
  std::string out;
  for (const std::string &line : log_) {
    out += line;
    out += '\n';
  }
  return out;
}

}  // namespace ackdag
