#include "ackdag/checkpoint.hpp"

#include <algorithm>
#include <tuple>

#include "ackdag/codec.hpp"

namespace ackdag {

namespace {

// Frontiers may reference acks, transactions, earlier checkpoints, or the
// root; they only need to be admitted so past(frontier) is defined.
void require_admitted_frontier(const DagStore &store,
                               const std::vector<MessageId> &frontier) {
  if (frontier.empty()) {
    throw std::invalid_argument("checkpoint frontier empty");
  }
  for (const MessageId &id : frontier) {
    if (!store.contains(id)) {
      throw std::invalid_argument("frontier id not admitted: " + id.hex());
    }
  }
}

}  // namespace

CheckpointBody summarize_frontier(Confirmer &confirmer,
                                  const std::vector<MessageId> &frontier) {
  const DagStore &store = confirmer.store();
  require_admitted_frontier(store, frontier);
  Confirmer::FrontierEval fe = confirmer.eval_frontier(frontier);

  CheckpointBody body;
  for (const auto &[ref, ro] : store.all_outputs()) {
    const MessageId &producer = store.entry(ro.producer_index).id;
    if (fe.confirmed.count(producer) == 0) continue;
    bool spent = false;
    if (const auto *spenders = store.spenders_of(ref)) {
      for (std::uint32_t s : *spenders) {
        if (fe.confirmed.count(store.entry(s).id) != 0) {
          spent = true;
          break;
        }
      }
    }
    if (spent) continue;
    body.summary.push_back(CheckpointEntry{ref, ro.output, ro.validator_key});
  }
  std::sort(body.summary.begin(), body.summary.end(),
            [](const CheckpointEntry &a, const CheckpointEntry &b) {
              return std::tuple(a.output.owner_key, a.origin.tx, a.origin.index) <
                     std::tuple(b.output.owner_key, b.origin.tx, b.origin.index);
            });
  for (const auto &[v, m] : fe.final_stakes.stakes) {
    if (m > 0) body.stakes.push_back(StakeEntry{v, m});
  }
  // std::map iteration is already ascending by validator key.
  return body;
}

Checkpoint make_checkpoint(Confirmer &confirmer,
                           std::vector<MessageId> frontier,
                           const KeyPair &creator) {
  std::sort(frontier.begin(), frontier.end());
  frontier.erase(std::unique(frontier.begin(), frontier.end()), frontier.end());
  CheckpointBody body = summarize_frontier(confirmer, frontier);

  Checkpoint cp;
  cp.frontier = std::move(frontier);
  cp.summary = std::move(body.summary);
  cp.stakes = std::move(body.stakes);
  cp.total_money = confirmer.store().total_money();
  cp.commitment = checkpoint_commitment(cp);
  cp.creator_key = creator.pk;
  Bytes payload = checkpoint_signing_payload(cp);
  cp.signature = test_key_scheme().sign(creator.sk,
                                        ByteView(payload.data(), payload.size()));
  return cp;
}

bool checkpoint_is_accurate(Confirmer &confirmer, const Checkpoint &cp) {
  const DagStore &store = confirmer.store();
  if (cp.total_money != store.total_money()) return false;
  for (const MessageId &id : cp.frontier) {
    if (!store.contains(id)) return false;
  }
  CheckpointBody body = summarize_frontier(confirmer, cp.frontier);
  return body.summary == cp.summary && body.stakes == cp.stakes;
}

std::set<MessageId> summarized_ids(Confirmer &confirmer, const Checkpoint &cp) {
  const DagStore &store = confirmer.store();
  require_admitted_frontier(store, cp.frontier);
  Confirmer::FrontierEval fe = confirmer.eval_frontier(cp.frontier);
  std::set<MessageId> out;
  for (const MessageId &id : fe.confirmed) {
    const DagStore::Entry *e = store.find(id);
    if (e->kind == MessageKind::Transaction) out.insert(id);
  }
  // Checkpoints inside the frontier's past are superseded by this one; treat
  // them as summarised so they are not re-listed forever.
  store.past_bits(cp.frontier).for_each_set([&](std::uint32_t i) {
    if (store.entry(i).kind == MessageKind::Checkpoint) {
      out.insert(store.entry(i).id);
    }
  });
  return out;
}

Ack post_checkpoint_ack(ValidatorState &vs, Confirmer &confirmer,
                        const Checkpoint &cp) {
  MessageId cp_id = id_of(Message{cp});
  vs.queue_checkpoint(cp_id);
  vs.adopt_checkpoint(cp_id, summarized_ids(confirmer, cp));
  return *vs.emit_ack();  // outbox holds at least cp_id
}

DagStore bootstrap(const Checkpoint &cp, const ConfirmationCertificate &cert,
                   const std::vector<Message> &messages,
                   const KeyScheme &scheme) {
  MessageId cp_id = id_of(Message{cp});
  if (cert.subject != cp_id) {
    throw BadCertificate("certificate subject is not the checkpoint");
  }
  if (cert.total_money != cp.total_money) {
    throw BadCertificate("certificate total_money mismatch");
  }

  // from_checkpoint re-verifies well-formedness: sorted summary and stakes,
  // sums equal to total_money, commitment, creator signature.
  DagStore store = DagStore::from_checkpoint(cp, scheme);
  for (const Message &m : messages) store.ingest(m);

  // Evidence: each certificate ack must be admitted (signature checked at
  // ingest) and sign the checkpoint id. The stake each signer held "at some
  // point" in the summarised past is the certificate's claim — the joiner
  // cannot re-evaluate a pruned trajectory — so the check is structural:
  // claimed stakes are keyed exactly by the distinct signing validators, sum
  // to the claimed signed stake, and pass the threshold.
  std::set<PublicKey> signers;
  for (const MessageId &aid : cert.acks) {
    const DagStore::Entry *e = store.find(aid);
    if (!e || e->kind != MessageKind::Ack) {
      throw BadCertificate("certificate ack missing: " + aid.hex());
    }
    const Ack &a = std::get<Ack>(e->msg);
    if (!std::binary_search(a.signed_ids.begin(), a.signed_ids.end(), cp_id)) {
      throw BadCertificate("certificate ack does not sign the checkpoint");
    }
    signers.insert(a.validator_key);
  }
  Money claimed = 0;
  for (const auto &[v, m] : cert.signer_stakes.stakes) {
    if (signers.count(v) == 0) {
      throw BadCertificate("claimed stake for a validator that signed nothing");
    }
    if (m > cp.total_money) throw BadCertificate("claimed stake exceeds supply");
    claimed += m;
  }
  if (claimed != cert.signed_stake) {
    throw BadCertificate("claimed stakes do not sum to signed_stake");
  }
  if (!threshold_met(cert.signed_stake, cp.total_money)) {
    throw BadCertificate("signed stake below the confirmation threshold");
  }
  return store;
}

}  // namespace ackdag
