#pragma once

// Pruning checkpoints: summarise the settled region below an ack frontier,
// get the summary endorsed like a transaction, and let new participants
// bootstrap from the summary instead of replaying history.
//
// The summary is a pure function of past(frontier): every output produced by
// an in-scope confirmed message and spent by no in-scope confirmed
// transaction, carried with its delegate, plus the final delegation state as
// the stake snapshot. "In-scope" deliberately ignores evidence outside the
// frontier's past — that is what makes the summary recomputable by any
// validator before signing and by any verifier holding only past(frontier).
//
// A transaction inside past(frontier) that had NOT confirmed in scope is not
// represented in the summary. Validators therefore re-list such signed
// transactions in their first post-checkpoint ack (alongside the checkpoint
// id itself, which is how endorsement evidence accumulates); without the
// repeat, the transaction would be invisible to bootstrapped stores. The
// same mechanism covers stale summaries: an output summarised as unspent but
// spent by a not-yet-confirmed transaction is re-contested when that
// transaction is re-listed, and its input references resolve through the
// summary's origin positions.
//
// Bootstrap trusts a checkpoint only with a certificate whose acks sign the
// checkpoint id and whose signers held more than 2/3 of the supply at some
// point while the summarised region settled. Those stake values are the
// certificate's claim — a joiner cannot re-evaluate a pruned trajectory —
// so verification is structural: every ack admitted and signing the id,
// claimed stakes keyed exactly by the distinct signers, sums consistent,
// threshold met. Protection against a wholly fabricated checkpoint plus
// evidence is out of band (pin the checkpoint id or the validator set),
// exactly as with any other trust root.

#include <set>
#include <stdexcept>
#include <vector>

#include "ackdag/agents.hpp"
#include "ackdag/confirm.hpp"
#include "ackdag/dag.hpp"
#include "ackdag/messages.hpp"

namespace ackdag {

class BadCertificate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The recomputable part of a checkpoint body.
struct CheckpointBody {
  std::vector<CheckpointEntry> summary;  // sorted by (owner key, origin)
  std::vector<StakeEntry> stakes;        // sorted by validator key, zeros dropped
};

// Summary and stake snapshot over past(frontier). Frontier ids may name
// acks, transactions, earlier checkpoints, or the root, but must be
// admitted in the confirmer's store (std::invalid_argument otherwise).
CheckpointBody summarize_frontier(Confirmer &confirmer,
                                  const std::vector<MessageId> &frontier);

// Build and sign a checkpoint over the frontier. Deterministic given the
// admitted set.
Checkpoint make_checkpoint(Confirmer &confirmer,
                           std::vector<MessageId> frontier,
                           const KeyPair &creator);

// True when the checkpoint's summary, stake snapshot and total match an
// independent recomputation over its frontier. Validators must check this
// before signing; returns false (never throws) when the frontier is not
// fully admitted here.
bool checkpoint_is_accurate(Confirmer &confirmer, const Checkpoint &cp);

// Ids the checkpoint's summary accounts for: the in-scope confirmed
// transactions of past(frontier) plus any checkpoints there. Signed work
// outside this set must be re-listed after adopting cp.
std::set<MessageId> summarized_ids(Confirmer &confirmer, const Checkpoint &cp);

// The validator's first ack after adopting a confirmed checkpoint: signs the
// checkpoint id, re-lists signed-but-unsummarized transactions, and carries
// checkpoint_ref so later acks chain across the pruning point.
Ack post_checkpoint_ack(ValidatorState &vs, Confirmer &confirmer,
                        const Checkpoint &cp);

// Store for a newly joining participant: verify the certificate against the
// checkpoint's stake snapshot, root a store at the checkpoint, and ingest
// the post-checkpoint messages (the certificate's acks must be among them).
// Throws BadCertificate when the evidence does not hold up.
DagStore bootstrap(const Checkpoint &cp, const ConfirmationCertificate &cert,
                   const std::vector<Message> &messages,
                   const KeyScheme &scheme = test_key_scheme());

}  // namespace ackdag
