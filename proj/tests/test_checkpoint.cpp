// Checkpoint summarisation, endorsement, the post-checkpoint repeat rule,
// and bootstrap equivalence. Frozen values:
//   [PAPER: appendix checkpoint figure] M=4 genesis (p1,1)->v1, (p2,3)->v2;
//     t1 (p2,3)->(p3,3) delegating v3; t5 (p3,3)->(p4,3) delegating v4;
//     frontier {a2: v2 signs t1, a3: v3 signs t5}. Summary is exactly
//     {(p1,1) v1, (p4,3) v4}; v2's later ack alone confirms the checkpoint
//     (its stake passes only at trajectory state 0, before t1 moved the
//     delegation), and v4 repeats its unsummarised ack for (p1,1)->(p5,1).
//   [TRIVIAL] frontier {genesis} summarises the genesis verbatim.
//   [DERIVED: full store as oracle] bootstrapped stores assign every
//     post-checkpoint transaction the same confirmed status.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include "ackdag/checkpoint.hpp"
#include "ackdag/codec.hpp"
#include "support/fixture.hpp"
#include "support/oracle.hpp"

using namespace ackdag;
using ackdag::test::Fixture;
using ackdag::test::must_admit;

namespace {

// The appendix figure's ledger, up to (not including) the checkpoint.
struct Fig8 {
  Fixture f;
  DagStore store;
  Transaction t1, t5;
  Ack a2, a3;

  Fig8()
      : store(DagStore::from_genesis(
            f.genesis({{"p1", 1, "v1"}, {"p2", 3, "v2"}}))) {
    t1 = f.tx({"p2"}, {{"p3", 3}}, "v3");
    t5 = f.tx({"p3"}, {{"p4", 3}}, "v4");
    a2 = f.ack("v2", {f.id(t1)});
    a3 = f.ack("v3", {f.id(t5)});
    for (const Message &m :
         {Message{t1}, Message{t5}, Message{a2}, Message{a3}}) {
      must_admit(store, m);
    }
  }

  std::vector<MessageId> frontier() const {
    std::vector<MessageId> ids{f.id(a2), f.id(a3)};
    std::sort(ids.begin(), ids.end());
    return ids;
  }
};

}  // namespace

TEST_CASE("a genesis frontier summarises the genesis verbatim") {
  Fixture f;
  Genesis g = f.genesis({{"p1", 4, "v1"}, {"p2", 6, "v2"}});
  DagStore store = DagStore::from_genesis(g);
  Confirmer confirmer(store);

  Checkpoint cp = make_checkpoint(confirmer, {store.root_id()}, f.key("maker"));
  REQUIRE(cp.summary.size() == 2);
  std::multiset<std::pair<Money, PublicKey>> got, want;
  for (const CheckpointEntry &e : cp.summary) {
    CHECK(e.origin.tx == store.root_id());
    got.insert({e.output.value, e.output.owner_key});
  }
  for (const Output &o : g.outputs) want.insert({o.value, o.owner_key});
  CHECK(got == want);
  CHECK(cp.stakes == std::vector<StakeEntry>{{f.pk("v1"), 4}, {f.pk("v2"), 6}} );
  CHECK(cp.total_money == 10);
  CHECK(checkpoint_is_accurate(confirmer, cp));
  CHECK(store.ingest(Message{cp}).status == IngestStatus::Admitted);

  // Bootstrapping from it is equivalent to a normal start: the same payment
  // confirms in both stores.
  SUBCASE("bootstrap from a genesis checkpoint behaves like a normal start") {
    MessageId cp_id = f.id(cp);
    ValidatorState vs1(f.key("v1")), vs2(f.key("v2"));
    Confirmer full(store);
    Ack e1 = post_checkpoint_ack(vs1, full, cp);
    Ack e2 = post_checkpoint_ack(vs2, full, cp);
    must_admit(store, Message{e1});
    must_admit(store, Message{e2});

    ConfirmationCertificate cert = *full.confirm_checkpoint(cp_id).cert;
    DagStore boot = bootstrap(cp, cert, {Message{e1}, Message{e2}});
    REQUIRE(boot.root_is_checkpoint());
    CHECK(boot.total_money() == 10);

    Transaction pay = f.tx({"p1"}, {{"q1", 4}}, "v2");
    Ack s1 = f.ack("v1", {f.id(pay)}, f.id(e1), cp_id);
    Ack s2 = f.ack("v2", {f.id(pay)}, f.id(e2), cp_id);
    for (DagStore *s : {&store, &boot}) {
      must_admit(*s, Message{pay});
      must_admit(*s, Message{s1});
      must_admit(*s, Message{s2});
    }
    Confirmer cfull(store), cboot(boot);
    CHECK(cfull.is_confirmed(f.id(pay)));
    CHECK(cboot.is_confirmed(f.id(pay)));
  }
}

TEST_CASE("the appendix figure: summary, endorsement, repeat, bootstrap") {
  Fig8 x;
  Confirmer confirmer(x.store);
  REQUIRE(confirmer.is_confirmed(x.f.id(x.t1)));
  REQUIRE(confirmer.is_confirmed(x.f.id(x.t5)));

  Checkpoint cp = make_checkpoint(confirmer, x.frontier(), x.f.key("maker"));
  MessageId cp_id = x.f.id(cp);

  // Frozen summary: exactly (p1,1) delegated to v1 and (p4,3) delegated to
  // v4, origins pointing into the pruned region.
  REQUIRE(cp.summary.size() == 2);
  std::multiset<std::tuple<Money, PublicKey, PublicKey>> body;
  for (const CheckpointEntry &e : cp.summary) {
    body.insert({e.output.value, e.output.owner_key, e.validator_key});
  }
  std::multiset<std::tuple<Money, PublicKey, PublicKey>> expected{
      {1, x.f.pk("p1"), x.f.pk("v1")},
      {3, x.f.pk("p4"), x.f.pk("v4")},
  };
  CHECK(body == expected);
  CHECK(cp.stakes == std::vector<StakeEntry>{{x.f.pk("v1"), 1}, {x.f.pk("v4"), 3}});
  CHECK(cp.total_money == 4);
  CHECK(checkpoint_is_accurate(confirmer, cp));
  must_admit(x.store, Message{cp});

  // v4 signed the out-of-frontier payment t4 before the checkpoint arrived.
  Transaction t4 = x.f.tx({"p1"}, {{"p5", 1}}, "v4");
  Ack a4 = x.f.ack("v4", {x.f.id(t4)});
  must_admit(x.store, Message{t4});
  must_admit(x.store, Message{a4});

  ValidatorState vs2(x.f.key("v2")), vs4(x.f.key("v4"));
  vs2.on_transaction(x.f.id(x.t1), x.t1);
  REQUIRE(vs2.emit_ack().has_value());  // stand-in for a2 in the log
  vs4.on_transaction(x.f.id(t4), t4);
  REQUIRE(vs4.emit_ack().has_value());  // stand-in for a4

  // Post-checkpoint acks. v2 signed only summarised work: plain endorsement.
  // v4 repeats t4, which the summary does not account for.
  Ack r2 = post_checkpoint_ack(vs2, confirmer, cp);
  Ack r4 = post_checkpoint_ack(vs4, confirmer, cp);
  CHECK(r2.signed_ids == std::vector<MessageId>{cp_id});
  CHECK(r2.checkpoint_ref == cp_id);
  std::vector<MessageId> want_r4{cp_id, x.f.id(t4)};
  std::sort(want_r4.begin(), want_r4.end());
  CHECK(r4.signed_ids == want_r4);
  must_admit(x.store, Message{r2});
  must_admit(x.store, Message{r4});

  // v2's single endorsement confirms the checkpoint, but only because its
  // stake passes at trajectory state 0 — the delegation had moved on by the
  // end of the summarised region.
  CertSearchResult cr = confirmer.confirm_checkpoint(cp_id);
  REQUIRE(cr.status == CertStatus::Found);
  const ConfirmationCertificate &cert = *cr.cert;
  CHECK(cert.stake_state == 0);
  CHECK(cert.signer_stakes.of(x.f.pk("v2")) == 3);
  CHECK(cert.signed_stake == 3);
  CHECK(cert.total_money == 4);
  std::vector<MessageId> evidence{x.f.id(r2), x.f.id(r4)};
  std::sort(evidence.begin(), evidence.end());
  CHECK(cert.acks == evidence);

  SUBCASE("the joiner computes the same confirmations from the summary") {
    // The joiner processes only: the checkpoint, the certificate, the two
    // post-checkpoint acks, and the repeated transaction's body.
    DagStore boot =
        bootstrap(cp, cert, {Message{t4}, Message{r2}, Message{r4}});
    REQUIRE(boot.contains(x.f.id(t4)));
    CHECK(!boot.contains(x.f.id(x.t1)));  // pruned history stays pruned

    Confirmer cfull(x.store), cboot(boot);
    CHECK(cfull.is_confirmed(x.f.id(t4)) == cboot.is_confirmed(x.f.id(t4)));
    CHECK(cboot.is_confirmed(x.f.id(t4)));

    // Spending a summarised output through its origin reference works.
    Transaction spend = x.f.tx({"p4"}, {{"p6", 3}}, "v1");
    Ack s4 = x.f.ack("v4", {x.f.id(spend)}, x.f.id(r4), cp_id);
    for (DagStore *s : {&x.store, &boot}) {
      must_admit(*s, Message{spend});
      must_admit(*s, Message{s4});
    }
    Confirmer cfull2(x.store), cboot2(boot);
    CHECK(cfull2.is_confirmed(x.f.id(spend)));
    CHECK(cboot2.is_confirmed(x.f.id(spend)));
  }

  SUBCASE("tampered evidence is rejected") {
    std::vector<Message> msgs{Message{t4}, Message{r2}, Message{r4}};

    ConfirmationCertificate wrong_subject = cert;
    wrong_subject.subject = x.f.id(t4);
    CHECK_THROWS_AS(bootstrap(cp, wrong_subject, msgs), BadCertificate);

    ConfirmationCertificate missing_ack = cert;
    CHECK_THROWS_AS(bootstrap(cp, missing_ack, {Message{t4}, Message{r4}}),
                    BadCertificate);

    ConfirmationCertificate nonsigner = cert;
    nonsigner.signer_stakes.stakes[x.f.pk("v1")] = 1;  // v1 signed nothing
    nonsigner.signed_stake = 4;
    CHECK_THROWS_AS(bootstrap(cp, nonsigner, msgs), BadCertificate);

    ConfirmationCertificate bad_sum = cert;
    bad_sum.signed_stake = 4;  // stakes still claim 3
    CHECK_THROWS_AS(bootstrap(cp, bad_sum, msgs), BadCertificate);

    ConfirmationCertificate weak = cert;
    weak.signer_stakes.stakes[x.f.pk("v2")] = 2;
    weak.signed_stake = 2;  // 3*2 <= 2*4
    CHECK_THROWS_AS(bootstrap(cp, weak, msgs), BadCertificate);
  }
}

TEST_CASE("validators refuse checkpoints whose body does not recompute") {
  Fig8 x;
  Confirmer confirmer(x.store);
  Checkpoint good = make_checkpoint(confirmer, x.frontier(), x.f.key("maker"));

  // Same refs and values, wrong delegate on the heavy output: well-formed
  // (sums still match) but inaccurate.
  Checkpoint bad = x.f.checkpoint(
      "maker", x.frontier(), {{"p1", "v1"}, {"p4", "v2"}},
      {{"v1", 1}, {"v2", 3}}, 4);
  CHECK(verify_message(Message{bad}, test_key_scheme()).ok);
  CHECK(checkpoint_is_accurate(confirmer, good));
  CHECK(!checkpoint_is_accurate(confirmer, bad));

  // Nobody signs it, so it never confirms.
  must_admit(x.store, Message{bad});
  CHECK(confirmer.confirm_checkpoint(x.f.id(bad)).status == CertStatus::NotFound);
}

TEST_CASE("unconfirmed in-scope spends are repeated and settle identically") {
  // Stale-summary case: t6 spends p1 inside the frontier's past but lacks
  // in-scope evidence (v1 holds 1 of 4), so the summary still lists p1. The
  // repeat rule re-surfaces t6; later evidence confirms it in the full and
  // bootstrapped stores alike, spending the summarised output.
  Fig8 x;
  Transaction t6 = x.f.tx({"p1"}, {{"p7", 1}}, "v1");
  Ack a1 = x.f.ack("v1", {x.f.id(t6)});
  must_admit(x.store, Message{t6});
  must_admit(x.store, Message{a1});

  Confirmer confirmer(x.store);
  std::vector<MessageId> frontier = x.frontier();
  frontier.push_back(x.f.id(a1));
  std::sort(frontier.begin(), frontier.end());
  Checkpoint cp = make_checkpoint(confirmer, frontier, x.f.key("maker"));
  MessageId cp_id = x.f.id(cp);

  // t6 is in past(frontier) but not summarised-away: p1 still listed.
  bool p1_listed = false;
  for (const CheckpointEntry &e : cp.summary) {
    if (e.output.owner_key == x.f.pk("p1")) p1_listed = true;
  }
  CHECK(p1_listed);
  CHECK(!confirmer.is_confirmed(x.f.id(t6)));
  must_admit(x.store, Message{cp});

  ValidatorState vs1(x.f.key("v1")), vs4(x.f.key("v4"));
  vs1.on_transaction(x.f.id(t6), t6);
  REQUIRE(vs1.emit_ack().has_value());
  Ack r1 = post_checkpoint_ack(vs1, confirmer, cp);
  std::vector<MessageId> want_r1{cp_id, x.f.id(t6)};
  std::sort(want_r1.begin(), want_r1.end());
  CHECK(r1.signed_ids == want_r1);  // t6 repeated: not accounted for
  Ack r4 = post_checkpoint_ack(vs4, confirmer, cp);
  must_admit(x.store, Message{r1});
  must_admit(x.store, Message{r4});

  ConfirmationCertificate cert = *confirmer.confirm_checkpoint(cp_id).cert;
  DagStore boot = bootstrap(cp, cert, {Message{t6}, Message{r1}, Message{r4}});

  // New evidence from the heavy validator lands in both stores.
  Ack h_full = x.f.ack("v4", {x.f.id(t6)}, x.f.id(r4), cp_id);
  for (DagStore *s : {&x.store, &boot}) must_admit(*s, Message{h_full});

  Confirmer cfull(x.store), cboot(boot);
  CHECK(cfull.is_confirmed(x.f.id(t6)));
  CHECK(cboot.is_confirmed(x.f.id(t6)));
  ackdag::test::Oracle oracle(x.store);
  CHECK(oracle.confirmed().count(x.f.id(t6)) == 1);
}

TEST_CASE("summaries and commitments recompute independently") {
  Fig8 x;
  Confirmer confirmer(x.store);
  Checkpoint cp = make_checkpoint(confirmer, x.frontier(), x.f.key("maker"));

  // A replica that ingested the same messages in reverse recomputes the
  // identical body and commitment.
  DagStore replica = DagStore::from_genesis(
      Genesis{std::get<Genesis>(x.store.entry(0).msg)});
  std::vector<Message> msgs{Message{x.t1}, Message{x.t5}, Message{x.a2},
                            Message{x.a3}};
  for (auto it = msgs.rbegin(); it != msgs.rend(); ++it) replica.ingest(*it);
  REQUIRE(replica.size() == x.store.size());

  Confirmer rconf(replica);
  CheckpointBody body = summarize_frontier(rconf, x.frontier());
  CHECK(body.summary == cp.summary);
  CHECK(body.stakes == cp.stakes);

  Checkpoint recomputed = cp;
  recomputed.summary = body.summary;
  recomputed.stakes = body.stakes;
  CHECK(checkpoint_commitment(recomputed) == cp.commitment);
  CHECK(checkpoint_is_accurate(rconf, cp));

  // Unknown frontier ids are refused.
  Fixture other;
  other.genesis({{"z1", 4, "w1"}});
  CHECK_THROWS_AS(
      make_checkpoint(confirmer, {other.id(other.genesis({{"z2", 4, "w2"}}))},
                      x.f.key("maker")),
      std::invalid_argument);
}
