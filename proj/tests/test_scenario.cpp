// Scenario runner: the text format that drives whole-world runs.
//
// Covers the parser's rejection paths, the frozen report arithmetic for a
// clean payment, conflicting double-spends, withhold/release gating, the
// checkpoint/bootstrap flow, generation-time budget enforcement, and the
// byte-identical determinism the replay contract promises.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <string>

#include "json.hpp"

#include "ackdag/scenario.hpp"

using namespace ackdag;

namespace {

// Three honest validators at stakes 4/4/2 (M = 10) plus an observing client.
// Coin names double as their owner key names.
const char *kCastBlock = R"(
total 10
genesis c1 4 v1
genesis c2 4 v2
genesis c3 2 v3
validator n1
validator n2
validator n3
observer client
)";

std::string with_cast(const std::string &head, const std::string &tail) {
  return head + kCastBlock + tail;
}

const TxReport &tx_named(const RunReport &r, const std::string &name) {
  for (const TxReport &t : r.txs) {
    if (t.name == name) return t;
  }
  FAIL("no transaction named " << name);
  static TxReport dummy;
  return dummy;
}

}  // namespace

TEST_CASE("parse rejects malformed scenarios with line numbers") {
  auto line_of = [](const std::string &text) -> std::size_t {
    try {
      Scenario::parse(text);
    } catch (const ScenarioError &e) {
      return e.line();
    }
    return 0;  // no throw
  };

  // [TRIVIAL] Unknown verbs, absent genesis, unparsable numbers and
  // duplicate coins are configuration mistakes, not runtime failures.
  CHECK(line_of("scenario x\nfrobnicate y\n") == 2);
  CHECK_THROWS_AS(Scenario::parse("scenario empty\nvalidator n1\n"),
                  ScenarioError);
  CHECK(line_of("scenario x\nseed banana\ngenesis c 1 v\n") == 2);
  CHECK(line_of("genesis c1 4 v1\ngenesis c1 2 v1\n") == 2);
  CHECK(line_of("genesis c1 0 v1\n") == 1);
  CHECK(line_of("fee 1 1 1 1 0\ngenesis c 1 v\n") == 1);
  CHECK(line_of("policy postal\ngenesis c 1 v\n") == 0);
  CHECK(line_of("delay 3\ngenesis c 1 v\n") == 1);

  Scenario ok = Scenario::parse("genesis c1 4 v1\n");
  CHECK_THROWS_AS(ok.override_policy("postal"), ScenarioError);
  CHECK_THROWS_AS(Scenario::parse_file("/nonexistent/path.scn"),
                  ScenarioError);
}

TEST_CASE("clean payment: frozen report arithmetic and renderers") {
  // fee 2 1 1: t1 has one input, two outputs -> fee = 2 + 1*1 + 1*2 = 5.
  // All three validators sign the uncontested payment, so the certificate
  // carries stakes {v1:4, v2:4, v3:2} over M = 10 and the alpha = 1 shares
  // are floor(4*5/10) = 2, 2 and floor(2*5/10) = 1.  [DERIVED]
  std::string text = with_cast("scenario clean-payment\npolicy fifo\nfee 2 1 1\n",
                               R"(
submit client t1 spend c1 make d1:3 d2:1 delegate v1
run
expect t1 confirmed
expect-hop t1 2
expect-signers t1 v1 v2 v3
)");
  Scenario s = Scenario::parse(text);
  CHECK(s.name() == "clean-payment");
  RunReport r = s.run();

  CHECK(r.exit_code() == 0);
  CHECK(r.failures.empty());
  CHECK(r.expectations == 3);
  CHECK(r.safety_ok);
  CHECK_FALSE(r.deadlocked);

  REQUIRE(r.txs.size() == 1);
  const TxReport &t1 = r.txs[0];
  CHECK(t1.name == "t1");
  CHECK(t1.status == TxStatus::Confirmed);
  CHECK(t1.value == 4);
  CHECK(t1.fee == 5);
  REQUIRE(t1.hop.has_value());
  CHECK(*t1.hop == 2);  // body at hop 1, confirming acks at hop 2
  REQUIRE(t1.cert.has_value());
  CHECK(t1.cert->signed_stake == 10);
  CHECK(t1.cert->total_money == 10);
  CHECK(t1.cert->signer_stakes.stakes.size() == 3);

  CHECK(r.charged == 5);
  CHECK(r.accrued == 5);
  CHECK(r.destroyed == 0);
  REQUIRE(r.fee_shares.size() == 3);
  CHECK(r.fee_shares[0] == std::pair<std::string, Money>{"v1", 2});
  CHECK(r.fee_shares[1] == std::pair<std::string, Money>{"v2", 2});
  CHECK(r.fee_shares[2] == std::pair<std::string, Money>{"v3", 1});

  CHECK(r.confirmed_value == 4);
  CHECK(r.unconfirmed_value == 0);
  REQUIRE(r.certificates.size() == 1);
  CHECK(r.certificates[0].first == "t1");

  std::string txt = render_text(r);
  CHECK(txt.find("scenario clean-payment\n") != std::string::npos);
  CHECK(txt.find("policy fifo seed 0 horizon 100000\n") != std::string::npos);
  CHECK(txt.find("tx t1 " + t1.id.short_hex() +
                 " Confirmed hop 2 value 4 fee 5\n") != std::string::npos);
  CHECK(txt.find("fees charged 5 accrued 5 destroyed 0\n") !=
        std::string::npos);
  CHECK(txt.find("share v1 2\n") != std::string::npos);
  CHECK(txt.find("share v3 1\n") != std::string::npos);
  CHECK(txt.find("reconcile confirmed 4 unconfirmed 0 total 4\n") !=
        std::string::npos);
  CHECK(txt.find("safety ok\n") != std::string::npos);
  CHECK(txt.find("expectations 3/3\n") != std::string::npos);
  CHECK(txt.find("verdict PASS\n") != std::string::npos);

  nlohmann::json j = nlohmann::json::parse(render_json(r));
  CHECK(j["scenario"] == "clean-payment");
  CHECK(j["txs"].size() == 1);
  CHECK(j["txs"][0]["status"] == "Confirmed");
  CHECK(j["txs"][0]["hop"] == 2);
  CHECK(j["txs"][0]["certificate"]["signed_stake"] == 10);
  CHECK(j["fees"]["charged"] == 5);
  CHECK(j["fees"]["shares"]["v3"] == 1);
  CHECK(j["reconcile"]["total"] == 4);
  CHECK(j["safety"] == true);
  CHECK(j["verdict"] == "PASS");
}

TEST_CASE("split double-spend stays unconfirmed at an informed observer") {
  // The adversary shows t1 (via v1, stake 4) to one side and t2 (via v2+v3,
  // stake 6) to the other. Neither side reaches 3s > 2M = 20, and the
  // client, who sees everything, reports both sides unconfirmed.
  std::string text = with_cast("scenario split\nreport-node client\n", R"(
adversary adv
send adv t1 spend c1 make d1:4 delegate v1 to n1 client
send adv t2 spend c1 make d2:4 delegate v2 to n2 n3 client
run
expect t1 unconfirmed
expect t2 unconfirmed
expect-at n1 t2 unconfirmed
)");
  RunReport r = Scenario::parse(text).run();
  CHECK(r.exit_code() == 0);
  CHECK(r.safety_ok);
  CHECK(tx_named(r, "t1").status == TxStatus::Unconfirmed);
  CHECK(tx_named(r, "t2").status == TxStatus::Unconfirmed);
  CHECK_FALSE(tx_named(r, "t1").hop.has_value());
  // Both branches of the double-spend count toward unconfirmed value.
  CHECK(r.confirmed_value == 0);
  CHECK(r.unconfirmed_value == 8);
  CHECK(r.charged == 0);
  CHECK(r.certificates.empty());
  CHECK(render_text(r).find("hop -") != std::string::npos);
}

TEST_CASE("unmet expectations fail the run with exit code 1") {
  std::string text = with_cast("scenario wrong-guess\n", R"(
submit client t1 spend c1 make d1:4 delegate v1
run
expect t1 unconfirmed
expect-hop t1 9
)");
  RunReport r = Scenario::parse(text).run();
  CHECK(r.exit_code() == 1);
  CHECK(r.safety_ok);  // a wrong guess is not a safety violation
  REQUIRE(r.failures.size() == 2);
  CHECK(r.failures[0].find("t1 is Confirmed, expected Unconfirmed") !=
        std::string::npos);
  CHECK(r.failures[0].find("line") != std::string::npos);
  std::string txt = render_text(r);
  CHECK(txt.find("verdict FAIL\n") != std::string::npos);
  CHECK(txt.find("expectations 0/2\n") != std::string::npos);
}

TEST_CASE("withheld body confirms only after its release") {
  std::string text = with_cast("scenario withhold\n", R"(
adversary adv
submit client t1 spend c1 make d1:4 delegate v1
withhold adv t2 spend c2 make d2:4 delegate v2 until 0
run
release adv t2
run
expect t1 confirmed
expect t2 confirmed
expect-hop t1 2
expect-hop t2 2
)");
  RunReport r = Scenario::parse(text).run();
  CHECK(r.exit_code() == 0);
  CHECK(tx_named(r, "t1").status == TxStatus::Confirmed);
  CHECK(tx_named(r, "t2").status == TxStatus::Confirmed);
  CHECK(r.confirmed_value == 8);
  CHECK(r.unconfirmed_value == 0);
}

TEST_CASE("checkpoint then bootstrap: the joiner tracks fresh traffic") {
  std::string text = with_cast("scenario bootstrap\nreport-node client\n", R"(
submit client t1 spend c1 make d1:4 delegate v1
run
checkpoint n1 cp1 creator maker
run
bootstrap joiner from cp1
submit client t2 spend d1 make e1:4 delegate v2
run
expect t2 confirmed
expect-at joiner t2 confirmed
expect-at n2 t2 confirmed
)");
  RunReport r = Scenario::parse(text).run();
  CHECK(r.exit_code() == 0);
  CHECK(r.safety_ok);
  CHECK(tx_named(r, "t2").status == TxStatus::Confirmed);
  // t1's body was summarized away when the report node adopted the
  // checkpoint, so its value sits in the unconfirmed bucket afterwards.
  CHECK(r.confirmed_value == 4);
  CHECK(r.unconfirmed_value == 4);
}

TEST_CASE("adversary budget blocks over-endowed scripts at generation") {
  // x0 = 4 of M = 13 is fine (12 < 13); acquiring the honest 5-coin pushes
  // x to 9 and 27 >= 26 violates, before any message is ever delivered.
  std::string text = R"(
scenario budget
total 13
genesis a 4 vA
genesis h 5 v1
genesis h2 4 v2
validator n1
adversary adv
control vA
submit adv t1 spend h make d1:5 delegate vA
run
)";
  CHECK_THROWS_WITH_AS(Scenario::parse(text).run(),
                       doctest::Contains("adversary budget"), ScenarioError);

  // A genesis that already delegates a third of the supply to controlled
  // keys is rejected outright.
  std::string born_bad = R"(
scenario budget0
genesis a 5 vA
genesis h 10 v1
validator n1
control vA
)";
  CHECK_THROWS_WITH_AS(Scenario::parse(born_bad).run(),
                       doctest::Contains("adversary budget"), ScenarioError);
}

TEST_CASE("semantic mistakes surface as ScenarioError, not misbehavior") {
  auto run_of = [](const std::string &tail) {
    return Scenario::parse(with_cast("scenario bad\n", tail)).run();
  };
  CHECK_THROWS_AS(run_of("submit ghost t1 spend c1 make d:4 delegate v1\n"),
                  ScenarioError);
  CHECK_THROWS_AS(run_of("submit client t1 spend nope make d:4 delegate v1\n"),
                  ScenarioError);
  CHECK_THROWS_AS(
      run_of("send client t1 spend c1 make d:4 delegate v1 to ghost\n"),
      ScenarioError);
  CHECK_THROWS_AS(run_of("release client t9\n"), ScenarioError);
  CHECK_THROWS_AS(run_of("expect tqq confirmed\n"), ScenarioError);
  CHECK_THROWS_AS(
      run_of("submit client t1 spend c1 make d:4 delegate v1\nexpect t1 maybe\n"),
      ScenarioError);
  CHECK_THROWS_AS(run_of("bootstrap j from nocp\n"), ScenarioError);
  CHECK_THROWS_AS(Scenario::parse(
                      with_cast("scenario bad\nreport-node ghost\n", "run\n"))
                      .run(),
                  ScenarioError);
}

TEST_CASE("identical seeds replay byte-identical logs and reports") {
  std::string text = with_cast("scenario replay\npolicy random\nseed 7\n", R"(
adversary adv
send adv t1 spend c1 make d1:4 delegate v1 to n1 client
send adv t2 spend c1 make d2:4 delegate v2 to n2 n3 client
submit client t3 spend c2 make e1:4 delegate v3
run
expect t3 confirmed
)");
  Scenario s = Scenario::parse(text);
  RunReport a = s.run();
  RunReport b = s.run();
  CHECK(a.exit_code() == 0);
  CHECK(a.event_log == b.event_log);
  CHECK_FALSE(a.event_log.empty());
  CHECK(render_text(a) == render_text(b));
  CHECK(render_json(a) == render_json(b));
  CHECK(a.steps == b.steps);

  // Overrides reproduce the same world as inline headers.
  Scenario s2 = Scenario::parse(with_cast("scenario replay\n", R"(
adversary adv
send adv t1 spend c1 make d1:4 delegate v1 to n1 client
send adv t2 spend c1 make d2:4 delegate v2 to n2 n3 client
submit client t3 spend c2 make e1:4 delegate v3
run
expect t3 confirmed
)"));
  s2.override_policy("random");
  s2.override_seed(7);
  CHECK(render_text(s2.run()) == render_text(a));
}
