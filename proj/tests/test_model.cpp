#include <doctest.h>

#include "rme/hash.hpp"
#include "rme/model.hpp"
#include "support.hpp"

using namespace rme;

using rme::testing::run_solo;

TEST_CASE("initial configuration") {
  auto c = initial_config(3);
  CHECK(c.shared.token == 1);
  CHECK(c.shared.seq == 1);
  CHECK(c.shared.csowner == CsOwner::free(1));
  for (Pid p = 1; p <= 3; ++p) {
    CHECK(c.go(p) == -1);
    CHECK(c.registry(p) == Pair{p, kInfinity});
    CHECK(c.proc(p).pc == at(Line::Rem));
    CHECK(c.proc(p).tok.poisoned());
  }
}

TEST_CASE("solo try walks the expected lines") {
  auto c = initial_config(2);
  auto lines = run_solo(c, 1, Invoke::Try, Line::Cs);
  const std::vector<std::string> want = {"REM", "T1", "T2", "T3", "T4", "T5", "T5::P1", "T5::P2", "T5::P3",
                                         "T5::P4", "T5::P5", "T5::P6", "T6", "T7"};
  CHECK(lines == want);
  CHECK(c.proc(1).pc == at(Line::Cs));
  CHECK(c.shared.token == 2);
  CHECK(c.go(1) == 0);
  CHECK(c.shared.csowner == CsOwner::owner(1));
  CHECK(c.registry(1) == Pair{1, 1});
}

TEST_CASE("solo exit releases to the next sequence number") {
  auto c = initial_config(2);
  run_solo(c, 1, Invoke::Try, Line::Cs);
  auto lines = run_solo(c, 1, Invoke::None, Line::Rem);
  const std::vector<std::string> want = {"CS", "E1", "E2", "E3", "E4", "E5", "E5::P1", "E5::P2", "E6"};
  CHECK(lines == want);
  CHECK(c.shared.seq == 2);
  CHECK(c.shared.csowner == CsOwner::free(2));
  CHECK(c.go(1) == -1);
  CHECK(c.registry(1) == Pair{1, kInfinity});
  CHECK(c.proc(1).status == Status::Good);
}

TEST_CASE("waiter is promoted by the exiting owner") {
  auto c = initial_config(2);
  run_solo(c, 1, Invoke::Try, Line::Cs);
  // p2 runs its doorway and promote, then spins
  run_solo(c, 2, Invoke::Try, Line::T6);
  CHECK(c.go(2) == 2);
  c = step(c, Action::normal(2)).next;  // ReadGo sees 2
  c = step(c, Action::normal(2)).next;  // ReadAbort sees false
  CHECK(c.proc(2).pc == at(Line::T6));
  run_solo(c, 1, Invoke::None, Line::Rem);
  CHECK(c.shared.csowner == CsOwner::owner(2));
  CHECK(c.go(2) == 0);
  c = step(c, Action::normal(2)).next;
  c = step(c, Action::normal(2)).next;
  CHECK(c.proc(2).pc == at(Line::Cs));
}

TEST_CASE("abort signal leads the spinning process back to REM") {
  auto c = initial_config(2);
  run_solo(c, 1, Invoke::Try, Line::Cs);
  run_solo(c, 2, Invoke::Try, Line::T6);
  CHECK(is_enabled(c, Action::set_abort(2)));
  c = step(c, Action::set_abort(2)).next;
  CHECK(beta(c, 2));
  c = step(c, Action::normal(2)).next;  // ReadGo
  c = step(c, Action::normal(2)).next;  // ReadAbort -> T7
  CHECK(c.hist(2).abort_observed);
  c = step(c, Action::normal(2)).next;  // T7 -> T8
  CHECK(c.proc(2).pc == at(Line::T8));
  auto rest = run_solo(c, 2, Invoke::None, Line::Rem);
  CHECK(rest.front() == "T8");
  CHECK(c.proc(2).pc == at(Line::Rem));
  CHECK(c.go(2) == -1);
  CHECK(c.registry(2) == Pair{2, kInfinity});
  CHECK_FALSE(c.proc(2).abortsig);  // auto-cleared
}

TEST_CASE("crash poisons registers and sets the status by section") {
  auto c = initial_config(1);
  c = step(c, Action::enter_try(1)).next;
  c = step(c, Action::normal(1)).next;
  CHECK_FALSE(c.proc(1).tok.poisoned());
  c = step(c, Action::crash(1)).next;
  CHECK(c.proc(1).tok.poisoned());
  CHECK(c.proc(1).status == Status::RecTry);
  // only recover may be invoked now
  auto acts = enabled_actions(c, 1);
  CHECK(acts.size() == 1);
  CHECK(acts[0] == Action::enter_recover(1));
  auto lines = run_solo(c, 1, Invoke::Recover, Line::Rem);
  CHECK(lines == std::vector<std::string>{"REM", "REC1"});
  CHECK(c.proc(1).status == Status::Good);
}

TEST_CASE("crash in CS then recover returns IN_CS") {
  auto c = initial_config(2);
  run_solo(c, 1, Invoke::Try, Line::Cs);
  c = step(c, Action::crash(1)).next;
  CHECK(c.proc(1).status == Status::RecCs);
  run_solo(c, 1, Invoke::Recover, Line::Cs);
  CHECK(c.proc(1).pc == at(Line::Cs));
  CHECK(c.proc(1).status == Status::Good);
}

TEST_CASE("a second crash keeps the first status") {
  auto c = initial_config(2);
  run_solo(c, 1, Invoke::Try, Line::Cs);
  c = step(c, Action::crash(1)).next;
  c = step(c, Action::enter_recover(1)).next;
  c = step(c, Action::crash(1)).next;
  CHECK(c.proc(1).status == Status::RecCs);
}

TEST_CASE("reading a poisoned register is a model error") {
  Register<Token> r;
  CHECK_THROWS_AS(r.get("tok"), ModelError);
}

TEST_CASE("disabled actions are rejected") {
  auto c = initial_config(2);
  CHECK_THROWS_AS(step(c, Action::normal(1)), ModelError);
  CHECK_THROWS_AS(step(c, Action::crash(1)), ModelError);
  CHECK_THROWS_AS(step(c, Action::set_abort(1)), ModelError);
}

TEST_CASE("mutations change exactly their line") {
  ModelOptions bug;
  bug.mutation = Mutation::ExitNoSeqIncrement;
  auto c = initial_config(1);
  run_solo(c, 1, Invoke::Try, Line::Cs, bug);
  run_solo(c, 1, Invoke::None, Line::Rem, bug);
  CHECK(c.shared.seq == 1);
  CHECK(c.shared.csowner == CsOwner::free(1));
  CHECK(parse_mutation("blind-go-write") == Mutation::BlindGoWrite);
  CHECK_FALSE(parse_mutation("nope").has_value());
}

TEST_CASE("only T2 changes token, only E3 changes seq, only P3 and E4 change csowner") {
  // random walk over a 3-process system
  std::uint64_t x = 99;
  auto c = initial_config(3);
  for (int i = 0; i < 20000; ++i) {
    std::vector<Action> all;
    for (Pid p = 1; p <= 3; ++p)
      for (auto a : enabled_actions(c, p)) all.push_back(a);
    x = x * 6364136223846793005ULL + 1442695040888963407ULL;
    Action a = all[(x >> 33) % all.size()];
    if (a.kind == ActionKind::Crash && (x >> 20) % 8) a = Action::normal(a.pid);
    auto r = step(c, a);
    const Line l = r.effect.line.line;
    if (r.next.shared.token != c.shared.token) CHECK(l == Line::T2);
    if (r.next.shared.seq != c.shared.seq) CHECK(l == Line::E3);
    if (!(r.next.shared.csowner == c.shared.csowner)) CHECK((l == Line::P3 || l == Line::E4));
    CHECK(r.effect.ops.size() <= 1);
    c = r.next;
  }
}

TEST_CASE("fingerprint ignores unbounded ghost counters") {
  auto a = initial_config(2);
  auto b = a;
  b.hist(1).passages = 40;
  CHECK(fingerprint(a) == fingerprint(b));
  b.go(2) = 3;
  CHECK_FALSE(fingerprint(a) == fingerprint(b));
}
