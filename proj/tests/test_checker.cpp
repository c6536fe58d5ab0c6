#include <doctest.h>

#include <algorithm>

#include "rme/checker.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace rme;
using rme::testing::apply;
using rme::testing::run_solo;
using rme::oracle::PathOracle;

namespace {

bool has(const std::vector<Violation>& vs, Property k, int cond = 0) {
  return std::any_of(vs.begin(), vs.end(), [&](const Violation& v) { return v.kind == k && v.cond == cond; });
}

}  // namespace

TEST_CASE("initial configurations satisfy every condition") {
  for (int n : {1, 2, 3, 8}) {
    const auto c = initial_config(n);
    CHECK(check_invariant(c).empty());
    const auto vals = condition_values(c);
    CHECK(std::all_of(vals.begin(), vals.end(), [](bool b) { return b; }));
  }
}

TEST_CASE("two processes in the CS fail Mutex and Condition 7") {
  auto c = initial_config(2);
  run_solo(c, 1, Invoke::Try, Line::Cs);
  REQUIRE(check_invariant(c).empty());
  c.proc(2).pc = at(Line::Cs);
  c.hist(2).in_attempt = false;
  const auto vs = check_invariant(c);
  CHECK(has(vs, Property::Mutex));
  CHECK(has(vs, Property::Cond, 7));
}

TEST_CASE("token zero fails only Condition 1") {
  auto c = initial_config(2);
  c.shared.token = 0;
  const auto vs = check_invariant(c);
  REQUIRE(vs.size() == 1);
  CHECK(vs[0].kind == Property::Cond);
  CHECK(vs[0].cond == 1);
  CHECK(vs[0].name() == "Cond1");
}

TEST_CASE("checker is a pure function of the configuration") {
  auto c = initial_config(3);
  run_solo(c, 2, Invoke::Try, Line::T6);
  const auto a = condition_values(c);
  const auto copy = c;
  CHECK(condition_values(c) == a);
  CHECK(c == copy);
}

TEST_CASE("literal Condition 11 fails when a peer reaches T8 while the promoter sits at P3") {
  std::vector<Action> s;
  s.push_back(Action::enter_try(1));
  for (int i = 0; i < 17; ++i) s.push_back(Action::normal(1));
  s.push_back(Action::enter_try(2));
  for (int i = 0; i < 6; ++i) s.push_back(Action::normal(2));
  for (int i = 0; i < 4; ++i) s.push_back(Action::normal(1));
  for (int i = 0; i < 2; ++i) s.push_back(Action::normal(2));
  s.push_back(Action::set_abort(2));
  s.push_back(Action::normal(2));
  s.push_back(Action::normal(2));
  REQUIRE(s.size() == 34);

  CheckOptions literal;
  literal.cond11_peer_t8 = false;
  const auto bad = monitor_trace(2, s, {}, literal);
  CHECK(has(bad, Property::Cond, 11));

  // the reading the checker uses by default admits the peer at T8
  CHECK(monitor_trace(2, s).empty());

  Configuration c = initial_config(2);
  for (const auto& a : s) c = step(c, a).next;
  CHECK(c.proc(2).pc == at(Line::T8));
  CHECK(c.proc(1).pc.line == Line::P3);
}

TEST_CASE("solo passage has no violations") {
  std::vector<Action> log;
  auto c = initial_config(3);
  run_solo(c, 2, Invoke::Try, Line::Cs, {}, &log);
  run_solo(c, 2, Invoke::None, Line::Rem, {}, &log);
  CHECK(c.proc(2).pc == at(Line::Rem));
  CHECK(monitor_trace(3, log).empty());
}

TEST_CASE("crash in CS then recover returns to the CS with no interloper") {
  std::vector<Action> log;
  auto c = initial_config(2);
  run_solo(c, 1, Invoke::Try, Line::Cs, {}, &log);
  run_solo(c, 2, Invoke::Try, Line::T6, {}, &log);
  apply(c, Action::crash(1), log);
  CHECK(c.proc(1).status == Status::RecCs);
  // the waiter spins but cannot get in
  for (int i = 0; i < 6; ++i) apply(c, Action::normal(2), log);
  CHECK(c.proc(2).pc == at(Line::T6));
  run_solo(c, 1, Invoke::Recover, Line::Cs, {}, &log);
  CHECK(c.proc(1).pc == at(Line::Cs));
  CHECK(c.proc(1).status == Status::Good);
  CHECK(monitor_trace(2, log).empty());
}

TEST_CASE("monitor flags an interloper after a crash in the CS") {
  auto c = initial_config(2);
  Monitor mon(2);
  std::vector<Violation> out;
  auto feed = [&](const Action& a) {
    auto r = step(c, a);
    mon.observe(c, a, r.effect, r.next, out);
    c = std::move(r.next);
  };
  for (int guard = 0; guard < 40 && c.proc(1).pc != at(Line::Cs); ++guard)
    feed(c.proc(1).pc == at(Line::Rem) ? Action::enter_try(1) : Action::normal(1));
  REQUIRE(c.proc(1).pc == at(Line::Cs));
  feed(Action::crash(1));
  REQUIRE(out.empty());
  CHECK(mon.proc(1).crashed_in_cs);

  // hand-made step: p2 jumps from T7 into the CS while csowner = (1,1)
  Configuration before = c;
  before.proc(2).pc = at(Line::T7);
  before.hist(2).in_attempt = true;
  Configuration after = before;
  after.proc(2).pc = at(Line::Cs);
  after.hist(2).in_attempt = false;
  StepEffect e;
  e.actor = 2;
  e.line = at(Line::T7);
  e.ops.push_back({OpKind::Read, {VarKind::Go, 2}, 0, 0, true});
  mon.observe(before, Action::normal(2), e, after, out);
  CHECK(has(out, Property::CSR));
}

TEST_CASE("bounds agree with path counting") {
  for (int n = 1; n <= 16; ++n) {
    CAPTURE(n);
    const PathOracle o(n);
    const Bounds b = bounds(n);
    CHECK(b.registry_write == o.w);
    CHECK(b.exit == o.longest("exit"));
    CHECK(b.abort == o.longest("T1"));
    CHECK(b.rec_rem == o.longest("recover"));
    CHECK(b.rec_exit == o.longest("recover"));
    // REC_CS must come back through A3 into the CS
    CHECK(b.rec_cs == o.longest("recover", [](const std::string& s) { return s == "A4"; }));
    // REC1 and the return to REM
    CHECK(b.fast_rem == o.cost("recover") + o.cost("REC1"));
  }
}

TEST_CASE("fast recovery takes two steps for every n") {
  for (int n : {1, 2, 4, 8, 16}) {
    CAPTURE(n);
    CHECK(bounds(n).fast_rem == 2);
    auto c = initial_config(n);
    int steps = 0;
    c = step(c, Action::enter_recover(n)).next;
    ++steps;
    while (c.proc(n).pc != at(Line::Rem)) {
      c = step(c, Action::normal(n)).next;
      ++steps;
    }
    CHECK(steps == 2);
  }
}

TEST_CASE("recover from REC_CS returns to the CS within its bound") {
  for (int n : {1, 2, 3}) {
    CAPTURE(n);
    std::vector<Action> log;
    auto c = initial_config(n);
    run_solo(c, 1, Invoke::Try, Line::Cs, {}, &log);
    apply(c, Action::crash(1), log);
    const auto seen = run_solo(c, 1, Invoke::Recover, Line::Cs, {}, &log);
    CHECK(c.proc(1).pc == at(Line::Cs));
    // run_solo records one pc per step; the registry write weighs more
    CHECK(static_cast<int>(seen.size()) - 1 + bounds(n).registry_write <= bounds(n).rec_cs);
    CHECK(monitor_trace(n, log).empty());
  }
}
