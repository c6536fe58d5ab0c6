#include <doctest.h>

#include "rme/explorer.hpp"
#include "rme/hash.hpp"

using namespace rme;

namespace {

ExploreParams exhaustive(int n, int depth, int crash, int abort) {
  ExploreParams p;
  p.n = n;
  p.max_depth = depth;
  p.crash_budget = crash;
  p.abort_budget = abort;
  p.scheduler = Scheduler::Exhaustive;
  return p;
}

ExploreParams fair(int n, long schedules, std::uint64_t seed) {
  ExploreParams p;
  p.n = n;
  p.scheduler = Scheduler::FairRandom;
  p.schedules = schedules;
  p.seed = seed;
  p.crash_budget = 2;
  p.abort_budget = 1;
  p.budget_scope = BudgetScope::PerAttempt;
  return p;
}

}  // namespace

TEST_CASE("scheduler names round-trip") {
  for (Scheduler s : {Scheduler::Exhaustive, Scheduler::Random, Scheduler::FairRandom})
    CHECK(parse_scheduler(to_string(s)) == s);
  CHECK_FALSE(parse_scheduler("bfs"));
}

TEST_CASE("guard refuses oversized exhaustive runs") {
  CHECK_THROWS_AS(explore_exhaustive(exhaustive(4, 10, 0, 0)), GuardError);
  CHECK_THROWS_AS(explore_exhaustive(exhaustive(2, 65, 0, 0)), GuardError);
  CHECK_THROWS_AS(explore_exhaustive(exhaustive(2, 10, -1, 0)), GuardError);
  CHECK_NOTHROW(explore_exhaustive(exhaustive(1, 4, 0, 0)));
}

TEST_CASE("solo exhaustive run with a crash and an abort is clean") {
  const Report r = explore_exhaustive(exhaustive(1, 20, 1, 1));
  CHECK(r.violations.empty());
  CHECK(r.states_visited > 20);
  CHECK(r.deepest == 20);
}

TEST_CASE("small two-process exhaustive run is clean") {
  const Report r = explore_exhaustive(exhaustive(2, 22, 1, 1));
  CHECK(r.violations.empty());
}

TEST_CASE("larger budgets reach at least as many states") {
  long prev = 0;
  for (auto [c, a] : {std::pair{0, 0}, {1, 0}, {1, 1}, {2, 1}}) {
    const Report r = explore_exhaustive(exhaustive(2, 14, c, a));
    CHECK(r.states_visited >= prev);
    prev = r.states_visited;
  }
}

TEST_CASE("mutations are caught and the counterexample replays") {
  struct Case {
    Mutation m;
    int depth;
  };
  for (Case k : {Case{Mutation::SkipAbortPromote, 18}, Case{Mutation::ExitNoSeqIncrement, 18}}) {
    CAPTURE(to_string(k.m));
    ExploreParams p = exhaustive(2, k.depth, 1, 1);
    p.model.mutation = k.m;
    const Report r = explore_exhaustive(p);
    REQUIRE_FALSE(r.violations.empty());
    const Violation& v = r.violations.front();
    CHECK_FALSE(v.schedule.empty());
    const auto again = monitor_trace(2, v.schedule, p.model);
    CHECK_FALSE(again.empty());
    // the same schedule on the correct model is fine
    CHECK(monitor_trace(2, v.schedule).empty());
  }
}

TEST_CASE("random driver: serial and parallel agree exactly") {
  ExploreParams p = fair(3, 300, 11);
  p.rmr = true;
  const Report a = run_random_serial(p);
  const Report b = run_random_parallel(p);
  CHECK(a.digest == b.digest);
  CHECK(a.transitions == b.transitions);
  CHECK(a.attempts_completed == b.attempts_completed);
  CHECK(a.passages == b.passages);
  CHECK(a.rmr == b.rmr);
  CHECK(a.violations.size() == b.violations.size());
}

TEST_CASE("same seed gives the same report, another seed does not") {
  const ExploreParams p = fair(2, 200, 5);
  CHECK(run_random_parallel(p).digest == run_random_parallel(p).digest);
  ExploreParams q = p;
  q.seed = 6;
  CHECK(run_random_parallel(q).digest != run_random_parallel(p).digest);
}

TEST_CASE("a recorded schedule replays to the same configurations") {
  const ExploreParams p = fair(3, 1, 9);
  for (long i : {0L, 1L, 17L}) {
    const auto acts = schedule_actions(p, i);
    const ScheduleResult r = run_schedule(p, i);
    CHECK(static_cast<long>(acts.size()) == r.steps);
    Configuration c = initial_config(p.n);
    std::vector<std::uint64_t> h1, h2;
    for (const Action& a : acts) {
      c = step(c, a).next;
      h1.push_back(hash64(c));
    }
    c = initial_config(p.n);
    for (const Action& a : acts) {
      c = step(c, a).next;
      h2.push_back(hash64(c));
    }
    CHECK(h1 == h2);
    CHECK(monitor_trace(p.n, acts).empty());
  }
}

TEST_CASE("fair random with crashes: every attempt completes") {
  const Report r = run_random_parallel(fair(3, 500, 3));
  CHECK(r.violations.empty());
  CHECK(r.attempts_completed >= 500 * 3 * 2);
}

TEST_CASE("random driver catches the blind-write mutation") {
  // the race needs the victim to go round twice, so allow more attempts
  ExploreParams p = fair(2, 2000, 1);
  p.model.mutation = Mutation::BlindGoWrite;
  p.crash_budget = 0;
  p.attempt_limit = 6;
  const Report r = run_random_parallel(p);
  CHECK_FALSE(r.violations.empty());
}
