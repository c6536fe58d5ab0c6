// Serial vs OpenMP random exploration, plus one exhaustive run and a native stress run.
// usage: rme_bench [schedules] [n]

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include <omp.h>

#include "rme/explorer.hpp"
#include "rme/native_lock.hpp"
#include "rme/trace.hpp"

using namespace rme;

int main(int argc, char** argv) {
  const long schedules = argc > 1 ? std::atol(argv[1]) : 4000;
  const int n = argc > 2 ? std::atoi(argv[2]) : 4;

  ExploreParams p;
  p.n = n;
  p.scheduler = Scheduler::FairRandom;
  p.schedules = schedules;
  p.crash_budget = 2;
  p.abort_budget = 1;
  p.budget_scope = BudgetScope::PerAttempt;
  p.rmr = true;

  const Report s = run_random_serial(p);
  const Report par = run_random_parallel(p);
  std::printf("fair_random n=%d schedules=%ld actions=%ld\n", n, schedules, s.transitions);
  std::printf("  serial    %8.3f s  %10.0f actions/s  digest %s\n", s.wall_seconds,
              s.transitions / s.wall_seconds, hex64(s.digest).c_str());
  std::printf("  parallel  %8.3f s  %10.0f actions/s  digest %s  (%d threads)\n", par.wall_seconds,
              par.transitions / par.wall_seconds, hex64(par.digest).c_str(), omp_get_max_threads());
  std::printf("  speedup   %.2fx  %s\n", s.wall_seconds / par.wall_seconds,
              s.digest == par.digest ? "identical" : "DIGEST MISMATCH");

  ExploreParams e;
  e.n = 2;
  e.max_depth = 24;
  e.crash_budget = 1;
  e.abort_budget = 1;
  const Report ex = explore_exhaustive(e);
  std::printf("exhaustive n=2 depth=24 (1,1): %ld states, %ld transitions, %.3f s, %.0f states/s\n",
              ex.states_visited, ex.transitions, ex.wall_seconds, ex.states_visited / ex.wall_seconds);

  native::StressParams sp;
  sp.threads = 4;
  sp.passages = 20000;
  const native::StressReport sr = native::run_stress(sp);
  std::printf("native stress 4x20000: %.3f s, %.0f passages/s, %s\n", sr.seconds, sr.passages / sr.seconds,
              sr.ok() ? "ok" : "FAILED");

  return s.digest == par.digest && s.violations.empty() && ex.violations.empty() && sr.ok() ? 0 : 1;
}
