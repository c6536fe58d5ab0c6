#pragma once

// Schedule exploration: depth-bounded exhaustive DFS for tiny systems and
// seeded random schedules (optionally fair) for larger ones. The random
// driver runs each schedule independently, so the batch is split across
// OpenMP threads; run_random_serial is the single-threaded reference.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rme/checker.hpp"
#include "rme/model.hpp"

namespace rme {

/// Refusal to run an exploration whose state space the guard rejects.
class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Scheduler : std::uint8_t { Exhaustive, Random, FairRandom };
enum class BudgetScope : std::uint8_t { PerRun, PerAttempt };

std::string to_string(Scheduler s);
std::optional<Scheduler> parse_scheduler(std::string_view s);

struct ExploreParams {
  int n = 2;
  int max_depth = 30;          // exhaustive: actions per path
  int crash_budget = 0;        // per process
  int abort_budget = 0;        // per process (SetAbort injections)
  BudgetScope budget_scope = BudgetScope::PerRun;
  int attempt_limit = 0;       // try invocations per process, 0 = unlimited (random: 2)
  long max_steps = 20000;      // random: action cap per schedule
  Scheduler scheduler = Scheduler::Exhaustive;
  std::uint64_t seed = 1;
  long schedules = 1000;
  double crash_prob = 0.02;    // random: per-step chance of injecting a crash
  double abort_prob = 0.05;    // random: per-step chance of raising abort when eligible
  double recover_prob = 0.05;  // random: chance a GOOD idle process calls recover instead of try
  int depth_ceiling = 64;      // exhaustive guard
  int max_processes = 3;       // exhaustive guard
  int max_violations = 1;
  int threads = 0;             // 0 = OpenMP default
  bool rmr = false;            // random: collect per-passage RMR histograms
  ModelOptions model;
  CheckOptions check;
};

/// Count of passages per RMR value, one map per memory model.
using Histogram = std::map<long, long>;

struct Report {
  long states_visited = 0;
  long transitions = 0;
  long max_frontier = 0;
  long schedules_run = 0;
  long attempts_completed = 0;
  long passages = 0;
  int deepest = 0;
  std::vector<Violation> violations;
  std::map<std::string, Histogram> rmr;
  double wall_seconds = 0;
  std::uint64_t digest = 0;  // order-sensitive fold of per-schedule trace hashes
};

Report explore_exhaustive(const ExploreParams& params);

/// Outcome of one random schedule; pure function of (params, index).
struct ScheduleResult {
  std::vector<Violation> violations;
  long steps = 0;
  long attempts_completed = 0;
  long passages = 0;
  std::uint64_t digest = 0;
  std::map<std::string, Histogram> rmr;
};

ScheduleResult run_schedule(const ExploreParams& params, long index);

/// Actions of schedule `index` (for trace dumps and replay).
std::vector<Action> schedule_actions(const ExploreParams& params, long index);

Report run_random_serial(const ExploreParams& params);
Report run_random_parallel(const ExploreParams& params);

/// Dispatch on params.scheduler; random schedulers use the parallel driver.
Report explore(const ExploreParams& params);

/// Progress budget in actions for one attempt.
long progress_budget(const ExploreParams& params);

}  // namespace rme
