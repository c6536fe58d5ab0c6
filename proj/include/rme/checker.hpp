#pragma once

// Invariant conditions 1-13 over a single configuration, plus the run-level
// properties (mutual exclusion, bounded exit/recovery/abort, FCFS, CSR, no
// trivial aborts) tracked by an incremental monitor over a step sequence.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rme/model.hpp"

namespace rme {

enum class Property : std::uint8_t {
  Cond,
  Mutex,
  BoundedExit,
  FCFS,
  CSR,
  BoundedRecCS,
  BoundedRecExit,
  FastRecRem,
  BoundedRecRem,
  BoundedAbort,
  NoTrivialAbort,
  Progress,
};

std::string to_string(Property p);

struct Violation {
  Property kind = Property::Cond;
  int cond = 0;  // 1..13 when kind == Cond
  Pid pid = 0;
  std::string detail;
  std::vector<Action> schedule;  // replayable prefix from initial_config, if known

  /// "Cond11", "Mutex", "BoundedAbort", ...
  std::string name() const;
};

struct CheckOptions {
  // Condition 11's second conjunct as printed does not list T8 for the peer,
  // although a peer spinning at T6 may read its abort signal and move
  // T7 -> T8 while p sits at P3. With this set the checker accepts T8 there.
  bool cond11_peer_t8 = true;
};

/// Evaluate condition `c` (1..13); nullopt when it holds, otherwise a detail string.
std::optional<std::string> check_condition(const Configuration& cfg, int c, const CheckOptions& opts = {});

/// All failing conditions, plus Mutex when two processes are in the CS.
std::vector<Violation> check_invariant(const Configuration& cfg, const CheckOptions& opts = {});

/// Truth value of every condition, index 1..13 (index 0 unused, always true).
std::array<bool, 14> condition_values(const Configuration& cfg, const CheckOptions& opts = {});

/// Step budgets. Registry writes count as 2*ceil(log2 n)+1 steps (one per node
/// update); findmin is one step.
struct Bounds {
  int registry_write = 1;
  int exit = 0;
  int fast_rem = 2;
  int rec_cs = 0;
  int rec_exit = 0;
  int rec_rem = 0;
  int abort = 0;
};

int ceil_log2(int n);
Bounds bounds(int n);

/// Weight of a step in the bound accounting.
int step_weight(const StepEffect& e, const Bounds& b);

enum class Method : std::uint8_t { None, Try, Exit, Recover };

/// Per-process monitor state; part of the explorer's node identity.
struct ProcMonitor {
  Method method = Method::None;
  int steps = 0;
  Status entry_status = Status::Good;
  bool reported = false;  // bound violation already reported for this method run

  bool abort_latched = false;
  int abort_steps = 0;

  bool ntab_candidate = false;
  bool crashed_in_cs = false;

  bool doorway_done = false;
  bool tainted = false;
  std::uint64_t ahead = 0;  // bit q-1: q must enter CS before this process

  friend bool operator==(const ProcMonitor&, const ProcMonitor&) = default;
};

class Monitor {
 public:
  Monitor() = default;
  explicit Monitor(int n);

  /// Account for one step from `before` to `after`; appends violations.
  void observe(const Configuration& before, const Action& a, const StepEffect& e, const Configuration& after,
               std::vector<Violation>& out);

  const ProcMonitor& proc(Pid p) const { return procs_.at(p - 1); }
  const Bounds& limits() const { return bounds_; }
  void encode(std::vector<std::int64_t>& out) const;

  friend bool operator==(const Monitor&, const Monitor&) = default;

 private:
  Bounds bounds_;
  std::vector<ProcMonitor> procs_;

  void clear_ahead_bit(Pid q);
};

/// Replay `schedule` from initial_config(n) with invariant checks at every
/// configuration and the monitor over every step. Throws ModelError when the
/// schedule is not executable.
std::vector<Violation> monitor_trace(int n, const std::vector<Action>& schedule, const ModelOptions& model = {},
                                     const CheckOptions& check = {});

}  // namespace rme
