#pragma once

// JSON-lines traces. The first line is a header naming the process count and
// model/check options (and the violation that produced the trace, if any);
// every following line is one step:
//   {"idx":0,"actor":1,"kind":"normal","invoke":"try","line":"REM",
//    "reads":[...],"writes":[...],"post_hash":"3f0c..."}
// `line` is the actor's pc before the step. Replay re-executes the actions and
// compares every post_hash.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rme/checker.hpp"
#include "rme/model.hpp"

namespace rme {

/// Unreadable or inconsistent trace file.
class TraceFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TraceHeader {
  int n = 1;
  ModelOptions model;
  CheckOptions check;
  std::optional<std::string> violation;  // Violation::name() of the recorded failure
  std::string detail;
};

struct TraceStep {
  Action action;
  std::string line;
  std::uint64_t post_hash = 0;
};

struct Trace {
  TraceHeader header;
  std::vector<TraceStep> steps;

  std::vector<Action> actions() const;
};

/// Execute `schedule` from initial_config and write header plus one line per step.
void write_trace(std::ostream& out, const TraceHeader& header, const std::vector<Action>& schedule);

Trace read_trace(std::istream& in);
Trace read_trace_file(const std::string& path);

struct ReplayResult {
  bool hashes_match = true;
  long first_mismatch = -1;  // step index
  std::string mismatch;
  std::vector<Violation> violations;  // from the checker and monitor on the replayed run
};

/// Re-execute and compare. Throws TraceFormatError if an action is not executable.
ReplayResult replay(const Trace& t);

std::string hex64(std::uint64_t v);

}  // namespace rme
