#pragma once

#include <string>
#include <vector>

#include "rme/model.hpp"

namespace rme::testing {

// Run p with normal steps (invoking `inv` at REM) until pc returns to REM or
// reaches `stop`; returns the pcs visited before each step. Every action taken
// is appended to `log` when given.
inline std::vector<std::string> run_solo(Configuration& c, Pid p, Invoke inv, Line stop, const ModelOptions& o = {},
                                         std::vector<Action>* log = nullptr) {
  std::vector<std::string> seen;
  for (int guard = 0; guard < 200; ++guard) {
    const LineId pc = c.proc(p).pc;
    if (!seen.empty() && (pc.line == stop || pc.line == Line::Rem)) break;
    seen.push_back(to_string(pc));
    Action a = pc.line == Line::Rem ? Action{ActionKind::Normal, p, inv} : Action::normal(p);
    c = step(c, a, o).next;
    if (log) log->push_back(a);
  }
  return seen;
}

// Apply `a` and log it.
inline void apply(Configuration& c, const Action& a, std::vector<Action>& log, const ModelOptions& o = {}) {
  c = step(c, a, o).next;
  log.push_back(a);
}

}  // namespace rme::testing
