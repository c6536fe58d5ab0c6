#pragma once

// Executable model of the abortable recoverable mutual exclusion algorithm.
//
// A Configuration is an immutable value: step() returns a fresh successor and
// the list of shared operations the step performed. Every normal step executes
// one program line and touches at most one shared variable, except the two
// registry operations (T4/E1/A1 writes and the P2 findmin), which are atomic
// here and recorded as composite accesses.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rme/common.hpp"
#include "rme/line.hpp"
#include "rme/registry.hpp"

namespace rme {

/// Raised on any use of the model outside its contract (stepping a disabled
/// action, reading a poisoned register). Always a bug in the caller or model.
class ModelError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class Status : std::uint8_t { Good, RecTry, RecCs, RecExit, RecRem };
enum class Section : std::uint8_t { Remainder, Try, Critical, Exit, Recover };
enum class SpinPhase : std::uint8_t { ReadGo, ReadAbort };
enum class AbortCaller : std::uint8_t { None, T8, Rec2 };

std::string to_string(Status s);

/// Volatile register. Empty means POISON: the value a crash leaves behind.
template <class T>
class Register {
 public:
  Register() = default;
  Register(T v) : value_(v) {}  // NOLINT: implicit on purpose

  bool poisoned() const { return !value_.has_value(); }
  void poison() { value_.reset(); }
  const T& get(const char* name) const {
    if (!value_) throw ModelError(std::string("read of poisoned register ") + name);
    return *value_;
  }
  const std::optional<T>& raw() const { return value_; }
  friend bool operator==(const Register&, const Register&) = default;

 private:
  std::optional<T> value_;
};

/// csowner: Free(seq) is (0, seq), Owned(q) is (1, q).
struct CsOwner {
  bool owned = false;
  std::int64_t value = 1;

  static CsOwner free(std::int64_t seq) { return {false, seq}; }
  static CsOwner owner(Pid q) { return {true, q}; }
  bool is_owned_by(Pid q) const { return owned && value == q; }
  /// Single-integer encoding used in traces and MemOps: Free(s) -> s, Owned(q) -> -q.
  std::int64_t encode() const { return owned ? -value : value; }
  friend bool operator==(const CsOwner&, const CsOwner&) = default;
};

std::string to_string(const CsOwner& c);

struct SharedMemory {
  Token token = 1;
  std::int64_t seq = 1;
  CsOwner csowner;
  std::vector<std::int64_t> go;  // go[p - 1]
  std::vector<Pair> registry;    // registry[p - 1]

  friend bool operator==(const SharedMemory&, const SharedMemory&) = default;
};

struct ProcessState {
  LineId pc;
  AbortCaller abort_from = AbortCaller::None;
  SpinPhase spin = SpinPhase::ReadGo;
  Register<Token> tok;
  Register<std::int64_t> myseq;
  Register<Pid> peer;
  Register<std::int64_t> mygo;
  Register<int> bit;
  Register<bool> isaborting;
  Register<Token> min_tok;  // token returned by findmin at P2
  Status status = Status::Good;
  bool abortsig = false;

  friend bool operator==(const ProcessState&, const ProcessState&) = default;
};

/// Ghost bookkeeping per process; never read by the algorithm.
struct History {
  int passages = 0;
  int attempts = 0;
  int steps_in_attempt = 0;
  int crashes_in_attempt = 0;
  bool in_attempt = false;
  bool abort_observed = false;  // T6 saw abortsig in the current attempt

  friend bool operator==(const History&, const History&) = default;
};

struct Configuration {
  SharedMemory shared;
  std::vector<ProcessState> procs;  // procs[p - 1]
  std::vector<History> history;     // history[p - 1]

  int n() const { return static_cast<int>(procs.size()); }
  ProcessState& proc(Pid p) { return procs.at(p - 1); }
  const ProcessState& proc(Pid p) const { return procs.at(p - 1); }
  History& hist(Pid p) { return history.at(p - 1); }
  const History& hist(Pid p) const { return history.at(p - 1); }
  std::int64_t& go(Pid p) { return shared.go.at(p - 1); }
  std::int64_t go(Pid p) const { return shared.go.at(p - 1); }
  Pair& registry(Pid p) { return shared.registry.at(p - 1); }
  const Pair& registry(Pid p) const { return shared.registry.at(p - 1); }

  friend bool operator==(const Configuration&, const Configuration&) = default;
};

enum class ActionKind : std::uint8_t { Normal, Crash, SetAbort, ClearAbort };
/// Which method a normal step at REM invokes.
enum class Invoke : std::uint8_t { None, Try, Recover };

struct Action {
  ActionKind kind = ActionKind::Normal;
  Pid pid = 1;
  Invoke invoke = Invoke::None;

  static Action normal(Pid p) { return {ActionKind::Normal, p, Invoke::None}; }
  static Action enter_try(Pid p) { return {ActionKind::Normal, p, Invoke::Try}; }
  static Action enter_recover(Pid p) { return {ActionKind::Normal, p, Invoke::Recover}; }
  static Action crash(Pid p) { return {ActionKind::Crash, p, Invoke::None}; }
  static Action set_abort(Pid p) { return {ActionKind::SetAbort, p, Invoke::None}; }
  static Action clear_abort(Pid p) { return {ActionKind::ClearAbort, p, Invoke::None}; }

  friend bool operator==(const Action&, const Action&) = default;
};

std::string to_string(const Action& a);
std::string to_string(ActionKind k);

/// Atomic registry access performed by one model step.
struct RegistryAccess {
  enum class Kind : std::uint8_t { None, Write, FindMin };
  Kind kind = Kind::None;
  Pid writer = 0;
  Pair before;  // write: old cell value
  Pair value;   // write: new cell value; findmin: result
};

struct StepEffect {
  Pid actor = 0;
  ActionKind kind = ActionKind::Normal;
  LineId line;  // pc before the step
  std::vector<MemOp> ops;
  RegistryAccess registry;

  bool composite() const { return registry.kind != RegistryAccess::Kind::None; }
  bool was_crash() const { return kind == ActionKind::Crash; }
};

/// Seeded bugs used to measure the checker's power.
enum class Mutation : std::uint8_t {
  None,
  BlindGoWrite,        // P6 writes go[peer] := 0 instead of the CAS
  SkipAbortPromote,    // A2 falls through to A3 without promote(true)
  ExitNoSeqIncrement,  // E3 skipped and E4 writes Free(myseq)
};

std::string to_string(Mutation m);
std::optional<Mutation> parse_mutation(std::string_view s);

/// Environment behaviour for the abort signal.
struct AbortPolicy {
  bool auto_clear = true;       // abortsig drops when p re-enters REM normally
  bool explicit_clear = false;  // ClearAbort actions are offered

  friend bool operator==(const AbortPolicy&, const AbortPolicy&) = default;
};

struct ModelOptions {
  Mutation mutation = Mutation::None;
  AbortPolicy abort_policy;
};

Configuration initial_config(int n);

/// Section p is in, with promote/abort attributed to their caller's section.
Section section_of(const ProcessState& s);

/// beta(p): abortsig_p is true and p is in try, or in recover with status REC_TRY.
bool abort_eligible(const ProcessState& s);
bool beta(const Configuration& cfg, Pid p);

std::vector<Action> enabled_actions(const Configuration& cfg, Pid p, const ModelOptions& opts = {});
bool is_enabled(const Configuration& cfg, const Action& a, const ModelOptions& opts = {});

struct StepResult {
  Configuration next;
  StepEffect effect;
};

StepResult step(const Configuration& cfg, const Action& a, const ModelOptions& opts = {});

}  // namespace rme
