#pragma once

// The abortable recoverable lock on real std::atomic words.
//
// Crashes are simulated: a Hooks object is consulted before every shared
// memory operation and may throw SimulatedCrash. The session then forgets its
// locals, records the crash status the way the system would, and rethrows;
// the caller must come back through recover(). Persistent state (everything
// the algorithm keeps in shared memory, plus status) lives in the lock.

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "rme/common.hpp"
#include "rme/registry.hpp"

namespace rme::native {

struct SimulatedCrash {
  std::string_view point;
};

/// Misuse of the lock protocol (wrong method for the current section/status).
class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class Outcome : std::uint8_t { InCs, InRem };
enum class Status : std::uint8_t { Good, RecTry, RecCs, RecExit, RecRem };
enum class Section : std::uint8_t { Remainder, Try, Critical, Exit, Recover };

struct NullHooks {
  void at(Pid, std::string_view) {}
};

/// Every label a hook can see, in program order.
inline const std::vector<std::string_view>& crash_points() {
  static const std::vector<std::string_view> pts = {
      "T1",     "T2",     "T3",     "T4",     "T5::P1", "T5::P2", "T5::P3", "T5::P4", "T5::P5", "T5::P6",
      "T6",     "T7",     "CS",     "E1",     "E2",     "E3",     "E4",     "E5::P1", "E5::P2", "E5::P3",
      "E5::P4", "E5::P5", "E5::P6", "E6",     "REC1",   "A1",     "A2::P1", "A2::P2", "A2::P3", "A2::P4",
      "A2::P5", "A2::P6", "A3",     "A4"};
  return pts;
}

template <class Hooks = NullHooks>
class RecoverableLock {
  static constexpr std::uint64_t kOwned = std::uint64_t{1} << 63;

  struct alignas(64) Slot {
    std::atomic<std::int64_t> go{-1};
    std::atomic<bool> abort{false};
    std::atomic<Status> status{Status::Good};
    std::atomic<Section> section{Section::Remainder};
    std::atomic<bool> live{false};
  };

 public:
  class Session;

  explicit RecoverableLock(int n, Hooks hooks = {})
      : n_(n), layout_(n), cells_(layout_), slots_(std::make_unique<Slot[]>(n)), hooks_(std::move(hooks)) {}

  int processes() const { return n_; }
  Hooks& hooks() { return hooks_; }

  /// The unique handle through which process p runs the lock.
  Session session(Pid p) { return Session(*this, p); }

  void set_abort(Pid p, bool on) { slot(p).abort.store(on); }
  Status status(Pid p) const { return slot(p).status.load(); }
  Section section(Pid p) const { return slot(p).section.load(); }
  std::int64_t go(Pid p) const { return slot(p).go.load(); }
  std::int64_t token() const { return token_.load(); }
  std::int64_t seq() const { return seq_.load(); }
  /// csowner in the model's single-integer encoding: Free(s) -> s, Owned(q) -> -q.
  std::int64_t csowner() const {
    const std::uint64_t w = csowner_.load();
    return w & kOwned ? -static_cast<std::int64_t>(w & ~kOwned) : static_cast<std::int64_t>(w);
  }
  Pair findmin() const { return unpack(cells_.load(TreeLayout::root())); }
  Pair registry(Pid p) const { return unpack(cells_.load(layout_.leaf(p))); }

  class Session {
   public:
    Session(Session&& o) noexcept : lock_(o.lock_), p_(o.p_) { o.lock_ = nullptr; }
    Session& operator=(Session&&) = delete;
    ~Session() {
      if (lock_) lock_->slot(p_).live.store(false);
    }

    Pid pid() const { return p_; }

    Outcome try_enter() {
      Slot& s = me();
      if (s.status.load() != Status::Good || s.section.load() != Section::Remainder)
        throw ProtocolError("try_enter requires status GOOD in the remainder");
      s.section.store(Section::Try);
      return guarded([&] {
        at("T1");
        std::int64_t tok = L().token_.load();
        if (tok >= kInfinity - 1) throw std::overflow_error("token space exhausted");
        at("T2");
        std::int64_t expect = tok;
        L().token_.compare_exchange_strong(expect, tok + 1);
        at("T3");
        s.go.store(tok);
        registry_write(Pair{p_, tok}, "T4");
        promote(false, 0);
        for (;;) {
          at("T6");
          if (s.go.load() == 0) break;
          at("T6");
          if (s.abort.load()) break;
          std::this_thread::yield();
        }
        at("T7");
        if (s.go.load() == 0) {
          s.section.store(Section::Critical);
          return Outcome::InCs;
        }
        return abort_proc();
      });
    }

    void exit() {
      Slot& s = me();
      if (s.section.load() != Section::Critical) throw ProtocolError("exit outside the critical section");
      s.section.store(Section::Exit);
      guarded([&] {
        registry_write(Pair{p_, kInfinity}, "E1");
        at("E2");
        const std::int64_t myseq = L().seq_.load();
        if (myseq >= (std::int64_t{1} << 62)) throw std::overflow_error("seq space exhausted");
        at("E3");
        L().seq_.store(myseq + 1);
        at("E4");
        L().csowner_.store(static_cast<std::uint64_t>(myseq + 1));
        promote(false, 1);
        at("E6");
        s.go.store(-1);
        s.section.store(Section::Remainder);
        return Outcome::InRem;
      });
    }

    Outcome recover() {
      Slot& s = me();
      if (s.section.load() != Section::Remainder) throw ProtocolError("recover must be called from the remainder");
      s.section.store(Section::Recover);
      return guarded([&] {
        at("REC1");
        Outcome r = s.go.load() == -1 ? Outcome::InRem : abort_proc();
        s.status.store(Status::Good);
        s.section.store(r == Outcome::InCs ? Section::Critical : Section::Remainder);
        return r;
      });
    }

    /// Crash while in the critical section (no shared access to hook there).
    void crash() { on_crash(); }

   private:
    friend class RecoverableLock;
    Session(RecoverableLock& l, Pid p) : lock_(&l), p_(p) {
      if (p < 1 || p > l.n_) throw std::out_of_range("pid out of range");
      if (l.slot(p).live.exchange(true)) throw ProtocolError("a session for this pid is already live");
    }

    RecoverableLock* lock_;
    Pid p_;

    RecoverableLock& L() { return *lock_; }
    Slot& me() { return L().slot(p_); }
    void at(std::string_view label) { L().hooks_.at(p_, label); }

    template <class F>
    Outcome guarded(F&& body) {
      try {
        return body();
      } catch (const SimulatedCrash&) {
        on_crash();
        throw;
      }
    }

    void on_crash() {
      Slot& s = me();
      if (s.status.load() == Status::Good) {
        switch (s.section.load()) {
          case Section::Try: s.status.store(Status::RecTry); break;
          case Section::Critical: s.status.store(Status::RecCs); break;
          case Section::Exit: s.status.store(Status::RecExit); break;
          case Section::Recover: s.status.store(Status::RecRem); break;
          case Section::Remainder: break;
        }
      }
      s.section.store(Section::Remainder);
    }

    void registry_write(Pair v, std::string_view label) {
      RegistryWrite w(L().layout_, p_, v);
      while (!w.done()) {
        at(label);
        w.step(L().cells_);
      }
    }

    Outcome abort_proc() {
      Slot& s = me();
      registry_write(Pair{p_, kInfinity}, "A1");
      promote(true, 2);
      at("A3");
      if (L().csowner_.load() == (kOwned | static_cast<std::uint64_t>(p_))) {
        s.section.store(Section::Critical);
        return Outcome::InCs;
      }
      at("A4");
      s.go.store(-1);
      s.section.store(Section::Remainder);
      return Outcome::InRem;
    }

    // caller: 0 = T5, 1 = E5, 2 = A2
    void promote(bool isaborting, int caller) {
      static constexpr std::string_view kLabels[3][6] = {
          {"T5::P1", "T5::P2", "T5::P3", "T5::P4", "T5::P5", "T5::P6"},
          {"E5::P1", "E5::P2", "E5::P3", "E5::P4", "E5::P5", "E5::P6"},
          {"A2::P1", "A2::P2", "A2::P3", "A2::P4", "A2::P5", "A2::P6"}};
      const auto& lbl = kLabels[caller];
      RecoverableLock& l = L();
      at(lbl[0]);
      const std::uint64_t cs = l.csowner_.load();
      Pid peer;
      if (cs & kOwned) {
        peer = static_cast<Pid>(cs & ~kOwned);
      } else {
        const std::uint64_t myseq = cs;
        at(lbl[1]);
        const Pair m = unpack(l.cells_.load(TreeLayout::root()));
        peer = m.pid;
        if (m.is_infinite()) {
          if (!isaborting) return;
          peer = p_;
        }
        at(lbl[2]);
        std::uint64_t expect = myseq;
        if (!l.csowner_.compare_exchange_strong(expect, kOwned | static_cast<std::uint64_t>(peer))) return;
      }
      at(lbl[3]);
      std::int64_t mygo = l.slot(peer).go.load();
      if (mygo == -1 || mygo == 0) return;
      at(lbl[4]);
      if (l.csowner_.load() != (kOwned | static_cast<std::uint64_t>(peer))) return;
      at(lbl[5]);
      l.slot(peer).go.compare_exchange_strong(mygo, 0);
    }
  };

 private:
  int n_;
  TreeLayout layout_;
  AtomicCells cells_;
  std::atomic<std::int64_t> token_{1};
  std::atomic<std::int64_t> seq_{1};
  std::atomic<std::uint64_t> csowner_{1};
  std::unique_ptr<Slot[]> slots_;
  Hooks hooks_;

  Slot& slot(Pid p) {
    if (p < 1 || p > n_) throw std::out_of_range("pid out of range");
    return slots_[p - 1];
  }
  const Slot& slot(Pid p) const {
    if (p < 1 || p > n_) throw std::out_of_range("pid out of range");
    return slots_[p - 1];
  }
};

// ----------------------------------------------------------------- stress

struct StressParams {
  int threads = 8;
  long passages = 100000;   // try invocations per thread
  double crash_rate = 0.01;  // chance a passage (or a recovery after a crash) is armed with one crash point
  double abort_rate = 0.01;  // chance the abort signal is raised before try
  std::uint64_t seed = 1;
  double stall_seconds = 20;  // watchdog: no progress for this long counts as deadlock
  /// Relative weights per crash point; empty means uniform.
  std::vector<std::pair<std::string, double>> point_weights;
};

struct StressReport {
  long passages = 0;
  long cs_entries = 0;
  long counter = 0;
  long crashes = 0;
  long crashes_in_cs = 0;
  long aborts_requested = 0;
  long aborted = 0;  // try returned IN_REM
  long recoveries = 0;
  long mutex_violations = 0;
  long csr_violations = 0;
  std::map<std::string, long> crashes_by_point;
  bool deadlock = false;
  double seconds = 0;

  bool ok() const { return !deadlock && mutex_violations == 0 && csr_violations == 0 && counter == cs_entries; }
};

/// Parse "label:weight,label:weight" (the RME_CRASH_POINTS format).
std::vector<std::pair<std::string, double>> parse_point_weights(std::string_view spec);

StressReport run_stress(const StressParams& params);

}  // namespace rme::native
