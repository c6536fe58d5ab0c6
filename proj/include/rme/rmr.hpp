#pragma once

// Remote memory reference accounting under three memory models.
//
// DSM: every variable lives in one process's partition; an access is remote
// iff it is outside the accessor's partition. CC: a read hits if the variable
// is cached, otherwise it is an RMR and installs a copy; every non-read is an
// RMR. Strict CC invalidates all copies on any non-read; relaxed CC only when
// the value actually changes (so a failed CAS leaves copies in place).
//
// Registry operations, atomic in the model, are expanded here into the tree
// node operations an uncontended write or findmin would perform.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rme/model.hpp"
#include "rme/registry.hpp"

namespace rme {

enum class MemoryModel : std::uint8_t { Dsm, StrictCc, RelaxedCc };
inline constexpr std::array<MemoryModel, 3> kAllModels = {MemoryModel::Dsm, MemoryModel::StrictCc,
                                                           MemoryModel::RelaxedCc};

std::string to_string(MemoryModel m);
std::optional<MemoryModel> parse_memory_model(std::string_view s);

/// Partition map and dense variable numbering for n processes.
class VarSpace {
 public:
  explicit VarSpace(int n);

  int n() const { return n_; }
  const TreeLayout& tree() const { return tree_; }
  int size() const { return 3 + 2 * n_ + tree_.node_count(); }
  int index(const VarId& v) const;
  /// DSM owner: token/seq/csowner with pid 1, go[q]/abort[q] with q, tree nodes per layout.
  Pid home(const VarId& v) const;

 private:
  int n_;
  TreeLayout tree_;
};

/// Primitive operations of a model step, registry accesses expanded to nodes.
std::vector<MemOp> expand_ops(const VarSpace& vs, const Configuration& before, const StepEffect& e);

/// Simulated caches for both CC models.
class CacheState {
 public:
  explicit CacheState(const VarSpace& vs);

  /// Classify one operation by `p`; updates caches. True iff it is an RMR.
  bool access(MemoryModel m, Pid p, const MemOp& op);
  void crash(Pid p);
  /// The environment wrote abort[p].
  void environment_write(const VarId& v);
  bool cached(MemoryModel m, Pid p, const VarId& v) const;

 private:
  const VarSpace* vs_;
  // [model (0 strict, 1 relaxed)][pid-1][var]
  std::array<std::vector<std::vector<char>>, 2> lines_;
};

/// RMRs charged to the actor of one step, per model (index = MemoryModel).
using RmrCost = std::array<long, 3>;

struct PassageStats {
  Pid pid = 0;
  int index = 0;          // per-process passage number, from 1
  int attempt = 0;        // attempt number this passage belongs to, 0 if none
  RmrCost rmr{};
  int steps = 0;
  int k = 0;              // point contention: most processes outside (REM and GOOD) at once
  bool ended_by_crash = false;
  bool open = true;
};

struct AttemptStats {
  Pid pid = 0;
  int index = 0;
  RmrCost rmr{};
  int crashes = 0;  // f
  int k = 0;
  int passages = 0;
  bool reached_cs = false;
  // an attempt ends at the next normal return to REM; Cs if it went through the CS
  enum class End : std::uint8_t { Open, Cs, Rem } end = End::Open;
};

/// Processes outside (REM and GOOD).
int point_contention(const Configuration& cfg);

/// Streaming accumulator: feed every step of a run in order.
class RmrAccumulator {
 public:
  explicit RmrAccumulator(int n);

  /// Returns the cost charged to the actor.
  RmrCost feed(const Configuration& before, const Action& a, const StepEffect& e, const Configuration& after);

  const std::vector<PassageStats>& passages() const { return passages_; }
  const std::vector<AttemptStats>& attempts() const { return attempts_; }
  const CacheState& caches() const { return caches_; }
  const VarSpace& space() const { return vs_; }

 private:
  VarSpace vs_;
  CacheState caches_;
  std::vector<PassageStats> passages_;
  std::vector<AttemptStats> attempts_;
  std::vector<int> open_passage_;  // per pid, index into passages_ or -1
  std::vector<int> open_attempt_;
  std::vector<int> passage_count_;
  std::vector<int> attempt_count_;
};

struct RmrSummary {
  std::vector<PassageStats> passages;
  std::vector<AttemptStats> attempts;
};

/// Replay a schedule from initial_config(n) and account every step.
RmrSummary aggregate(int n, const std::vector<Action>& schedule, const ModelOptions& model = {});

}  // namespace rme
