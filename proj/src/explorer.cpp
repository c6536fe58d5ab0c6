#include "rme/explorer.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <random>
#include <unordered_map>

#include "rme/hash.hpp"
#include "rme/rmr.hpp"

namespace rme {

std::string to_string(Scheduler s) {
  switch (s) {
    case Scheduler::Exhaustive: return "exhaustive";
    case Scheduler::Random: return "random";
    case Scheduler::FairRandom: return "fair_random";
  }
  return "?";
}

std::optional<Scheduler> parse_scheduler(std::string_view s) {
  for (Scheduler x : {Scheduler::Exhaustive, Scheduler::Random, Scheduler::FairRandom})
    if (to_string(x) == s) return x;
  return std::nullopt;
}

long progress_budget(const ExploreParams& p) {
  const long rounds = 50L * p.n * (p.crash_budget + 1);
  return rounds * p.n;
}

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fold(std::uint64_t acc, std::uint64_t v) { return splitmix(acc ^ v); }

// ---------------------------------------------------------------- exhaustive

class Dfs {
 public:
  explicit Dfs(const ExploreParams& p) : p_(p) {}

  Report run() {
    const auto t0 = Clock::now();
    Node root{initial_config(p_.n), Monitor(p_.n), std::vector<int>(p_.n), std::vector<int>(p_.n),
              std::vector<int>(p_.n)};
    for (auto& v : check_invariant(root.cfg, p_.check)) record(v);
    visited_.emplace(key(root), 0);
    if (report_.violations.empty()) visit(root, 0);
    report_.states_visited = static_cast<long>(visited_.size());
    report_.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    std::uint64_t d = 0;
    for (const auto& v : report_.violations) d = fold(d, v.schedule.size());
    report_.digest = fold(d, static_cast<std::uint64_t>(report_.states_visited));
    return std::move(report_);
  }

 private:
  struct Node {
    Configuration cfg;
    Monitor mon;
    std::vector<int> crashes;
    std::vector<int> aborts;
    std::vector<int> attempts;
  };

  const ExploreParams& p_;
  Report report_;
  std::unordered_map<Fingerprint, int, FingerprintHash> visited_;
  std::vector<Action> path_;
  std::vector<std::int64_t> words_;

  bool full() const { return static_cast<int>(report_.violations.size()) >= p_.max_violations; }

  void record(Violation v) {
    if (full()) return;
    v.schedule = path_;
    report_.violations.push_back(std::move(v));
  }

  Fingerprint key(const Node& n) {
    words_.clear();
    encode(n.cfg, words_);
    n.mon.encode(words_);
    for (Pid q = 0; q < p_.n; ++q) {
      words_.push_back(n.crashes[q]);
      words_.push_back(n.aborts[q]);
      if (p_.attempt_limit > 0) words_.push_back(n.attempts[q]);
    }
    return fingerprint_words(words_);
  }

  bool allowed(const Node& n, const Action& a) const {
    const int q = a.pid - 1;
    switch (a.kind) {
      case ActionKind::Crash: return n.crashes[q] < p_.crash_budget;
      case ActionKind::SetAbort:
      case ActionKind::ClearAbort: return n.aborts[q] < p_.abort_budget;
      case ActionKind::Normal: return a.invoke != Invoke::Try || p_.attempt_limit == 0 || n.attempts[q] < p_.attempt_limit;
    }
    return false;
  }

  void visit(const Node& node, int depth) {
    if (depth >= p_.max_depth || full()) return;
    report_.max_frontier = std::max<long>(report_.max_frontier, depth + 1);
    report_.deepest = std::max(report_.deepest, depth + 1);
    for (Pid q = 1; q <= p_.n; ++q) {
      for (const Action& a : enabled_actions(node.cfg, q, p_.model)) {
        if (!allowed(node, a)) continue;
        if (full()) return;
        ++report_.transitions;
        auto r = step(node.cfg, a, p_.model);
        Node child{std::move(r.next), node.mon, node.crashes, node.aborts, node.attempts};
        if (a.kind == ActionKind::Crash) ++child.crashes[q - 1];
        if (a.kind == ActionKind::SetAbort || a.kind == ActionKind::ClearAbort) ++child.aborts[q - 1];
        if (a.invoke == Invoke::Try) ++child.attempts[q - 1];
        std::vector<Violation> found;
        child.mon.observe(node.cfg, a, r.effect, child.cfg, found);
        for (auto& v : check_invariant(child.cfg, p_.check)) found.push_back(std::move(v));
        path_.push_back(a);
        if (!found.empty()) {
          for (auto& v : found) record(std::move(v));
        } else {
          auto [it, fresh] = visited_.try_emplace(key(child), depth + 1);
          if (fresh || it->second > depth + 1) {
            it->second = depth + 1;
            visit(child, depth + 1);
          }
        }
        path_.pop_back();
      }
    }
  }
};

// ------------------------------------------------------------------- random

class RandomRun {
 public:
  RandomRun(const ExploreParams& p, long index)
      : p_(p),
        rng_(splitmix(p.seed ^ splitmix(static_cast<std::uint64_t>(index) + 1))),
        cfg_(initial_config(p.n)),
        mon_(p.n),
        crashes_(p.n, 0),
        aborts_(p.n, 0),
        attempts_(p.n, 0),
        last_run_(p.n, 0),
        attempt_start_(p.n, -1) {
    if (p.rmr) acc_.emplace(p.n);
  }

  ScheduleResult run(std::vector<Action>* record) {
    ScheduleResult out;
    const int quota = p_.attempt_limit > 0 ? p_.attempt_limit : 2;
    const bool fair = p_.scheduler == Scheduler::FairRandom;
    const long window = 4L * p_.n;
    const long budget = progress_budget(p_);
    std::vector<Action> local;
    std::vector<Action>& trace = record ? *record : local;
    std::uniform_real_distribution<double> coin(0.0, 1.0);

    for (long t = 0; t < p_.max_steps; ++t) {
      std::vector<Pid> want;
      for (Pid q = 1; q <= p_.n; ++q) {
        const ProcessState& s = cfg_.proc(q);
        const bool idle = s.pc == at(Line::Rem) && s.status == Status::Good;
        if (!idle || attempts_[q - 1] < quota) want.push_back(q);
      }
      if (want.empty()) break;
      Pid q = want[rng_() % want.size()];
      if (fair) {
        Pid starved = 0;
        long gap = -1;
        for (Pid c : want) {
          const ProcessState& s = cfg_.proc(c);
          if (s.pc == at(Line::Rem) && s.status == Status::Good) continue;
          if (t - last_run_[c - 1] > gap) gap = t - last_run_[c - 1], starved = c;
        }
        if (starved && gap >= window) q = starved;
      }
      last_run_[q - 1] = t;
      const Action a = choose(q, coin, quota);
      trace.push_back(a);

      auto r = step(cfg_, a, p_.model);
      std::vector<Violation> found;
      mon_.observe(cfg_, a, r.effect, r.next, found);
      for (auto& v : check_invariant(r.next, p_.check)) found.push_back(std::move(v));
      if (acc_) acc_->feed(cfg_, a, r.effect, r.next);
      const bool was_in = cfg_.hist(q).in_attempt;
      cfg_ = std::move(r.next);
      ++out.steps;
      out.digest = fold(out.digest, hash64(cfg_));

      if (a.invoke == Invoke::Try) {
        ++attempts_[q - 1];
        attempt_start_[q - 1] = t;
        if (p_.budget_scope == BudgetScope::PerAttempt) crashes_[q - 1] = aborts_[q - 1] = 0;
      }
      if (a.invoke != Invoke::None) ++out.passages;
      if (was_in && !cfg_.hist(q).in_attempt) {
        ++out.attempts_completed;
        attempt_start_[q - 1] = -1;
      }
      if (fair) {
        for (Pid c = 1; c <= p_.n; ++c)
          if (attempt_start_[c - 1] >= 0 && t - attempt_start_[c - 1] > budget)
            found.push_back(Violation{Property::Progress, 0, c,
                                      "attempt open for more than " + std::to_string(budget) + " actions", {}});
      }
      if (!found.empty()) {
        for (auto& v : found) {
          v.schedule = trace;
          out.violations.push_back(std::move(v));
        }
        break;
      }
    }
    if (fair && out.violations.empty()) {
      for (Pid c = 1; c <= p_.n; ++c)
        if (attempt_start_[c - 1] >= 0)
          out.violations.push_back(Violation{Property::Progress, 0, c, "attempt still open at the action cap", trace});
    }
    if (acc_) {
      for (const PassageStats& ps : acc_->passages())
        for (MemoryModel m : kAllModels) ++out.rmr[to_string(m)][ps.rmr[static_cast<int>(m)]];
    }
    return out;
  }

 private:
  const ExploreParams& p_;
  std::mt19937_64 rng_;
  Configuration cfg_;
  Monitor mon_;
  std::optional<RmrAccumulator> acc_;
  std::vector<int> crashes_;
  std::vector<int> aborts_;
  std::vector<int> attempts_;
  std::vector<long> last_run_;
  std::vector<long> attempt_start_;

  template <class Coin>
  Action choose(Pid q, Coin& coin, int quota) {
    const ProcessState& s = cfg_.proc(q);
    if (!s.abortsig && abort_eligible(s) && aborts_[q - 1] < p_.abort_budget && coin(rng_) < p_.abort_prob) {
      ++aborts_[q - 1];
      return Action::set_abort(q);
    }
    if (s.pc != at(Line::Rem) && crashes_[q - 1] < p_.crash_budget && coin(rng_) < p_.crash_prob) {
      ++crashes_[q - 1];
      return Action::crash(q);
    }
    if (s.pc == at(Line::Rem)) {
      if (s.status != Status::Good) return Action::enter_recover(q);
      if (attempts_[q - 1] >= quota || coin(rng_) < p_.recover_prob) return Action::enter_recover(q);
      return Action::enter_try(q);
    }
    return Action::normal(q);
  }
};

constexpr long kBlock = 4096;

void merge(Report& rep, ScheduleResult&& r, int max_violations) {
  ++rep.schedules_run;
  rep.transitions += r.steps;
  rep.attempts_completed += r.attempts_completed;
  rep.passages += r.passages;
  rep.digest = fold(rep.digest, r.digest);
  for (auto& v : r.violations)
    if (static_cast<int>(rep.violations.size()) < max_violations) rep.violations.push_back(std::move(v));
  for (auto& [model, h] : r.rmr)
    for (auto [cost, count] : h) rep.rmr[model][cost] += count;
}

template <bool Parallel>
Report run_random(const ExploreParams& p) {
  if (p.n < 1 || p.n > 64) throw GuardError("random exploration supports 1..64 processes");
  const auto t0 = Clock::now();
  Report rep;
  std::vector<ScheduleResult> block;
  for (long base = 0; base < p.schedules; base += kBlock) {
    const long len = std::min(kBlock, p.schedules - base);
    block.assign(static_cast<std::size_t>(len), ScheduleResult{});
    if constexpr (Parallel) {
      if (p.threads > 0) omp_set_num_threads(p.threads);
#pragma omp parallel for schedule(dynamic, 16)
      for (long i = 0; i < len; ++i) block[i] = run_schedule(p, base + i);
    } else {
      for (long i = 0; i < len; ++i) block[i] = run_schedule(p, base + i);
    }
    for (auto& r : block) merge(rep, std::move(r), p.max_violations);
    if (static_cast<int>(rep.violations.size()) >= p.max_violations) break;
  }
  rep.states_visited = rep.transitions;
  rep.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return rep;
}

}  // namespace

Report explore_exhaustive(const ExploreParams& p) {
  if (p.n < 1 || p.n > p.max_processes)
    throw GuardError("exhaustive exploration refused: n=" + std::to_string(p.n) + " exceeds " +
                     std::to_string(p.max_processes));
  if (p.max_depth < 0 || p.max_depth > p.depth_ceiling)
    throw GuardError("exhaustive exploration refused: depth " + std::to_string(p.max_depth) + " exceeds ceiling " +
                     std::to_string(p.depth_ceiling));
  if (p.crash_budget < 0 || p.abort_budget < 0) throw GuardError("budgets must be non-negative");
  return Dfs(p).run();
}

ScheduleResult run_schedule(const ExploreParams& p, long index) { return RandomRun(p, index).run(nullptr); }

std::vector<Action> schedule_actions(const ExploreParams& p, long index) {
  std::vector<Action> out;
  RandomRun(p, index).run(&out);
  return out;
}

Report run_random_serial(const ExploreParams& p) { return run_random<false>(p); }
Report run_random_parallel(const ExploreParams& p) { return run_random<true>(p); }

Report explore(const ExploreParams& p) {
  return p.scheduler == Scheduler::Exhaustive ? explore_exhaustive(p) : run_random_parallel(p);
}

}  // namespace rme
