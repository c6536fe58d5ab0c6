#include "rme/rmr.hpp"

#include <stdexcept>

namespace rme {

std::string to_string(MemoryModel m) {
  switch (m) {
    case MemoryModel::Dsm: return "dsm";
    case MemoryModel::StrictCc: return "strict-cc";
    case MemoryModel::RelaxedCc: return "relaxed-cc";
  }
  return "?";
}

std::optional<MemoryModel> parse_memory_model(std::string_view s) {
  for (MemoryModel m : kAllModels)
    if (to_string(m) == s) return m;
  return std::nullopt;
}

VarSpace::VarSpace(int n) : n_(n), tree_(n) {}

int VarSpace::index(const VarId& v) const {
  switch (v.kind) {
    case VarKind::Token: return 0;
    case VarKind::Seq: return 1;
    case VarKind::CsOwner: return 2;
    case VarKind::Go: return 3 + (v.index - 1);
    case VarKind::AbortSig: return 3 + n_ + (v.index - 1);
    case VarKind::Node: return 3 + 2 * n_ + v.index;
    case VarKind::Registry: break;
  }
  throw std::invalid_argument("composite registry access has no single cell: " + to_string(v));
}

Pid VarSpace::home(const VarId& v) const {
  switch (v.kind) {
    case VarKind::Token:
    case VarKind::Seq:
    case VarKind::CsOwner: return 1;
    case VarKind::Go:
    case VarKind::AbortSig: return v.index;
    case VarKind::Node: return tree_.home(v.index);
    case VarKind::Registry: break;
  }
  throw std::invalid_argument("composite registry access has no home: " + to_string(v));
}

std::vector<MemOp> expand_ops(const VarSpace& vs, const Configuration& before, const StepEffect& e) {
  std::vector<MemOp> out;
  for (const MemOp& op : e.ops) {
    if (op.var.kind != VarKind::Registry) {
      out.push_back(op);
      continue;
    }
    if (e.registry.kind == RegistryAccess::Kind::Write) {
      for (const NodeOp& n : expand_write(vs.tree(), before.shared.registry, e.registry.writer, e.registry.value))
        out.push_back(MemOp{n.kind, {VarKind::Node, n.node}, static_cast<std::int64_t>(n.before),
                            static_cast<std::int64_t>(n.after), n.ok});
    } else {
      const auto w = static_cast<std::int64_t>(pack(e.registry.value));
      out.push_back(MemOp{OpKind::Read, {VarKind::Node, TreeLayout::root()}, w, w, true});
    }
  }
  return out;
}

CacheState::CacheState(const VarSpace& vs) : vs_(&vs) {
  for (auto& m : lines_) m.assign(vs.n(), std::vector<char>(vs.size(), 0));
}

bool CacheState::access(MemoryModel m, Pid p, const MemOp& op) {
  if (m == MemoryModel::Dsm) return vs_->home(op.var) != p;
  auto& caches = lines_[m == MemoryModel::StrictCc ? 0 : 1];
  const int i = vs_->index(op.var);
  if (op.kind == OpKind::Read) {
    char& line = caches[p - 1][i];
    if (line) return false;
    line = 1;
    return true;
  }
  if (m == MemoryModel::StrictCc || op.changed())
    for (auto& c : caches) c[i] = 0;
  return true;
}

void CacheState::crash(Pid p) {
  for (auto& m : lines_) std::fill(m[p - 1].begin(), m[p - 1].end(), 0);
}

void CacheState::environment_write(const VarId& v) {
  const int i = vs_->index(v);
  for (auto& m : lines_)
    for (auto& c : m) c[i] = 0;
}

bool CacheState::cached(MemoryModel m, Pid p, const VarId& v) const {
  if (m == MemoryModel::Dsm) return false;
  return lines_[m == MemoryModel::StrictCc ? 0 : 1][p - 1][vs_->index(v)] != 0;
}

int point_contention(const Configuration& cfg) {
  int k = 0;
  for (const ProcessState& s : cfg.procs) k += s.pc != at(Line::Rem) || s.status != Status::Good;
  return k;
}

RmrAccumulator::RmrAccumulator(int n)
    : vs_(n), caches_(vs_), open_passage_(n, -1), open_attempt_(n, -1), passage_count_(n, 0), attempt_count_(n, 0) {}

RmrCost RmrAccumulator::feed(const Configuration& before, const Action& a, const StepEffect& e,
                             const Configuration& after) {
  RmrCost cost{};
  const Pid p = a.pid;
  int& op_ = open_passage_[p - 1];
  int& oa = open_attempt_[p - 1];
  switch (a.kind) {
    case ActionKind::SetAbort:
    case ActionKind::ClearAbort:
      caches_.environment_write({VarKind::AbortSig, p});
      break;
    case ActionKind::Crash:
      caches_.crash(p);
      if (op_ >= 0) {
        passages_[op_].ended_by_crash = true;
        passages_[op_].open = false;
        op_ = -1;
      }
      if (oa >= 0) ++attempts_[oa].crashes;
      break;
    case ActionKind::Normal: {
      if (a.invoke != Invoke::None) {
        if (oa < 0 && before.proc(p).status == Status::Good) {
          AttemptStats at;
          at.pid = p;
          at.index = ++attempt_count_[p - 1];
          attempts_.push_back(at);
          oa = static_cast<int>(attempts_.size()) - 1;
        }
        PassageStats ps;
        ps.pid = p;
        ps.index = ++passage_count_[p - 1];
        ps.attempt = oa >= 0 ? attempts_[oa].index : 0;
        passages_.push_back(ps);
        op_ = static_cast<int>(passages_.size()) - 1;
        if (oa >= 0) ++attempts_[oa].passages;
      }
      for (const MemOp& op : expand_ops(vs_, before, e))
        for (MemoryModel m : kAllModels)
          if (caches_.access(m, p, op)) ++cost[static_cast<int>(m)];
      if (op_ >= 0) {
        for (int i = 0; i < 3; ++i) passages_[op_].rmr[i] += cost[i];
        ++passages_[op_].steps;
      }
      if (oa >= 0) {
        for (int i = 0; i < 3; ++i) attempts_[oa].rmr[i] += cost[i];
        if (after.proc(p).pc == at(Line::Cs)) attempts_[oa].reached_cs = true;
      }
      if (after.proc(p).pc == at(Line::Rem)) {
        if (op_ >= 0) passages_[op_].open = false;
        op_ = -1;
        if (oa >= 0) attempts_[oa].end = attempts_[oa].reached_cs ? AttemptStats::End::Cs : AttemptStats::End::Rem;
        oa = -1;
      }
      break;
    }
  }
  const int active = point_contention(after);
  for (int q = 0; q < after.n(); ++q) {
    if (open_passage_[q] >= 0) passages_[open_passage_[q]].k = std::max(passages_[open_passage_[q]].k, active);
    if (open_attempt_[q] >= 0) attempts_[open_attempt_[q]].k = std::max(attempts_[open_attempt_[q]].k, active);
  }
  return cost;
}

RmrSummary aggregate(int n, const std::vector<Action>& schedule, const ModelOptions& model) {
  RmrAccumulator acc(n);
  Configuration c = initial_config(n);
  for (const Action& a : schedule) {
    auto r = step(c, a, model);
    acc.feed(c, a, r.effect, r.next);
    c = std::move(r.next);
  }
  return {acc.passages(), acc.attempts()};
}

}  // namespace rme
