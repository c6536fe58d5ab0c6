#include "rme/checker.hpp"

#include <bit>
#include <sstream>

namespace rme {

std::string to_string(Property p) {
  switch (p) {
    case Property::Cond: return "Cond";
    case Property::Mutex: return "Mutex";
    case Property::BoundedExit: return "BoundedExit";
    case Property::FCFS: return "FCFS";
    case Property::CSR: return "CSR";
    case Property::BoundedRecCS: return "BoundedRecCS";
    case Property::BoundedRecExit: return "BoundedRecExit";
    case Property::FastRecRem: return "FastRecRem";
    case Property::BoundedRecRem: return "BoundedRecRem";
    case Property::BoundedAbort: return "BoundedAbort";
    case Property::NoTrivialAbort: return "NoTrivialAbort";
    case Property::Progress: return "Progress";
  }
  return "?";
}

std::string Violation::name() const {
  return kind == Property::Cond ? "Cond" + std::to_string(cond) : to_string(kind);
}

namespace {

// A condition that needs a poisoned register is false.
struct Poisoned {
  const char* what;
};

template <class T>
T val(const Register<T>& r, const char* name) {
  if (r.poisoned()) throw Poisoned{name};
  return *r.raw();
}

bool plain(LineId pc, Line l) { return pc.caller == Caller::None && pc.line == l; }
bool plain_in(LineId pc, Line lo, Line hi) {
  return pc.caller == Caller::None && pc.line >= lo && pc.line <= hi;
}

// Range sets; a range that spans a promote call site also covers that call.
bool t5_t7(LineId pc) { return plain_in(pc, Line::T5, Line::T7) || pc.caller == Caller::T5; }
bool t3_t7(LineId pc) { return plain_in(pc, Line::T3, Line::T7) || pc.caller == Caller::T5; }
bool t5_t8(LineId pc) { return plain_in(pc, Line::T5, Line::T8) || pc.caller == Caller::T5; }
bool t1_e6(LineId pc) {
  return plain_in(pc, Line::T1, Line::E6) || pc.caller == Caller::T5 || pc.caller == Caller::E5;
}
bool t8_e6(LineId pc) { return plain_in(pc, Line::T8, Line::E6) || pc.caller == Caller::E5; }
bool e2_e6(LineId pc) { return plain_in(pc, Line::E2, Line::E6) || pc.caller == Caller::E5; }
bool e5_e6(LineId pc) { return plain_in(pc, Line::E5, Line::E6) || pc.caller == Caller::E5; }
bool rec2_a4(LineId pc) { return plain_in(pc, Line::Rec2, Line::A4) || pc.caller == Caller::A2; }
bool a2_a4(LineId pc) { return plain_in(pc, Line::A2, Line::A4) || pc.caller == Caller::A2; }
// REC2..A2 as an explicit set: the conditions using it list A2::P1 separately.
bool rec2_a2(LineId pc) { return plain_in(pc, Line::Rec2, Line::A2); }
bool rem_or_rec1(LineId pc) { return plain(pc, Line::Rem) || plain(pc, Line::Rec1); }
bool at_p(LineId pc, Line l) { return pc.in_promote() && pc.line == l; }

std::string pcs(const Configuration& c, Pid p) { return "pc_" + std::to_string(p) + "=" + to_string(c.proc(p).pc); }

class Eval {
 public:
  Eval(const Configuration& c, const CheckOptions& o) : c_(c), o_(o) {}

  std::optional<std::string> run(int k) {
    try {
      switch (k) {
        case 1: return c1();
        case 2: return c2();
        case 3: return c3();
        case 4: return c4();
        case 5: return per_process(&Eval::c5);
        case 6: return per_process(&Eval::c6);
        case 7: return per_process(&Eval::c7);
        case 8: return per_process(&Eval::c8);
        case 9: return per_process(&Eval::c9);
        case 10: return per_process(&Eval::c10);
        case 11: return per_process(&Eval::c11);
        case 12: return per_process(&Eval::c12);
        case 13: return per_process(&Eval::c13);
        default: throw std::out_of_range("condition index");
      }
    } catch (const Poisoned& e) {
      return std::string("needs poisoned register ") + e.what + (who_ ? " (" + pcs(c_, who_) + ")" : "");
    }
  }

 private:
  using Fn = std::optional<std::string> (Eval::*)(Pid);
  const Configuration& c_;
  const CheckOptions& o_;
  Pid who_ = 0;

  std::optional<std::string> per_process(Fn f) {
    for (Pid p = 1; p <= c_.n(); ++p) {
      who_ = p;
      if (auto r = (this->*f)(p)) return "p=" + std::to_string(p) + ": " + *r;
    }
    return std::nullopt;
  }

  const ProcessState& s(Pid p) const { return c_.proc(p); }
  Token token() const { return c_.shared.token; }
  const CsOwner& csowner() const { return c_.shared.csowner; }
  bool valid_pid(Pid q) const { return q >= 1 && q <= c_.n(); }

  std::optional<std::string> c1() {
    if (token() >= 1) return std::nullopt;
    return "token=" + std::to_string(token());
  }

  std::optional<std::string> c2() {
    const CsOwner& o = csowner();
    if (!o.owned && o.value == c_.shared.seq) return std::nullopt;
    if (o.owned && valid_pid(static_cast<Pid>(o.value))) return std::nullopt;
    return "csowner=" + to_string(o) + " seq=" + std::to_string(c_.shared.seq);
  }

  std::optional<std::string> c5(Pid p) {
    const LineId pc = s(p).pc;
    const auto go = c_.go(p);
    if (!(-1 <= go && go < token())) return "go=" + std::to_string(go) + " token=" + std::to_string(token());
    if (plain(pc, Line::T4) && go != val(s(p).tok, "tok")) return "T4 with go != tok";
    if (t5_t7(pc) && go != 0 && go != val(s(p).tok, "tok")) return pcs(c_, p) + " with go=" + std::to_string(go);
    if ((t8_e6(pc) || rec2_a4(pc) || pc.in_promote()) && go == -1) return pcs(c_, p) + " with go=-1";
    const bool idle = rem_or_rec1(pc) && (s(p).status == Status::Good || s(p).status == Status::RecRem);
    if ((plain_in(pc, Line::T1, Line::T3) || plain(pc, Line::A5) || idle) && go != -1)
      return pcs(c_, p) + " status=" + to_string(s(p).status) + " with go=" + std::to_string(go);
    return std::nullopt;
  }

  std::optional<std::string> c6(Pid p) {
    const LineId pc = s(p).pc;
    const Pair r = c_.registry(p);
    if (r.pid != p || !(r.is_infinite() || (r.tok >= 1 && r.tok <= token() - 1)))
      return "registry=" + to_string(r) + " token=" + std::to_string(token());
    if (t5_t7(pc) && r != Pair{p, val(s(p).tok, "tok")}) return pcs(c_, p) + " registry=" + to_string(r);
    const bool must_clear = plain(pc, Line::T4) || e2_e6(pc) || a2_a4(pc) || c_.go(p) == -1;
    if (must_clear && !r.is_infinite()) return pcs(c_, p) + " go=" + std::to_string(c_.go(p)) + " registry=" + to_string(r);
    return std::nullopt;
  }

  std::optional<std::string> c7(Pid p) {
    const LineId pc = s(p).pc;
    const bool owns = csowner().is_owned_by(p);
    const bool must_own = (t5_t7(pc) && c_.go(p) == 0) || plain_in(pc, Line::Cs, Line::E4) ||
                          s(p).status == Status::RecCs;
    if (must_own && !owns) return pcs(c_, p) + " csowner=" + to_string(csowner());
    const bool must_not = plain(pc, Line::T4) || plain(pc, Line::A4) || e5_e6(pc) || c_.go(p) == -1;
    if (must_not && owns) return pcs(c_, p) + " go=" + std::to_string(c_.go(p)) + " owns csowner";
    return std::nullopt;
  }

  std::optional<std::string> c8(Pid p) {
    const ProcessState& st = s(p);
    const LineId pc = st.pc;
    if (plain(pc, Line::T2)) {
      const Token t = val(st.tok, "tok");
      if (!(1 <= t && t <= token())) return "T2 tok=" + std::to_string(t);
    }
    if (t3_t7(pc)) {
      const Token t = val(st.tok, "tok");
      if (!(1 <= t && t < token())) return pcs(c_, p) + " tok=" + std::to_string(t);
    }
    if (plain(pc, Line::E3) && val(st.myseq, "myseq") != c_.shared.seq) return "E3 myseq != seq";
    if (plain(pc, Line::E4) && val(st.myseq, "myseq") != c_.shared.seq - 1) return "E4 myseq != seq-1";
    if ((pc.caller == Caller::T5 || pc.caller == Caller::E5) && val(st.isaborting, "isaborting"))
      return pcs(c_, p) + " isaborting=true";
    if (pc.caller == Caller::A2 && !val(st.isaborting, "isaborting")) return pcs(c_, p) + " isaborting=false";
    if (pc.in_promote() && pc.line >= Line::P3 && !valid_pid(val(st.peer, "peer")))
      return pcs(c_, p) + " peer=" + std::to_string(*st.peer.raw());
    if (t1_e6(pc) && st.status != Status::Good) return pcs(c_, p) + " status=" + to_string(st.status);
    return std::nullopt;
  }

  std::optional<std::string> c9(Pid p) {
    const LineId pc = s(p).pc;
    const bool requested = c_.hist(p).abort_observed;
    if (plain(pc, Line::T7) && c_.go(p) != 0 && !requested) return "T7 with go != 0 and no abort seen";
    if (plain(pc, Line::T8) && !requested) return "T8 without abort seen";
    return std::nullopt;
  }

  std::optional<std::string> c10(Pid p) {
    const LineId pc = s(p).pc;
    if (!at_p(pc, Line::P2) && !at_p(pc, Line::P3)) return std::nullopt;
    const auto my = val(s(p).myseq, "myseq");
    if (my > c_.shared.seq) return "myseq=" + std::to_string(my) + " > seq";
    for (Pid q = 1; q <= c_.n(); ++q) {
      const LineId qc = s(q).pc;
      if (plain(qc, Line::E3) || plain(qc, Line::E4)) {
        if (my > val(s(q).myseq, "myseq_q")) return "myseq exceeds that of exiting " + std::to_string(q);
      }
    }
    return std::nullopt;
  }

  std::optional<std::string> c11(Pid p) {
    const LineId pc = s(p).pc;
    if (at_p(pc, Line::P2) && csowner() == CsOwner::free(val(s(p).myseq, "myseq"))) {
      for (Pid q = 1; q <= c_.n(); ++q) {
        if (c_.registry(q).is_infinite()) continue;
        const LineId qc = s(q).pc;
        const bool ok = t5_t8(qc) || plain(qc, Line::Rec2) || plain(qc, Line::A1) ||
                        (rem_or_rec1(qc) && c_.go(q) != -1);
        if (!ok) return "registered " + pcs(c_, q);
      }
    }
    if (at_p(pc, Line::P3) && csowner() == CsOwner::free(val(s(p).myseq, "myseq"))) {
      const Pid r = val(s(p).peer, "peer");
      if (!valid_pid(r)) return "peer out of range";
      const ProcessState& ps = s(r);
      const LineId rc = ps.pc;
      bool ok = t5_t7(rc) || rec2_a2(rc) || rc == at(Caller::A2, Line::P1) ||
                (rem_or_rec1(rc) && c_.go(r) != -1);
      if (!ok && (rc == at(Caller::A2, Line::P2) || rc == at(Caller::A2, Line::P3)))
        ok = val(ps.myseq, "myseq_peer") == val(s(p).myseq, "myseq");
      if (!ok && o_.cond11_peer_t8 && plain(rc, Line::T8)) ok = true;
      if (!ok) return "peer " + pcs(c_, r);
    }
    return std::nullopt;
  }

  std::optional<std::string> c12(Pid p) {
    const LineId pc = s(p).pc;
    if (!at_p(pc, Line::P5) && !at_p(pc, Line::P6)) return std::nullopt;
    const auto g = val(s(p).mygo, "mygo");
    if (!(1 <= g && g < token())) return "mygo=" + std::to_string(g);
    return std::nullopt;
  }

  std::optional<std::string> c13(Pid p) {
    if (!at_p(s(p).pc, Line::P6)) return std::nullopt;
    const Pid r = val(s(p).peer, "peer");
    if (!valid_pid(r)) return "peer out of range";
    const auto g = val(s(p).mygo, "mygo");
    const LineId rc = s(r).pc;
    if (plain(rc, Line::T2) || plain(rc, Line::T3)) {
      if (!(1 <= g && g < val(s(r).tok, "tok_peer"))) return "mygo not below tok of " + pcs(c_, r);
    }
    if (plain(rc, Line::T4) && !(1 <= g && g < c_.go(r))) return "mygo not below go of " + pcs(c_, r);
    if (t5_t7(rc) && g == c_.go(r) && !csowner().is_owned_by(r))
      return "stale owner check: " + pcs(c_, r) + " csowner=" + to_string(csowner());
    return std::nullopt;
  }

  std::optional<std::string> c3() {
    bool registered = false;
    for (const Pair& r : c_.shared.registry) registered |= !r.is_infinite();
    if (!registered || csowner().owned) return std::nullopt;
    for (Pid q = 1; q <= c_.n(); ++q) {
      const LineId qc = s(q).pc;
      if (rem_or_rec1(qc) && c_.go(q) != -1) return std::nullopt;
      if (plain(qc, Line::T5) || plain(qc, Line::E5) || rec2_a2(qc) || at_p(qc, Line::P1)) return std::nullopt;
      if ((at_p(qc, Line::P2) || at_p(qc, Line::P3)) && !s(q).myseq.poisoned() &&
          csowner() == CsOwner::free(*s(q).myseq.raw()))
        return std::nullopt;
    }
    return "someone is registered but nobody owns or can promote; csowner=" + to_string(csowner());
  }

  std::optional<std::string> c4() {
    for (Pid p = 1; p <= c_.n(); ++p) {
      if (!csowner().is_owned_by(p) || c_.go(p) == 0) continue;
      bool ok = false;
      for (Pid q = 1; q <= c_.n() && !ok; ++q) {
        const ProcessState& qs = s(q);
        const LineId qc = qs.pc;
        const bool peer_p = !qs.peer.poisoned() && *qs.peer.raw() == p;
        ok = rec2_a2(qc) || at_p(qc, Line::P1) || (at_p(qc, Line::P4) && peer_p) ||
             ((at_p(qc, Line::P5) || at_p(qc, Line::P6)) && peer_p && !qs.mygo.poisoned() &&
              *qs.mygo.raw() == c_.go(p)) ||
             (rem_or_rec1(qc) && c_.go(q) != -1);
      }
      if (!ok) return "owner " + std::to_string(p) + " has go=" + std::to_string(c_.go(p)) + " and nobody to release it";
    }
    return std::nullopt;
  }
};

}  // namespace

std::optional<std::string> check_condition(const Configuration& cfg, int c, const CheckOptions& opts) {
  return Eval(cfg, opts).run(c);
}

std::array<bool, 14> condition_values(const Configuration& cfg, const CheckOptions& opts) {
  std::array<bool, 14> out{};
  out[0] = true;
  Eval e(cfg, opts);
  for (int k = 1; k <= 13; ++k) out[k] = !e.run(k).has_value();
  return out;
}

std::vector<Violation> check_invariant(const Configuration& cfg, const CheckOptions& opts) {
  std::vector<Violation> out;
  Eval e(cfg, opts);
  for (int k = 1; k <= 13; ++k)
    if (auto d = e.run(k)) out.push_back(Violation{Property::Cond, k, 0, *d, {}});
  std::vector<Pid> in_cs;
  for (Pid p = 1; p <= cfg.n(); ++p)
    if (cfg.proc(p).pc == at(Line::Cs)) in_cs.push_back(p);
  if (in_cs.size() > 1) {
    std::ostringstream os;
    os << "processes in CS:";
    for (Pid p : in_cs) os << ' ' << p;
    out.push_back(Violation{Property::Mutex, 0, in_cs[1], os.str(), {}});
  }
  return out;
}

int ceil_log2(int n) {
  if (n < 1) throw std::invalid_argument("ceil_log2 needs n >= 1");
  return std::countr_zero(std::bit_ceil(static_cast<unsigned>(n)));
}

Bounds bounds(int n) {
  Bounds b;
  b.registry_write = 2 * ceil_log2(n) + 1;
  const int w = b.registry_write;
  // invoke, E1(w), E2, E3, E4, E5, P1..P6, E6
  b.exit = 12 + w;
  b.fast_rem = 2;
  // invoke, REC1, REC2, A1(w), A2, P1..P6, A3
  b.rec_cs = 11 + w;
  // the same path continued through A4, A5
  b.rec_exit = 13 + w;
  b.rec_rem = 13 + w;
  // from T1: T1..T3, T4(w), T5, P1..P6, two spin reads, T7, T8, A1(w), A2, P1..P6, A3..A5
  b.abort = 24 + 2 * w;
  return b;
}

int step_weight(const StepEffect& e, const Bounds& b) {
  if (e.kind != ActionKind::Normal) return 0;
  return e.registry.kind == RegistryAccess::Kind::Write ? b.registry_write : 1;
}

Monitor::Monitor(int n) : bounds_(bounds(n)), procs_(n) {
  if (n > 64) throw std::invalid_argument("monitor tracks at most 64 processes");
}

void Monitor::clear_ahead_bit(Pid q) {
  for (auto& m : procs_) m.ahead &= ~(std::uint64_t{1} << (q - 1));
}

void Monitor::observe(const Configuration& before, const Action& a, const StepEffect& e, const Configuration& after,
                      std::vector<Violation>& out) {
  const Pid p = a.pid;
  ProcMonitor& m = procs_.at(p - 1);
  const ProcessState& was = before.proc(p);
  const ProcessState& now = after.proc(p);
  auto report = [&](Property k, Pid who, std::string d) { out.push_back(Violation{k, 0, who, std::move(d), {}}); };

  switch (a.kind) {
    case ActionKind::Crash:
      if (was.pc == at(Line::Cs)) m.crashed_in_cs = true;
      if (before.hist(p).in_attempt && !m.tainted) {
        m.tainted = true;
        clear_ahead_bit(p);
      }
      m.method = Method::None;
      m.steps = 0;
      m.abort_latched = false;
      m.ntab_candidate = false;
      break;
    case ActionKind::SetAbort:
      m.ntab_candidate = false;
      if (before.hist(p).in_attempt && !m.tainted) {
        m.tainted = true;
        clear_ahead_bit(p);
      }
      break;
    case ActionKind::ClearAbort:
      m.abort_latched = false;
      break;
    case ActionKind::Normal: {
      const int w = step_weight(e, bounds_);
      if (a.invoke == Invoke::Try) {
        m.method = Method::Try;
        m.steps = 0;
        m.ntab_candidate = !was.abortsig;
        m.doorway_done = false;
        m.tainted = was.abortsig;
        m.ahead = 0;
        for (Pid q = 1; q <= after.n(); ++q) {
          const ProcMonitor& o = procs_[q - 1];
          if (q != p && o.doorway_done && !o.tainted && after.hist(q).in_attempt)
            m.ahead |= std::uint64_t{1} << (q - 1);
        }
      } else if (a.invoke == Invoke::Recover) {
        m.method = Method::Recover;
        m.steps = 0;
        m.entry_status = was.status;
        m.reported = false;
      } else if (was.pc == at(Line::Cs)) {
        m.method = Method::Exit;
        m.steps = 0;
        m.reported = false;
      }
      // try may spin forever, so only bounded methods keep a step count
      if (m.method == Method::Exit || m.method == Method::Recover) m.steps += w;
      if (m.abort_latched) m.abort_steps += w;
      if (was.pc == at(Line::T4)) m.doorway_done = true;

      if (m.method == Method::Exit && !m.reported && m.steps > bounds_.exit) {
        m.reported = true;
        report(Property::BoundedExit, p, "exit took more than " + std::to_string(bounds_.exit) + " steps");
      }
      if (m.method == Method::Recover && !m.reported) {
        const Status st = m.entry_status;
        if ((st == Status::Good || st == Status::RecRem) && m.steps > bounds_.fast_rem) {
          m.reported = true;
          report(Property::FastRecRem, p, "recover from " + to_string(st) + " exceeded " + std::to_string(bounds_.fast_rem));
        } else if (st == Status::RecCs && m.steps > bounds_.rec_cs) {
          m.reported = true;
          report(Property::BoundedRecCS, p, "recover from REC_CS exceeded " + std::to_string(bounds_.rec_cs));
        } else if (st == Status::RecExit && m.steps > bounds_.rec_exit) {
          m.reported = true;
          report(Property::BoundedRecExit, p, "recover from REC_EXIT exceeded " + std::to_string(bounds_.rec_exit));
        }
      }

      const bool to_cs = now.pc == at(Line::Cs) && was.pc != at(Line::Cs);
      const bool to_rem = now.pc == at(Line::Rem);
      if (to_cs) {
        for (Pid q = 1; q <= after.n(); ++q)
          if (q != p && procs_[q - 1].crashed_in_cs)
            report(Property::CSR, p, std::to_string(p) + " entered CS while " + std::to_string(q) + " has not recovered from its CS crash");
        m.crashed_in_cs = false;
        if (m.ahead != 0 && before.hist(p).in_attempt) {
          const int q = std::countr_zero(m.ahead) + 1;
          report(Property::FCFS, p, std::to_string(p) + " entered CS ahead of " + std::to_string(q));
        }
        if (m.method == Method::Recover && m.entry_status == Status::RecCs && !m.reported && m.steps > bounds_.rec_cs)
          report(Property::BoundedRecCS, p, "recover from REC_CS too long");
      }
      if (to_rem && m.method == Method::Recover) {
        if (m.entry_status == Status::RecCs)
          report(Property::BoundedRecCS, p, "recover from REC_CS returned IN_REM");
        if (m.entry_status == Status::RecTry && m.steps > bounds_.rec_rem)
          report(Property::BoundedRecRem, p, "recover from REC_TRY took " + std::to_string(m.steps) + " steps");
      }
      if (to_rem && m.method == Method::Try && m.ntab_candidate && was.abort_from == AbortCaller::T8)
        report(Property::NoTrivialAbort, p, "try returned IN_REM without an abort signal");
      if (to_cs || to_rem) {
        m.method = Method::None;
        m.abort_latched = false;
      }
      if (before.hist(p).in_attempt && !after.hist(p).in_attempt) {
        clear_ahead_bit(p);
        m.doorway_done = false;
        m.ahead = 0;
      }
      break;
    }
  }

  // bounded abort: latch when beta first holds, then count p's own steps
  for (Pid q = 1; q <= after.n(); ++q) {
    ProcMonitor& mq = procs_[q - 1];
    if (!after.proc(q).abortsig) mq.abort_latched = false;
    if (!mq.abort_latched && beta(after, q)) {
      mq.abort_latched = true;
      mq.abort_steps = 0;
    }
  }
  if (m.abort_latched && m.abort_steps > bounds_.abort) {
    report(Property::BoundedAbort, p, "no CS or REM within " + std::to_string(bounds_.abort) + " steps after abort");
    m.abort_latched = false;
  }
}

void Monitor::encode(std::vector<std::int64_t>& out) const {
  for (const ProcMonitor& m : procs_) {
    out.push_back(static_cast<std::int64_t>(m.method) | static_cast<std::int64_t>(m.entry_status) << 4 |
                  std::int64_t{m.reported} << 8 | std::int64_t{m.abort_latched} << 9 |
                  std::int64_t{m.ntab_candidate} << 10 | std::int64_t{m.crashed_in_cs} << 11 |
                  std::int64_t{m.doorway_done} << 12 | std::int64_t{m.tainted} << 13);
    out.push_back(m.steps);
    out.push_back(m.abort_steps);
    out.push_back(static_cast<std::int64_t>(m.ahead));
  }
}

std::vector<Violation> monitor_trace(int n, const std::vector<Action>& schedule, const ModelOptions& model,
                                     const CheckOptions& check) {
  std::vector<Violation> out;
  Configuration c = initial_config(n);
  Monitor mon(n);
  auto stamp = [&](std::size_t from, std::size_t len) {
    for (std::size_t i = from; i < out.size(); ++i)
      out[i].schedule.assign(schedule.begin(), schedule.begin() + static_cast<std::ptrdiff_t>(len));
  };
  for (auto& v : check_invariant(c, check)) out.push_back(v);
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const std::size_t mark = out.size();
    auto r = step(c, schedule[i], model);
    mon.observe(c, schedule[i], r.effect, r.next, out);
    for (auto& v : check_invariant(r.next, check)) out.push_back(v);
    c = std::move(r.next);
    stamp(mark, i + 1);
  }
  return out;
}

}  // namespace rme
