#include "rme/model.hpp"

#include <algorithm>

namespace rme {

std::string to_string(const VarId& v) {
  switch (v.kind) {
    case VarKind::Token: return "token";
    case VarKind::Seq: return "seq";
    case VarKind::CsOwner: return "csowner";
    case VarKind::Go: return "go[" + std::to_string(v.index) + "]";
    case VarKind::AbortSig: return "abort[" + std::to_string(v.index) + "]";
    case VarKind::Registry:
      return v.index == 0 ? std::string("registry") : "registry[" + std::to_string(v.index) + "]";
    case VarKind::Node: return "node[" + std::to_string(v.index) + "]";
  }
  return "?";
}

std::string to_string(Status s) {
  switch (s) {
    case Status::Good: return "GOOD";
    case Status::RecTry: return "REC_TRY";
    case Status::RecCs: return "REC_CS";
    case Status::RecExit: return "REC_EXIT";
    case Status::RecRem: return "REC_REM";
  }
  return "?";
}

std::string to_string(const CsOwner& c) {
  return "(" + std::string(c.owned ? "1," : "0,") + std::to_string(c.value) + ")";
}

std::string to_string(ActionKind k) {
  switch (k) {
    case ActionKind::Normal: return "normal";
    case ActionKind::Crash: return "crash";
    case ActionKind::SetAbort: return "set_abort";
    case ActionKind::ClearAbort: return "clear_abort";
  }
  return "?";
}

std::string to_string(const Action& a) {
  std::string s = to_string(a.kind) + "(" + std::to_string(a.pid);
  if (a.invoke == Invoke::Try) s += ",try";
  if (a.invoke == Invoke::Recover) s += ",recover";
  return s + ")";
}

std::string to_string(Mutation m) {
  switch (m) {
    case Mutation::None: return "none";
    case Mutation::BlindGoWrite: return "blind-go-write";
    case Mutation::SkipAbortPromote: return "skip-abort-promote";
    case Mutation::ExitNoSeqIncrement: return "exit-no-seq-increment";
  }
  return "?";
}

std::optional<Mutation> parse_mutation(std::string_view s) {
  for (Mutation m : {Mutation::None, Mutation::BlindGoWrite, Mutation::SkipAbortPromote,
                     Mutation::ExitNoSeqIncrement})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

Configuration initial_config(int n) {
  if (n < 1 || n > kMaxProcesses) throw std::invalid_argument("initial_config: n out of range");
  Configuration c;
  c.shared.csowner = CsOwner::free(1);
  c.shared.go.assign(n, -1);
  for (Pid p = 1; p <= n; ++p) c.shared.registry.push_back(Pair{p, kInfinity});
  c.procs.resize(n);
  c.history.resize(n);
  return c;
}

Section section_of(const ProcessState& s) {
  const Line l = s.pc.line;
  if (l == Line::Rem) return Section::Remainder;
  if (l == Line::Cs) return Section::Critical;
  if (l >= Line::T1 && l <= Line::T8) return Section::Try;
  if (l >= Line::E1 && l <= Line::E6) return Section::Exit;
  if (l == Line::Rec1 || l == Line::Rec2) return Section::Recover;
  switch (s.pc.caller) {
    case Caller::T5: return Section::Try;
    case Caller::E5: return Section::Exit;
    case Caller::A2:
    case Caller::None: break;
  }
  // abort body (or promote called from A2): attributed to whoever called abort
  return s.abort_from == AbortCaller::Rec2 ? Section::Recover : Section::Try;
}

bool abort_eligible(const ProcessState& s) {
  const Section sec = section_of(s);
  return sec == Section::Try || (sec == Section::Recover && s.status == Status::RecTry);
}

bool beta(const Configuration& cfg, Pid p) {
  const ProcessState& s = cfg.proc(p);
  return s.abortsig && abort_eligible(s);
}

std::vector<Action> enabled_actions(const Configuration& cfg, Pid p, const ModelOptions& opts) {
  std::vector<Action> out;
  const ProcessState& s = cfg.proc(p);
  if (s.pc.line == Line::Rem) {
    if (s.status == Status::Good) out.push_back(Action::enter_try(p));
    out.push_back(Action::enter_recover(p));
  } else {
    out.push_back(Action::normal(p));
    out.push_back(Action::crash(p));
  }
  if (!s.abortsig && abort_eligible(s)) out.push_back(Action::set_abort(p));
  if (s.abortsig && opts.abort_policy.explicit_clear) out.push_back(Action::clear_abort(p));
  return out;
}

bool is_enabled(const Configuration& cfg, const Action& a, const ModelOptions& opts) {
  if (a.pid < 1 || a.pid > cfg.n()) return false;
  auto acts = enabled_actions(cfg, a.pid, opts);
  return std::find(acts.begin(), acts.end(), a) != acts.end();
}

namespace {

class Stepper {
 public:
  Stepper(const Configuration& cfg, const Action& a, const ModelOptions& opts)
      : next_(cfg), p_(a.pid), s_(next_.proc(a.pid)), h_(next_.hist(a.pid)), opts_(opts) {
    eff_.actor = a.pid;
    eff_.kind = a.kind;
    eff_.line = s_.pc;
  }

  StepResult run(const Action& a) {
    switch (a.kind) {
      case ActionKind::Normal: normal(a.invoke); break;
      case ActionKind::Crash: crash(); break;
      case ActionKind::SetAbort:
        s_.abortsig = true;
        eff_.ops.push_back({OpKind::Write, {VarKind::AbortSig, p_}, 0, 1, true});
        break;
      case ActionKind::ClearAbort:
        s_.abortsig = false;
        eff_.ops.push_back({OpKind::Write, {VarKind::AbortSig, p_}, 1, 0, true});
        break;
    }
    return {std::move(next_), std::move(eff_)};
  }

 private:
  Configuration next_;
  Pid p_;
  ProcessState& s_;
  History& h_;
  const ModelOptions& opts_;
  StepEffect eff_;

  SharedMemory& mem() { return next_.shared; }

  std::int64_t read_go(Pid q) {
    std::int64_t v = next_.go(q);
    eff_.ops.push_back({OpKind::Read, {VarKind::Go, q}, v, v, true});
    return v;
  }
  void write_go(Pid q, std::int64_t v) {
    eff_.ops.push_back({OpKind::Write, {VarKind::Go, q}, next_.go(q), v, true});
    next_.go(q) = v;
  }
  CsOwner read_csowner() {
    const CsOwner c = mem().csowner;
    eff_.ops.push_back({OpKind::Read, {VarKind::CsOwner, 0}, c.encode(), c.encode(), true});
    return c;
  }
  void write_csowner(CsOwner c) {
    eff_.ops.push_back({OpKind::Write, {VarKind::CsOwner, 0}, mem().csowner.encode(), c.encode(), true});
    mem().csowner = c;
  }
  void registry_write(Token t) {
    const Pair v{p_, t};
    const Pair old = next_.registry(p_);
    eff_.registry = {RegistryAccess::Kind::Write, p_, old, v};
    eff_.ops.push_back({OpKind::Write, {VarKind::Registry, p_}, static_cast<std::int64_t>(pack(old)),
                        static_cast<std::int64_t>(pack(v)), true});
    next_.registry(p_) = v;
  }
  Pair findmin() {
    Pair best = mem().registry.front();
    for (const Pair& c : mem().registry)
      if (c < best) best = c;
    eff_.registry = {RegistryAccess::Kind::FindMin, 0, best, best};
    const auto w = static_cast<std::int64_t>(pack(best));
    eff_.ops.push_back({OpKind::Read, {VarKind::Registry, 0}, w, w, true});
    return best;
  }

  void goto_line(Line l) { s_.pc = LineId{l, s_.pc.caller}; }
  void goto_plain(Line l) { s_.pc = at(l); }

  void start_attempt() {
    h_.in_attempt = true;
    ++h_.attempts;
    h_.steps_in_attempt = 0;
    h_.crashes_in_attempt = 0;
    h_.abort_observed = false;
  }
  void end_attempt() { h_.in_attempt = false; }

  void enter_cs() {
    s_.pc = at(Line::Cs);
    s_.abort_from = AbortCaller::None;
    end_attempt();
  }

  void enter_rem() {
    s_.pc = at(Line::Rem);
    s_.abort_from = AbortCaller::None;
    s_.status = Status::Good;
    if (opts_.abort_policy.auto_clear) s_.abortsig = false;
    end_attempt();
  }

  void promote_return() {
    switch (s_.pc.caller) {
      case Caller::T5:
        s_.pc = at(Line::T6);
        s_.spin = SpinPhase::ReadGo;
        break;
      case Caller::E5: s_.pc = at(Line::E6); break;
      case Caller::A2: s_.pc = at(Line::A3); break;
      case Caller::None: throw ModelError("promote return without caller");
    }
  }

  void normal(Invoke invoke) {
    const Line l = s_.pc.line;
    if ((l == Line::Rem) != (invoke != Invoke::None))
      throw ModelError("invocation only from REM and REM only by invocation");
    if (h_.in_attempt || invoke == Invoke::Try) ++h_.steps_in_attempt;
    switch (l) {
      case Line::Rem:
        ++h_.passages;
        if (invoke == Invoke::Try) {
          if (s_.status != Status::Good) throw ModelError("try invoked with bad status");
          start_attempt();
          h_.steps_in_attempt = 1;
          goto_plain(Line::T1);
        } else {
          goto_plain(Line::Rec1);
        }
        break;
      case Line::T1: {
        s_.tok = mem().token;
        eff_.ops.push_back({OpKind::Read, {VarKind::Token, 0}, mem().token, mem().token, true});
        goto_plain(Line::T2);
        break;
      }
      case Line::T2: {
        const Token tok = s_.tok.get("tok");
        const bool ok = mem().token == tok;
        eff_.ops.push_back({OpKind::Cas, {VarKind::Token, 0}, mem().token, ok ? tok + 1 : mem().token, ok});
        if (ok) mem().token = tok + 1;
        goto_plain(Line::T3);
        break;
      }
      case Line::T3:
        write_go(p_, s_.tok.get("tok"));
        goto_plain(Line::T4);
        break;
      case Line::T4:
        registry_write(s_.tok.get("tok"));
        goto_plain(Line::T5);
        break;
      case Line::T5:
        s_.isaborting = false;
        s_.pc = at(Caller::T5, Line::P1);
        break;
      case Line::T6:
        if (s_.spin == SpinPhase::ReadGo) {
          if (read_go(p_) == 0) {
            goto_plain(Line::T7);
          } else {
            s_.spin = SpinPhase::ReadAbort;
          }
        } else {
          const bool sig = s_.abortsig;
          eff_.ops.push_back({OpKind::Read, {VarKind::AbortSig, p_}, sig, sig, true});
          s_.spin = SpinPhase::ReadGo;
          if (sig) {
            h_.abort_observed = true;
            goto_plain(Line::T7);
          }
        }
        break;
      case Line::T7:
        if (read_go(p_) == 0) {
          enter_cs();
        } else {
          goto_plain(Line::T8);
        }
        break;
      case Line::T8:
        s_.abort_from = AbortCaller::T8;
        goto_plain(Line::A1);
        break;
      case Line::Cs:
        ++h_.passages;
        goto_plain(Line::E1);
        break;
      case Line::E1:
        registry_write(kInfinity);
        goto_plain(Line::E2);
        break;
      case Line::E2:
        s_.myseq = mem().seq;
        eff_.ops.push_back({OpKind::Read, {VarKind::Seq, 0}, mem().seq, mem().seq, true});
        goto_plain(Line::E3);
        break;
      case Line::E3:
        if (opts_.mutation != Mutation::ExitNoSeqIncrement) {
          const std::int64_t v = s_.myseq.get("myseq") + 1;
          eff_.ops.push_back({OpKind::Write, {VarKind::Seq, 0}, mem().seq, v, true});
          mem().seq = v;
        }
        goto_plain(Line::E4);
        break;
      case Line::E4: {
        const std::int64_t myseq = s_.myseq.get("myseq");
        const bool bug = opts_.mutation == Mutation::ExitNoSeqIncrement;
        write_csowner(CsOwner::free(bug ? myseq : myseq + 1));
        goto_plain(Line::E5);
        break;
      }
      case Line::E5:
        s_.isaborting = false;
        s_.pc = at(Caller::E5, Line::P1);
        break;
      case Line::E6:
        write_go(p_, -1);
        enter_rem();
        break;
      case Line::Rec1:
        if (read_go(p_) == -1) {
          enter_rem();
        } else {
          goto_plain(Line::Rec2);
        }
        break;
      case Line::Rec2:
        s_.abort_from = AbortCaller::Rec2;
        goto_plain(Line::A1);
        break;
      case Line::A1:
        registry_write(kInfinity);
        goto_plain(Line::A2);
        break;
      case Line::A2:
        if (opts_.mutation == Mutation::SkipAbortPromote) {
          goto_plain(Line::A3);
        } else {
          s_.isaborting = true;
          s_.pc = at(Caller::A2, Line::P1);
        }
        break;
      case Line::A3:
        if (read_csowner().is_owned_by(p_)) {
          if (s_.abort_from == AbortCaller::Rec2) s_.status = Status::Good;
          enter_cs();
        } else {
          goto_plain(Line::A4);
        }
        break;
      case Line::A4:
        write_go(p_, -1);
        goto_plain(Line::A5);
        break;
      case Line::A5:
        enter_rem();
        break;
      case Line::P1: {
        const CsOwner c = read_csowner();
        s_.bit = c.owned ? 1 : 0;
        s_.myseq = c.value;
        if (c.owned) {
          s_.peer = static_cast<Pid>(c.value);
          goto_line(Line::P4);
        } else {
          goto_line(Line::P2);
        }
        break;
      }
      case Line::P2: {
        const Pair m = findmin();
        s_.peer = m.pid;
        s_.min_tok = m.tok;
        if (m.is_infinite()) {
          if (s_.isaborting.get("isaborting")) {
            s_.peer = p_;
          } else {
            promote_return();
            break;
          }
        }
        goto_line(Line::P3);
        break;
      }
      case Line::P3: {
        const CsOwner expect = CsOwner::free(s_.myseq.get("myseq"));
        const CsOwner want = CsOwner::owner(s_.peer.get("peer"));
        const CsOwner cur = mem().csowner;
        const bool ok = cur == expect;
        eff_.ops.push_back({OpKind::Cas, {VarKind::CsOwner, 0}, cur.encode(), ok ? want.encode() : cur.encode(), ok});
        if (ok) {
          mem().csowner = want;
          goto_line(Line::P4);
        } else {
          promote_return();
        }
        break;
      }
      case Line::P4: {
        const std::int64_t g = read_go(s_.peer.get("peer"));
        s_.mygo = g;
        if (g == -1 || g == 0) {
          promote_return();
        } else {
          goto_line(Line::P5);
        }
        break;
      }
      case Line::P5:
        if (read_csowner().is_owned_by(s_.peer.get("peer"))) {
          goto_line(Line::P6);
        } else {
          promote_return();
        }
        break;
      case Line::P6: {
        const Pid q = s_.peer.get("peer");
        const std::int64_t mygo = s_.mygo.get("mygo");
        if (opts_.mutation == Mutation::BlindGoWrite) {
          write_go(q, 0);
        } else {
          const std::int64_t cur = next_.go(q);
          const bool ok = cur == mygo;
          eff_.ops.push_back({OpKind::Cas, {VarKind::Go, q}, cur, ok ? 0 : cur, ok});
          if (ok) next_.go(q) = 0;
        }
        promote_return();
        break;
      }
    }
  }

  void crash() {
    if (s_.pc.line == Line::Rem) throw ModelError("crash from REM");
    if (s_.status == Status::Good) {
      switch (section_of(s_)) {
        case Section::Try: s_.status = Status::RecTry; break;
        case Section::Critical: s_.status = Status::RecCs; break;
        case Section::Exit: s_.status = Status::RecExit; break;
        case Section::Recover: s_.status = Status::RecRem; break;
        case Section::Remainder: break;
      }
    }
    s_.pc = at(Line::Rem);
    s_.abort_from = AbortCaller::None;
    s_.spin = SpinPhase::ReadGo;
    s_.tok.poison();
    s_.myseq.poison();
    s_.peer.poison();
    s_.mygo.poison();
    s_.bit.poison();
    s_.isaborting.poison();
    s_.min_tok.poison();
    if (h_.in_attempt) ++h_.crashes_in_attempt;
  }
};

}  // namespace

StepResult step(const Configuration& cfg, const Action& a, const ModelOptions& opts) {
  if (!is_enabled(cfg, a, opts)) throw ModelError("step: action not enabled: " + to_string(a));
  return Stepper(cfg, a, opts).run(a);
}

}  // namespace rme
