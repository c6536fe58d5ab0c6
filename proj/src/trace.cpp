#include "rme/trace.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "rme/hash.hpp"

namespace rme {

using json = nlohmann::json;

namespace {

constexpr const char* kFormat = "rme-trace";
constexpr int kVersion = 1;

json op_json(const MemOp& op) {
  json j = {{"var", to_string(op.var)}};
  if (op.kind == OpKind::Read) {
    j["value"] = op.before;
  } else {
    j["op"] = op.kind == OpKind::Cas ? "cas" : "write";
    j["before"] = op.before;
    j["after"] = op.after;
    if (op.kind == OpKind::Cas) j["ok"] = op.ok;
  }
  return j;
}

ActionKind parse_kind(const std::string& s) {
  for (ActionKind k : {ActionKind::Normal, ActionKind::Crash, ActionKind::SetAbort, ActionKind::ClearAbort})
    if (to_string(k) == s) return k;
  throw TraceFormatError("unknown step kind: " + s);
}

Invoke parse_invoke(const std::string& s) {
  if (s == "try") return Invoke::Try;
  if (s == "recover") return Invoke::Recover;
  throw TraceFormatError("unknown invoke: " + s);
}

template <class T>
T field(const json& j, const char* name, long lineno) {
  if (!j.contains(name)) throw TraceFormatError("line " + std::to_string(lineno) + ": missing " + name);
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw TraceFormatError("line " + std::to_string(lineno) + ": bad " + name);
  }
}

}  // namespace

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[i] = digits[v & 15];
  return s;
}

std::vector<Action> Trace::actions() const {
  std::vector<Action> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.action);
  return out;
}

void write_trace(std::ostream& out, const TraceHeader& h, const std::vector<Action>& schedule) {
  json head = {{"format", kFormat},
               {"version", kVersion},
               {"n", h.n},
               {"mutation", to_string(h.model.mutation)},
               {"abort_auto_clear", h.model.abort_policy.auto_clear},
               {"abort_explicit_clear", h.model.abort_policy.explicit_clear},
               {"cond11_peer_t8", h.check.cond11_peer_t8},
               {"steps", schedule.size()}};
  if (h.violation) {
    head["violation"] = *h.violation;
    head["detail"] = h.detail;
  }
  out << head.dump() << '\n';
  Configuration c = initial_config(h.n);
  long idx = 0;
  for (const Action& a : schedule) {
    const std::string line = to_string(c.proc(a.pid).pc);
    auto r = step(c, a, h.model);
    json j = {{"idx", idx++}, {"actor", a.pid}, {"kind", to_string(a.kind)}};
    if (a.invoke != Invoke::None) j["invoke"] = a.invoke == Invoke::Try ? "try" : "recover";
    j["line"] = line;
    json reads = json::array(), writes = json::array();
    for (const MemOp& op : r.effect.ops) (op.kind == OpKind::Read ? reads : writes).push_back(op_json(op));
    j["reads"] = std::move(reads);
    j["writes"] = std::move(writes);
    c = std::move(r.next);
    j["post_hash"] = hex64(hash64(c));
    out << j.dump() << '\n';
  }
}

Trace read_trace(std::istream& in) {
  Trace t;
  std::string text;
  long lineno = 0;
  bool have_header = false;
  while (std::getline(in, text)) {
    ++lineno;
    if (text.empty()) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw TraceFormatError("line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.is_object()) throw TraceFormatError("line " + std::to_string(lineno) + ": not an object");
    if (!have_header) {
      if (field<std::string>(j, "format", lineno) != kFormat) throw TraceFormatError("not an rme trace");
      if (field<int>(j, "version", lineno) != kVersion) throw TraceFormatError("unsupported trace version");
      t.header.n = field<int>(j, "n", lineno);
      if (t.header.n < 1 || t.header.n > kMaxProcesses) throw TraceFormatError("bad process count");
      const auto m = parse_mutation(field<std::string>(j, "mutation", lineno));
      if (!m) throw TraceFormatError("unknown mutation");
      t.header.model.mutation = *m;
      t.header.model.abort_policy.auto_clear = field<bool>(j, "abort_auto_clear", lineno);
      t.header.model.abort_policy.explicit_clear = field<bool>(j, "abort_explicit_clear", lineno);
      t.header.check.cond11_peer_t8 = field<bool>(j, "cond11_peer_t8", lineno);
      if (j.contains("violation")) {
        t.header.violation = field<std::string>(j, "violation", lineno);
        t.header.detail = j.value("detail", "");
      }
      have_header = true;
      continue;
    }
    TraceStep s;
    if (field<long>(j, "idx", lineno) != static_cast<long>(t.steps.size()))
      throw TraceFormatError("line " + std::to_string(lineno) + ": step index out of order");
    s.action.pid = field<int>(j, "actor", lineno);
    if (s.action.pid < 1 || s.action.pid > t.header.n)
      throw TraceFormatError("line " + std::to_string(lineno) + ": actor out of range");
    s.action.kind = parse_kind(field<std::string>(j, "kind", lineno));
    if (j.contains("invoke")) s.action.invoke = parse_invoke(field<std::string>(j, "invoke", lineno));
    s.line = field<std::string>(j, "line", lineno);
    const std::string h = field<std::string>(j, "post_hash", lineno);
    std::size_t used = 0;
    try {
      s.post_hash = std::stoull(h, &used, 16);
    } catch (const std::exception&) {
      used = 0;
    }
    if (h.size() != 16 || used != h.size()) throw TraceFormatError("line " + std::to_string(lineno) + ": bad post_hash");
    t.steps.push_back(std::move(s));
  }
  if (!have_header) throw TraceFormatError("empty trace");
  return t;
}

Trace read_trace_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw TraceFormatError("cannot open " + path);
  return read_trace(f);
}

ReplayResult replay(const Trace& t) {
  ReplayResult res;
  Configuration c = initial_config(t.header.n);
  Monitor mon(t.header.n);
  for (auto& v : check_invariant(c, t.header.check)) res.violations.push_back(std::move(v));
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const TraceStep& s = t.steps[i];
    const std::string line = to_string(c.proc(s.action.pid).pc);
    if (!is_enabled(c, s.action, t.header.model))
      throw TraceFormatError("step " + std::to_string(i) + ": " + to_string(s.action) + " is not enabled at " + line);
    auto r = step(c, s.action, t.header.model);
    mon.observe(c, s.action, r.effect, r.next, res.violations);
    c = std::move(r.next);
    for (auto& v : check_invariant(c, t.header.check)) res.violations.push_back(std::move(v));
    const std::uint64_t h = hash64(c);
    if (res.hashes_match && (h != s.post_hash || line != s.line)) {
      res.hashes_match = false;
      res.first_mismatch = static_cast<long>(i);
      res.mismatch = line != s.line ? "line " + line + " != recorded " + s.line
                                    : "post_hash " + hex64(h) + " != recorded " + hex64(s.post_hash);
    }
  }
  return res;
}

}  // namespace rme
