// rmecheck: exploration, native stress, RMR reports and trace replay.
// Exit codes: 0 clean, 1 violation (or replay mismatch), 2 usage or guard error.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rme/explorer.hpp"
#include "rme/native_lock.hpp"
#include "rme/rmr.hpp"
#include "rme/trace.hpp"

using namespace rme;
using json = nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kViolation = 1;
constexpr int kUsage = 2;

json violation_json(const Violation& v) {
  json j = {{"kind", v.name()}, {"pid", v.pid}, {"detail", v.detail}, {"schedule_length", v.schedule.size()}};
  json acts = json::array();
  for (const Action& a : v.schedule) acts.push_back(to_string(a));
  j["schedule"] = std::move(acts);
  return j;
}

json histogram_json(const std::map<std::string, Histogram>& h) {
  json j = json::object();
  for (const auto& [model, hist] : h) {
    json m = json::object();
    for (auto [cost, count] : hist) m[std::to_string(cost)] = count;
    j[model] = std::move(m);
  }
  return j;
}

struct CheckArgs {
  ExploreParams p;
  std::string scheduler = "exhaustive";
  std::string scope = "per-run";
  std::string mutation = "none";
  std::string abort_policy = "auto";
  bool literal_cond11 = false;
  bool json_out = false;
  std::string trace_out = "violation.jsonl";
};

int run_check(CheckArgs& a) {
  const auto sched = parse_scheduler(a.scheduler);
  if (!sched) {
    std::cerr << "unknown scheduler: " << a.scheduler << "\n";
    return kUsage;
  }
  const auto mut = parse_mutation(a.mutation);
  if (!mut) {
    std::cerr << "unknown mutation: " << a.mutation << "\n";
    return kUsage;
  }
  if (a.scope != "per-run" && a.scope != "per-attempt") {
    std::cerr << "budget scope must be per-run or per-attempt\n";
    return kUsage;
  }
  if (a.abort_policy != "auto" && a.abort_policy != "explicit") {
    std::cerr << "abort policy must be auto or explicit\n";
    return kUsage;
  }
  ExploreParams& p = a.p;
  p.scheduler = *sched;
  p.model.mutation = *mut;
  p.budget_scope = a.scope == "per-run" ? BudgetScope::PerRun : BudgetScope::PerAttempt;
  p.model.abort_policy.auto_clear = a.abort_policy == "auto";
  p.model.abort_policy.explicit_clear = a.abort_policy == "explicit";
  p.check.cond11_peer_t8 = !a.literal_cond11;

  Report r;
  try {
    r = explore(p);
  } catch (const GuardError& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return kUsage;
  }

  if (!r.violations.empty() && !a.trace_out.empty()) {
    const Violation& v = r.violations.front();
    TraceHeader h;
    h.n = p.n;
    h.model = p.model;
    h.check = p.check;
    h.violation = v.name();
    h.detail = v.detail;
    std::ofstream f(a.trace_out);
    write_trace(f, h, v.schedule);
  }

  if (a.json_out) {
    json j = {{"scheduler", to_string(p.scheduler)},
              {"n", p.n},
              {"seed", p.seed},
              {"states_visited", r.states_visited},
              {"transitions", r.transitions},
              {"max_frontier", r.max_frontier},
              {"schedules_run", r.schedules_run},
              {"attempts_completed", r.attempts_completed},
              {"passages", r.passages},
              {"deepest", r.deepest},
              {"wall_seconds", r.wall_seconds},
              {"digest", hex64(r.digest)}};
    json vs = json::array();
    for (const auto& v : r.violations) vs.push_back(violation_json(v));
    j["violations"] = std::move(vs);
    if (!r.rmr.empty()) j["rmr"] = histogram_json(r.rmr);
    if (!r.violations.empty() && !a.trace_out.empty()) j["trace"] = a.trace_out;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << to_string(p.scheduler) << " n=" << p.n << " seed=" << p.seed;
    if (p.scheduler == Scheduler::Exhaustive)
      std::cout << " depth=" << p.max_depth << " states=" << r.states_visited << " deepest=" << r.deepest;
    else
      std::cout << " schedules=" << r.schedules_run << " actions=" << r.transitions
                << " attempts=" << r.attempts_completed;
    std::cout << " time=" << r.wall_seconds << "s digest=" << hex64(r.digest) << "\n";
    if (r.violations.empty()) {
      std::cout << "no violations\n";
    } else {
      for (const auto& v : r.violations)
        std::cout << "VIOLATION " << v.name() << (v.pid ? " (p" + std::to_string(v.pid) + ")" : "") << ": "
                  << v.detail << " after " << v.schedule.size() << " actions\n";
      if (!a.trace_out.empty()) std::cout << "trace written to " << a.trace_out << "\n";
    }
  }
  return r.violations.empty() ? kOk : kViolation;
}

struct StressArgs {
  native::StressParams p;
  std::string points;
  bool json_out = false;
};

int run_stress_cmd(StressArgs& a) {
  std::string spec = a.points;
  if (spec.empty())
    if (const char* env = std::getenv("RME_CRASH_POINTS")) spec = env;
  try {
    a.p.point_weights = native::parse_point_weights(spec);
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return kUsage;
  }
  if (a.p.threads < 1 || a.p.passages < 0 || a.p.crash_rate < 0 || a.p.crash_rate > 1 || a.p.abort_rate < 0 ||
      a.p.abort_rate > 1) {
    std::cerr << "bad stress parameters\n";
    return kUsage;
  }
  const native::StressReport r = native::run_stress(a.p);
  if (a.json_out) {
    json j = {{"threads", a.p.threads},        {"passages", r.passages},
              {"seed", a.p.seed},              {"cs_entries", r.cs_entries},
              {"counter", r.counter},          {"crashes", r.crashes},
              {"crashes_in_cs", r.crashes_in_cs}, {"aborts_requested", r.aborts_requested},
              {"aborted", r.aborted},          {"recoveries", r.recoveries},
              {"mutex_violations", r.mutex_violations}, {"csr_violations", r.csr_violations},
              {"deadlock", r.deadlock},        {"seconds", r.seconds},
              {"crashes_by_point", r.crashes_by_point}, {"ok", r.ok()}};
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "stress threads=" << a.p.threads << " seed=" << a.p.seed << " passages=" << r.passages
              << " time=" << r.seconds << "s\n"
              << "counter=" << r.counter << " cs_entries=" << r.cs_entries << " crashes=" << r.crashes
              << " (in CS " << r.crashes_in_cs << ") aborts=" << r.aborts_requested << " aborted=" << r.aborted
              << "\n"
              << "mutex_violations=" << r.mutex_violations << " csr_violations=" << r.csr_violations
              << " deadlock=" << (r.deadlock ? "yes" : "no") << "\n"
              << (r.ok() ? "ok" : "FAILED") << "\n";
  }
  return r.ok() ? kOk : kViolation;
}

struct RmrArgs {
  std::string file;
  std::string model = "all";
  std::string format = "csv";
};

int run_rmr_report(RmrArgs& a) {
  std::vector<MemoryModel> models;
  if (a.model == "all") {
    models.assign(kAllModels.begin(), kAllModels.end());
  } else if (auto m = parse_memory_model(a.model)) {
    models.push_back(*m);
  } else {
    std::cerr << "unknown memory model: " << a.model << "\n";
    return kUsage;
  }
  if (a.format != "csv" && a.format != "json") {
    std::cerr << "format must be csv or json\n";
    return kUsage;
  }
  Trace t;
  RmrSummary s;
  try {
    t = read_trace_file(a.file);
    replay(t);  // rejects traces that do not execute
    s = aggregate(t.header.n, t.actions(), t.header.model);
  } catch (const TraceFormatError& e) {
    std::cerr << "bad trace: " << e.what() << "\n";
    return kUsage;
  }
  if (a.format == "csv") {
    std::cout << "unit,pid,index,model,rmr,steps_or_passages,crashes,k,end\n";
    for (const PassageStats& ps : s.passages)
      for (MemoryModel m : models)
        std::cout << "passage," << ps.pid << "," << ps.index << "," << to_string(m) << ","
                  << ps.rmr[static_cast<int>(m)] << "," << ps.steps << "," << (ps.ended_by_crash ? 1 : 0) << ","
                  << ps.k << "," << (ps.open ? "open" : ps.ended_by_crash ? "crash" : "rem") << "\n";
    for (const AttemptStats& at : s.attempts)
      for (MemoryModel m : models)
        std::cout << "attempt," << at.pid << "," << at.index << "," << to_string(m) << ","
                  << at.rmr[static_cast<int>(m)] << "," << at.passages << "," << at.crashes << "," << at.k << ","
                  << (at.end == AttemptStats::End::Open ? "open" : at.end == AttemptStats::End::Cs ? "cs" : "rem")
                  << "\n";
  } else {
    json j = {{"n", t.header.n}, {"steps", t.steps.size()}};
    json ps = json::array(), ats = json::array();
    std::map<std::string, Histogram> hist;
    for (const PassageStats& p : s.passages) {
      json x = {{"pid", p.pid}, {"index", p.index}, {"attempt", p.attempt}, {"steps", p.steps},
                {"k", p.k},     {"ended_by_crash", p.ended_by_crash},    {"open", p.open}};
      for (MemoryModel m : models) {
        x["rmr"][to_string(m)] = p.rmr[static_cast<int>(m)];
        ++hist[to_string(m)][p.rmr[static_cast<int>(m)]];
      }
      ps.push_back(std::move(x));
    }
    for (const AttemptStats& at : s.attempts) {
      json x = {{"pid", at.pid}, {"index", at.index}, {"passages", at.passages}, {"crashes", at.crashes},
                {"k", at.k},
                {"end", at.end == AttemptStats::End::Open ? "open" : at.end == AttemptStats::End::Cs ? "cs" : "rem"}};
      for (MemoryModel m : models) x["rmr"][to_string(m)] = at.rmr[static_cast<int>(m)];
      ats.push_back(std::move(x));
    }
    j["passages"] = std::move(ps);
    j["attempts"] = std::move(ats);
    j["passage_histogram"] = histogram_json(hist);
    std::cout << j.dump(2) << "\n";
  }
  return kOk;
}

struct ReplayArgs {
  std::string file;
  bool json_out = false;
};

int run_replay(ReplayArgs& a) {
  Trace t;
  ReplayResult r;
  try {
    t = read_trace_file(a.file);
    r = replay(t);
  } catch (const TraceFormatError& e) {
    std::cerr << "bad trace: " << e.what() << "\n";
    return kUsage;
  }
  if (a.json_out) {
    json vs = json::array();
    for (const auto& v : r.violations) vs.push_back(v.name());
    json j = {{"steps", t.steps.size()}, {"hashes_match", r.hashes_match}, {"violations", vs}};
    if (!r.hashes_match) j["first_mismatch"] = r.first_mismatch, j["mismatch"] = r.mismatch;
    if (t.header.violation) j["recorded_violation"] = *t.header.violation;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "replayed " << t.steps.size() << " steps, n=" << t.header.n << "\n";
    if (r.hashes_match)
      std::cout << "post_hash sequence identical\n";
    else
      std::cout << "MISMATCH at step " << r.first_mismatch << ": " << r.mismatch << "\n";
    if (t.header.violation) std::cout << "recorded violation: " << *t.header.violation << "\n";
    for (const auto& v : r.violations) std::cout << "reproduced " << v.name() << ": " << v.detail << "\n";
  }
  return r.hashes_match ? kOk : kViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recoverable abortable mutual exclusion: model checking, stress and RMR accounting"};
  app.require_subcommand(1);

  CheckArgs ck;
  auto* check = app.add_subcommand("check", "explore schedules of the model and check every configuration");
  check->add_option("--n", ck.p.n, "processes")->capture_default_str();
  check->add_option("--depth", ck.p.max_depth, "exhaustive: actions per path")->capture_default_str();
  check->add_option("--crash-budget", ck.p.crash_budget, "crashes per process")->capture_default_str();
  check->add_option("--abort-budget", ck.p.abort_budget, "abort signals per process")->capture_default_str();
  check->add_option("--budget-scope", ck.scope, "per-run or per-attempt")->capture_default_str();
  check->add_option("--attempt-limit", ck.p.attempt_limit, "try invocations per process (0: unlimited, random: 2)")
      ->capture_default_str();
  check->add_option("--scheduler", ck.scheduler, "exhaustive, random or fair_random")->capture_default_str();
  check->add_option("--seed", ck.p.seed, "random seed")->capture_default_str();
  check->add_option("--schedules", ck.p.schedules, "random: number of schedules")->capture_default_str();
  check->add_option("--max-steps", ck.p.max_steps, "random: actions per schedule")->capture_default_str();
  check->add_option("--crash-prob", ck.p.crash_prob, "random: per-step crash chance")->capture_default_str();
  check->add_option("--abort-prob", ck.p.abort_prob, "random: per-step abort chance")->capture_default_str();
  check->add_option("--recover-prob", ck.p.recover_prob, "random: idle recover chance")->capture_default_str();
  check->add_option("--threads", ck.p.threads, "OpenMP threads (0: default)")->capture_default_str();
  check->add_option("--max-violations", ck.p.max_violations, "stop after this many")->capture_default_str();
  check->add_option("--mutation", ck.mutation, "none, blind-go-write, skip-abort-promote, exit-no-seq-increment")
      ->capture_default_str();
  check->add_option("--abort-policy", ck.abort_policy, "auto or explicit clearing of the abort signal")
      ->capture_default_str();
  check->add_flag("--literal-cond11", ck.literal_cond11, "Condition 11 without the peer-at-T8 allowance");
  check->add_flag("--rmr", ck.p.rmr, "random: collect per-passage RMR histograms");
  check->add_flag("--json", ck.json_out, "JSON report");
  check->add_option("--trace-out", ck.trace_out, "where to write the first violation's trace")->capture_default_str();

  StressArgs st;
  auto* stress = app.add_subcommand("stress", "run the native lock under crash and abort injection");
  stress->add_option("--threads", st.p.threads, "threads (one pid each)")->capture_default_str();
  stress->add_option("--passages", st.p.passages, "try invocations per thread")->capture_default_str();
  stress->add_option("--crash-rate", st.p.crash_rate, "chance a passage is armed with a crash point")
      ->capture_default_str();
  stress->add_option("--abort-rate", st.p.abort_rate, "chance the abort signal is raised before try")
      ->capture_default_str();
  stress->add_option("--seed", st.p.seed, "random seed")->capture_default_str();
  stress->add_option("--stall-seconds", st.p.stall_seconds, "watchdog")->capture_default_str();
  stress->add_option("--crash-points", st.points, "label:weight,... (default $RME_CRASH_POINTS, else uniform)");
  stress->add_flag("--json", st.json_out, "JSON report");

  RmrArgs rm;
  auto* rmr = app.add_subcommand("rmr-report", "per-passage and per-attempt RMR counts of a trace");
  rmr->add_option("trace", rm.file, "JSON-lines trace")->required();
  rmr->add_option("--model", rm.model, "dsm, strict-cc, relaxed-cc or all")->capture_default_str();
  rmr->add_option("--format", rm.format, "csv or json")->capture_default_str();

  ReplayArgs rp;
  auto* rpl = app.add_subcommand("replay", "re-execute a trace and compare post_hash values");
  rpl->add_option("trace", rp.file, "JSON-lines trace")->required();
  rpl->add_flag("--json", rp.json_out, "JSON report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (*check) return run_check(ck);
  if (*stress) return run_stress_cmd(st);
  if (*rmr) return run_rmr_report(rm);
  if (*rpl) return run_replay(rp);
  return kUsage;
}
