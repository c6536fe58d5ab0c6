#include <algorithm>
#include <chrono>
#include <random>
#include <thread>

#include "rme/native_lock.hpp"

namespace rme::native {

namespace {

// One armed crash point per process; only the owning thread touches its slot.
// `skip` lets a crash land inside a registry write or a later spin round.
struct Armed {
  std::string_view label;
  int skip = 0;
};

struct ArmedHooks {
  std::vector<Armed>* armed;

  void at(Pid p, std::string_view label) {
    Armed& a = (*armed)[p - 1];
    if (a.label.empty() || a.label != label) return;
    if (a.skip > 0) {
      --a.skip;
      return;
    }
    a = {};
    throw SimulatedCrash{label};
  }
};

struct alignas(64) Tally {
  long passages = 0, cs = 0, crashes = 0, crashes_in_cs = 0, aborts_requested = 0, aborted = 0, recoveries = 0;
  long mutex = 0, csr = 0;
  std::vector<long> by_point;
};

long point_index(std::string_view label) {
  const auto& pts = crash_points();
  return std::find(pts.begin(), pts.end(), label) - pts.begin();
}

}  // namespace

std::vector<std::pair<std::string, double>> parse_point_weights(std::string_view spec) {
  std::vector<std::pair<std::string, double>> out;
  const auto& known = crash_points();
  while (!spec.empty()) {
    const auto comma = spec.find(',');
    std::string_view item = spec.substr(0, comma);
    spec = comma == std::string_view::npos ? std::string_view{} : spec.substr(comma + 1);
    if (item.empty()) continue;
    double w = 1;
    const auto colon = item.rfind(':');
    // labels contain "::", so only a trailing ":<number>" is a weight
    if (colon != std::string_view::npos && colon > 0 && item[colon - 1] != ':') {
      const std::string num(item.substr(colon + 1));
      std::size_t used = 0;
      try {
        w = std::stod(num, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != num.size() || w < 0) throw std::invalid_argument("bad crash point weight: " + std::string(item));
      item = item.substr(0, colon);
    }
    if (std::find(known.begin(), known.end(), item) == known.end())
      throw std::invalid_argument("unknown crash point: " + std::string(item));
    out.emplace_back(std::string(item), w);
  }
  return out;
}

StressReport run_stress(const StressParams& prm) {
  if (prm.threads < 1 || prm.threads > kMaxProcesses) throw std::invalid_argument("threads out of range");
  const int n = prm.threads;
  const auto& labels = crash_points();
  std::vector<double> weights(labels.size(), prm.point_weights.empty() ? 1.0 : 0.0);
  for (const auto& [name, w] : prm.point_weights)
    weights[std::find(labels.begin(), labels.end(), name) - labels.begin()] += w;

  std::vector<Armed> armed(n);
  const int write_ops = TreeLayout(n).write_op_count();
  auto arm = [&](std::mt19937_64& rng, std::discrete_distribution<int>& pick) {
    const std::string_view l = labels[pick(rng)];
    int span = 1;
    if (l == "T4" || l == "E1" || l == "A1") span = write_ops;
    if (l == "T6") span = 4;
    return Armed{l, static_cast<int>(rng() % span)};
  };
  RecoverableLock<ArmedHooks> lock(n, ArmedHooks{&armed});
  std::vector<Tally> tally(n);
  std::vector<std::atomic<bool>> crashed_in_cs(n + 1);
  std::atomic<Pid> holder{0};
  std::atomic<long> counter{0};
  std::atomic<long> progress{0};
  std::atomic<int> finished{0};
  std::atomic<bool> stop{false};

  auto body = [&](Pid p) {
    auto s = lock.session(p);
    Tally& t = tally[p - 1];
    t.by_point.assign(labels.size(), 0);
    std::mt19937_64 rng(prm.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(p));
    std::uniform_real_distribution<double> u(0, 1);
    std::discrete_distribution<int> pick(weights.begin(), weights.end());
    enum class Next { Try, Recover, Cs, Done };
    for (long i = 0; i < prm.passages && !stop.load(std::memory_order_relaxed); ++i) {
      if (u(rng) < prm.crash_rate) armed[p - 1] = arm(rng, pick);
      if (u(rng) < prm.abort_rate) {
        lock.set_abort(p, true);
        ++t.aborts_requested;
      }
      Next next = Next::Try;
      while (next != Next::Done) {
        try {
          switch (next) {
            case Next::Try:
              next = s.try_enter() == Outcome::InCs ? Next::Cs : Next::Done;
              if (next == Next::Done) ++t.aborted;
              break;
            case Next::Recover:
              ++t.recoveries;
              next = s.recover() == Outcome::InCs ? Next::Cs : Next::Done;
              break;
            case Next::Cs: {
              const Pid h = holder.exchange(p);
              if (h != 0 && h != p) ++(crashed_in_cs[h].load() ? t.csr : t.mutex);
              crashed_in_cs[p].store(false);
              {
                // split read-modify-write: a second process in CS loses an update
                const long c = counter.load(std::memory_order_relaxed);
                std::this_thread::yield();
                counter.store(c + 1, std::memory_order_relaxed);
              }
              ++t.cs;
              if (armed[p - 1].label == "CS") {
                armed[p - 1] = {};
                crashed_in_cs[p].store(true);
                s.crash();
                ++t.crashes;
                ++t.by_point[point_index("CS")];
                ++t.crashes_in_cs;
                next = Next::Recover;
                if (u(rng) < prm.crash_rate) armed[p - 1] = arm(rng, pick);
                break;
              }
              Pid mine = p;
              holder.compare_exchange_strong(mine, 0);
              s.exit();
              next = Next::Done;
              break;
            }
            case Next::Done: break;
          }
        } catch (const SimulatedCrash& c) {
          ++t.crashes;
          ++t.by_point[point_index(c.point)];
          next = Next::Recover;
          // the recovery itself may crash too
          if (u(rng) < prm.crash_rate) armed[p - 1] = arm(rng, pick);
        }
      }
      armed[p - 1] = {};
      lock.set_abort(p, false);
      ++t.passages;
      progress.fetch_add(1, std::memory_order_relaxed);
    }
    finished.fetch_add(1);
  };

  StressReport rep;
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::thread> pool;
  pool.reserve(n);
  for (Pid p = 1; p <= n; ++p) pool.emplace_back(body, p);

  long last = -1;
  auto last_change = std::chrono::steady_clock::now();
  while (finished.load() < n) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    const long now_progress = progress.load();
    const auto now = std::chrono::steady_clock::now();
    if (now_progress != last) {
      last = now_progress;
      last_change = now;
    } else if (std::chrono::duration<double>(now - last_change).count() > prm.stall_seconds) {
      rep.deadlock = true;
      stop.store(true);
      // a waiter that sees its abort signal must leave, so this unblocks the pool
      for (Pid p = 1; p <= n; ++p) lock.set_abort(p, true);
      break;
    }
  }
  for (auto& th : pool) th.join();
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  for (const Tally& t : tally) {
    rep.passages += t.passages;
    rep.cs_entries += t.cs;
    rep.crashes += t.crashes;
    rep.crashes_in_cs += t.crashes_in_cs;
    rep.aborts_requested += t.aborts_requested;
    rep.aborted += t.aborted;
    rep.recoveries += t.recoveries;
    rep.mutex_violations += t.mutex;
    rep.csr_violations += t.csr;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (i < t.by_point.size() && t.by_point[i]) rep.crashes_by_point[std::string(labels[i])] += t.by_point[i];
  }
  rep.counter = counter.load();
  return rep;
}

}  // namespace rme::native
