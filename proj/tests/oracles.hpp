#pragma once

// Independent oracles shared by the unit tests and the acceptance run. They
// recompute expected values from the algorithm text and the tree shape,
// without calling bounds(), VarSpace or the model.

#include <algorithm>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rme/common.hpp"

namespace rme::oracle {

// Longest weighted path through the method code, written out as a graph over
// line labels independently of the model and of bounds(). A node costs one
// step except registry writes, which cost one per node update.
struct PathOracle {
  int w;
  std::map<std::string, std::vector<std::string>> next;

  explicit PathOracle(int n) {
    int L = 0;
    while ((1 << L) < n) ++L;
    w = 2 * L + 1;
    auto promote = [&](const std::string& c, const std::string& ret) {
      next[c + "P1"] = {c + "P2", c + "P4"};
      next[c + "P2"] = {c + "P3", ret};
      next[c + "P3"] = {c + "P4", ret};
      next[c + "P4"] = {c + "P5", ret};
      next[c + "P5"] = {c + "P6", ret};
      next[c + "P6"] = {ret};
    };
    // exit
    next["exit"] = {"E1"};
    next["E1"] = {"E2"};
    next["E2"] = {"E3"};
    next["E3"] = {"E4"};
    next["E4"] = {"E5"};
    next["E5"] = {"E5:P1"};
    promote("E5:", "E6");
    next["E6"] = {"done"};
    // try, from T1 (the abort budget starts once the signal is up)
    next["T1"] = {"T2"};
    next["T2"] = {"T3"};
    next["T3"] = {"T4"};
    next["T4"] = {"T5"};
    next["T5"] = {"T5:P1"};
    promote("T5:", "T6go");
    next["T6go"] = {"T7", "T6abort"};
    next["T6abort"] = {"T7"};
    next["T7"] = {"done", "T8"};
    next["T8"] = {"A1"};
    // recover
    next["recover"] = {"REC1"};
    next["REC1"] = {"done", "REC2"};
    next["REC2"] = {"A1"};
    // abort
    next["A1"] = {"A2"};
    next["A2"] = {"A2:P1"};
    promote("A2:", "A3");
    next["A3"] = {"done", "A4"};
    next["A4"] = {"A5"};
    next["A5"] = {"done"};
  }

  int cost(const std::string& v) const {
    if (v == "done") return 0;
    return v == "E1" || v == "T4" || v == "A1" ? w : 1;
  }

  // longest path from `from` to "done"; `avoid` prunes edges into a label
  int longest(const std::string& from, const std::function<bool(const std::string&)>& avoid = {}) const {
    if (from == "done") return 0;
    int best = -1;
    for (const auto& s : next.at(from)) {
      if (avoid && avoid(s)) continue;
      const int r = longest(s, avoid);
      if (r >= 0) best = std::max(best, r);
    }
    return best < 0 ? -1 : cost(from) + best;
  }
};

inline int levels(int n) {
  int L = 0;
  while ((1 << L) < n) ++L;
  return L;
}

// DSM owner of a heap-numbered tree node: the smallest real pid under it,
// pid n when every leaf below is padding.
inline Pid oracle_home(int n, int node) {
  const int width = 1 << levels(n);
  int lo = node;
  while (lo < width) lo *= 2;
  const Pid first = lo - width + 1;
  return first <= n ? first : n;
}

// Remote operations of one uncontended registry write by p under DSM. The leaf
// store is local; at every ancestor the write refreshes twice, each refresh
// reading the node and both children and CASing the node.
inline long oracle_write(int n, Pid p) {
  const int width = 1 << levels(n);
  long r = 0;
  for (int a = (width + p - 1) / 2; a >= 1; a /= 2) {
    const long once = 2 * (oracle_home(n, a) != p) + (oracle_home(n, 2 * a) != p) + (oracle_home(n, 2 * a + 1) != p);
    r += 2 * once;
  }
  return r;
}

// Solo try + CS + exit from the initial configuration. Globals live with pid 1.
// Remote outside the registry: T1, T2, P1, P2 (root, home pid 1), P3, P5 in try;
// E2, E3, E4, P1, P2 in exit. go[p] is always local.
inline long oracle_solo_passage(int n, Pid p) { return (p != 1 ? 11 : 0) + 2 * oracle_write(n, p); }

}  // namespace rme::oracle
