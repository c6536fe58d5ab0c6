#include <doctest.h>

#include <random>

#include "registry_oracle.hpp"
#include "rme/registry.hpp"

using namespace rme;

TEST_CASE("pair order is token first, then pid") {
  CHECK(Pair{2, 3} < Pair{1, 4});
  CHECK(Pair{1, 3} < Pair{2, 3});
  CHECK_FALSE(Pair{1, kInfinity} < Pair{2, 7});
  // packed words must order exactly like pairs
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    Pair a{int(rng() % 9) + 1, Token(rng() % 5)};
    Pair b{int(rng() % 9) + 1, Token(rng() % 5)};
    CHECK((a < b) == (pack(a) < pack(b)));
    CHECK(unpack(pack(a)) == a);
  }
}

TEST_CASE("pack rejects values that would alias") {
  CHECK_THROWS_AS(pack(Pair{1, kInfinity + 1}), std::overflow_error);
  CHECK_THROWS_AS(pack(Pair{70000, 1}), std::out_of_range);
}

TEST_CASE("flat registry write demands own pid") {
  FlatRegistry f(3);
  CHECK_THROWS(f.write(1, Pair{2, 5}));
  f.write(2, Pair{2, 5});
  CHECK(f.findmin() == Pair{2, 5});
}

TEST_CASE("layout shape and homes") {
  TreeLayout l(5);
  CHECK(l.width() == 8);
  CHECK(l.depth() == 3);
  CHECK(l.leaf(1) == 8);
  CHECK(l.home(1) == 1);
  CHECK(l.home(3) == 5);   // subtree of leaves 5..8 -> smallest real pid 5
  CHECK(l.home(7) == 5);   // leaves 7,8 are padding -> pid n
  CHECK(l.home(l.leaf(4)) == 4);
  TreeLayout one(1);
  CHECK(one.depth() == 0);
  CHECK(one.write_op_count() == 1);
}

TEST_CASE("uncontended write performs 1 + 8 log n operations") {
  for (int n : {1, 2, 3, 4, 7, 8, 16}) {
    TreeLayout l(n);
    std::vector<Pair> leaves;
    for (Pid p = 1; p <= n; ++p) leaves.push_back(Pair{p, kInfinity});
    int depth = 0;
    while ((1 << depth) < n) ++depth;
    auto ops = expand_write(l, leaves, n, Pair{n, 9});
    CHECK(int(ops.size()) == 1 + 8 * depth);
    CHECK(ops.front().kind == OpKind::Write);
    CHECK(ops.front().node == l.leaf(n));
  }
}

TEST_CASE("sequential tree matches flat reference") {
  std::mt19937_64 rng(11);
  for (int n : {1, 2, 3, 5, 8, 13}) {
    TournamentTree<VectorCells> t(n);
    FlatRegistry f(n);
    for (int i = 0; i < 500; ++i) {
      Pid p = int(rng() % n) + 1;
      Pair v{p, rng() % 3 == 0 ? kInfinity : Token(rng() % 6 + 1)};
      t.write(p, v);
      f.write(p, v);
      REQUIRE(t.findmin() == f.findmin());
      REQUIRE(quiescent_coherent(t.layout(), t.cells()));
    }
  }
}

TEST_CASE("abandoned write completed by a rerun") {
  for (int n : {2, 4, 8}) {
    TreeLayout l(n);
    std::vector<Pair> leaves;
    for (Pid p = 1; p <= n; ++p) leaves.push_back(Pair{p, Token(p + 2)});
    auto final_leaves = leaves;
    final_leaves[0] = Pair{1, 1};
    const VectorCells want = build_cells(l, final_leaves);
    for (int k = 0; k <= l.write_op_count(); ++k) {
      VectorCells cells = build_cells(l, leaves);
      RegistryWrite w(l, 1, Pair{1, 1});
      for (int i = 0; i < k && !w.done(); ++i) w.step(cells);
      RegistryWrite again(l, 1, Pair{1, 1});
      while (!again.done()) again.step(cells);
      CHECK(cells == want);
    }
  }
}

TEST_CASE("two writers and a findmin, all schedules, n <= 3") {
  long states = 0;
  for (const auto& c : oracle::registry_cases(3)) {
    oracle::RegistryExplorer ex(c);
    auto out = ex.run();
    states += out.states;
    INFO("n=" << c.n << " w1=" << c.w1 << to_string(c.v1) << " w2=" << c.w2 << to_string(c.v2));
    CHECK(out.failures.empty());
    if (!out.failures.empty()) MESSAGE(out.failures.front());
  }
  CHECK(states > 0);
}
