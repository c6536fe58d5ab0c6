#pragma once

// Min-array ("registry"): per-process cells plus a global findmin.
//
// FlatRegistry is the obviously-correct reference. The tournament tree keeps
// one word per node, each internal node caching the minimum of its subtree;
// a write stores the leaf and then refreshes every ancestor twice
// (read node, read both children, CAS node). Two refreshes per level make a
// concurrent writer unable to leave a stale ancestor behind, and re-running
// an abandoned write converges to the same state as a single write.

#include <algorithm>
#include <array>
#include <atomic>
#include <compare>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rme/common.hpp"

namespace rme {

struct Pair {
  Pid pid = 0;
  Token tok = kInfinity;

  bool is_infinite() const { return tok == kInfinity; }
  friend bool operator==(const Pair&, const Pair&) = default;
};

/// (p,t) < (p',t') iff t < t' or (t == t' and p < p').
std::strong_ordering cmp(const Pair& a, const Pair& b);
inline bool operator<(const Pair& a, const Pair& b) { return cmp(a, b) < 0; }
std::string to_string(const Pair& p);

/// Tree word: token in the high bits, pid in the low kPidBits, so that
/// unsigned comparison of words is exactly the pair order.
using Word = std::uint64_t;
inline constexpr int kPidBits = 16;
inline constexpr Pid kMaxProcesses = (1 << kPidBits) - 1;

Word pack(const Pair& p);
Pair unpack(Word w);

class FlatRegistry {
 public:
  explicit FlatRegistry(int n);

  void write(Pid p, const Pair& v);
  Pair findmin() const;
  const Pair& at(Pid p) const { return cells_.at(p - 1); }
  std::span<const Pair> cells() const { return cells_; }

 private:
  std::vector<Pair> cells_;
};

/// Heap-shaped complete binary tree over bit_ceil(n) leaves. Node 1 is the
/// root, node i has children 2i and 2i+1, leaf of pid p is width()+p-1.
/// Padding leaves (pid > n) permanently hold (pid, inf).
class TreeLayout {
 public:
  explicit TreeLayout(int n);

  int processes() const { return n_; }
  int width() const { return width_; }
  int depth() const { return depth_; }
  int node_count() const { return 2 * width_; }  // valid indices are [1, node_count)
  static constexpr int root() { return 1; }
  int leaf(Pid p) const { return width_ + p - 1; }
  bool is_leaf(int node) const { return node >= width_; }
  Pid leaf_pid(int node) const { return node - width_ + 1; }

  /// DSM home of a node: leaf p lives with p, an internal node with the
  /// smallest real pid beneath it; all-padding subtrees go to pid n.
  Pid home(int node) const;

  /// Operations performed by one uncontended write: a leaf store plus
  /// two refreshes of four operations at every level.
  int write_op_count() const { return 1 + 8 * depth_; }
  /// Node updates (leaf store + CAS attempts) of one write: 2*depth+1.
  int write_update_count() const { return 1 + 2 * depth_; }

 private:
  int n_;
  int width_;
  int depth_;
};

/// One operation on a tree node, as performed by RegistryWrite::step.
struct NodeOp {
  OpKind kind = OpKind::Read;
  int node = 0;
  Word before = 0;
  Word after = 0;
  bool ok = true;
};

/// Plain word array; the cells used by sequential code and the model checker.
class VectorCells {
 public:
  explicit VectorCells(const TreeLayout& layout);

  Word load(int i) const { return words_[i]; }
  Word exchange(int i, Word w) { return std::exchange(words_[i], w); }
  /// On failure `expected` receives the current value.
  bool cas(int i, Word& expected, Word desired) {
    if (words_[i] != expected) {
      expected = words_[i];
      return false;
    }
    words_[i] = desired;
    return true;
  }
  const std::vector<Word>& words() const { return words_; }
  friend bool operator==(const VectorCells&, const VectorCells&) = default;

 private:
  std::vector<Word> words_;
};

/// Sequentially consistent atomic words for the native lock.
class AtomicCells {
 public:
  explicit AtomicCells(const TreeLayout& layout);

  Word load(int i) const { return words_[i].load(std::memory_order_seq_cst); }
  Word exchange(int i, Word w) { return words_[i].exchange(w, std::memory_order_seq_cst); }
  bool cas(int i, Word& expected, Word desired) {
    return words_[i].compare_exchange_strong(expected, desired, std::memory_order_seq_cst);
  }

 private:
  std::unique_ptr<std::atomic<Word>[]> words_;
};

/// Resumable registry write: each call to step() performs exactly one
/// shared operation. A crashed writer simply drops the object; re-running a
/// fresh RegistryWrite for the same (p, v) completes the abandoned one.
class RegistryWrite {
 public:
  RegistryWrite(const TreeLayout& layout, Pid p, const Pair& v);

  bool done() const { return node_ == 0; }
  /// Number of operations performed so far.
  int performed() const { return performed_; }
  /// Full internal state, for memoising explorations over interleavings.
  std::array<Word, 9> snapshot() const {
    return {value_, Word(leaf_), Word(node_), Word(refresh_), Word(phase_), Word(leaf_stored_),
            seen_node_, seen_left_, seen_right_};
  }

  template <class Cells>
  NodeOp step(Cells& cells);

 private:
  const TreeLayout* layout_;
  Word value_;
  int leaf_;
  int node_;  // next node to act on; 0 once finished
  int refresh_ = 0;
  int phase_ = 0;  // 0 read node, 1 read left, 2 read right, 3 CAS
  int performed_ = 0;
  bool leaf_stored_ = false;
  Word seen_node_ = 0;
  Word seen_left_ = 0;
  Word seen_right_ = 0;
};

template <class Cells>
NodeOp RegistryWrite::step(Cells& cells) {
  NodeOp op;
  ++performed_;
  if (!leaf_stored_) {
    op.kind = OpKind::Write;
    op.node = leaf_;
    op.before = cells.exchange(leaf_, value_);
    op.after = value_;
    leaf_stored_ = true;
    node_ = leaf_ == TreeLayout::root() ? 0 : leaf_ / 2;
    return op;
  }
  op.node = node_;
  switch (phase_) {
    case 0:
      seen_node_ = cells.load(node_);
      op.before = op.after = seen_node_;
      break;
    case 1:
      op.node = 2 * node_;
      seen_left_ = cells.load(op.node);
      op.before = op.after = seen_left_;
      break;
    case 2:
      op.node = 2 * node_ + 1;
      seen_right_ = cells.load(op.node);
      op.before = op.after = seen_right_;
      break;
    default: {
      op.kind = OpKind::Cas;
      const Word want = std::min(seen_left_, seen_right_);
      Word observed = seen_node_;
      op.ok = cells.cas(node_, observed, want);
      op.before = observed;
      op.after = op.ok ? want : observed;
      break;
    }
  }
  if (phase_ != 0 && phase_ != 3) op.kind = OpKind::Read;
  if (++phase_ == 4) {
    phase_ = 0;
    if (++refresh_ == 2) {
      refresh_ = 0;
      node_ = node_ == TreeLayout::root() ? 0 : node_ / 2;
    }
  }
  return op;
}

/// Tournament-tree min-array over any cell storage.
template <class Cells>
class TournamentTree {
 public:
  explicit TournamentTree(int n) : layout_(n), cells_(layout_) {}

  void write(Pid p, const Pair& v) {
    RegistryWrite w(layout_, p, v);
    while (!w.done()) w.step(cells_);
  }
  Pair findmin() const { return unpack(cells_.load(TreeLayout::root())); }
  Pair leaf(Pid p) const { return unpack(cells_.load(layout_.leaf(p))); }

  const TreeLayout& layout() const { return layout_; }
  Cells& cells() { return cells_; }
  const Cells& cells() const { return cells_; }

 private:
  TreeLayout layout_;
  Cells cells_;
};

/// Coherent cells for the given leaf values (every internal node = min of children).
VectorCells build_cells(const TreeLayout& layout, std::span<const Pair> leaves);

/// True iff every internal node equals the minimum of its two children.
bool quiescent_coherent(const TreeLayout& layout, const VectorCells& cells);

/// Operations of an uncontended write of v into leaf p, starting from the
/// coherent tree over `leaves`.
std::vector<NodeOp> expand_write(const TreeLayout& layout, std::span<const Pair> leaves, Pid p,
                                 const Pair& v);

}  // namespace rme
