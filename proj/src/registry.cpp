#include "rme/registry.hpp"

#include <bit>
#include <stdexcept>

namespace rme {

std::strong_ordering cmp(const Pair& a, const Pair& b) {
  if (auto c = a.tok <=> b.tok; c != 0) return c;
  return a.pid <=> b.pid;
}

std::string to_string(const Pair& p) {
  return "(" + std::to_string(p.pid) + "," + (p.is_infinite() ? std::string("inf") : std::to_string(p.tok)) +
         ")";
}

Word pack(const Pair& p) {
  if (p.pid < 0 || p.pid > kMaxProcesses) throw std::out_of_range("pid does not fit a registry word");
  if (p.tok < 0 || p.tok > kInfinity) throw std::overflow_error("token does not fit a registry word");
  return (static_cast<Word>(p.tok) << kPidBits) | static_cast<Word>(p.pid);
}

Pair unpack(Word w) {
  return Pair{static_cast<Pid>(w & ((Word{1} << kPidBits) - 1)), static_cast<Token>(w >> kPidBits)};
}

FlatRegistry::FlatRegistry(int n) {
  if (n < 1) throw std::invalid_argument("registry needs at least one process");
  cells_.reserve(n);
  for (Pid p = 1; p <= n; ++p) cells_.push_back(Pair{p, kInfinity});
}

void FlatRegistry::write(Pid p, const Pair& v) {
  if (v.pid != p) throw std::invalid_argument("registry[p].write requires v.pid == p");
  cells_.at(p - 1) = v;
}

Pair FlatRegistry::findmin() const {
  Pair best = cells_.front();
  for (const Pair& c : cells_)
    if (c < best) best = c;
  return best;
}

TreeLayout::TreeLayout(int n) : n_(n) {
  if (n < 1 || n > kMaxProcesses) throw std::invalid_argument("tree needs 1..65535 processes");
  width_ = static_cast<int>(std::bit_ceil(static_cast<unsigned>(n)));
  depth_ = std::countr_zero(static_cast<unsigned>(width_));
}

Pid TreeLayout::home(int node) const {
  while (!is_leaf(node)) node *= 2;
  Pid p = leaf_pid(node);
  return p <= n_ ? p : n_;
}

VectorCells::VectorCells(const TreeLayout& layout) : words_(layout.node_count(), 0) {
  for (int i = layout.width(); i < layout.node_count(); ++i)
    words_[i] = pack(Pair{layout.leaf_pid(i), kInfinity});
  for (int i = layout.width() - 1; i >= 1; --i) words_[i] = std::min(words_[2 * i], words_[2 * i + 1]);
}

AtomicCells::AtomicCells(const TreeLayout& layout)
    : words_(std::make_unique<std::atomic<Word>[]>(layout.node_count())) {
  VectorCells init(layout);
  for (int i = 0; i < layout.node_count(); ++i) words_[i].store(init.load(i));
}

RegistryWrite::RegistryWrite(const TreeLayout& layout, Pid p, const Pair& v)
    : layout_(&layout), value_(0), leaf_(0), node_(0) {
  if (p < 1 || p > layout.processes()) throw std::out_of_range("registry write: pid out of range");
  if (v.pid != p) throw std::invalid_argument("registry[p].write requires v.pid == p");
  value_ = pack(v);
  leaf_ = layout.leaf(p);
  node_ = leaf_;
}

VectorCells build_cells(const TreeLayout& layout, std::span<const Pair> leaves) {
  if (static_cast<int>(leaves.size()) != layout.processes())
    throw std::invalid_argument("build_cells: leaf count mismatch");
  VectorCells cells(layout);
  for (Pid p = 1; p <= layout.processes(); ++p) cells.exchange(layout.leaf(p), pack(leaves[p - 1]));
  for (int i = layout.width() - 1; i >= 1; --i)
    cells.exchange(i, std::min(cells.load(2 * i), cells.load(2 * i + 1)));
  return cells;
}

bool quiescent_coherent(const TreeLayout& layout, const VectorCells& cells) {
  for (int i = 1; i < layout.width(); ++i)
    if (cells.load(i) != std::min(cells.load(2 * i), cells.load(2 * i + 1))) return false;
  return true;
}

std::vector<NodeOp> expand_write(const TreeLayout& layout, std::span<const Pair> leaves, Pid p,
                                 const Pair& v) {
  VectorCells cells = build_cells(layout, leaves);
  RegistryWrite w(layout, p, v);
  std::vector<NodeOp> ops;
  ops.reserve(layout.write_op_count());
  while (!w.done()) ops.push_back(w.step(cells));
  return ops;
}

}  // namespace rme
