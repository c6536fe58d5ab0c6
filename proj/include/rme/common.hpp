#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace rme {

/// Process ids are 1-based, matching the algorithm's P = {1, ..., n}.
using Pid = int;
using Token = std::int64_t;

/// Largest token the packed registry word can hold; reserved as "infinity".
inline constexpr Token kInfinity = (Token{1} << 47) - 1;

enum class VarKind : std::uint8_t { Token, Seq, CsOwner, Go, AbortSig, Registry, Node };

/// Identity of one shared variable. `index` is the pid for go/abortsig/registry
/// and the heap index for tournament-tree nodes.
struct VarId {
  VarKind kind = VarKind::Token;
  int index = 0;

  friend auto operator<=>(const VarId&, const VarId&) = default;
};

std::string to_string(const VarId& v);

enum class OpKind : std::uint8_t { Read, Write, Cas };

/// One shared-memory operation. Values: csowner as CsOwner::encode(), registry cells as pack().
/// For a read, before == after == the value read; a failed CAS has before == after.
struct MemOp {
  OpKind kind = OpKind::Read;
  VarId var;
  std::int64_t before = 0;
  std::int64_t after = 0;
  bool ok = true;

  bool changed() const { return before != after; }
  friend bool operator==(const MemOp&, const MemOp&) = default;
};

}  // namespace rme
