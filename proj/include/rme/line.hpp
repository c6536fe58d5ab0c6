#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace rme {

/// Code locations of the abortable RME algorithm, in program order.
enum class Line : std::uint8_t {
  Rem,
  T1, T2, T3, T4, T5, T6, T7, T8,
  Cs,
  E1, E2, E3, E4, E5, E6,
  Rec1, Rec2,
  A1, A2, A3, A4, A5,
  P1, P2, P3, P4, P5, P6,
};

/// Line that called promote(); carried by every promote location.
enum class Caller : std::uint8_t { None, T5, E5, A2 };

/// A program-counter value. Promote lines are written CALLER::Pk.
struct LineId {
  Line line = Line::Rem;
  Caller caller = Caller::None;

  bool in_promote() const { return line >= Line::P1; }
  friend bool operator==(const LineId&, const LineId&) = default;
};

inline constexpr LineId at(Line l) { return LineId{l, Caller::None}; }
inline constexpr LineId at(Caller c, Line l) { return LineId{l, c}; }

std::string to_string(Line l);
std::string to_string(LineId pc);
std::optional<LineId> parse_line(std::string_view s);

}  // namespace rme
