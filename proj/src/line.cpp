#include "rme/line.hpp"

#include <array>

namespace rme {
namespace {

constexpr std::array<std::string_view, 29> kNames = {
    "REM", "T1", "T2", "T3", "T4", "T5", "T6", "T7", "T8", "CS", "E1", "E2", "E3", "E4", "E5",
    "E6", "REC1", "REC2", "A1", "A2", "A3", "A4", "A5", "P1", "P2", "P3", "P4", "P5", "P6"};

std::optional<Line> parse_plain(std::string_view s) {
  for (std::size_t i = 0; i < kNames.size(); ++i)
    if (kNames[i] == s) return static_cast<Line>(i);
  return std::nullopt;
}

}  // namespace

std::string to_string(Line l) { return std::string(kNames[static_cast<std::size_t>(l)]); }

std::string to_string(LineId pc) {
  switch (pc.caller) {
    case Caller::T5: return "T5::" + to_string(pc.line);
    case Caller::E5: return "E5::" + to_string(pc.line);
    case Caller::A2: return "A2::" + to_string(pc.line);
    case Caller::None: break;
  }
  return to_string(pc.line);
}

std::optional<LineId> parse_line(std::string_view s) {
  if (auto sep = s.find("::"); sep != std::string_view::npos) {
    auto caller = parse_plain(s.substr(0, sep));
    auto line = parse_plain(s.substr(sep + 2));
    if (!caller || !line || *line < Line::P1) return std::nullopt;
    switch (*caller) {
      case Line::T5: return LineId{*line, Caller::T5};
      case Line::E5: return LineId{*line, Caller::E5};
      case Line::A2: return LineId{*line, Caller::A2};
      default: return std::nullopt;
    }
  }
  auto line = parse_plain(s);
  if (!line || *line >= Line::P1) return std::nullopt;
  return LineId{*line, Caller::None};
}

}  // namespace rme
