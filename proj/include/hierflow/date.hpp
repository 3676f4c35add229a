#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace hierflow {

// Calendar day, counted from 1970-01-01. Every timestamp in the engine is
// truncated to this resolution.
struct Day {
  std::int32_t value = 0;

  constexpr auto operator<=>(const Day&) const = default;

  constexpr Day operator+(std::int32_t days) const { return Day{value + days}; }
  constexpr Day operator-(std::int32_t days) const { return Day{value - days}; }
  constexpr std::int32_t operator-(Day other) const { return value - other.value; }
};

// Accepts "YYYY-MM-DD" optionally followed by a time part ('T' or ' '), which
// is discarded. Throws ParseError on malformed or invalid dates.
Day parse_day(std::string_view text);

std::string format_day(Day day);

}  // namespace hierflow
