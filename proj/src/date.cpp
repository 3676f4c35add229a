#include "hierflow/date.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

#include "hierflow/error.hpp"

namespace hierflow {

namespace {

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

Day parse_day(std::string_view text) {
  std::string_view date = text;
  if (auto cut = date.find_first_of("T "); cut != std::string_view::npos) {
    date = date.substr(0, cut);
  }
  int y = 0, m = 0, d = 0;
  if (date.size() != 10 || date[4] != '-' || date[7] != '-' ||
      !parse_int(date.substr(0, 4), y) || !parse_int(date.substr(5, 2), m) ||
      !parse_int(date.substr(8, 2), d)) {
    fail(ErrorCode::ParseError, "malformed date '" + std::string(text) + "'");
  }
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(m)},
                                  std::chrono::day{unsigned(d)}};
  if (!ymd.ok()) fail(ErrorCode::ParseError, "invalid date '" + std::string(text) + "'");
  return Day{static_cast<std::int32_t>(std::chrono::sys_days{ymd}.time_since_epoch().count())};
}

std::string format_day(Day day) {
  std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{day.value}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()),
                unsigned(ymd.day()));
  return buf;
}

}  // namespace hierflow
