#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace ladbnet {

/// Wall-clock time without a zone, as seconds since 1970-01-01 00:00:00 of
/// the same (local) calendar.
struct Timestamp {
  std::int64_t seconds = 0;

  auto operator<=>(const Timestamp&) const = default;
};

inline constexpr std::int64_t kStepSeconds = 600;  // 10-minute grid

struct CivilTime {
  int year;
  unsigned month;  // 1..12
  unsigned day;    // 1..31
  unsigned hour;
  unsigned minute;
  unsigned second;
  unsigned weekday;  // 0 = Monday .. 6 = Sunday
  std::int64_t day_number;  // days since 1970-01-01
};

/// Accepts "YYYY-MM-DD HH:MM[:SS]" or the same with a 'T' separator.
/// Throws ParseError on anything else.
Timestamp parse_timestamp(std::string_view text);

/// "YYYY-MM-DD HH:MM:SS".
std::string format_timestamp(Timestamp t);

CivilTime to_civil(Timestamp t);
Timestamp from_civil(int year, unsigned month, unsigned day, unsigned hour = 0,
                     unsigned minute = 0, unsigned second = 0);

/// Parses "YYYY-MM-DD" into a day number (days since 1970-01-01).
std::int64_t parse_date(std::string_view text);
std::string format_date(std::int64_t day_number);

}  // namespace ladbnet
