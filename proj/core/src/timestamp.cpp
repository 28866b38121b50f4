#include "ladbnet/timestamp.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

#include "ladbnet/error.hpp"

namespace ladbnet {
namespace {

namespace chr = std::chrono;

bool read_uint(std::string_view text, std::size_t pos, std::size_t len, unsigned& out) {
  if (pos + len > text.size()) return false;
  const char* first = text.data() + pos;
  const auto [ptr, ec] = std::from_chars(first, first + len, out);
  return ec == std::errc{} && ptr == first + len;
}

std::int64_t days_from_civil(int year, unsigned month, unsigned day, std::string_view context) {
  const chr::year_month_day ymd{chr::year{year}, chr::month{month}, chr::day{day}};
  if (!ymd.ok()) throw ParseError("invalid calendar date in '" + std::string(context) + "'");
  return chr::sys_days{ymd}.time_since_epoch().count();
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

std::int64_t parse_date(std::string_view text) {
  unsigned y = 0, m = 0, d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-' || !read_uint(text, 0, 4, y) ||
      !read_uint(text, 5, 2, m) || !read_uint(text, 8, 2, d)) {
    throw ParseError("expected YYYY-MM-DD, got '" + std::string(text) + "'");
  }
  return days_from_civil(static_cast<int>(y), m, d, text);
}

Timestamp parse_timestamp(std::string_view text) {
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  unsigned hh = 0, mm = 0, ss = 0;
  const bool shape_ok = (text.size() == 16 || text.size() == 19) &&
                        (text[10] == ' ' || text[10] == 'T') && text[13] == ':' &&
                        (text.size() == 16 || text[16] == ':');
  if (!shape_ok || !read_uint(text, 11, 2, hh) || !read_uint(text, 14, 2, mm) ||
      (text.size() == 19 && !read_uint(text, 17, 2, ss)) || hh > 23 || mm > 59 || ss > 59) {
    throw ParseError("expected 'YYYY-MM-DD HH:MM[:SS]', got '" + std::string(text) + "'");
  }
  const std::int64_t days = parse_date(text.substr(0, 10));
  return Timestamp{days * 86400 + hh * 3600 + mm * 60 + ss};
}

CivilTime to_civil(Timestamp t) {
  const std::int64_t days = floor_div(t.seconds, 86400);
  const std::int64_t rem = t.seconds - days * 86400;
  const chr::year_month_day ymd{chr::sys_days{chr::days{days}}};
  CivilTime c{};
  c.year = static_cast<int>(ymd.year());
  c.month = static_cast<unsigned>(ymd.month());
  c.day = static_cast<unsigned>(ymd.day());
  c.hour = static_cast<unsigned>(rem / 3600);
  c.minute = static_cast<unsigned>((rem % 3600) / 60);
  c.second = static_cast<unsigned>(rem % 60);
  // 1970-01-01 was a Thursday (index 3 with Monday = 0).
  c.weekday = static_cast<unsigned>(((days % 7) + 7 + 3) % 7);
  c.day_number = days;
  return c;
}

Timestamp from_civil(int year, unsigned month, unsigned day, unsigned hour, unsigned minute,
                     unsigned second) {
  const std::int64_t days = days_from_civil(year, month, day, "from_civil");
  return Timestamp{days * 86400 + hour * 3600 + minute * 60 + second};
}

std::string format_timestamp(Timestamp t) {
  const CivilTime c = to_civil(t);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02u:%02u:%02u", c.year, c.month, c.day, c.hour,
                c.minute, c.second);
  return buf;
}

std::string format_date(std::int64_t day_number) {
  const CivilTime c = to_civil(Timestamp{day_number * 86400});
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", c.year, c.month, c.day);
  return buf;
}

}  // namespace ladbnet
