#include "wxv/time.hpp"

#include <charconv>
#include <cstdio>

#include "wxv/error.hpp"

namespace wxv {
namespace {

int parse_int(std::string_view text, std::size_t pos, std::size_t len,
              std::string_view whole) {
  if (pos + len > text.size()) {
    fail(ErrorCode::FormatError, "truncated timestamp '" + std::string(whole) + "'");
  }
  int value = 0;
  const char* first = text.data() + pos;
  const char* last = first + len;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    fail(ErrorCode::FormatError, "bad timestamp '" + std::string(whole) + "'");
  }
  return value;
}

void expect(std::string_view text, std::size_t pos, char c, std::string_view whole) {
  if (pos >= text.size() || text[pos] != c) {
    fail(ErrorCode::FormatError, "bad timestamp '" + std::string(whole) + "'");
  }
}

}  // namespace

TimePoint parse_utc(std::string_view text) {
  using namespace std::chrono;
  const int y = parse_int(text, 0, 4, text);
  expect(text, 4, '-', text);
  const int mo = parse_int(text, 5, 2, text);
  expect(text, 7, '-', text);
  const int d = parse_int(text, 8, 2, text);
  int hh = 0, mm = 0, ss = 0;
  std::size_t pos = 10;
  if (pos < text.size()) {
    expect(text, pos, 'T', text);
    hh = parse_int(text, 11, 2, text);
    expect(text, 13, ':', text);
    mm = parse_int(text, 14, 2, text);
    pos = 16;
    if (pos < text.size() && text[pos] == ':') {
      ss = parse_int(text, 17, 2, text);
      pos = 19;
    }
    const std::string_view zone = text.substr(pos);
    if (zone != "Z" && zone != "+00:00") {
      fail(ErrorCode::FormatError, "timestamp is not UTC: '" + std::string(text) + "'");
    }
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 59) {
    fail(ErrorCode::FormatError, "invalid date/time '" + std::string(text) + "'");
  }
  return sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss};
}

std::string format_utc(TimePoint t) {
  using namespace std::chrono;
  const auto day_start = floor<days>(t);
  const year_month_day ymd{day_start};
  const hh_mm_ss hms{t - day_start};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), static_cast<int>(hms.hours().count()),
                static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

std::string format_compact(TimePoint t) {
  using namespace std::chrono;
  const auto day_start = floor<days>(t);
  const year_month_day ymd{day_start};
  const hh_mm_ss hms{t - day_start};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d%02u%02u%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()));
  return buf;
}

long long hours_between(TimePoint from, TimePoint to) {
  const auto diff = to - from;
  if (diff % std::chrono::hours(1) != std::chrono::seconds(0)) {
    fail(ErrorCode::InvalidData, "times are not a whole number of hours apart");
  }
  return std::chrono::duration_cast<std::chrono::hours>(diff).count();
}

}  // namespace wxv
