#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace wxv {

using TimePoint = std::chrono::sys_seconds;
using Hours = std::chrono::hours;

/// Parses ISO-8601 UTC timestamps of the forms `YYYY-MM-DDTHH:MMZ`,
/// `YYYY-MM-DDTHH:MM:SSZ` and `YYYY-MM-DD` (midnight). A trailing `Z` or
/// `+00:00` is accepted; other offsets are rejected with FormatError.
TimePoint parse_utc(std::string_view text);

/// `YYYY-MM-DDTHH:MM:SSZ`
std::string format_utc(TimePoint t);

/// `YYYYMMDDHH`, used in file names.
std::string format_compact(TimePoint t);

inline TimePoint add_hours(TimePoint t, long long hours) {
  return t + std::chrono::hours(hours);
}

/// Whole hours from `from` to `to`; throws InvalidData when not an integer
/// number of hours apart.
long long hours_between(TimePoint from, TimePoint to);

}  // namespace wxv
