#pragma once

#include "popdense/core.hpp"

#include <chrono>
#include <string>
#include <string_view>

namespace popdense {

// Timestamps are local civil seconds counted from 1970-01-01T00:00.
using Day = std::chrono::sys_days;

inline Day day_of(Seconds t) {
  auto d = t >= 0 ? t / kSecondsPerDay : -((-t + kSecondsPerDay - 1) / kSecondsPerDay);
  return Day{std::chrono::days{d}};
}

inline Seconds second_of_day(Seconds t) { return t - day_of(t).time_since_epoch().count() * kSecondsPerDay; }

inline Seconds day_start(Day d) { return d.time_since_epoch().count() * kSecondsPerDay; }

inline std::chrono::weekday weekday_of(Day d) { return std::chrono::weekday{d}; }

// 0 = Monday ... 6 = Sunday.
inline int iso_weekday_index(Day d) { return static_cast<int>(weekday_of(d).iso_encoding()) - 1; }

Day parse_iso_date(std::string_view text);
std::string format_iso_date(Day d);

std::chrono::weekday parse_weekday(std::string_view text);
std::string_view weekday_name(std::chrono::weekday w);

}  // namespace popdense
