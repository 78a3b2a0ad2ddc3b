#include "popdense/calendar.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>

namespace popdense {

namespace {

constexpr std::array<std::string_view, 7> kWeekdayNames = {"Sunday",   "Monday", "Tuesday", "Wednesday",
                                                          "Thursday", "Friday", "Saturday"};

int parse_int(std::string_view s, std::string_view whole) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw InputError("malformed ISO date '" + std::string(whole) + "'");
  return v;
}

}  // namespace

Day parse_iso_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-')
    throw InputError("malformed ISO date '" + std::string(text) + "'");
  using namespace std::chrono;
  year_month_day ymd{year{parse_int(text.substr(0, 4), text)}, month{static_cast<unsigned>(parse_int(text.substr(5, 2), text))},
                     std::chrono::day{static_cast<unsigned>(parse_int(text.substr(8, 2), text))}};
  if (!ymd.ok()) throw InputError("invalid calendar date '" + std::string(text) + "'");
  return sys_days{ymd};
}

std::string format_iso_date(Day d) {
  std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

std::chrono::weekday parse_weekday(std::string_view text) {
  for (unsigned i = 0; i < kWeekdayNames.size(); ++i) {
    std::string_view name = kWeekdayNames[i];
    if (text.size() < 3 || text.size() > name.size()) continue;
    bool match = true;
    for (std::size_t c = 0; c < text.size(); ++c)
      if (std::tolower(static_cast<unsigned char>(text[c])) != std::tolower(static_cast<unsigned char>(name[c]))) {
        match = false;
        break;
      }
    if (match) return std::chrono::weekday{i};
  }
  throw InputError("unknown weekday '" + std::string(text) + "'");
}

std::string_view weekday_name(std::chrono::weekday w) { return kWeekdayNames[w.c_encoding()]; }

}  // namespace popdense
