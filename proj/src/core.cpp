#include "popdense/core.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace popdense {

namespace {

constexpr std::array<std::string_view, kEventKinds> kKindNames = {"call_in", "call_out", "sms_in", "sms_out", "net"};
constexpr std::array<std::string_view, kLandUses> kLandUseNames = {"residential", "office", "touristic", "university",
                                                                   "shopping"};

}  // namespace

std::string format_number(double value) {
  if (value == 0.0) return "0";  // folds -0
  if (!std::isfinite(value)) return std::isnan(value) ? "nan" : (value > 0 ? "inf" : "-inf");
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

std::string_view to_string(EventKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

EventKind parse_event_kind(std::string_view text) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (kKindNames[i] == text) return static_cast<EventKind>(i);
  throw InputError("unknown event kind '" + std::string(text) + "'");
}

std::string_view to_string(LandUse use) { return kLandUseNames[static_cast<std::size_t>(use)]; }

LandUse parse_land_use(std::string_view text) {
  for (std::size_t i = 0; i < kLandUseNames.size(); ++i)
    if (kLandUseNames[i] == text) return static_cast<LandUse>(i);
  throw InputError("unknown land use '" + std::string(text) + "'");
}

std::string_view to_string(ActivityKind kind) { return kind == ActivityKind::Call ? "call" : "sms"; }

ActivityKind parse_activity_kind(std::string_view text) {
  if (text == "call") return ActivityKind::Call;
  if (text == "sms") return ActivityKind::Sms;
  throw InputError("unknown activity kind '" + std::string(text) + "' (expected call or sms)");
}

}  // namespace popdense
