#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace popdense {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Mask = Eigen::Array<bool, Eigen::Dynamic, 1>;
using MaskMat = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

using CellId = std::string;
using CellIndex = std::uint32_t;
using DeviceId = std::uint64_t;
using Seconds = std::int64_t;

inline constexpr Seconds kDefaultSlot = 900;
inline constexpr Seconds kSecondsPerDay = 86400;

// Error taxonomy. The CLI maps these onto exit codes 1/2/3.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GeometryError : InputError {
  using InputError::InputError;
};

struct InsufficientDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class EventKind : std::uint8_t { CallIn = 0, CallOut, SmsIn, SmsOut, Net };
inline constexpr int kEventKinds = 5;

// Shortest round-trip decimal representation; used for every numeric field
// written to disk so repeated runs are byte-identical.
std::string format_number(double value);

std::string_view to_string(EventKind kind);
EventKind parse_event_kind(std::string_view text);

enum class LandUse : std::uint8_t { Residential = 0, Office, Touristic, University, Shopping };
inline constexpr int kLandUses = 5;

std::string_view to_string(LandUse use);
LandUse parse_land_use(std::string_view text);

// Which event pair drives an activity level.
enum class ActivityKind : std::uint8_t { Call, Sms };

std::string_view to_string(ActivityKind kind);
ActivityKind parse_activity_kind(std::string_view text);

}  // namespace popdense
