#pragma once

#include "popdense/calendar.hpp"
#include "popdense/grid.hpp"

#include <array>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace popdense {

struct NetworkEvent {
  DeviceId device = 0;
  Seconds time = 0;
  CellIndex cell = 0;
  EventKind kind = EventKind::CallIn;

  friend bool operator==(const NetworkEvent&, const NetworkEvent&) = default;
};

// Stream order: time, then device, then kind.
inline bool event_before(const NetworkEvent& a, const NetworkEvent& b) {
  if (a.time != b.time) return a.time < b.time;
  if (a.device != b.device) return a.device < b.device;
  return a.kind < b.kind;
}

using EventStream = std::vector<NetworkEvent>;

/// Slot start times of a series. Raw aggregates are contiguous; filtered
/// series keep a strictly increasing subset.
struct SlotAxis {
  Seconds slot = kDefaultSlot;
  std::vector<Seconds> starts;

  static SlotAxis contiguous(Seconds first_start, std::size_t count, Seconds slot = kDefaultSlot);
  // Smallest contiguous axis covering every event time.
  static SlotAxis covering(std::span<const NetworkEvent> events, Seconds slot = kDefaultSlot);

  Eigen::Index size() const { return static_cast<Eigen::Index>(starts.size()); }
  bool is_contiguous() const;
  std::optional<Eigen::Index> find(Seconds start) const;
  // Distinct days touched by the axis, ascending.
  std::vector<Day> days() const;
};

/// Event counts per (cell, slot), one matrix per event kind (cells x slots).
struct VolumeSeries {
  SlotAxis axis;
  std::array<Mat, kEventKinds> counts;

  const Mat& operator[](EventKind k) const { return counts[static_cast<std::size_t>(k)]; }
  Mat& operator[](EventKind k) { return counts[static_cast<std::size_t>(k)]; }
  Eigen::Index cells() const { return counts[0].rows(); }
};

/// Subscriber presence per (cell, slot). Densities are subscribers/km^2.
struct PresenceSeries {
  SlotAxis axis;
  Mat counts;
  Mat densities;
  MaskMat missing;

  Eigen::Index cells() const { return counts.rows(); }
};

/// Incremental last-event-rule presence over a contiguous axis. Events must
/// arrive time-ordered across calls to consume(); events before the axis
/// start only seed device positions, events past its end are ignored.
class PresenceTracker {
 public:
  PresenceTracker(const GridTessellation& grid, SlotAxis axis);

  void consume(std::span<const NetworkEvent> events);
  PresenceSeries finish();

 private:
  void close_slots_before(Seconds t);

  const GridTessellation* grid_;
  SlotAxis axis_;
  Mat counts_;
  std::vector<bool> observed_;
  std::unordered_map<DeviceId, CellIndex> position_;
  Eigen::VectorXd occupancy_;
  Eigen::Index next_slot_ = 0;
  std::optional<NetworkEvent> last_;
};

/// Incremental per-kind event counting over a contiguous axis.
class VolumeCounter {
 public:
  VolumeCounter(const GridTessellation& grid, SlotAxis axis);

  void consume(std::span<const NetworkEvent> events);
  VolumeSeries finish() { return std::move(series_); }

 private:
  const GridTessellation* grid_;
  VolumeSeries series_;
  std::optional<NetworkEvent> last_;
};

PresenceSeries infer_presence(std::span<const NetworkEvent> events, const GridTessellation& grid, const SlotAxis& axis);
PresenceSeries infer_presence(std::span<const NetworkEvent> events, const GridTessellation& grid,
                              Seconds slot = kDefaultSlot);

VolumeSeries aggregate_volumes(std::span<const NetworkEvent> events, const GridTessellation& grid, const SlotAxis& axis);
VolumeSeries aggregate_volumes(std::span<const NetworkEvent> events, const GridTessellation& grid,
                               Seconds slot = kDefaultSlot);

// count / surface, row-wise per cell.
Mat presence_density(const Mat& counts, const GridTessellation& grid);

/// Fraction of cells whose presence is missing in every slot starting in
/// [window_start, window_end) seconds-of-day on `day`.
double missing_cell_fraction(const PresenceSeries& presence, Seconds window_start, Seconds window_end, Day day);

// Column subsets preserving order.
PresenceSeries select_slots(const PresenceSeries& series, std::span<const Eigen::Index> columns);
VolumeSeries select_slots(const VolumeSeries& series, std::span<const Eigen::Index> columns);

}  // namespace popdense
