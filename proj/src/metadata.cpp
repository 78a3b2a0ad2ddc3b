#include "popdense/metadata.hpp"

#include <algorithm>
#include <set>

namespace popdense {

namespace {

Seconds floor_to(Seconds t, Seconds step) {
  Seconds q = t / step;
  if (t % step != 0 && t < 0) --q;
  return q * step;
}

void check_order(std::optional<NetworkEvent>& last, const NetworkEvent& e) {
  if (last && event_before(e, *last))
    throw InputError("event stream is not sorted by (time, device, kind) at t=" + std::to_string(e.time));
  last = e;
}

void check_cell(const GridTessellation& grid, const NetworkEvent& e) {
  if (e.cell >= grid.size())
    throw InputError("event references unknown cell index " + std::to_string(e.cell) + " at t=" + std::to_string(e.time));
}

void require_contiguous(const SlotAxis& axis) {
  if (!axis.is_contiguous()) throw InputError("ingestion requires a contiguous slot axis");
  if (axis.slot <= 0) throw InputError("slot duration must be positive");
}

}  // namespace

SlotAxis SlotAxis::contiguous(Seconds first_start, std::size_t count, Seconds slot) {
  SlotAxis axis{slot, {}};
  axis.starts.reserve(count);
  for (std::size_t k = 0; k < count; ++k) axis.starts.push_back(first_start + static_cast<Seconds>(k) * slot);
  return axis;
}

SlotAxis SlotAxis::covering(std::span<const NetworkEvent> events, Seconds slot) {
  if (events.empty()) return SlotAxis{slot, {}};
  auto [lo, hi] = std::minmax_element(events.begin(), events.end(),
                                      [](const auto& a, const auto& b) { return a.time < b.time; });
  Seconds first = floor_to(lo->time, slot);
  Seconds last = floor_to(hi->time, slot);
  return contiguous(first, static_cast<std::size_t>((last - first) / slot + 1), slot);
}

bool SlotAxis::is_contiguous() const {
  for (std::size_t k = 1; k < starts.size(); ++k)
    if (starts[k] - starts[k - 1] != slot) return false;
  return true;
}

std::optional<Eigen::Index> SlotAxis::find(Seconds start) const {
  auto it = std::lower_bound(starts.begin(), starts.end(), start);
  if (it == starts.end() || *it != start) return std::nullopt;
  return static_cast<Eigen::Index>(it - starts.begin());
}

std::vector<Day> SlotAxis::days() const {
  std::vector<Day> out;
  for (Seconds s : starts) {
    Day d = day_of(s);
    if (out.empty() || out.back() != d) out.push_back(d);
  }
  return out;
}

// ---- PresenceTracker ---------------------------------------------------------

PresenceTracker::PresenceTracker(const GridTessellation& grid, SlotAxis axis)
    : grid_(&grid),
      axis_(std::move(axis)),
      counts_(Mat::Zero(static_cast<Eigen::Index>(grid.size()), axis_.size())),
      observed_(static_cast<std::size_t>(axis_.size()), false),
      occupancy_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()))) {
  require_contiguous(axis_);
}

void PresenceTracker::close_slots_before(Seconds t) {
  // A slot [start, end) is snapshotted once every event with time < end has
  // been applied.
  while (next_slot_ < axis_.size() && axis_.starts[static_cast<std::size_t>(next_slot_)] + axis_.slot <= t) {
    counts_.col(next_slot_) = occupancy_;
    observed_[static_cast<std::size_t>(next_slot_)] = !position_.empty();
    ++next_slot_;
  }
}

void PresenceTracker::consume(std::span<const NetworkEvent> events) {
  for (const auto& e : events) {
    check_order(last_, e);
    check_cell(*grid_, e);
    close_slots_before(e.time);
    if (next_slot_ >= axis_.size() && !axis_.starts.empty()) continue;
    auto [it, inserted] = position_.try_emplace(e.device, e.cell);
    if (inserted) {
      occupancy_[e.cell] += 1.0;
    } else if (it->second != e.cell) {
      occupancy_[it->second] -= 1.0;
      occupancy_[e.cell] += 1.0;
      it->second = e.cell;
    }
  }
}

PresenceSeries PresenceTracker::finish() {
  close_slots_before(std::numeric_limits<Seconds>::max());
  PresenceSeries out;
  out.axis = axis_;
  out.counts = std::move(counts_);
  out.densities = presence_density(out.counts, *grid_);
  out.missing = MaskMat::Constant(out.counts.rows(), out.counts.cols(), false);
  // Before the first observed device there is no presence information at all.
  for (std::size_t k = 0; k < observed_.size(); ++k)
    if (!observed_[k]) out.missing.col(static_cast<Eigen::Index>(k)).setConstant(true);
  return out;
}

// ---- VolumeCounter -----------------------------------------------------------

VolumeCounter::VolumeCounter(const GridTessellation& grid, SlotAxis axis) : grid_(&grid) {
  require_contiguous(axis);
  series_.axis = std::move(axis);
  for (auto& m : series_.counts) m = Mat::Zero(static_cast<Eigen::Index>(grid.size()), series_.axis.size());
}

void VolumeCounter::consume(std::span<const NetworkEvent> events) {
  const auto& axis = series_.axis;
  for (const auto& e : events) {
    check_order(last_, e);
    check_cell(*grid_, e);
    if (axis.starts.empty() || e.time < axis.starts.front() || e.time >= axis.starts.back() + axis.slot)
      throw InputError("event at t=" + std::to_string(e.time) + " lies outside the declared time range");
    Eigen::Index slot = (e.time - axis.starts.front()) / axis.slot;
    series_[e.kind](e.cell, slot) += 1.0;
  }
}

// ---- free functions ------------------------------------------------------------

PresenceSeries infer_presence(std::span<const NetworkEvent> events, const GridTessellation& grid, const SlotAxis& axis) {
  PresenceTracker tracker(grid, axis);
  tracker.consume(events);
  return tracker.finish();
}

PresenceSeries infer_presence(std::span<const NetworkEvent> events, const GridTessellation& grid, Seconds slot) {
  return infer_presence(events, grid, SlotAxis::covering(events, slot));
}

VolumeSeries aggregate_volumes(std::span<const NetworkEvent> events, const GridTessellation& grid,
                               const SlotAxis& axis) {
  VolumeCounter counter(grid, axis);
  counter.consume(events);
  return counter.finish();
}

VolumeSeries aggregate_volumes(std::span<const NetworkEvent> events, const GridTessellation& grid, Seconds slot) {
  return aggregate_volumes(events, grid, SlotAxis::covering(events, slot));
}

Mat presence_density(const Mat& counts, const GridTessellation& grid) {
  if (counts.rows() != static_cast<Eigen::Index>(grid.size()))
    throw InputError("presence rows do not match the grid cell count");
  return grid.surfaces().cwiseInverse().asDiagonal() * counts;
}

double missing_cell_fraction(const PresenceSeries& presence, Seconds window_start, Seconds window_end, Day day) {
  if (window_end <= window_start) throw InputError("empty time window");
  const Seconds lo = day_start(day) + window_start;
  const Seconds hi = day_start(day) + window_end;
  std::vector<Eigen::Index> cols;
  for (Eigen::Index k = 0; k < presence.axis.size(); ++k) {
    Seconds s = presence.axis.starts[static_cast<std::size_t>(k)];
    if (s >= lo && s < hi) cols.push_back(k);
  }
  if (cols.empty()) throw InputError("time window contains no slots on " + format_iso_date(day));
  if (presence.cells() == 0) return 0.0;
  Eigen::Index missing = 0;
  for (Eigen::Index i = 0; i < presence.cells(); ++i) {
    bool all = std::all_of(cols.begin(), cols.end(), [&](Eigen::Index k) { return presence.missing(i, k); });
    missing += all ? 1 : 0;
  }
  return static_cast<double>(missing) / static_cast<double>(presence.cells());
}

PresenceSeries select_slots(const PresenceSeries& series, std::span<const Eigen::Index> columns) {
  PresenceSeries out;
  out.axis.slot = series.axis.slot;
  const Eigen::Index n = static_cast<Eigen::Index>(columns.size());
  out.counts.resize(series.cells(), n);
  out.densities.resize(series.cells(), n);
  out.missing.resize(series.cells(), n);
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::Index k = columns[static_cast<std::size_t>(c)];
    out.axis.starts.push_back(series.axis.starts[static_cast<std::size_t>(k)]);
    out.counts.col(c) = series.counts.col(k);
    out.densities.col(c) = series.densities.col(k);
    out.missing.col(c) = series.missing.col(k);
  }
  return out;
}

VolumeSeries select_slots(const VolumeSeries& series, std::span<const Eigen::Index> columns) {
  VolumeSeries out;
  out.axis.slot = series.axis.slot;
  for (Eigen::Index k : columns) out.axis.starts.push_back(series.axis.starts[static_cast<std::size_t>(k)]);
  for (std::size_t kind = 0; kind < out.counts.size(); ++kind) {
    out.counts[kind].resize(series.counts[kind].rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c)
      out.counts[kind].col(static_cast<Eigen::Index>(c)) = series.counts[kind].col(columns[c]);
  }
  return out;
}

}  // namespace popdense
