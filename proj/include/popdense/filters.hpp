#pragma once

#include "popdense/metadata.hpp"

#include <chrono>
#include <map>
#include <string>
#include <vector>

namespace popdense {

struct FilterConfig {
  Seconds window_start = 4 * 3600;  // seconds of day, inclusive
  Seconds window_end = 5 * 3600;    // exclusive
  std::vector<std::chrono::weekday> excluded_weekdays{std::chrono::Saturday, std::chrono::Sunday};
  std::vector<Day> holidays;
  double missing_threshold = 0.5;

  void validate() const;
};

struct ClassCorrelation {
  std::string metadata_class;
  double r = 0.0;
  std::size_t cells = 0;
};

/// Pearson correlation of log class density against log census density over
/// cells, one row per event kind plus presence, sorted by r descending.
std::vector<ClassCorrelation> rank_metadata_classes(const VolumeSeries& volumes, const PresenceSeries& presence,
                                                    const PopulationDensityMap& census, const GridTessellation& grid);

PresenceSeries apply_time_filter(const PresenceSeries& series, const FilterConfig& config);
VolumeSeries apply_time_filter(const VolumeSeries& series, const FilterConfig& config);

struct DayExclusion {
  Day day;
  std::vector<std::string> reasons;  // "weekend", "holiday", "missing"
};

using DailyMissing = std::map<Day, double>;

// Missing-cell fraction inside the configured window for every day whose
// window holds at least one slot.
DailyMissing daily_missing_fractions(const PresenceSeries& presence, const FilterConfig& config);

template <class Series>
struct DayFiltered {
  Series series;
  std::vector<DayExclusion> log;
};

DayFiltered<PresenceSeries> apply_day_filter(const PresenceSeries& series, const FilterConfig& config,
                                             const DailyMissing& missing);
DayFiltered<VolumeSeries> apply_day_filter(const VolumeSeries& series, const FilterConfig& config,
                                           const DailyMissing& missing);

// Reasons a day would be excluded; empty means retained.
std::vector<std::string> exclusion_reasons(Day day, const FilterConfig& config, const DailyMissing& missing);

}  // namespace popdense
