#include "popdense/filters.hpp"

#include "popdense/regress.hpp"

#include <algorithm>
#include <cmath>

namespace popdense {

namespace {

std::vector<Eigen::Index> time_columns(const SlotAxis& axis, const FilterConfig& config) {
  std::vector<Eigen::Index> cols;
  for (Eigen::Index k = 0; k < axis.size(); ++k) {
    Seconds sod = second_of_day(axis.starts[static_cast<std::size_t>(k)]);
    if (sod >= config.window_start && sod < config.window_end) cols.push_back(k);
  }
  return cols;
}

struct DayPlan {
  std::vector<Eigen::Index> keep;
  std::vector<DayExclusion> log;
};

DayPlan plan_days(const SlotAxis& axis, const FilterConfig& config, const DailyMissing& missing) {
  DayPlan plan;
  for (Day d : axis.days()) {
    auto reasons = exclusion_reasons(d, config, missing);
    if (!reasons.empty()) plan.log.push_back({d, std::move(reasons)});
  }
  for (Eigen::Index k = 0; k < axis.size(); ++k) {
    Day d = day_of(axis.starts[static_cast<std::size_t>(k)]);
    bool excluded = std::any_of(plan.log.begin(), plan.log.end(), [&](const DayExclusion& e) { return e.day == d; });
    if (!excluded) plan.keep.push_back(k);
  }
  return plan;
}

double log_pearson(const Vec& activity, const Vec& census, std::size_t& used) {
  std::vector<double> xs, ys;
  for (Eigen::Index i = 0; i < activity.size(); ++i)
    if (activity[i] > 0 && census[i] > 0) {
      xs.push_back(std::log(activity[i]));
      ys.push_back(std::log(census[i]));
    }
  used = xs.size();
  if (xs.size() < 3) throw InsufficientDataError("fewer than 3 cells with positive activity and census values");
  return pearson(Eigen::Map<const Vec>(xs.data(), static_cast<Eigen::Index>(xs.size())),
                 Eigen::Map<const Vec>(ys.data(), static_cast<Eigen::Index>(ys.size())));
}

}  // namespace

void FilterConfig::validate() const {
  if (window_start < 0 || window_end > kSecondsPerDay || window_end <= window_start)
    throw InputError("filter window must be a non-empty range within the day");
  if (!(missing_threshold >= 0.0 && missing_threshold <= 1.0))
    throw InputError("missing-fraction threshold must lie in [0, 1]");
}

std::vector<ClassCorrelation> rank_metadata_classes(const VolumeSeries& volumes, const PresenceSeries& presence,
                                                    const PopulationDensityMap& census, const GridTessellation& grid) {
  const auto cells = static_cast<Eigen::Index>(grid.size());
  if (volumes.cells() != cells || presence.cells() != cells || census.values.size() != cells)
    throw InputError("volumes, presence and census must cover the same cells");
  const Vec inv_surface = grid.surfaces().cwiseInverse();
  std::vector<ClassCorrelation> table;
  for (int k = 0; k < kEventKinds; ++k) {
    auto kind = static_cast<EventKind>(k);
    const Mat& m = volumes[kind];
    if (m.cols() == 0) throw InsufficientDataError("volume series has no slots");
    Vec density = (m.rowwise().sum() / static_cast<double>(m.cols())).cwiseProduct(inv_surface);
    ClassCorrelation row{std::string(to_string(kind)), 0.0, 0};
    row.r = log_pearson(density, census.values, row.cells);
    table.push_back(row);
  }
  Vec pres = Vec::Zero(cells);
  for (Eigen::Index i = 0; i < cells; ++i) {
    double sum = 0.0;
    int n = 0;
    for (Eigen::Index k = 0; k < presence.densities.cols(); ++k)
      if (!presence.missing(i, k)) {
        sum += presence.densities(i, k);
        ++n;
      }
    pres[i] = n ? sum / n : 0.0;
  }
  ClassCorrelation row{"presence", 0.0, 0};
  row.r = log_pearson(pres, census.values, row.cells);
  table.push_back(row);
  std::stable_sort(table.begin(), table.end(), [](const auto& a, const auto& b) { return a.r > b.r; });
  return table;
}

PresenceSeries apply_time_filter(const PresenceSeries& series, const FilterConfig& config) {
  config.validate();
  return select_slots(series, time_columns(series.axis, config));
}

VolumeSeries apply_time_filter(const VolumeSeries& series, const FilterConfig& config) {
  config.validate();
  return select_slots(series, time_columns(series.axis, config));
}

std::vector<std::string> exclusion_reasons(Day day, const FilterConfig& config, const DailyMissing& missing) {
  std::vector<std::string> reasons;
  auto wd = weekday_of(day);
  if (std::find(config.excluded_weekdays.begin(), config.excluded_weekdays.end(), wd) != config.excluded_weekdays.end())
    reasons.emplace_back("weekend");
  if (std::find(config.holidays.begin(), config.holidays.end(), day) != config.holidays.end())
    reasons.emplace_back("holiday");
  if (auto it = missing.find(day); it != missing.end() && it->second > config.missing_threshold)
    reasons.emplace_back("missing");
  return reasons;
}

DailyMissing daily_missing_fractions(const PresenceSeries& presence, const FilterConfig& config) {
  config.validate();
  DailyMissing out;
  for (Day d : presence.axis.days()) {
    bool has_slot = std::any_of(presence.axis.starts.begin(), presence.axis.starts.end(), [&](Seconds s) {
      Seconds sod = second_of_day(s);
      return day_of(s) == d && sod >= config.window_start && sod < config.window_end;
    });
    if (has_slot) out[d] = missing_cell_fraction(presence, config.window_start, config.window_end, d);
  }
  return out;
}

DayFiltered<PresenceSeries> apply_day_filter(const PresenceSeries& series, const FilterConfig& config,
                                             const DailyMissing& missing) {
  config.validate();
  auto plan = plan_days(series.axis, config, missing);
  return {select_slots(series, plan.keep), std::move(plan.log)};
}

DayFiltered<VolumeSeries> apply_day_filter(const VolumeSeries& series, const FilterConfig& config,
                                           const DailyMissing& missing) {
  config.validate();
  auto plan = plan_days(series.axis, config, missing);
  return {select_slots(series, plan.keep), std::move(plan.log)};
}

}  // namespace popdense
