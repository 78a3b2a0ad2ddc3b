#pragma once

#include "popdense/regress.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace popdense {

/// Events of one activity kind per present subscriber, per cell and slot.
/// Undefined entries (zero or missing presence) hold NaN.
struct ActivityLevel {
  SlotAxis axis;
  ActivityKind kind = ActivityKind::Call;
  Mat values;
  MaskMat defined;
  Vec city_mean;  // per slot, over defined cells; NaN where none is defined
};

ActivityLevel activity_level(const VolumeSeries& volumes, const PresenceSeries& presence,
                             ActivityKind kind = ActivityKind::Call);

/// log alpha = a_alpha * lambda + b_alpha, beta = a_beta * lambda + b_beta.
struct MultivariateParams {
  double a_alpha = 0.0;
  double b_alpha = 0.0;
  double a_beta = 0.0;
  double b_beta = 1.0;
  ActivityKind kind = ActivityKind::Call;

  double alpha(double lambda) const { return std::exp(a_alpha * lambda + b_alpha); }
  double beta(double lambda) const { return a_beta * lambda + b_beta; }
};

struct LambdaFit {
  double lambda = 0.0;
  double alpha = 1.0;
  double beta = 1.0;
  Seconds slot_start = 0;
};

MultivariateParams fit_lambda_lines(std::span<const LambdaFit> pairs, ActivityKind kind = ActivityKind::Call);

struct OvernightConfig {
  Seconds window_start = 0;
  Seconds window_end = 8 * 3600;
  Seconds granularity = 3600;
  RansacConfig ransac;
};

/// One power-law fit per overnight bucket (default: hourly from midnight to
/// 8 am), paired with the city-mean activity over the bucket. Buckets with
/// too few usable cells or no defined activity are skipped.
std::vector<LambdaFit> overnight_fits(const PresenceSeries& presence, const ActivityLevel& activity, const Vec& rho,
                                      const Mask& cells, const OvernightConfig& config, std::uint64_t seed);

/// rho_hat_i = exp(a_alpha l_i + b_alpha) * sigma_i^(a_beta l_i + b_beta).
/// NaN lambda falls back to `city_lambda` (0 if that is NaN too) and is
/// flagged in `fallback`. NaN sigma propagates as NaN.
Vec estimate_dynamic(const Vec& sigma, const Vec& lambda, double city_lambda, const MultivariateParams& params,
                     Mask* fallback = nullptr);

struct DynamicEstimate {
  SlotAxis axis;
  Mat rho_hat;  // NaN where presence is missing
  MaskMat lambda_fallback;
};

DynamicEstimate estimate_dynamic(const PresenceSeries& presence, const ActivityLevel& activity,
                                 const MultivariateParams& params);

struct ZScores {
  Mat z;
  Mask constant;
};

/// Per-row standardization with the population standard deviation; NaN
/// entries are ignored and stay NaN.
ZScores zscore(const Mat& series);

struct EventSpec {
  std::string id;
  std::optional<Polygon> venue;
  std::vector<CellIndex> venue_cells;
  Seconds kickoff = 0;
  Seconds end = 0;
  Seconds margin = 900;
  std::vector<Day> other_event_days;
};

struct AttendanceConfig {
  std::size_t min_baseline_days = 3;
  // (a_alpha l + b_alpha) instead of exp(a_alpha l + b_alpha) as the prefactor.
  bool literal_prefactor = false;
};

struct AttendanceEstimate {
  std::string event_id;
  double gamma_hat = 0.0;
  Seconds t_peak = 0;
  double sigma_norm = 0.0;
  double sigma_match = 0.0;
  double lambda_tilde = 0.0;
  double surface_km2 = 0.0;
  bool no_crowd = false;
  std::vector<CellIndex> cells;
  std::vector<Day> baseline_days;
};

/// Venue cells plus their neighbours.
std::vector<CellIndex> event_cells(const EventSpec& event, const GridTessellation& grid);

/// Days with the weekday of t_peak and a slot at its time of day, excluding
/// the event day and other event days.
std::vector<Day> baseline_days(const EventSpec& event, const SlotAxis& axis, Seconds t_peak);

AttendanceEstimate estimate_attendance(const EventSpec& event, const PresenceSeries& presence,
                                       const VolumeSeries& volumes, const MultivariateParams& params,
                                       const GridTessellation& grid, const AttendanceConfig& config = {});

double attendance_from_densities(double sigma_match, double sigma_norm, double lambda_tilde, double surface_km2,
                                 const MultivariateParams& params, bool literal_prefactor = false);

struct LandUseFit {
  LandUse use = LandUse::Residential;
  double alpha = 1.0;
  double beta = 1.0;
};

/// Per-land-use power law rescaled so the city total matches the census at
/// every slot. NaN sigma entries stay NaN and are left out of the total.
Vec xu_estimate(const Vec& sigma, std::span<const LandUse> labels, std::span<const LandUseFit> fits,
                const PopulationDensityMap& census, const GridTessellation& grid);

/// Attendance under the rescaled baseline: excess population over the event
/// cells at the multivariate t_peak relative to the median baseline field.
double xu_attendance(const AttendanceEstimate& event, const PresenceSeries& presence, std::span<const LandUse> labels,
                     std::span<const LandUseFit> fits, const PopulationDensityMap& census,
                     const GridTessellation& grid);

struct Percentiles {
  double p5 = 0.0;
  double p25 = 0.0;
  double p50 = 0.0;
  double p75 = 0.0;
  double p95 = 0.0;
};

Percentiles percentiles(std::vector<double> values);

struct EventComparison {
  std::string id;
  double truth = 0.0;
  double multivariate = 0.0;
  double baseline = 0.0;
  double mv_relative = 0.0;  // signed (estimate - truth) / truth
  double xu_relative = 0.0;
  double mv_absolute = 0.0;
  double xu_absolute = 0.0;
  double error_ratio = 1.0;  // |baseline error| / |multivariate error|
};

struct ComparisonTable {
  std::vector<EventComparison> events;
  Percentiles mv_relative;  // of absolute relative errors
  Percentiles xu_relative;
  Percentiles mv_absolute;
  Percentiles xu_absolute;
  Percentiles error_ratio;
  double p_value = 1.0;
};

/// Two-sided Mann-Whitney U test, normal approximation with tie and
/// continuity corrections.
double mann_whitney_p(std::span<const double> x, std::span<const double> y);

ComparisonTable compare_models(std::span<const std::string> ids, std::span<const double> truth,
                               std::span<const double> multivariate, std::span<const double> baseline);

}  // namespace popdense
