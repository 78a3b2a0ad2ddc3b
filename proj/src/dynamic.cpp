#include "popdense/dynamic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace popdense {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double quantile_sorted(const std::vector<double>& v, double q) {
  if (v.size() == 1) return v[0];
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::pair<EventKind, EventKind> kinds_of(ActivityKind kind) {
  return kind == ActivityKind::Call ? std::pair{EventKind::CallIn, EventKind::CallOut}
                                    : std::pair{EventKind::SmsIn, EventKind::SmsOut};
}

void check_aligned(const VolumeSeries& volumes, const PresenceSeries& presence) {
  if (volumes.cells() != presence.cells()) throw InputError("volumes and presence cover different cells");
  if (volumes.axis.starts != presence.axis.starts) throw InputError("volumes and presence use different slot axes");
}

double cell_activity(const VolumeSeries& volumes, const PresenceSeries& presence, ActivityKind kind, Eigen::Index i,
                     Eigen::Index k) {
  if (presence.missing(i, k) || !(presence.counts(i, k) > 0)) return kNaN;
  auto [in, out] = kinds_of(kind);
  return (volumes[in](i, k) + volumes[out](i, k)) / presence.counts(i, k);
}

double estimate_one(double sigma, double lambda, const MultivariateParams& p) {
  if (std::isnan(sigma)) return kNaN;
  if (sigma < 0) throw InputError("negative presence density " + format_number(sigma));
  const double value = p.alpha(lambda) * std::pow(sigma, p.beta(lambda));
  if (!std::isfinite(value))
    throw DegenerateError("dynamic estimate is not finite (sigma " + format_number(sigma) + ", lambda " +
                          format_number(lambda) + ")");
  return value;
}

}  // namespace

ActivityLevel activity_level(const VolumeSeries& volumes, const PresenceSeries& presence, ActivityKind kind) {
  check_aligned(volumes, presence);
  const Eigen::Index n = presence.cells();
  const Eigen::Index t = presence.axis.size();
  ActivityLevel out{presence.axis, kind, Mat(n, t), MaskMat(n, t), Vec(t)};
  for (Eigen::Index k = 0; k < t; ++k) {
    double sum = 0.0;
    Eigen::Index defined = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double l = cell_activity(volumes, presence, kind, i, k);
      out.values(i, k) = l;
      out.defined(i, k) = !std::isnan(l);
      if (!std::isnan(l)) {
        sum += l;
        ++defined;
      }
    }
    out.city_mean[k] = defined ? sum / static_cast<double>(defined) : kNaN;
  }
  return out;
}

MultivariateParams fit_lambda_lines(std::span<const LambdaFit> pairs, ActivityKind kind) {
  const auto n = static_cast<Eigen::Index>(pairs.size());
  if (n < 2) throw InsufficientDataError("need at least 2 (lambda, fit) pairs, got " + std::to_string(n));
  Vec lambda(n), log_alpha(n), beta(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = pairs[static_cast<std::size_t>(i)];
    if (!std::isfinite(p.lambda) || !(p.alpha > 0) || !std::isfinite(p.beta))
      throw InputError("invalid (lambda, alpha, beta) pair at index " + std::to_string(i));
    lambda[i] = p.lambda;
    log_alpha[i] = std::log(p.alpha);
    beta[i] = p.beta;
  }
  const LineFit la = fit_line(lambda, log_alpha);
  const LineFit lb = fit_line(lambda, beta);
  return {la.slope, la.intercept, lb.slope, lb.intercept, kind};
}

std::vector<LambdaFit> overnight_fits(const PresenceSeries& presence, const ActivityLevel& activity, const Vec& rho,
                                      const Mask& cells, const OvernightConfig& config, std::uint64_t seed) {
  if (activity.axis.starts != presence.axis.starts) throw InputError("activity and presence use different slot axes");
  if (rho.size() != presence.cells() || cells.size() != presence.cells())
    throw InputError("census and cell mask must cover the presence cells");
  if (config.granularity <= 0 || config.window_end <= config.window_start)
    throw InputError("overnight window must be non-empty with a positive granularity");

  // bucket start -> slot columns
  std::map<Seconds, std::vector<Eigen::Index>> buckets;
  for (Eigen::Index k = 0; k < presence.axis.size(); ++k) {
    const Seconds s = presence.axis.starts[static_cast<std::size_t>(k)];
    const Seconds sod = second_of_day(s);
    if (sod < config.window_start || sod >= config.window_end) continue;
    const Seconds offset = (sod - config.window_start) / config.granularity * config.granularity;
    buckets[day_start(day_of(s)) + config.window_start + offset].push_back(k);
  }

  std::vector<LambdaFit> out;
  const Eigen::Index n = presence.cells();
  for (const auto& [start, cols] : buckets) {
    double lsum = 0.0;
    int lcount = 0;
    for (Eigen::Index k : cols)
      if (!std::isnan(activity.city_mean[k])) {
        lsum += activity.city_mean[k];
        ++lcount;
      }
    if (!lcount) continue;
    Vec sigma = Vec::Constant(n, kNaN);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!cells[i]) continue;
      double s = 0.0;
      int c = 0;
      for (Eigen::Index k : cols)
        if (!presence.missing(i, k)) {
          s += presence.densities(i, k);
          ++c;
        }
      if (c) sigma[i] = s / c;
    }
    try {
      PowerLawFit fit = ransac_powerlaw_fit(sigma, rho, config.ransac, derive_seed(seed, static_cast<std::uint64_t>(start)));
      out.push_back({lsum / lcount, fit.alpha, fit.beta, start});
    } catch (const InsufficientDataError&) {
    } catch (const DegenerateError&) {
    }
  }
  return out;
}

Vec estimate_dynamic(const Vec& sigma, const Vec& lambda, double city_lambda, const MultivariateParams& params,
                     Mask* fallback) {
  if (sigma.size() != lambda.size()) throw InputError("sigma and lambda differ in length");
  const double fill = std::isnan(city_lambda) ? 0.0 : city_lambda;
  Vec out(sigma.size());
  if (fallback) *fallback = Mask::Constant(sigma.size(), false);
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    double l = lambda[i];
    if (std::isnan(l)) {
      l = fill;
      if (fallback) (*fallback)[i] = true;
    }
    out[i] = estimate_one(sigma[i], l, params);
  }
  return out;
}

DynamicEstimate estimate_dynamic(const PresenceSeries& presence, const ActivityLevel& activity,
                                 const MultivariateParams& params) {
  if (activity.axis.starts != presence.axis.starts || activity.values.rows() != presence.cells())
    throw InputError("activity and presence are not aligned");
  if (activity.kind != params.kind)
    throw InputError("activity kind '" + std::string(to_string(activity.kind)) + "' does not match parameters ('" +
                     std::string(to_string(params.kind)) + "')");
  const Eigen::Index n = presence.cells();
  const Eigen::Index t = presence.axis.size();
  DynamicEstimate out{presence.axis, Mat(n, t), MaskMat(n, t)};
  for (Eigen::Index k = 0; k < t; ++k) {
    Vec sigma = presence.densities.col(k);
    for (Eigen::Index i = 0; i < n; ++i)
      if (presence.missing(i, k)) sigma[i] = kNaN;
    Mask fb;
    out.rho_hat.col(k) = estimate_dynamic(sigma, activity.values.col(k), activity.city_mean[k], params, &fb);
    out.lambda_fallback.col(k) = fb;
  }
  return out;
}

ZScores zscore(const Mat& series) {
  if (series.cols() < 2) throw InsufficientDataError("z-scores need at least 2 slots per cell");
  ZScores out{Mat(series.rows(), series.cols()), Mask::Constant(series.rows(), false)};
  for (Eigen::Index i = 0; i < series.rows(); ++i) {
    double sum = 0.0;
    Eigen::Index n = 0;
    for (Eigen::Index k = 0; k < series.cols(); ++k)
      if (!std::isnan(series(i, k))) {
        sum += series(i, k);
        ++n;
      }
    const double mean = n ? sum / static_cast<double>(n) : 0.0;
    double ss = 0.0;
    for (Eigen::Index k = 0; k < series.cols(); ++k)
      if (!std::isnan(series(i, k))) ss += (series(i, k) - mean) * (series(i, k) - mean);
    const double sd = n ? std::sqrt(ss / static_cast<double>(n)) : 0.0;
    const bool constant = n < 2 || !(sd > 0);
    out.constant[i] = constant;
    for (Eigen::Index k = 0; k < series.cols(); ++k) {
      const double v = series(i, k);
      out.z(i, k) = std::isnan(v) ? kNaN : constant ? 0.0 : (v - mean) / sd;
    }
  }
  return out;
}

std::vector<CellIndex> event_cells(const EventSpec& event, const GridTessellation& grid) {
  std::vector<CellIndex> seed = event.venue_cells;
  if (event.venue) {
    auto hit = cells_intersecting(grid, *event.venue);
    seed.insert(seed.end(), hit.begin(), hit.end());
  }
  for (CellIndex c : seed)
    if (c >= grid.size()) throw InputError("event '" + event.id + "': unknown venue cell index " + std::to_string(c));
  std::sort(seed.begin(), seed.end());
  seed.erase(std::unique(seed.begin(), seed.end()), seed.end());
  if (seed.empty()) throw InputError("event '" + event.id + "': venue does not intersect the grid");
  auto adjacent = adjacent_cells(grid, seed);
  seed.insert(seed.end(), adjacent.begin(), adjacent.end());
  std::sort(seed.begin(), seed.end());
  seed.erase(std::unique(seed.begin(), seed.end()), seed.end());
  return seed;
}

std::vector<Day> baseline_days(const EventSpec& event, const SlotAxis& axis, Seconds t_peak) {
  const Day event_day = day_of(t_peak);
  const Seconds tod = second_of_day(t_peak);
  std::vector<Day> out;
  for (Day d : axis.days()) {
    if (d == event_day || weekday_of(d) != weekday_of(event_day)) continue;
    if (std::find(event.other_event_days.begin(), event.other_event_days.end(), d) != event.other_event_days.end())
      continue;
    if (axis.find(day_start(d) + tod)) out.push_back(d);
  }
  return out;
}

double attendance_from_densities(double sigma_match, double sigma_norm, double lambda_tilde, double surface_km2,
                                 const MultivariateParams& params, bool literal_prefactor) {
  if (!(sigma_match > sigma_norm)) return 0.0;
  const double prefactor =
      literal_prefactor ? params.a_alpha * lambda_tilde + params.b_alpha : params.alpha(lambda_tilde);
  return prefactor * std::pow(sigma_match - sigma_norm, params.beta(lambda_tilde)) * surface_km2;
}

AttendanceEstimate estimate_attendance(const EventSpec& event, const PresenceSeries& presence,
                                       const VolumeSeries& volumes, const MultivariateParams& params,
                                       const GridTessellation& grid, const AttendanceConfig& config) {
  check_aligned(volumes, presence);
  if (presence.cells() != static_cast<Eigen::Index>(grid.size()))
    throw InputError("presence does not cover the grid");
  const Seconds t0 = event.kickoff - event.margin;
  const Seconds t1 = event.end + event.margin;
  if (t1 <= t0) throw InputError("event '" + event.id + "': empty timespan");

  AttendanceEstimate out;
  out.event_id = event.id;
  out.cells = event_cells(event, grid);
  const Vec& surfaces = grid.surfaces();
  for (CellIndex c : out.cells) out.surface_km2 += surfaces[c];

  // Slots of the event timespan.
  std::vector<Eigen::Index> span_cols;
  for (Eigen::Index k = 0; k < presence.axis.size(); ++k) {
    const Seconds s = presence.axis.starts[static_cast<std::size_t>(k)];
    if (s >= t0 && s < t1) span_cols.push_back(k);
  }
  if (span_cols.empty()) throw InsufficientDataError("event '" + event.id + "': no presence slots in the timespan");

  // t_peak: largest summed density, earliest on ties.
  Eigen::Index peak = -1;
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k : span_cols) {
    double sum = 0.0;
    for (CellIndex c : out.cells) {
      if (presence.missing(c, k))
        throw InsufficientDataError("event '" + event.id + "': presence missing in an event cell");
      sum += presence.densities(c, k);
    }
    if (sum > best) {
      best = sum;
      peak = k;
    }
  }
  out.t_peak = presence.axis.starts[static_cast<std::size_t>(peak)];

  out.baseline_days = baseline_days(event, presence.axis, out.t_peak);
  const Seconds tod = second_of_day(out.t_peak);
  std::vector<Eigen::Index> base_cols;
  for (Day d : out.baseline_days) base_cols.push_back(*presence.axis.find(day_start(d) + tod));
  if (base_cols.size() < config.min_baseline_days)
    throw InsufficientDataError("event '" + event.id + "': " + std::to_string(base_cols.size()) +
                                " baseline days, need " + std::to_string(config.min_baseline_days));

  int lcount = 0;
  double lsum = 0.0;
  for (CellIndex c : out.cells) {
    std::vector<double> samples;
    for (Eigen::Index k : base_cols)
      if (!presence.missing(c, k)) samples.push_back(presence.densities(c, k));
    if (samples.empty())
      throw InsufficientDataError("event '" + event.id + "': no baseline presence for cell index " +
                                  std::to_string(c));
    const double w = surfaces[c] / out.surface_km2;
    out.sigma_norm += w * median_of(std::move(samples));
    out.sigma_match += w * presence.densities(c, peak);
    const double l = cell_activity(volumes, presence, params.kind, c, peak);
    if (!std::isnan(l)) {
      lsum += l;
      ++lcount;
    }
  }
  if (lcount) {
    out.lambda_tilde = lsum / lcount;
  } else {
    double s = 0.0;
    int n = 0;
    for (Eigen::Index i = 0; i < presence.cells(); ++i) {
      double l = cell_activity(volumes, presence, params.kind, i, peak);
      if (!std::isnan(l)) {
        s += l;
        ++n;
      }
    }
    out.lambda_tilde = n ? s / n : 0.0;
  }
  out.no_crowd = !(out.sigma_match > out.sigma_norm);
  out.gamma_hat = attendance_from_densities(out.sigma_match, out.sigma_norm, out.lambda_tilde, out.surface_km2,
                                            params, config.literal_prefactor);
  return out;
}

Vec xu_estimate(const Vec& sigma, std::span<const LandUse> labels, std::span<const LandUseFit> fits,
                const PopulationDensityMap& census, const GridTessellation& grid) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  if (sigma.size() != n || census.values.size() != n || static_cast<Eigen::Index>(labels.size()) != n)
    throw InputError("sigma, labels and census must cover the grid");
  const Vec& surfaces = grid.surfaces();
  Vec raw(n);
  double denom = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const LandUse use = labels[static_cast<std::size_t>(i)];
    auto fit = std::find_if(fits.begin(), fits.end(), [&](const LandUseFit& f) { return f.use == use; });
    if (fit == fits.end()) throw InputError("no fit for land use '" + std::string(to_string(use)) + "'");
    if (std::isnan(sigma[i])) {
      raw[i] = kNaN;
      continue;
    }
    if (sigma[i] < 0) throw InputError("negative presence density " + format_number(sigma[i]));
    raw[i] = fit->alpha * std::pow(sigma[i], fit->beta);
    denom += raw[i] * surfaces[i];
  }
  if (!(denom > 0) || !std::isfinite(denom)) throw DegenerateError("rescaling factor undefined: zero modelled total");
  const double total = census.values.dot(surfaces);
  return raw * (total / denom);
}

double xu_attendance(const AttendanceEstimate& event, const PresenceSeries& presence, std::span<const LandUse> labels,
                     std::span<const LandUseFit> fits, const PopulationDensityMap& census,
                     const GridTessellation& grid) {
  const auto peak = presence.axis.find(event.t_peak);
  if (!peak) throw InputError("event '" + event.event_id + "': peak slot not in presence series");
  const Seconds tod = second_of_day(event.t_peak);
  const Eigen::Index n = presence.cells();
  Vec now(n), norm(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    now[i] = presence.missing(i, *peak) ? kNaN : presence.densities(i, *peak);
    std::vector<double> samples;
    for (Day d : event.baseline_days)
      if (auto k = presence.axis.find(day_start(d) + tod); k && !presence.missing(i, *k))
        samples.push_back(presence.densities(i, *k));
    norm[i] = samples.empty() ? kNaN : median_of(std::move(samples));
  }
  const Vec rho_now = xu_estimate(now, labels, fits, census, grid);
  const Vec rho_norm = xu_estimate(norm, labels, fits, census, grid);
  double gamma = 0.0;
  for (CellIndex c : event.cells) gamma += grid.surfaces()[c] * (rho_now[c] - rho_norm[c]);
  return gamma;
}

Percentiles percentiles(std::vector<double> values) {
  if (values.empty()) throw InsufficientDataError("percentiles of an empty sample");
  std::sort(values.begin(), values.end());
  return {quantile_sorted(values, 0.05), quantile_sorted(values, 0.25), quantile_sorted(values, 0.5),
          quantile_sorted(values, 0.75), quantile_sorted(values, 0.95)};
}

double mann_whitney_p(std::span<const double> x, std::span<const double> y) {
  const std::size_t n1 = x.size(), n2 = y.size();
  if (!n1 || !n2) throw InsufficientDataError("rank test needs two non-empty samples");
  std::vector<std::pair<double, int>> all;
  for (double v : x) all.emplace_back(v, 0);
  for (double v : y) all.emplace_back(v, 1);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  const double n = static_cast<double>(all.size());
  double rank_x = 0.0, ties = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    const double avg = 0.5 * static_cast<double>(i + j + 1);
    const double t = static_cast<double>(j - i);
    ties += t * t * t - t;
    for (std::size_t k = i; k < j; ++k)
      if (all[k].second == 0) rank_x += avg;
    i = j;
  }
  const double m1 = static_cast<double>(n1), m2 = static_cast<double>(n2);
  const double u = rank_x - m1 * (m1 + 1) / 2;
  const double mu = m1 * m2 / 2;
  const double var = m1 * m2 / 12 * ((n + 1) - ties / (n * (n - 1)));
  if (!(var > 0)) return 1.0;
  const double z = std::max(0.0, std::abs(u - mu) - 0.5) / std::sqrt(var);
  return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

ComparisonTable compare_models(std::span<const std::string> ids, std::span<const double> truth,
                               std::span<const double> multivariate, std::span<const double> baseline) {
  const std::size_t n = truth.size();
  if (multivariate.size() != n || baseline.size() != n || ids.size() != n)
    throw InputError("comparison inputs differ in length");
  if (n < 3) throw InsufficientDataError("model comparison needs at least 3 events");
  ComparisonTable out;
  std::vector<double> mv_rel, xu_rel, mv_abs, xu_abs, ratio;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(truth[i] > 0)) throw InputError("event '" + ids[i] + "': ground-truth attendance must be positive");
    EventComparison e{ids[i], truth[i], multivariate[i], baseline[i]};
    e.mv_absolute = std::abs(e.multivariate - e.truth);
    e.xu_absolute = std::abs(e.baseline - e.truth);
    e.mv_relative = (e.multivariate - e.truth) / e.truth;
    e.xu_relative = (e.baseline - e.truth) / e.truth;
    if (e.mv_absolute == e.xu_absolute)
      e.error_ratio = 1.0;
    else
      e.error_ratio = e.mv_absolute > 0 ? e.xu_absolute / e.mv_absolute : std::numeric_limits<double>::infinity();
    mv_rel.push_back(std::abs(e.mv_relative));
    xu_rel.push_back(std::abs(e.xu_relative));
    mv_abs.push_back(e.mv_absolute);
    xu_abs.push_back(e.xu_absolute);
    ratio.push_back(e.error_ratio);
    out.events.push_back(std::move(e));
  }
  out.p_value = mann_whitney_p(mv_rel, xu_rel);
  out.mv_relative = percentiles(std::move(mv_rel));
  out.xu_relative = percentiles(std::move(xu_rel));
  out.mv_absolute = percentiles(std::move(mv_abs));
  out.xu_absolute = percentiles(std::move(xu_abs));
  out.error_ratio = percentiles(std::move(ratio));
  return out;
}

}  // namespace popdense
