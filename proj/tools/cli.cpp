#include "cli.hpp"

#include "popdense/io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <functional>
#include <iostream>
#include <map>

namespace popdense::cli {

namespace {

namespace fs = std::filesystem;

// Every key any stage understands, so one config file can drive the whole pipeline.
void check_config_keys(const io::KeyValues& kv) {
  kv.check_known({
      "grid", "admin", "events", "presence", "slots", "volumes", "labels", "census", "params", "event_specs",
      "attendance", "xu", "truth", "reference", "seed",
      "window_start", "window_end", "excluded_weekdays", "holidays", "missing_threshold",
      "slot", "sanitize_k", "whole_days", "clusters", "linkage",
      "ransac_mad_factor", "ransac_iterations", "ransac_min_samples", "ransac_threshold",
      "bootstrap_resamples", "bootstrap_level", "bootstrap_min_inliers", "persistence", "folds", "min_daily_fits",
      "activity_kind", "overnight_start", "overnight_end", "overnight_granularity",
      "min_baseline_days", "margin", "literal_prefactor", "xu_min_samples",
      "columns", "rows", "min_cell_m", "max_cell_m", "admin_block", "population", "population_sigma",
      "market_share", "weekend_multiplier", "rate_noise_sigma", "commuter_fraction", "depart_mean_h",
      "depart_jitter_h", "return_mean_h", "return_jitter_h", "outing_fraction", "outing_start_h", "outing_end_h",
      "start_date", "zone_row", "population_weight.", "visitor_fraction.", "call.", "sms.", "net.",
      "days", "write_events", "event",
  });
}

std::string option_name(const std::string& key) {
  std::string s = "--" + key;
  std::replace(s.begin(), s.end(), '_', '-');
  return s;
}

bool parse_bool(std::string_view text, std::string_view what) {
  if (text == "1" || text == "true" || text == "yes") return true;
  if (text == "0" || text == "false" || text == "no") return false;
  throw InputError("invalid boolean '" + std::string(text) + "' for " + std::string(what));
}

struct Stage {
  std::string command;
  io::KeyValues config;
  fs::path config_dir;
  std::map<std::string, std::string> from_cli;
  std::uint64_t seed = 0;
  std::uint64_t hash = 0;
  fs::path out_dir;
  std::vector<fs::path> outputs;
  std::ostream* log = nullptr;

  std::optional<fs::path> path(const std::string& key) const {
    if (auto it = from_cli.find(key); it != from_cli.end()) return fs::path(it->second);
    auto v = config.get(key);
    if (!v) return std::nullopt;
    fs::path p(*v);
    return p.is_relative() ? config_dir / p : p;
  }

  fs::path require(const std::string& key, std::string_view what) const {
    auto p = path(key);
    if (!p) throw InputError("missing input " + option_name(key) + " (" + std::string(what) + ")");
    if (!fs::exists(*p)) throw InputError(std::string(what) + " '" + p->string() + "' does not exist");
    return *p;
  }

  fs::path output(const std::string& name) {
    fs::path p = out_dir / name;
    outputs.push_back(p);
    return p;
  }

  double number(std::string_view key, double fallback) const { return config.number(key, fallback); }
  std::int64_t integer(std::string_view key, std::int64_t fallback) const { return config.integer(key, fallback); }
  Seconds slot() const {
    const Seconds s = integer("slot", kDefaultSlot);
    if (s <= 0 || kSecondsPerDay % s) throw InputError("slot must divide one day, got " + std::to_string(s));
    return s;
  }
};

// ---- shared loaders ---------------------------------------------------------------------

GridTessellation load_grid(const Stage& st) { return io::read_grid(st.require("grid", "grid file")); }

PopulationDensityMap load_census(const Stage& st, const GridTessellation& grid) {
  if (st.path("census")) return io::read_density(st.require("census", "census density file"), grid);
  if (st.path("admin")) return census_to_grid(grid, io::read_admin(st.require("admin", "admin file")));
  throw InputError("missing input --census or --admin (census population)");
}

PresenceSeries load_presence(const Stage& st, const GridTessellation& grid) {
  const fs::path p = st.require("presence", "presence file");
  std::optional<SlotAxis> axis;
  if (st.path("slots")) {
    axis = io::read_slots(st.require("slots", "slot axis file"), st.slot());
  } else if (fs::exists(io::slots_path(p))) {
    axis = io::read_slots(io::slots_path(p), st.slot());
  }
  return io::read_presence(p, grid, st.slot(), axis);
}

VolumeSeries load_volumes(const Stage& st, const GridTessellation& grid, const SlotAxis& axis) {
  return io::read_volumes(st.require("volumes", "volumes file"), grid, axis);
}

std::optional<std::vector<LandUse>> load_labels(const Stage& st, const GridTessellation& grid) {
  if (!st.path("labels")) return std::nullopt;
  return io::read_labels(st.require("labels", "labels file"), grid);
}

void save_presence(Stage& st, const std::string& stem, const PresenceSeries& p, const GridTessellation& grid) {
  io::write_presence(st.output(stem + ".csv"), p, grid);
  io::write_slots(st.output(stem + "_slots.csv"), p.axis);
}

RansacConfig ransac_config(const Stage& st, Eigen::Index min_samples_default = RansacConfig{}.min_samples) {
  RansacConfig c;
  c.mad_factor = st.number("ransac_mad_factor", c.mad_factor);
  c.max_iterations = static_cast<int>(st.integer("ransac_iterations", c.max_iterations));
  c.min_samples = st.integer("ransac_min_samples", min_samples_default);
  if (st.config.has("ransac_threshold")) c.threshold = st.number("ransac_threshold", 0.0);
  if (c.max_iterations < 1) throw InputError("ransac_iterations must be positive");
  return c;
}

BootstrapConfig bootstrap_config(const Stage& st) {
  BootstrapConfig c;
  c.resamples = static_cast<int>(st.integer("bootstrap_resamples", c.resamples));
  c.level = st.number("bootstrap_level", c.level);
  c.min_inliers = st.integer("bootstrap_min_inliers", c.min_inliers);
  c.ransac = ransac_config(st);
  return c;
}

Mask cells_where(std::span<const LandUse> labels, LandUse use) {
  Mask m(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) m[static_cast<Eigen::Index>(i)] = labels[i] == use;
  return m;
}

std::string join_days(std::span<const Day> days) {
  std::string s;
  for (std::size_t i = 0; i < days.size(); ++i) s += (i ? ";" : "") + format_iso_date(days[i]);
  return s;
}

// ---- subcommands ------------------------------------------------------------------------

void cmd_gridify(Stage& st) {
  const auto grid = load_grid(st);
  const auto areas = io::read_admin(st.require("admin", "admin file"));
  const auto census = census_to_grid(grid, areas);
  io::write_density(st.output("census.csv"), grid, census);
  *st.log << "cells " << grid.size() << ", population " << format_number(census.values.dot(grid.surfaces())) << '\n';
}

void cmd_presence(Stage& st) {
  const auto grid = load_grid(st);
  auto events = io::read_events(st.require("events", "events file"), grid);
  if (events.empty()) throw InsufficientDataError("presence: events file has no rows");
  if (!std::is_sorted(events.begin(), events.end(), event_before))
    std::stable_sort(events.begin(), events.end(), event_before);
  const Seconds slot = st.slot();
  SlotAxis axis = SlotAxis::covering(events, slot);
  if (parse_bool(st.config.get("whole_days").value_or("true"), "whole_days")) {
    const Seconds first = day_start(day_of(axis.starts.front()));
    const Seconds last = day_start(day_of(axis.starts.back()) + std::chrono::days{1});
    axis = SlotAxis::contiguous(first, static_cast<std::size_t>((last - first) / slot), slot);
  }
  const auto presence = sanitize(infer_presence(events, grid, axis), st.number("sanitize_k", 1.0));
  save_presence(st, "presence", presence, grid);
  io::write_volumes(st.output("volumes.csv"), aggregate_volumes(events, grid, axis), grid);
  *st.log << "events " << events.size() << ", slots " << axis.size() << '\n';
}

void cmd_filter(Stage& st) {
  const auto grid = load_grid(st);
  const auto presence = load_presence(st, grid);
  const FilterConfig fc = io::parse_filter_config(st.config);
  const auto missing = daily_missing_fractions(presence, fc);
  const auto days = apply_day_filter(presence, fc, missing);

  io::CsvWriter mw(st.output("missing.csv"), {"date", "missing_fraction"});
  for (const auto& [day, frac] : missing) mw.row({format_iso_date(day), format_number(frac)});
  mw.close();

  io::CsvWriter ew(st.output("excluded_days.csv"), {"date", "reasons"});
  for (const auto& e : days.log) {
    std::string reasons;
    for (std::size_t i = 0; i < e.reasons.size(); ++i) reasons += (i ? ";" : "") + e.reasons[i];
    ew.row({format_iso_date(e.day), reasons});
  }
  ew.close();

  save_presence(st, "presence_days", days.series, grid);
  const auto window = apply_time_filter(days.series, fc);
  save_presence(st, "presence_filtered", window, grid);

  if (st.path("volumes")) {
    const auto volumes = load_volumes(st, grid, presence.axis);
    const auto vdays = apply_day_filter(volumes, fc, missing).series;
    io::write_volumes(st.output("volumes_days.csv"), vdays, grid);
    if (st.path("census") || st.path("admin")) {
      const auto census = load_census(st, grid);
      const auto ranking = rank_metadata_classes(apply_time_filter(vdays, fc), window, census, grid);
      io::CsvWriter rw(st.output("rank.csv"), {"class", "r", "cells"});
      for (const auto& c : ranking) rw.row({c.metadata_class, format_number(c.r), std::to_string(c.cells)});
      rw.close();
    }
  }
  *st.log << "days kept " << days.series.axis.days().size() << ", excluded " << days.log.size() << '\n';
}

Linkage parse_linkage(std::string_view text) {
  if (text == "average") return Linkage::Average;
  if (text == "single") return Linkage::Single;
  if (text == "complete") return Linkage::Complete;
  throw InputError("unknown linkage '" + std::string(text) + "' (average, single, complete)");
}

void cmd_landuse(Stage& st) {
  const auto grid = load_grid(st);
  const fs::path vpath = st.require("volumes", "volumes file");
  const SlotAxis axis = st.path("slots") ? io::read_slots(st.require("slots", "slot axis file"), st.slot())
                                         : io::span_axis(vpath, st.slot());
  const auto volumes = io::read_volumes(vpath, grid, axis);
  const auto sigs = weekly_signatures(volumes);
  io::write_signatures(st.output("signatures.csv"), grid, sigs);

  std::vector<Vec> values;
  for (const auto& s : sigs) values.push_back(s.values);
  ClusterConfig cc;
  cc.k = static_cast<int>(st.integer("clusters", cc.k));
  cc.linkage = parse_linkage(st.config.get("linkage").value_or("average"));
  const auto clustering = cluster_signatures(values, cc);

  io::CsvWriter cw(st.output("clusters.csv"), {"cell_id", "cluster", "constant_flagged"});
  for (std::size_t i = 0; i < grid.size(); ++i)
    cw.row({grid[i].id, std::to_string(clustering.labels[i]), clustering.constant_flagged[i] ? "1" : "0"});
  cw.close();

  std::vector<std::string> header{"cluster"};
  for (int h = 0; h < kHoursPerWeek; ++h) header.push_back("h" + std::to_string(h));
  io::CsvWriter kw(st.output("characteristic.csv"), header);
  for (std::size_t c = 0; c < clustering.characteristic.size(); ++c) {
    std::vector<std::string> row{std::to_string(c)};
    for (Eigen::Index h = 0; h < clustering.characteristic[c].size(); ++h)
      row.push_back(format_number(clustering.characteristic[c][h]));
    kw.row(row);
  }
  kw.close();

  if (st.path("reference")) {
    const auto reference = io::read_reference_signatures(st.require("reference", "reference signatures file"));
    const auto cls = classify_cells(values, reference);
    io::write_labels(st.output("labels.csv"), grid, cls.labels);
    std::vector<CellIndex> low;
    for (std::size_t i = 0; i < cls.low_confidence.size(); ++i)
      if (cls.low_confidence[i]) low.push_back(i);
    io::write_cell_list(st.output("low_confidence.csv"), grid, low);
  }
  *st.log << "signatures " << sigs.size() << ", clusters " << clustering.characteristic.size() << '\n';
}

void cmd_fit_static(Stage& st) {
  const auto grid = load_grid(st);
  const auto presence = load_presence(st, grid);
  const auto census = load_census(st, grid);
  const auto labels = load_labels(st, grid);
  const FilterConfig fc = io::parse_filter_config(st.config);

  StaticTrainingConfig cfg;
  cfg.ransac = ransac_config(st);
  cfg.bootstrap = bootstrap_config(st);
  cfg.persistence = st.number("persistence", cfg.persistence);
  cfg.folds = static_cast<int>(st.integer("folds", cfg.folds));
  cfg.min_daily_fits = st.integer("min_daily_fits", cfg.min_daily_fits);

  const Mask all = Mask::Constant(static_cast<Eigen::Index>(grid.size()), true);
  const Mask training = labels ? cells_where(*labels, LandUse::Residential) : all;
  const auto daily = daily_mean_density(apply_time_filter(presence, fc));
  const auto model = train_static_model(daily, census.values, training, all, cfg, st.seed);

  io::write_fit(st.output("fit.csv"), model.fit, model.train);
  io::write_cell_list(st.output("outliers.csv"), grid, model.persistent_outliers);

  io::CsvWriter fw(st.output("folds.csv"),
                   {"fold", "test_days", "alpha", "beta", "train_r2", "test_r2", "test_nrmse1", "test_nrmse2"});
  for (const auto& f : model.folds)
    fw.row({std::to_string(f.fold), join_days(f.test_days), format_number(f.fit.alpha), format_number(f.fit.beta),
            format_number(f.train.r2), format_number(f.test.r2), format_number(f.test.nrmse1),
            format_number(f.test.nrmse2)});
  fw.close();

  io::CsvWriter dw(st.output("daily_fits.csv"), {"date", "alpha", "beta", "n_inliers", "n_samples"});
  for (std::size_t d = 0; d < model.daily_fits.size(); ++d) {
    const auto& f = model.daily_fits[d];
    dw.row({format_iso_date(daily.days[d]), format_number(f.alpha), format_number(f.beta),
            std::to_string(f.n_inliers()), std::to_string(f.n_samples())});
  }
  dw.close();
  *st.log << "alpha " << format_number(model.fit.alpha) << ", beta " << format_number(model.fit.beta) << ", r2 "
          << format_number(model.train.r2) << '\n';
}

void cmd_fit_dynamic(Stage& st) {
  const auto grid = load_grid(st);
  const auto presence = load_presence(st, grid);
  const auto volumes = load_volumes(st, grid, presence.axis);
  const auto census = load_census(st, grid);
  const auto labels = load_labels(st, grid);
  const ActivityKind kind = parse_activity_kind(st.config.get("activity_kind").value_or("call"));

  OvernightConfig oc;
  if (auto v = st.config.get("overnight_start")) oc.window_start = io::parse_time_of_day(*v);
  if (auto v = st.config.get("overnight_end")) oc.window_end = io::parse_time_of_day(*v);
  oc.granularity = st.integer("overnight_granularity", oc.granularity);
  oc.ransac = ransac_config(st);

  const Mask cells = labels ? cells_where(*labels, LandUse::Residential)
                            : Mask::Constant(static_cast<Eigen::Index>(grid.size()), true);
  const auto activity = activity_level(volumes, presence, kind);
  const auto fits = overnight_fits(presence, activity, census.values, cells, oc, st.seed);
  const auto params = fit_lambda_lines(fits, kind);

  const fs::path pp = st.output("params.txt");
  io::write_params(pp, params);
  io::CsvWriter lw(st.output("lambda_fits.csv"), {"slot_start_s", "lambda", "alpha", "beta"});
  for (const auto& f : fits)
    lw.row({std::to_string(f.slot_start), format_number(f.lambda), format_number(f.alpha), format_number(f.beta)});
  lw.close();
  *st.log << "lambda fits " << fits.size() << ", a_alpha " << format_number(params.a_alpha) << ", b_alpha "
          << format_number(params.b_alpha) << ", a_beta " << format_number(params.a_beta) << ", b_beta "
          << format_number(params.b_beta) << '\n';
}

MultivariateParams load_params(const Stage& st) { return io::read_params(st.require("params", "params file")); }

void cmd_estimate(Stage& st) {
  const auto params = load_params(st);
  const auto grid = load_grid(st);
  const auto presence = load_presence(st, grid);
  const auto volumes = load_volumes(st, grid, presence.axis);
  const auto est = estimate_dynamic(presence, activity_level(volumes, presence, params.kind), params);
  const auto z = zscore(est.rho_hat);
  io::write_dynamic(st.output("dynamic.csv"), grid, est, z);
  std::vector<CellIndex> constant;
  for (Eigen::Index i = 0; i < z.constant.size(); ++i)
    if (z.constant[i]) constant.push_back(static_cast<CellIndex>(i));
  io::write_cell_list(st.output("constant_cells.csv"), grid, constant);
  *st.log << "slots " << est.axis.size() << ", lambda fallbacks " << est.lambda_fallback.count() << '\n';
}

std::vector<EventSpec> load_event_specs(const Stage& st, const GridTessellation& grid) {
  auto specs = io::read_event_specs(st.require("event_specs", "event specification file"), grid);
  const Seconds margin = st.integer("margin", EventSpec{}.margin);
  for (auto& e : specs) e.margin = margin;
  return specs;
}

void cmd_attendance(Stage& st) {
  const auto params = load_params(st);
  const auto grid = load_grid(st);
  const auto presence = load_presence(st, grid);
  const auto volumes = load_volumes(st, grid, presence.axis);
  AttendanceConfig cfg;
  cfg.min_baseline_days = static_cast<std::size_t>(st.integer("min_baseline_days", 3));
  cfg.literal_prefactor = parse_bool(st.config.get("literal_prefactor").value_or("false"), "literal_prefactor");
  std::vector<AttendanceEstimate> rows;
  for (const auto& e : load_event_specs(st, grid)) {
    rows.push_back(estimate_attendance(e, presence, volumes, params, grid, cfg));
    *st.log << e.id << " " << format_number(rows.back().gamma_hat) << (rows.back().no_crowd ? " (no crowd)" : "")
            << '\n';
  }
  io::write_attendance(st.output("attendance.csv"), rows);
}

void cmd_baseline_xu(Stage& st) {
  const auto grid = load_grid(st);
  const auto presence = load_presence(st, grid);
  const auto census = load_census(st, grid);
  const auto labels = load_labels(st, grid);
  if (!labels) throw InputError("missing input --labels (land-use labels file)");
  const auto specs = load_event_specs(st, grid);
  const auto attendance = io::read_attendance(st.require("attendance", "attendance file"));
  const FilterConfig fc = io::parse_filter_config(st.config);

  const auto missing = daily_missing_fractions(presence, fc);
  const auto night = apply_time_filter(apply_day_filter(presence, fc, missing).series, fc);
  const auto daily = daily_mean_density(night);
  std::vector<Eigen::Index> cols(daily.days.size());
  for (std::size_t i = 0; i < cols.size(); ++i) cols[i] = static_cast<Eigen::Index>(i);
  const Vec sigma = nan_mean_columns(daily.values, cols);

  const RansacConfig rc = ransac_config(st, st.integer("xu_min_samples", 3));
  std::vector<LandUseFit> fits;
  io::CsvWriter fw(st.output("xu_fits.csv"), {"land_use", "alpha", "beta", "n_inliers", "n_samples"});
  for (int u = 0; u < kLandUses; ++u) {
    const auto use = static_cast<LandUse>(u);
    const Mask m = cells_where(*labels, use);
    if (!m.any()) continue;
    const Vec s = m.select(sigma, Vec::Constant(sigma.size(), std::nan("")));
    const auto f = ransac_powerlaw_fit(s, census.values, rc, derive_seed(st.seed, static_cast<std::uint64_t>(u)));
    fits.push_back({use, f.alpha, f.beta});
    fw.row({std::string(to_string(use)), format_number(f.alpha), format_number(f.beta), std::to_string(f.n_inliers()),
            std::to_string(f.n_samples())});
  }
  fw.close();

  const std::size_t min_days = static_cast<std::size_t>(st.integer("min_baseline_days", 3));
  std::vector<std::pair<std::string, double>> out;
  for (const auto& row : attendance) {
    auto spec = std::find_if(specs.begin(), specs.end(), [&](const EventSpec& e) { return e.id == row.event_id; });
    if (spec == specs.end()) throw InputError("attendance row '" + row.event_id + "' has no event specification");
    AttendanceEstimate a;
    a.event_id = row.event_id;
    a.t_peak = row.t_peak;
    a.cells = event_cells(*spec, grid);
    a.baseline_days = baseline_days(*spec, presence.axis, row.t_peak);
    if (a.baseline_days.size() < min_days)
      throw InsufficientDataError("event '" + row.event_id + "': " + std::to_string(a.baseline_days.size()) +
                                  " baseline days, need " + std::to_string(min_days));
    out.emplace_back(row.event_id, xu_attendance(a, presence, *labels, fits, census, grid));
    *st.log << row.event_id << " " << format_number(out.back().second) << '\n';
  }
  io::write_event_values(st.output("xu_attendance.csv"), "xu_attendance", out);
}

void cmd_compare(Stage& st) {
  const auto truth = io::read_event_values(st.require("truth", "ground-truth attendance file"), "attendees");
  const auto mv = io::read_attendance(st.require("attendance", "attendance file"));
  const auto xu = io::read_event_values(st.require("xu", "baseline attendance file"), "xu_attendance");
  std::vector<std::string> ids;
  std::vector<double> t, m, x;
  for (const auto& [id, value] : truth) {
    auto a = std::find_if(mv.begin(), mv.end(), [&](const auto& r) { return r.event_id == id; });
    auto b = std::find_if(xu.begin(), xu.end(), [&](const auto& r) { return r.first == id; });
    if (a == mv.end()) throw InputError("event '" + id + "' missing from the attendance file");
    if (b == xu.end()) throw InputError("event '" + id + "' missing from the baseline attendance file");
    ids.push_back(id);
    t.push_back(value);
    m.push_back(a->gamma_hat);
    x.push_back(b->second);
  }
  const auto table = compare_models(ids, t, m, x);

  io::CsvWriter cw(st.output("comparison.csv"), {"event_id", "truth", "multivariate", "baseline", "mv_relative",
                                                 "xu_relative", "mv_absolute", "xu_absolute", "error_ratio"});
  for (const auto& e : table.events)
    cw.row({e.id, format_number(e.truth), format_number(e.multivariate), format_number(e.baseline),
            format_number(e.mv_relative), format_number(e.xu_relative), format_number(e.mv_absolute),
            format_number(e.xu_absolute), format_number(e.error_ratio)});
  cw.close();

  io::CsvWriter sw(st.output("summary.csv"), {"statistic", "p5", "p25", "p50", "p75", "p95"});
  auto pct = [&](std::string name, const Percentiles& p) {
    sw.row({std::move(name), format_number(p.p5), format_number(p.p25), format_number(p.p50), format_number(p.p75),
            format_number(p.p95)});
  };
  pct("mv_relative", table.mv_relative);
  pct("xu_relative", table.xu_relative);
  pct("mv_absolute", table.mv_absolute);
  pct("xu_absolute", table.xu_absolute);
  pct("error_ratio", table.error_ratio);
  sw.close();

  io::CsvWriter rw(st.output("rank_test.csv"), {"test", "p_value"});
  rw.row({"mann_whitney", format_number(table.p_value)});
  rw.close();
  *st.log << "median relative error: multivariate " << format_number(table.mv_relative.p50) << ", baseline "
          << format_number(table.xu_relative.p50) << ", p " << format_number(table.p_value) << '\n';
}

// `event = id,day,HH:MM,duration_min,attendees[,cell;cell...]`
InjectedEvent parse_injected(const std::string& text, const Scenario& s, int days) {
  const auto f = io::split(text, ',');
  if (f.size() < 5 || f.size() > 6)
    throw InputError("event '" + text + "': expected id,day,HH:MM,duration_min,attendees[,cells]");
  InjectedEvent e;
  e.id = f[0];
  const auto day = io::parse_int(f[1], "event day");
  if (day < 0 || day >= days) throw InputError("event '" + e.id + "': day outside the simulated period");
  e.kickoff = day_start(s.config.start + std::chrono::days{day}) + io::parse_time_of_day(f[2]);
  e.end = e.kickoff + 60 * io::parse_int(f[3], "event duration");
  if (e.end <= e.kickoff) throw InputError("event '" + e.id + "': duration must be positive");
  e.attendees = io::parse_double(f[4], "attendees");
  if (f.size() == 6) {
    for (const auto& id : io::split(f[5], ';')) e.venue_cells.push_back(s.grid.index_of(id));
  } else {
    auto it = std::find(s.land_use.begin(), s.land_use.end(), LandUse::Touristic);
    if (it == s.land_use.end()) throw InputError("event '" + e.id + "': no venue cells and no touristic cell");
    e.venue_cells.push_back(static_cast<CellIndex>(it - s.land_use.begin()));
  }
  return e;
}

void cmd_simulate(Stage& st) {
  const CityConfig cfg = io::parse_city_config(st.config);
  const int days = static_cast<int>(st.integer("days", 7));
  if (days < 1) throw InputError("days must be positive");
  const Scenario s = generate_city(cfg, st.seed);
  std::vector<InjectedEvent> injected;
  for (const auto& line : st.config.all("event")) injected.push_back(parse_injected(line, s, days));

  io::write_grid(st.output("grid.csv"), s.grid);
  io::write_admin(st.output("admin.csv"), s.admin);
  io::write_labels(st.output("labels.csv"), s.grid, s.land_use);
  io::write_density(st.output("population.csv"), s.grid,
                    {(s.population.array() / s.grid.surfaces().array()).matrix(), std::nullopt});
  io::write_reference_signatures(st.output("reference_signatures.csv"), reference_signatures(cfg));

  const bool write_events = parse_bool(st.config.get("write_events").value_or("true"), "write_events");
  std::ofstream events_out;
  if (write_events) {
    const fs::path p = st.output("events.csv");
    events_out.open(p, std::ios::binary | std::ios::trunc);
    if (!events_out) throw InputError("cannot write '" + p.string() + "'");
    io::write_events_header(events_out);
  }

  const Seconds slot = st.slot();
  const auto axis =
      SlotAxis::contiguous(day_start(cfg.start), static_cast<std::size_t>(days * (kSecondsPerDay / slot)), slot);
  PresenceTracker tracker(s.grid, axis);
  VolumeCounter counter(s.grid, axis);
  Simulator sim(s);
  std::vector<std::pair<std::string, double>> truth;
  std::size_t total = 0;
  for (int d = 0; d < days; ++d) {
    const Day day = sim.next_day();
    auto rec = sim.simulate_day();
    for (std::size_t e = 0; e < injected.size(); ++e)
      if (day_of(injected[e].kickoff) == day) {
        const auto t = inject_event(rec.events, s, injected[e], derive_seed(st.seed, 1000 + e));
        truth.emplace_back(t.id, t.attendees);
      }
    if (write_events) io::write_event_rows(events_out, rec.events, s.grid);
    tracker.consume(rec.events);
    counter.consume(rec.events);
    total += rec.events.size();
  }
  if (write_events && !events_out) throw InputError("failed writing events.csv");
  const auto presence = sanitize(tracker.finish(), st.number("sanitize_k", 1.0));
  save_presence(st, "presence", presence, s.grid);
  io::write_volumes(st.output("volumes.csv"), counter.finish(), s.grid);

  if (!injected.empty()) {
    std::vector<EventSpec> specs;
    for (const auto& e : injected) specs.push_back({e.id, std::nullopt, e.venue_cells, e.kickoff, e.end, 900, {}});
    io::write_event_specs(st.output("event_specs.csv"), specs, s.grid);
    std::sort(truth.begin(), truth.end(), [&](const auto& a, const auto& b) {
      auto pos = [&](const std::string& id) {
        return std::find_if(injected.begin(), injected.end(), [&](const auto& e) { return e.id == id; }) -
               injected.begin();
      };
      return pos(a.first) < pos(b.first);
    });
    io::write_event_values(st.output("truth.csv"), "attendees", truth);
  }
  *st.log << "cells " << s.grid.size() << ", subscribers " << s.users() << ", events " << total << '\n';
}

// ---- driver -----------------------------------------------------------------------------

struct Command {
  const char* name;
  const char* help;
  std::vector<std::pair<std::string, std::string>> inputs;  // option key, description
  std::function<void(Stage&)> run;
};

std::vector<Command> commands() {
  return {
      {"gridify", "Census population onto the grid (census.csv)", {{"grid", "grid CSV"}, {"admin", "admin areas CSV"}},
       cmd_gridify},
      {"presence", "Presence and volumes from an event stream", {{"grid", "grid CSV"}, {"events", "events CSV"}},
       cmd_presence},
      {"filter", "Day and time filters, missing fractions, metadata class ranking",
       {{"grid", "grid CSV"}, {"presence", "presence CSV"}, {"slots", "slot axis CSV"}, {"volumes", "volumes CSV"},
        {"census", "census density CSV"}, {"admin", "admin areas CSV"}},
       cmd_filter},
      {"landuse", "Weekly signatures, clustering and optional classification",
       {{"grid", "grid CSV"}, {"volumes", "volumes CSV"}, {"slots", "slot axis CSV"},
        {"reference", "reference signatures CSV"}},
       cmd_landuse},
      {"fit-static", "Robust static power-law fit with intervals and fold evaluation",
       {{"grid", "grid CSV"}, {"presence", "presence CSV"}, {"slots", "slot axis CSV"}, {"census", "census density CSV"},
        {"admin", "admin areas CSV"}, {"labels", "land-use labels CSV"}},
       cmd_fit_static},
      {"fit-dynamic", "Overnight fits and activity-dependent parameter lines",
       {{"grid", "grid CSV"}, {"presence", "presence CSV"}, {"slots", "slot axis CSV"}, {"volumes", "volumes CSV"},
        {"census", "census density CSV"}, {"admin", "admin areas CSV"}, {"labels", "land-use labels CSV"}},
       cmd_fit_dynamic},
      {"estimate", "Dynamic density and z-scores per cell and slot",
       {{"grid", "grid CSV"}, {"presence", "presence CSV"}, {"slots", "slot axis CSV"}, {"volumes", "volumes CSV"},
        {"params", "params file"}},
       cmd_estimate},
      {"attendance", "Crowd size of scheduled events",
       {{"grid", "grid CSV"}, {"presence", "presence CSV"}, {"slots", "slot axis CSV"}, {"volumes", "volumes CSV"},
        {"params", "params file"}, {"event_specs", "event specification CSV"}},
       cmd_attendance},
      {"baseline-xu", "Rescaled per-land-use baseline and its attendance estimates",
       {{"grid", "grid CSV"}, {"presence", "presence CSV"}, {"slots", "slot axis CSV"}, {"census", "census density CSV"},
        {"admin", "admin areas CSV"}, {"labels", "land-use labels CSV"}, {"event_specs", "event specification CSV"},
        {"attendance", "attendance CSV"}},
       cmd_baseline_xu},
      {"compare", "Error table and rank test of two attendance estimators",
       {{"truth", "true attendance CSV"}, {"attendance", "attendance CSV"}, {"xu", "baseline attendance CSV"}},
       cmd_compare},
      {"simulate", "Synthetic city, event stream, presence and injected events", {}, cmd_simulate},
  };
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Population density from mobile-network metadata", "popgrid"};
  app.require_subcommand(1);
  const auto cmds = commands();
  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, std::string> config_path, seed_text, out_path;
  bool literal_prefactor = false;
  for (const auto& c : cmds) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_path[c.name], "key = value configuration file");
    sub->add_option("--seed", seed_text[c.name], "random seed (default: $POPGRID_SEED, config, 0)");
    sub->add_option("--out", out_path[c.name], "output directory")->default_str(".");
    for (const auto& [key, desc] : c.inputs) sub->add_option(option_name(key), values[c.name][key], desc);
    if (std::string(c.name) == "attendance")
      sub->add_flag("--literal-prefactor", literal_prefactor, "linear instead of exponential prefactor");
  }

  if (!args.empty() && !args[0].starts_with("-") &&
      std::none_of(cmds.begin(), cmds.end(), [&](const Command& c) { return args[0] == c.name; })) {
    err << "error: unknown subcommand '" << args[0] << "'\n\n" << app.help();
    return kInputError;
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kInputError;
  }

  const auto* sub = app.get_subcommands().front();
  const auto& cmd = *std::find_if(cmds.begin(), cmds.end(), [&](const Command& c) { return sub->get_name() == c.name; });
  Stage st;
  st.command = cmd.name;
  st.log = &out;
  int status = kOk;
  std::string message;
  try {
    if (!config_path[cmd.name].empty()) {
      st.config = io::KeyValues::read(config_path[cmd.name]);
      st.config_dir = fs::path(config_path[cmd.name]).parent_path();
      check_config_keys(st.config);
    }
    for (const auto& [key, value] : values[cmd.name])
      if (!value.empty()) {
        st.config.set(key, value);
        st.from_cli[key] = value;
      }
    if (literal_prefactor) st.config.set("literal_prefactor", "true");

    if (!seed_text[cmd.name].empty()) {
      st.seed = io::parse_uint(seed_text[cmd.name], "--seed");
    } else if (const char* env = std::getenv("POPGRID_SEED"); env && *env) {
      st.seed = io::parse_uint(env, "POPGRID_SEED");
    } else {
      st.seed = io::parse_uint(st.config.get("seed").value_or("0"), "seed");
    }
    st.hash = io::fnv1a64(st.command + "\n" + st.config.canonical());
    st.out_dir = out_path[cmd.name].empty() ? fs::path(".") : fs::path(out_path[cmd.name]);
    fs::create_directories(st.out_dir);

    cmd.run(st);
    for (const auto& p : st.outputs) io::write_sidecar(p, st.command, st.hash, st.seed);
  } catch (const InsufficientDataError& e) {
    status = kInsufficientData;
    message = std::string("insufficient data: ") + e.what();
  } catch (const DegenerateError& e) {
    status = kDegenerate;
    message = std::string("numerical degeneracy: ") + e.what();
  } catch (const InputError& e) {
    status = kInputError;
    message = std::string("input error: ") + e.what();
  } catch (const std::exception& e) {
    status = kInputError;
    message = std::string("error: ") + e.what();
  }
  if (status != kOk) err << cmd.name << ": " << message << '\n';

  if (!st.out_dir.empty()) {
    std::ofstream log(st.out_dir / "run.log", std::ios::app);
    log << utc_timestamp() << ' ' << cmd.name << " seed=" << st.seed << " config_hash=" << io::hex64(st.hash)
        << " status=" << status << (message.empty() ? "" : " " + message) << '\n';
  }
  return status;
}

}  // namespace popdense::cli
