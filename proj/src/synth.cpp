#include "popdense/synth.hpp"

#include "popdense/regress.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace popdense {

namespace {

constexpr std::uint64_t kOutingStream = 0x6f7574696e67ULL;
constexpr std::uint64_t kDayStream = 0x646179ULL;

std::array<double, 24> scaled(const std::array<double, 24>& v, double f) {
  std::array<double, 24> out{};
  for (std::size_t h = 0; h < 24; ++h) out[h] = v[h] * f;
  return out;
}

std::array<double, 24> net_profile() {
  std::array<double, 24> net{};
  for (std::size_t h = 0; h < 24; ++h) net[h] = h < 6 ? 0.3 : 1.0;
  return net;
}

LandUse template_zone(int block_row, int block_col, int block_rows, int block_cols) {
  const double dy = (block_row + 0.5) / block_rows - 0.5;
  const double dx = (block_col + 0.5) / block_cols - 0.5;
  const double r = std::sqrt(dx * dx + dy * dy);
  if (r < 0.12) return LandUse::Touristic;
  if ((block_row * 7 + block_col * 3) % 11 == 0) return LandUse::University;
  if ((block_row * 5 + block_col * 2) % 13 == 6) return LandUse::Shopping;
  if (r < 0.3) return LandUse::Office;
  return LandUse::Residential;
}

// Integer apportionment of `total` proportional to `weights`.
Vec largest_remainder(const Vec& weights, double total) {
  const Vec exact = weights * (total / weights.sum());
  Vec out = exact.array().floor();
  auto remaining = static_cast<long>(std::llround(total - out.sum()));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(exact.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return exact[a] - out[a] > exact[b] - out[b]; });
  for (std::size_t i = 0; remaining > 0 && i < order.size(); ++i, --remaining) out[order[i]] += 1.0;
  return out;
}

struct Stop {
  std::int32_t start;
  CellIndex cell;
};

}  // namespace

std::array<ActivityProfile, kLandUses> default_profiles() {
  const std::array<std::array<double, 24>, kLandUses> call{{
      {0.05, 0.05, 0.05, 0.05, 0.05, 0.06, 0.10, 0.20, 0.30, 0.35, 0.38, 0.40,
       0.42, 0.40, 0.38, 0.40, 0.45, 0.55, 0.62, 0.65, 0.60, 0.45, 0.25, 0.10},
      {0.05, 0.05, 0.05, 0.05, 0.05, 0.06, 0.10, 0.25, 0.55, 0.75, 0.78, 0.76,
       0.60, 0.70, 0.76, 0.74, 0.70, 0.55, 0.35, 0.20, 0.12, 0.08, 0.06, 0.05},
      {0.08, 0.06, 0.05, 0.05, 0.05, 0.06, 0.08, 0.15, 0.30, 0.45, 0.55, 0.60,
       0.62, 0.60, 0.58, 0.60, 0.62, 0.65, 0.68, 0.66, 0.60, 0.45, 0.30, 0.15},
      {0.05, 0.05, 0.05, 0.05, 0.05, 0.06, 0.08, 0.20, 0.50, 0.70, 0.72, 0.65,
       0.50, 0.65, 0.70, 0.68, 0.55, 0.40, 0.25, 0.15, 0.10, 0.08, 0.06, 0.05},
      {0.05, 0.05, 0.05, 0.05, 0.05, 0.06, 0.06, 0.10, 0.20, 0.40, 0.55, 0.60,
       0.58, 0.55, 0.58, 0.62, 0.66, 0.70, 0.62, 0.45, 0.25, 0.12, 0.08, 0.06},
  }};
  std::array<ActivityProfile, kLandUses> out{};
  for (std::size_t u = 0; u < out.size(); ++u) out[u] = {call[u], scaled(call[u], 0.6), net_profile()};
  return out;
}

void CityConfig::validate() const {
  if (columns < 1 || rows < 1) throw InputError("city needs at least one row and one column");
  if (!(min_cell_m > 0) || max_cell_m < min_cell_m) throw InputError("cell size bounds must satisfy 0 < min <= max");
  if (admin_block < 1) throw InputError("admin_block must be positive");
  if (!(population > 0) || std::floor(population) != population)
    throw InputError("population must be a positive whole number");
  if (!(population_sigma >= 0)) throw InputError("population_sigma must be non-negative");
  if (!(market_share > 0 && market_share <= 1)) throw InputError("market share must lie in (0, 1]");
  if (!zone_map.empty() && zone_map.size() != static_cast<std::size_t>(rows * columns))
    throw InputError("zone map must have rows * columns entries");
  for (double w : population_weight)
    if (!(w >= 0)) throw InputError("population weights must be non-negative");
  for (const auto& p : profiles)
    for (std::size_t h = 0; h < 24; ++h)
      if (!(p.call[h] >= 0 && p.sms[h] >= 0 && p.net[h] >= 0)) throw InputError("activity rates must be non-negative");
  if (!(weekend_multiplier >= 0)) throw InputError("weekend multiplier must be non-negative");
  if (!(rate_noise_sigma >= 0)) throw InputError("rate noise must be non-negative");
  if (!(commuter_fraction >= 0 && commuter_fraction <= 1)) throw InputError("commuter fraction must lie in [0, 1]");
  if (!(depart_mean_h >= 0 && return_mean_h > depart_mean_h && return_mean_h < 24))
    throw InputError("commute times must satisfy 0 <= depart < return < 24");
  for (double v : visitor_fraction)
    if (!(v >= 0)) throw InputError("visitor fractions must be non-negative");
  if (!(outing_fraction >= 0 && outing_fraction <= 1)) throw InputError("outing fraction must lie in [0, 1]");
  if (!(outing_start_h >= return_mean_h + 2 && outing_start_h < 24 && outing_end_h > 24 && outing_end_h < 30))
    throw InputError("outings must start after the return commute and end before 06:00 the next day");
}

bool Scenario::is_workday(Day d) const {
  const unsigned wd = weekday_of(d).iso_encoding();
  if (wd >= 6) return false;
  return std::find(config.holidays.begin(), config.holidays.end(), d) == config.holidays.end();
}

Scenario generate_city(const CityConfig& config, std::uint64_t seed) {
  config.validate();
  Scenario s;
  s.config = config;
  s.seed = seed;
  std::mt19937_64 rng(derive_seed(seed, 1));
  std::uniform_real_distribution<double> size(config.min_cell_m, config.max_cell_m);
  std::vector<double> xs{0.0}, ys{0.0};
  for (int c = 0; c < config.columns; ++c) xs.push_back(xs.back() + size(rng));
  for (int r = 0; r < config.rows; ++r) ys.push_back(ys.back() + size(rng));

  const int block_rows = (config.rows + config.admin_block - 1) / config.admin_block;
  const int block_cols = (config.columns + config.admin_block - 1) / config.admin_block;
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> block_density(static_cast<std::size_t>(block_rows * block_cols));
  for (auto& d : block_density) d = std::exp(config.population_sigma * gauss(rng));

  std::vector<Cell> cells;
  const auto n = static_cast<std::size_t>(config.rows * config.columns);
  Vec weight(static_cast<Eigen::Index>(n));
  for (int r = 0; r < config.rows; ++r)
    for (int c = 0; c < config.columns; ++c) {
      const auto idx = static_cast<std::size_t>(r * config.columns + c);
      const int br = r / config.admin_block, bc = c / config.admin_block;
      LandUse use = config.zone_map.empty() ? template_zone(br, bc, block_rows, block_cols) : config.zone_map[idx];
      s.land_use.push_back(use);
      Polygon p = rectangle(xs[static_cast<std::size_t>(c)], ys[static_cast<std::size_t>(r)],
                            xs[static_cast<std::size_t>(c) + 1], ys[static_cast<std::size_t>(r) + 1]);
      char id[32];
      std::snprintf(id, sizeof id, "r%03dc%03d", r, c);
      const double km2 = area_km2(p);
      cells.push_back({id, std::move(p), km2});
      weight[static_cast<Eigen::Index>(idx)] = block_density[static_cast<std::size_t>(br * block_cols + bc)] *
                                               config.population_weight[static_cast<std::size_t>(use)] * km2;
    }
  if (!(weight.sum() > 0)) throw InputError("population weights are all zero");
  s.population = largest_remainder(weight, config.population);

  for (int br = 0; br < block_rows; ++br)
    for (int bc = 0; bc < block_cols; ++bc) {
      const int r0 = br * config.admin_block, c0 = bc * config.admin_block;
      const int r1 = std::min(config.rows, r0 + config.admin_block);
      const int c1 = std::min(config.columns, c0 + config.admin_block);
      Polygon p = rectangle(xs[static_cast<std::size_t>(c0)], ys[static_cast<std::size_t>(r0)],
                            xs[static_cast<std::size_t>(c1)], ys[static_cast<std::size_t>(r1)]);
      double pop = 0.0;
      for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c) pop += s.population[r * config.columns + c];
      char id[32];
      std::snprintf(id, sizeof id, "a%03d_%03d", br, bc);
      const double km2 = area_km2(p);
      s.admin.push_back({id, std::move(p), km2, pop});
    }
  s.grid = GridTessellation(std::move(cells));

  std::vector<CellIndex> workplaces;
  std::vector<double> job_weight;
  for (std::size_t i = 0; i < n; ++i) {
    const LandUse u = s.land_use[i];
    const double w = u == LandUse::Office ? 1.0 : u == LandUse::University ? 0.6 : u == LandUse::Shopping ? 0.5 : 0.0;
    if (w > 0) {
      workplaces.push_back(static_cast<CellIndex>(i));
      job_weight.push_back(w * s.grid[i].surface_km2);
    }
  }
  std::discrete_distribution<std::size_t> pick_work(job_weight.begin(), job_weight.end());
  std::bernoulli_distribution commutes(workplaces.empty() ? 0.0 : config.commuter_fraction);
  const double sig = config.rate_noise_sigma;
  auto add_user = [&](CellIndex home, bool visitor) {
    CellIndex work = home;
    if (!visitor && s.land_use[home] == LandUse::Residential && commutes(rng)) work = workplaces[pick_work(rng)];
    double dep = std::clamp(config.depart_mean_h + config.depart_jitter_h * gauss(rng), std::floor(config.depart_mean_h),
                            config.return_mean_h - 1.0);
    double ret = std::clamp(config.return_mean_h + config.return_jitter_h * gauss(rng), dep + 1.0,
                            config.outing_start_h - 1.0);
    s.home.push_back(home);
    s.work.push_back(work);
    s.depart_s.push_back(static_cast<std::int32_t>(std::lround(dep * 3600)));
    s.return_s.push_back(static_cast<std::int32_t>(std::lround(ret * 3600)));
    s.rate_multiplier.push_back(std::exp(sig * gauss(rng) - 0.5 * sig * sig));
    s.visitor.push_back(visitor);
  };
  for (std::size_t i = 0; i < n; ++i) {
    const auto residents = std::llround(config.market_share * s.population[static_cast<Eigen::Index>(i)]);
    for (long long k = 0; k < residents; ++k) add_user(static_cast<CellIndex>(i), false);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double f = config.visitor_fraction[static_cast<std::size_t>(s.land_use[i])];
    const auto visitors = std::llround(config.market_share * f * s.population[static_cast<Eigen::Index>(i)]);
    for (long long k = 0; k < visitors; ++k) add_user(static_cast<CellIndex>(i), true);
  }
  return s;
}

Simulator::Simulator(const Scenario& scenario, SimulationOptions options)
    : scenario_(&scenario), options_(options), last_cell_(scenario.users(), -1) {
  for (std::size_t i = 0; i < scenario.land_use.size(); ++i)
    if (scenario.land_use[i] == LandUse::Touristic || scenario.land_use[i] == LandUse::Shopping)
      outing_cells_.push_back(static_cast<CellIndex>(i));
  previous_outings_ = outing_plan(-1);
}

std::vector<Simulator::Outing> Simulator::outing_plan(long day_index) const {
  const Scenario& s = *scenario_;
  std::vector<Outing> plan(s.users());
  if (s.config.outing_fraction <= 0 || outing_cells_.empty()) return plan;
  std::mt19937_64 rng(derive_seed(s.seed ^ kOutingStream, static_cast<std::uint64_t>(day_index + 1)));
  std::bernoulli_distribution goes(s.config.outing_fraction);
  std::uniform_int_distribution<std::size_t> where(0, outing_cells_.size() - 1);
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);
  const double back_h = s.config.outing_end_h - 24.0;
  for (std::size_t u = 0; u < plan.size(); ++u) {
    if (s.visitor[u] || !goes(rng)) continue;
    plan[u].cell = static_cast<std::int32_t>(outing_cells_[where(rng)]);
    plan[u].return_s = static_cast<std::int32_t>(std::lround(std::max(0.1, back_h + jitter(rng)) * 3600));
  }
  return plan;
}

DayRecord Simulator::simulate_day() {
  const Scenario& s = *scenario_;
  const CityConfig& cfg = s.config;
  const Day day = next_day();
  const Seconds base = day_start(day);
  const bool workday = s.is_workday(day);
  const double day_factor = workday ? 1.0 : cfg.weekend_multiplier;
  const auto slots = static_cast<Eigen::Index>(kSecondsPerDay / kDefaultSlot);
  const auto cells = static_cast<Eigen::Index>(s.grid.size());
  const std::int32_t outing_start = static_cast<std::int32_t>(std::lround(cfg.outing_start_h * 3600));

  std::vector<Outing> outings = outing_plan(day_index_);
  std::mt19937_64 rng(derive_seed(s.seed ^ kDayStream, static_cast<std::uint64_t>(day_index_)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  DayRecord rec{day, {}, Mat(), Mat()};
  if (options_.track_last_event) rec.last_event_counts = Mat::Zero(cells, slots);
  if (options_.track_truth) rec.true_counts = Mat::Zero(cells, slots);

  // Per-user events are generated in (time, kind) order and then merged by a
  // stable bucket pass on time, which yields (time, device, kind) order.
  EventStream produced;
  produced.reserve(s.users() * 32);
  std::vector<Stop> stops;
  std::vector<NetworkEvent> mine;
  for (std::size_t u = 0; u < s.users(); ++u) {
    stops.clear();
    const CellIndex home = s.home[u];
    if (previous_outings_[u].cell >= 0) {
      stops.push_back({0, static_cast<CellIndex>(previous_outings_[u].cell)});
      stops.push_back({previous_outings_[u].return_s, home});
    } else {
      stops.push_back({0, home});
    }
    if (workday && s.work[u] != home) {
      stops.push_back({s.depart_s[u], s.work[u]});
      stops.push_back({s.return_s[u], home});
    }
    if (outings[u].cell >= 0) stops.push_back({outing_start, static_cast<CellIndex>(outings[u].cell)});

    mine.clear();
    if (day_index_ == 0 && options_.attach_at_start)
      mine.push_back({static_cast<DeviceId>(u), base, stops[0].cell, EventKind::Net});
    const double mult = s.rate_multiplier[u] * day_factor;
    for (std::size_t j = 0; j < stops.size(); ++j) {
      const std::int32_t a = stops[j].start;
      const std::int32_t b = j + 1 < stops.size() ? stops[j + 1].start : static_cast<std::int32_t>(kSecondsPerDay);
      const ActivityProfile& prof = cfg.profiles[static_cast<std::size_t>(s.land_use[stops[j].cell])];
      for (std::int32_t h0 = a / 3600 * 3600; h0 < b; h0 += 3600) {
        const std::int32_t lo = std::max(a, h0), hi = std::min(b, h0 + 3600);
        if (hi <= lo) continue;
        const auto h = static_cast<std::size_t>(h0 / 3600);
        const double rc = prof.call[h] * mult, rs = prof.sms[h] * mult, rn = prof.net[h] * mult;
        const double total = rc + rs + rn;
        if (!(total > 0)) continue;
        std::poisson_distribution<int> count(total * (hi - lo) / 3600.0);
        const int k = count(rng);
        for (int e = 0; e < k; ++e) {
          const auto t = lo + static_cast<std::int32_t>(unit(rng) * (hi - lo));
          const double pick = unit(rng) * total;
          EventKind kind;
          if (pick < rc)
            kind = pick < 0.5 * rc ? EventKind::CallIn : EventKind::CallOut;
          else if (pick < rc + rs)
            kind = pick < rc + 0.5 * rs ? EventKind::SmsIn : EventKind::SmsOut;
          else
            kind = EventKind::Net;
          mine.push_back({static_cast<DeviceId>(u), base + std::min<Seconds>(t, hi - 1), stops[j].cell, kind});
        }
      }
    }
    std::sort(mine.begin(), mine.end(), event_before);

    if (options_.track_last_event) {
      std::size_t p = 0;
      for (Eigen::Index k = 0; k < slots; ++k) {
        const Seconds end = base + (k + 1) * kDefaultSlot;
        while (p < mine.size() && mine[p].time < end) last_cell_[u] = static_cast<std::int32_t>(mine[p++].cell);
        if (last_cell_[u] >= 0) rec.last_event_counts(last_cell_[u], k) += 1.0;
      }
    } else if (!mine.empty()) {
      last_cell_[u] = static_cast<std::int32_t>(mine.back().cell);
    }
    if (options_.track_truth) {
      std::size_t j = 0;
      for (Eigen::Index k = 0; k < slots; ++k) {
        const auto probe = static_cast<std::int32_t>((k + 1) * kDefaultSlot - 1);
        while (j + 1 < stops.size() && stops[j + 1].start <= probe) ++j;
        rec.true_counts(stops[j].cell, k) += 1.0;
      }
    }
    produced.insert(produced.end(), mine.begin(), mine.end());
  }

  std::vector<std::size_t> offset(static_cast<std::size_t>(kSecondsPerDay) + 1, 0);
  for (const auto& e : produced) ++offset[static_cast<std::size_t>(e.time - base) + 1];
  std::partial_sum(offset.begin(), offset.end(), offset.begin());
  rec.events.resize(produced.size());
  for (const auto& e : produced) rec.events[offset[static_cast<std::size_t>(e.time - base)]++] = e;

  previous_outings_ = std::move(outings);
  ++day_index_;
  return rec;
}

EventStream simulate_events(const Scenario& scenario, int days) {
  Simulator sim(scenario);
  EventStream out;
  for (int d = 0; d < days; ++d) {
    auto rec = sim.simulate_day();
    out.insert(out.end(), rec.events.begin(), rec.events.end());
  }
  return out;
}

AttendanceTruth inject_event(EventStream& stream, const Scenario& scenario, const InjectedEvent& event,
                             std::uint64_t seed) {
  if (event.attendees < 0) throw InputError("event '" + event.id + "': attendee count must be non-negative");
  if (event.venue_cells.empty()) throw InputError("event '" + event.id + "': no venue cells");
  for (CellIndex c : event.venue_cells)
    if (c >= scenario.grid.size()) throw InputError("event '" + event.id + "': unknown venue cell");
  if (event.end <= event.kickoff) throw InputError("event '" + event.id + "': end precedes kickoff");

  AttendanceTruth truth{event.id, event.attendees, 0, {}, {}};
  std::vector<std::size_t> residents;
  for (std::size_t u = 0; u < scenario.users(); ++u)
    if (!scenario.visitor[u]) residents.push_back(u);
  const auto wanted = static_cast<std::size_t>(std::llround(event.attendees * scenario.config.market_share));
  if (wanted > residents.size()) throw InputError("event '" + event.id + "': more attendees than subscribers");
  truth.devices = wanted;

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> chosen;
  chosen.reserve(wanted);
  std::sample(residents.begin(), residents.end(), std::back_inserter(chosen), wanted, rng);

  struct Visit {
    Seconds arrive;
    Seconds depart;
  };
  std::vector<std::optional<Visit>> visit(scenario.users());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> seat(0, event.venue_cells.size() - 1);
  EventStream added;
  for (std::size_t u : chosen) {
    const Seconds a = event.kickoff - static_cast<Seconds>(unit(rng) * static_cast<double>(event.arrival_ramp));
    const Seconds d = event.end + static_cast<Seconds>(unit(rng) * static_cast<double>(event.departure_ramp));
    visit[u] = Visit{a, d};
    const CellIndex cell = event.venue_cells[seat(rng)];
    const ActivityProfile& prof = scenario.config.profiles[static_cast<std::size_t>(scenario.land_use[cell])];
    added.push_back({static_cast<DeviceId>(u), a, cell, EventKind::Net});
    for (Seconds h0 = a - ((a % 3600) + 3600) % 3600; h0 < d; h0 += 3600) {
      const Seconds lo = std::max(a, h0), hi = std::min(d, h0 + 3600);
      if (hi <= lo) continue;
      const auto h = static_cast<std::size_t>(second_of_day(h0) / 3600);
      const double m = scenario.rate_multiplier[u] * event.rate_boost;
      const double rc = prof.call[h] * m, rs = prof.sms[h] * m, rn = prof.net[h] * m;
      const double total = rc + rs + rn;
      if (!(total > 0)) continue;
      std::poisson_distribution<int> count(total * static_cast<double>(hi - lo) / 3600.0);
      const int k = count(rng);
      for (int e = 0; e < k; ++e) {
        const Seconds t = lo + static_cast<Seconds>(unit(rng) * static_cast<double>(hi - lo));
        const double pick = unit(rng) * total;
        EventKind kind = pick < 0.5 * rc      ? EventKind::CallIn
                         : pick < rc          ? EventKind::CallOut
                         : pick < rc + 0.5 * rs ? EventKind::SmsIn
                         : pick < rc + rs     ? EventKind::SmsOut
                                              : EventKind::Net;
        added.push_back({static_cast<DeviceId>(u), std::min(t, hi - 1), cell, kind});
      }
    }
  }
  std::sort(added.begin(), added.end(), event_before);
  std::erase_if(stream, [&](const NetworkEvent& e) {
    if (e.device >= visit.size()) return false;
    const auto& v = visit[static_cast<std::size_t>(e.device)];
    return v && e.time >= v->arrive && e.time < v->depart;
  });
  EventStream merged;
  merged.reserve(stream.size() + added.size());
  std::merge(stream.begin(), stream.end(), added.begin(), added.end(), std::back_inserter(merged), event_before);
  stream = std::move(merged);

  const Seconds first = event.kickoff - event.arrival_ramp;
  const Seconds last = event.end + event.departure_ramp;
  for (Seconds t = first - ((first % kDefaultSlot) + kDefaultSlot) % kDefaultSlot; t <= last; t += kDefaultSlot) {
    std::size_t present = 0;
    for (std::size_t u : chosen)
      if (visit[u]->arrive < t + kDefaultSlot && visit[u]->depart >= t + kDefaultSlot) ++present;
    truth.slot_starts.push_back(t);
    truth.present.push_back(static_cast<double>(present) / scenario.config.market_share);
  }
  return truth;
}

PresenceSeries sanitize(const PresenceSeries& presence, double k) {
  if (!(k >= 1)) throw InputError("sanitization threshold must be at least 1");
  PresenceSeries out = presence;
  out.missing = presence.missing || (presence.counts.array() < k);
  return out;
}

Mat true_density(const Mat& counts, const Scenario& scenario) {
  if (counts.rows() != static_cast<Eigen::Index>(scenario.grid.size()))
    throw InputError("occupancy counts do not cover the grid");
  return (scenario.grid.surfaces().cwiseInverse() / scenario.config.market_share).asDiagonal() * counts;
}

std::vector<CharacteristicSignature> reference_signatures(const CityConfig& config) {
  std::vector<CharacteristicSignature> out;
  for (int u = 0; u < kLandUses; ++u) {
    const auto& p = config.profiles[static_cast<std::size_t>(u)];
    Vec v(kHoursPerWeek);
    for (int h = 0; h < kHoursPerWeek; ++h) {
      const double factor = h / 24 >= 5 ? config.weekend_multiplier : 1.0;
      v[h] = factor * (p.call[static_cast<std::size_t>(h % 24)] + p.sms[static_cast<std::size_t>(h % 24)]);
    }
    if (!(v.sum() > 0)) throw InputError("land use '" + std::string(to_string(static_cast<LandUse>(u))) + "' has no call or text activity");
    out.push_back({static_cast<LandUse>(u), v / v.sum()});
  }
  return out;
}

}  // namespace popdense
