#pragma once

#include "popdense/landuse.hpp"
#include "popdense/metadata.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace popdense {

/// Rates per user-hour, indexed by hour of day.
struct ActivityProfile {
  std::array<double, 24> call{};
  std::array<double, 24> sms{};
  std::array<double, 24> net{};
};

std::array<ActivityProfile, kLandUses> default_profiles();

struct CityConfig {
  int columns = 20;
  int rows = 25;
  double min_cell_m = 255.0;
  double max_cell_m = 2000.0;
  int admin_block = 2;  // admin areas are blocks of admin_block x admin_block cells
  double population = 400000.0;
  double population_sigma = 0.8;
  double market_share = 0.35;
  std::vector<LandUse> zone_map;  // row-major per cell; empty selects the built-in template
  std::array<double, kLandUses> population_weight{1.0, 0.25, 0.5, 0.3, 0.35};
  std::array<ActivityProfile, kLandUses> profiles = default_profiles();
  double weekend_multiplier = 1.0;  // applied on weekends and holidays
  double rate_noise_sigma = 0.3;    // per-user log-normal rate multiplier
  double commuter_fraction = 0.5;
  double depart_mean_h = 8.75;
  double depart_jitter_h = 0.25;
  double return_mean_h = 18.0;
  double return_jitter_h = 0.5;
  // Non-resident subscribers per resident subscriber, by land use (hotel guests etc.).
  std::array<double, kLandUses> visitor_fraction{0.0, 0.0, 0.5, 0.0, 0.0};
  // Share of residents spending each evening at a touristic or shopping cell.
  double outing_fraction = 0.0;
  double outing_start_h = 21.0;
  double outing_end_h = 25.5;  // hours after the outing day's midnight
  std::vector<Day> holidays;
  Day start = Day{std::chrono::year{2015} / 3 / 2};

  void validate() const;
};

/// Synthetic city with its subscriber population. Users are indexed by
/// device id.
struct Scenario {
  CityConfig config;
  std::uint64_t seed = 0;
  GridTessellation grid;
  std::vector<AdminArea> admin;
  Vec population;  // residents per cell
  std::vector<LandUse> land_use;
  std::vector<CellIndex> home;
  std::vector<CellIndex> work;  // equals home for non-commuters
  std::vector<std::int32_t> depart_s;
  std::vector<std::int32_t> return_s;
  std::vector<double> rate_multiplier;
  std::vector<bool> visitor;

  std::size_t users() const { return home.size(); }
  bool is_workday(Day d) const;
};

Scenario generate_city(const CityConfig& config, std::uint64_t seed);

struct DayRecord {
  Day day;
  EventStream events;
  Mat last_event_counts;  // cells x slots, simulator-side last-event bookkeeping
  Mat true_counts;        // cells x slots, true device location at each slot end
};

struct SimulationOptions {
  bool track_last_event = false;
  bool track_truth = false;
  // Every device emits a network event at 00:00:00 of the first day so it is
  // localized from the first slot on.
  bool attach_at_start = true;
};

/// Day-by-day event generator. Days are produced in order starting at the
/// scenario start date; each day's randomness depends only on (seed, day).
class Simulator {
 public:
  explicit Simulator(const Scenario& scenario, SimulationOptions options = {});

  DayRecord simulate_day();
  Day next_day() const { return scenario_->config.start + std::chrono::days{day_index_}; }

 private:
  struct Outing {
    std::int32_t cell = -1;
    std::int32_t return_s = 0;  // seconds after midnight of the following day
  };
  std::vector<Outing> outing_plan(long day_index) const;

  const Scenario* scenario_;
  SimulationOptions options_;
  long day_index_ = 0;
  std::vector<std::int32_t> last_cell_;
  std::vector<Outing> previous_outings_;
  std::vector<CellIndex> outing_cells_;
};

EventStream simulate_events(const Scenario& scenario, int days);

struct InjectedEvent {
  std::string id;
  std::vector<CellIndex> venue_cells;
  double attendees = 0.0;
  Seconds kickoff = 0;
  Seconds end = 0;
  Seconds arrival_ramp = 5400;
  Seconds departure_ramp = 1800;
  double rate_boost = 2.0;  // venue activity relative to the venue land-use profile
};

struct AttendanceTruth {
  std::string id;
  double attendees = 0.0;
  std::size_t devices = 0;
  std::vector<Seconds> slot_starts;
  std::vector<double> present;  // attendees on site at each slot end (devices / M)
};

/// Relocates round(attendees * M) resident subscribers to the venue between
/// their arrival and departure. `stream` must be sorted and stays sorted.
AttendanceTruth inject_event(EventStream& stream, const Scenario& scenario, const InjectedEvent& event,
                             std::uint64_t seed);

// Weekly call+text profile of each land use, Monday first, normalized to sum 1.
std::vector<CharacteristicSignature> reference_signatures(const CityConfig& config);

/// Entries with count < k become missing.
PresenceSeries sanitize(const PresenceSeries& presence, double k = 1.0);

// Occupancy counts -> inhabitants per km^2.
Mat true_density(const Mat& counts, const Scenario& scenario);

}  // namespace popdense
