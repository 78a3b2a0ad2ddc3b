#pragma once

#include "popdense/dynamic.hpp"
#include "popdense/filters.hpp"
#include "popdense/landuse.hpp"
#include "popdense/regress.hpp"
#include "popdense/synth.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace popdense::io {

namespace fs = std::filesystem;

// ---- CSV --------------------------------------------------------------------------

struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;  // 1-based source line of each row

  std::size_t column(std::string_view name) const;
  // "<source>:<line>: " prefix for error messages.
  std::string where(std::size_t row) const;
};

CsvTable parse_csv(std::string_view text, std::string source);
CsvTable read_csv(const fs::path& path, std::initializer_list<std::string_view> required = {});

std::string csv_field(std::string_view value);

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, std::initializer_list<std::string_view> header);
  explicit CsvWriter(const fs::path& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& fields);
  void close();

 private:
  fs::path path_;
  std::ofstream out_;
  std::size_t width_;
};

double parse_double(std::string_view text, std::string_view what);
std::int64_t parse_int(std::string_view text, std::string_view what);
std::uint64_t parse_uint(std::string_view text, std::string_view what);

// ---- key/value text -----------------------------------------------------------------

/// `key = value` lines; '#' starts a comment; keys may repeat.
class KeyValues {
 public:
  static KeyValues parse(std::string_view text, std::string source);
  static KeyValues read(const fs::path& path);

  bool has(std::string_view key) const;
  std::optional<std::string> get(std::string_view key) const;  // last occurrence
  std::vector<std::string> all(std::string_view key) const;
  std::string require(std::string_view key) const;
  double number(std::string_view key, double fallback) const;
  std::int64_t integer(std::string_view key, std::int64_t fallback) const;
  void set(std::string key, std::string value);
  // Throws InputError naming the first key not in `known`.
  void check_known(std::initializer_list<std::string_view> known) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  const std::string& source() const { return source_; }
  // Canonical text: entries sorted by key, one per line.
  std::string canonical() const;

 private:
  std::string source_;
  std::vector<std::pair<std::string, std::string>> entries_;
};

std::vector<std::string> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

// Accepts "HH:MM", "HH:MM:SS" or plain seconds.
Seconds parse_time_of_day(std::string_view text);

FilterConfig parse_filter_config(const KeyValues& kv);
MultivariateParams read_params(const fs::path& path);
void write_params(const fs::path& path, const MultivariateParams& params);
CityConfig parse_city_config(const KeyValues& kv);

// ---- domain files ---------------------------------------------------------------------

GridTessellation read_grid(const fs::path& path);
void write_grid(const fs::path& path, const GridTessellation& grid);

std::vector<AdminArea> read_admin(const fs::path& path);
void write_admin(const fs::path& path, std::span<const AdminArea> areas);

PopulationDensityMap read_density(const fs::path& path, const GridTessellation& grid);
void write_density(const fs::path& path, const GridTessellation& grid, const PopulationDensityMap& map);

EventStream read_events(const fs::path& path, const GridTessellation& grid);
void write_events(const fs::path& path, std::span<const NetworkEvent> events, const GridTessellation& grid);
// Header and rows for streamed output.
void write_events_header(std::ostream& out);
void write_event_rows(std::ostream& out, std::span<const NetworkEvent> events, const GridTessellation& grid);

// Absent (cell, slot) rows are missing. The axis spans the earliest to the
// latest slot present in the file unless one is given.
PresenceSeries read_presence(const fs::path& path, const GridTessellation& grid, Seconds slot = kDefaultSlot,
                             const std::optional<SlotAxis>& axis = std::nullopt);
void write_presence(const fs::path& path, const PresenceSeries& presence, const GridTessellation& grid);

// Slot axis sidecar: one `slot_start_s` column.
fs::path slots_path(const fs::path& presence_path);
SlotAxis read_slots(const fs::path& path, Seconds slot = kDefaultSlot);
void write_slots(const fs::path& path, const SlotAxis& axis);
// Contiguous axis from the earliest to the latest slot_start_s in a file.
SlotAxis span_axis(const fs::path& path, Seconds slot = kDefaultSlot);

// Absent rows are zero counts; only non-zero entries are written.
VolumeSeries read_volumes(const fs::path& path, const GridTessellation& grid, const SlotAxis& axis);
void write_volumes(const fs::path& path, const VolumeSeries& volumes, const GridTessellation& grid);

std::vector<LandUse> read_labels(const fs::path& path, const GridTessellation& grid);
void write_labels(const fs::path& path, const GridTessellation& grid, std::span<const LandUse> labels);

void write_signatures(const fs::path& path, const GridTessellation& grid, std::span<const WeeklySignature> sigs);
std::vector<CharacteristicSignature> read_reference_signatures(const fs::path& path);
void write_reference_signatures(const fs::path& path, std::span<const CharacteristicSignature> sigs);

void write_fit(const fs::path& path, const PowerLawFit& fit, const FitMetrics& metrics);

struct FitRecord {
  PowerLawFit fit;
  FitMetrics metrics;
};
FitRecord read_fit(const fs::path& path);

std::vector<CellIndex> read_cell_list(const fs::path& path, const GridTessellation& grid);
void write_cell_list(const fs::path& path, const GridTessellation& grid, std::span<const CellIndex> cells);

void write_dynamic(const fs::path& path, const GridTessellation& grid, const DynamicEstimate& estimate,
                   const ZScores& z);

// Event spec rows: event_id,kickoff_s,end_s,venue where venue is a WKT
// polygon or a ';'-separated list of cell ids. Each event lists the others'
// days as excluded baseline days.
std::vector<EventSpec> read_event_specs(const fs::path& path, const GridTessellation& grid);
void write_event_specs(const fs::path& path, std::span<const EventSpec> events, const GridTessellation& grid);

void write_attendance(const fs::path& path, std::span<const AttendanceEstimate> estimates);
struct AttendanceRow {
  std::string event_id;
  Seconds t_peak = 0;
  double sigma_norm = 0.0;
  double sigma_match = 0.0;
  double lambda_tilde = 0.0;
  double gamma_hat = 0.0;
};
std::vector<AttendanceRow> read_attendance(const fs::path& path);

// event_id,<value column>
std::vector<std::pair<std::string, double>> read_event_values(const fs::path& path, std::string_view column);
void write_event_values(const fs::path& path, std::string_view column,
                        std::span<const std::pair<std::string, double>> values);

// ---- provenance -----------------------------------------------------------------------

std::uint64_t fnv1a64(std::string_view text);
std::string hex64(std::uint64_t value);

/// `<file>.meta` next to an output: command, config hash and seed.
void write_sidecar(const fs::path& output, std::string_view command, std::uint64_t config_hash, std::uint64_t seed);

}  // namespace popdense::io
