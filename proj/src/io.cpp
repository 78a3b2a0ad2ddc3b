#include "popdense/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace popdense::io {

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open input file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string cell_name(const GridTessellation& grid, CellIndex i) { return grid[i].id; }

CellIndex cell_of(const GridTessellation& grid, const CsvTable& t, std::size_t r, std::size_t col) {
  const auto& id = t.rows[r][col];
  if (auto c = grid.find(id)) return *c;
  throw InputError(t.where(r) + "unknown cell id '" + id + "'");
}

std::string land_use_letters() { return "rotus"; }

}  // namespace

// ---- CSV --------------------------------------------------------------------------

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw InputError(source + ": missing column '" + std::string(name) + "'");
}

std::string CsvTable::where(std::size_t row) const { return source + ":" + std::to_string(lines[row]) + ": "; }

CsvTable parse_csv(std::string_view text, std::string source) {
  CsvTable t;
  t.source = std::move(source);
  std::vector<std::string> record;
  std::string field;
  bool quoted = false, field_started = false;
  std::size_t line = 1, record_line = 1;
  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
    const bool blank = record.size() == 1 && record[0].empty();
    if (!blank) {
      if (t.header.empty()) {
        t.header = std::move(record);
      } else {
        if (record.size() != t.header.size())
          throw InputError(t.source + ":" + std::to_string(record_line) + ": expected " +
                           std::to_string(t.header.size()) + " fields, found " + std::to_string(record.size()));
        t.rows.push_back(std::move(record));
        t.lines.push_back(record_line);
      }
    }
    record.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = field_started = true;
    } else if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (c == '\n') {
      if (!field.empty() && field.back() == '\r') field.pop_back();
      end_record();
      record_line = ++line;
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw InputError(t.source + ":" + std::to_string(record_line) + ": unterminated quoted field");
  if (!field.empty() || !record.empty()) end_record();
  if (t.header.empty()) throw InputError(t.source + ": empty file (no header row)");
  return t;
}

CsvTable read_csv(const fs::path& path, std::initializer_list<std::string_view> required) {
  CsvTable t = parse_csv(slurp(path), path.string());
  for (auto name : required) t.column(name);
  return t;
}

std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

CsvWriter::CsvWriter(const fs::path& path, std::initializer_list<std::string_view> header)
    : CsvWriter(path, std::vector<std::string>(header.begin(), header.end())) {}

CsvWriter::CsvWriter(const fs::path& path, const std::vector<std::string>& header)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc), width_(header.size()) {
  if (!out_) throw InputError("cannot write '" + path.string() + "'");
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != width_) throw std::logic_error("csv row width mismatch for " + path_.string());
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << csv_field(fields[i]);
  }
  out_ << '\n';
}

void CsvWriter::close() {
  out_.close();
  if (!out_) throw InputError("failed writing '" + path_.string() + "'");
}

double parse_double(std::string_view text, std::string_view what) {
  text = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw InputError("invalid number '" + std::string(text) + "' for " + std::string(what));
  return v;
}

std::int64_t parse_int(std::string_view text, std::string_view what) {
  text = trim(text);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw InputError("invalid integer '" + std::string(text) + "' for " + std::string(what));
  return v;
}

std::uint64_t parse_uint(std::string_view text, std::string_view what) {
  text = trim(text);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw InputError("invalid non-negative integer '" + std::string(text) + "' for " + std::string(what));
  return v;
}

// ---- key/value --------------------------------------------------------------------

std::string_view trim(std::string_view text) {
  const auto b = text.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = text.find_last_not_of(" \t\r\n");
  return text.substr(b, e - b + 1);
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  if (trim(text).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.emplace_back(trim(text.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

KeyValues KeyValues::parse(std::string_view text, std::string source) {
  KeyValues kv;
  kv.source_ = std::move(source);
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    std::string_view line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos || trim(line.substr(0, eq)).empty())
        throw InputError(kv.source_ + ":" + std::to_string(line_no) + ": expected 'key = value'");
      kv.entries_.emplace_back(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return kv;
}

KeyValues KeyValues::read(const fs::path& path) { return parse(slurp(path), path.string()); }

bool KeyValues::has(std::string_view key) const { return get(key).has_value(); }

std::optional<std::string> KeyValues::get(std::string_view key) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it)
    if (it->first == key) return it->second;
  return std::nullopt;
}

std::vector<std::string> KeyValues::all(std::string_view key) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_)
    if (k == key) out.push_back(v);
  return out;
}

std::string KeyValues::require(std::string_view key) const {
  if (auto v = get(key)) return *v;
  throw InputError(source_ + ": missing required key '" + std::string(key) + "'");
}

double KeyValues::number(std::string_view key, double fallback) const {
  auto v = get(key);
  return v ? parse_double(*v, source_ + " key '" + std::string(key) + "'") : fallback;
}

std::int64_t KeyValues::integer(std::string_view key, std::int64_t fallback) const {
  auto v = get(key);
  return v ? parse_int(*v, source_ + " key '" + std::string(key) + "'") : fallback;
}

void KeyValues::set(std::string key, std::string value) {
  std::erase_if(entries_, [&](const auto& e) { return e.first == key; });
  entries_.emplace_back(std::move(key), std::move(value));
}

void KeyValues::check_known(std::initializer_list<std::string_view> known) const {
  for (const auto& [k, v] : entries_) {
    const auto dot = k.find('.');
    const std::string_view stem = dot == std::string::npos ? std::string_view(k) : std::string_view(k).substr(0, dot + 1);
    if (std::find(known.begin(), known.end(), stem) == known.end())
      throw InputError(source_ + ": unknown key '" + k + "'");
  }
}

std::string KeyValues::canonical() const {
  auto sorted = entries_;
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::string out;
  for (const auto& [k, v] : sorted) out += k + "=" + v + "\n";
  return out;
}

Seconds parse_time_of_day(std::string_view text) {
  text = trim(text);
  if (text.find(':') == std::string_view::npos) return parse_int(text, "time of day");
  auto parts = split(text, ':');
  if (parts.size() < 2 || parts.size() > 3) throw InputError("invalid time of day '" + std::string(text) + "'");
  Seconds h = parse_int(parts[0], "hour"), m = parse_int(parts[1], "minute");
  Seconds s = parts.size() == 3 ? parse_int(parts[2], "second") : 0;
  if (h < 0 || h > 24 || m < 0 || m > 59 || s < 0 || s > 59 || (h == 24 && (m || s)))
    throw InputError("invalid time of day '" + std::string(text) + "'");
  return h * 3600 + m * 60 + s;
}

FilterConfig parse_filter_config(const KeyValues& kv) {
  FilterConfig c;
  if (auto v = kv.get("window_start")) c.window_start = parse_time_of_day(*v);
  if (auto v = kv.get("window_end")) c.window_end = parse_time_of_day(*v);
  if (auto v = kv.get("excluded_weekdays")) {
    c.excluded_weekdays.clear();
    for (const auto& w : split(*v, ',')) c.excluded_weekdays.push_back(parse_weekday(w));
  }
  if (auto v = kv.get("holidays"))
    for (const auto& d : split(*v, ',')) c.holidays.push_back(parse_iso_date(d));
  c.missing_threshold = kv.number("missing_threshold", c.missing_threshold);
  c.validate();
  return c;
}

MultivariateParams read_params(const fs::path& path) {
  const KeyValues kv = KeyValues::read(path);
  kv.check_known({"a_alpha", "b_alpha", "a_beta", "b_beta", "kind"});
  MultivariateParams p;
  p.a_alpha = parse_double(kv.require("a_alpha"), "a_alpha");
  p.b_alpha = parse_double(kv.require("b_alpha"), "b_alpha");
  p.a_beta = parse_double(kv.require("a_beta"), "a_beta");
  p.b_beta = parse_double(kv.require("b_beta"), "b_beta");
  p.kind = parse_activity_kind(kv.get("kind").value_or("call"));
  for (double v : {p.a_alpha, p.b_alpha, p.a_beta, p.b_beta})
    if (!std::isfinite(v)) throw InputError(path.string() + ": parameters must be finite");
  return p;
}

void write_params(const fs::path& path, const MultivariateParams& p) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << "a_alpha = " << format_number(p.a_alpha) << '\n'
      << "b_alpha = " << format_number(p.b_alpha) << '\n'
      << "a_beta = " << format_number(p.a_beta) << '\n'
      << "b_beta = " << format_number(p.b_beta) << '\n'
      << "kind = " << to_string(p.kind) << '\n';
}

CityConfig parse_city_config(const KeyValues& kv) {
  CityConfig c;
  c.columns = static_cast<int>(kv.integer("columns", c.columns));
  c.rows = static_cast<int>(kv.integer("rows", c.rows));
  c.min_cell_m = kv.number("min_cell_m", c.min_cell_m);
  c.max_cell_m = kv.number("max_cell_m", c.max_cell_m);
  c.admin_block = static_cast<int>(kv.integer("admin_block", c.admin_block));
  c.population = kv.number("population", c.population);
  c.population_sigma = kv.number("population_sigma", c.population_sigma);
  c.market_share = kv.number("market_share", c.market_share);
  c.weekend_multiplier = kv.number("weekend_multiplier", c.weekend_multiplier);
  c.rate_noise_sigma = kv.number("rate_noise_sigma", c.rate_noise_sigma);
  c.commuter_fraction = kv.number("commuter_fraction", c.commuter_fraction);
  c.depart_mean_h = kv.number("depart_mean_h", c.depart_mean_h);
  c.depart_jitter_h = kv.number("depart_jitter_h", c.depart_jitter_h);
  c.return_mean_h = kv.number("return_mean_h", c.return_mean_h);
  c.return_jitter_h = kv.number("return_jitter_h", c.return_jitter_h);
  c.outing_fraction = kv.number("outing_fraction", c.outing_fraction);
  c.outing_start_h = kv.number("outing_start_h", c.outing_start_h);
  c.outing_end_h = kv.number("outing_end_h", c.outing_end_h);
  if (auto v = kv.get("start_date")) c.start = parse_iso_date(*v);
  if (auto v = kv.get("holidays"))
    for (const auto& d : split(*v, ',')) c.holidays.push_back(parse_iso_date(d));
  for (int u = 0; u < kLandUses; ++u) {
    const std::string name(to_string(static_cast<LandUse>(u)));
    const auto idx = static_cast<std::size_t>(u);
    c.population_weight[idx] = kv.number("population_weight." + name, c.population_weight[idx]);
    c.visitor_fraction[idx] = kv.number("visitor_fraction." + name, c.visitor_fraction[idx]);
    auto profile = [&](const std::string& key, std::array<double, 24>& target) {
      auto v = kv.get(key);
      if (!v) return;
      auto parts = split(*v, ',');
      if (parts.size() != 24) throw InputError(kv.source() + ": '" + key + "' needs 24 hourly rates");
      for (std::size_t h = 0; h < 24; ++h) target[h] = parse_double(parts[h], key);
    };
    profile("call." + name, c.profiles[idx].call);
    profile("sms." + name, c.profiles[idx].sms);
    profile("net." + name, c.profiles[idx].net);
  }
  // One zone_row per grid row, one letter per cell: r o t u s.
  const auto zone_rows = kv.all("zone_row");
  if (!zone_rows.empty()) {
    if (static_cast<int>(zone_rows.size()) != c.rows)
      throw InputError(kv.source() + ": expected " + std::to_string(c.rows) + " zone_row entries");
    const std::string letters = land_use_letters();
    for (const auto& row : zone_rows) {
      if (static_cast<int>(row.size()) != c.columns)
        throw InputError(kv.source() + ": zone_row '" + row + "' must have " + std::to_string(c.columns) + " letters");
      for (char ch : row) {
        const auto pos = letters.find(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        if (pos == std::string::npos) throw InputError(kv.source() + ": unknown zone letter '" + std::string(1, ch) + "'");
        c.zone_map.push_back(static_cast<LandUse>(pos));
      }
    }
  }
  c.validate();
  return c;
}

// ---- domain files -------------------------------------------------------------------

GridTessellation read_grid(const fs::path& path) {
  const CsvTable t = read_csv(path, {"cell_id", "wkt_polygon", "surface_km2"});
  const auto ci = t.column("cell_id"), cw = t.column("wkt_polygon"), cs = t.column("surface_km2");
  std::vector<Cell> cells;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    try {
      cells.push_back({t.rows[r][ci], parse_wkt_polygon(t.rows[r][cw]), parse_double(t.rows[r][cs], "surface_km2")});
    } catch (const InputError& e) {
      throw InputError(t.where(r) + e.what());
    }
  }
  GridTessellation grid(std::move(cells));
  require_valid(grid);
  return grid;
}

void write_grid(const fs::path& path, const GridTessellation& grid) {
  CsvWriter w(path, {"cell_id", "wkt_polygon", "surface_km2"});
  for (const auto& c : grid.cells()) w.row({c.id, to_wkt(c.polygon), format_number(c.surface_km2)});
  w.close();
}

std::vector<AdminArea> read_admin(const fs::path& path) {
  const CsvTable t = read_csv(path, {"area_id", "wkt_polygon", "surface_km2", "population"});
  const auto ci = t.column("area_id"), cw = t.column("wkt_polygon"), cs = t.column("surface_km2"),
             cp = t.column("population");
  std::vector<AdminArea> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    try {
      out.push_back({t.rows[r][ci], parse_wkt_polygon(t.rows[r][cw]), parse_double(t.rows[r][cs], "surface_km2"),
                     parse_double(t.rows[r][cp], "population")});
    } catch (const InputError& e) {
      throw InputError(t.where(r) + e.what());
    }
  }
  require_valid(out);
  return out;
}

void write_admin(const fs::path& path, std::span<const AdminArea> areas) {
  CsvWriter w(path, {"area_id", "wkt_polygon", "surface_km2", "population"});
  for (const auto& a : areas)
    w.row({a.id, to_wkt(a.polygon), format_number(a.surface_km2), format_number(a.population)});
  w.close();
}

PopulationDensityMap read_density(const fs::path& path, const GridTessellation& grid) {
  const CsvTable t = read_csv(path, {"cell_id", "density"});
  const auto ci = t.column("cell_id"), cd = t.column("density");
  PopulationDensityMap map{Vec::Constant(static_cast<Eigen::Index>(grid.size()), std::nan("")), std::nullopt};
  std::vector<bool> seen(grid.size(), false);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const CellIndex c = cell_of(grid, t, r, ci);
    if (seen[c]) throw InputError(t.where(r) + "duplicate cell id '" + t.rows[r][ci] + "'");
    seen[c] = true;
    map.values[c] = parse_double(t.rows[r][cd], "density");
  }
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (!seen[i]) throw InputError(path.string() + ": no density for cell '" + grid[i].id + "'");
  return map;
}

void write_density(const fs::path& path, const GridTessellation& grid, const PopulationDensityMap& map) {
  CsvWriter w(path, {"cell_id", "density"});
  for (std::size_t i = 0; i < grid.size(); ++i)
    w.row({grid[i].id, format_number(map.values[static_cast<Eigen::Index>(i)])});
  w.close();
}

EventStream read_events(const fs::path& path, const GridTessellation& grid) {
  const CsvTable t = read_csv(path, {"device_id", "timestamp_s", "cell_id", "kind"});
  const auto cd = t.column("device_id"), ct = t.column("timestamp_s"), cc = t.column("cell_id"),
             ck = t.column("kind");
  EventStream out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    try {
      out.push_back({parse_uint(t.rows[r][cd], "device_id"), parse_int(t.rows[r][ct], "timestamp_s"),
                     cell_of(grid, t, r, cc), parse_event_kind(t.rows[r][ck])});
    } catch (const InputError& e) {
      const std::string msg = e.what();
      throw InputError(msg.rfind(t.source, 0) == 0 ? msg : t.where(r) + msg);
    }
  }
  return out;
}

void write_events_header(std::ostream& out) { out << "device_id,timestamp_s,cell_id,kind\n"; }

void write_event_rows(std::ostream& out, std::span<const NetworkEvent> events, const GridTessellation& grid) {
  for (const auto& e : events)
    out << e.device << ',' << e.time << ',' << csv_field(grid[e.cell].id) << ',' << to_string(e.kind) << '\n';
}

void write_events(const fs::path& path, std::span<const NetworkEvent> events, const GridTessellation& grid) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  write_events_header(out);
  write_event_rows(out, events, grid);
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

fs::path slots_path(const fs::path& presence_path) {
  return presence_path.parent_path() / (presence_path.stem().string() + "_slots.csv");
}

SlotAxis read_slots(const fs::path& path, Seconds slot) {
  const CsvTable t = read_csv(path, {"slot_start_s"});
  SlotAxis axis{slot, {}};
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const Seconds s = parse_int(t.rows[r][t.column("slot_start_s")], "slot_start_s");
    if (!axis.starts.empty() && s <= axis.starts.back()) throw InputError(t.where(r) + "slot starts must increase");
    if (s % slot) throw InputError(t.where(r) + "slot start not aligned to " + std::to_string(slot) + " s");
    axis.starts.push_back(s);
  }
  return axis;
}

void write_slots(const fs::path& path, const SlotAxis& axis) {
  CsvWriter w(path, {"slot_start_s"});
  for (Seconds s : axis.starts) w.row({std::to_string(s)});
  w.close();
}

SlotAxis span_axis(const fs::path& path, Seconds slot) {
  const CsvTable t = read_csv(path, {"slot_start_s"});
  if (t.rows.empty()) return SlotAxis{slot, {}};
  Seconds lo = std::numeric_limits<Seconds>::max(), hi = std::numeric_limits<Seconds>::min();
  for (const auto& row : t.rows) {
    const Seconds s = parse_int(row[t.column("slot_start_s")], "slot_start_s");
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  if ((hi - lo) % slot) throw InputError(path.string() + ": slot starts are not aligned to " + std::to_string(slot) + " s");
  return SlotAxis::contiguous(lo, static_cast<std::size_t>((hi - lo) / slot + 1), slot);
}

PresenceSeries read_presence(const fs::path& path, const GridTessellation& grid, Seconds slot,
                             const std::optional<SlotAxis>& axis) {
  const CsvTable t = read_csv(path, {"cell_id", "slot_start_s", "count"});
  const auto cc = t.column("cell_id"), cs = t.column("slot_start_s"), cn = t.column("count");
  std::vector<std::tuple<CellIndex, Seconds, double>> rows;
  rows.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double n = parse_double(t.rows[r][cn], "count");
    if (!(n >= 0)) throw InputError(t.where(r) + "negative presence count");
    rows.emplace_back(cell_of(grid, t, r, cc), parse_int(t.rows[r][cs], "slot_start_s"), n);
  }
  SlotAxis ax;
  if (axis) {
    ax = *axis;
  } else if (rows.empty()) {
    ax.slot = slot;
  } else {
    Seconds lo = std::get<1>(rows[0]), hi = lo;
    for (const auto& row : rows) {
      lo = std::min(lo, std::get<1>(row));
      hi = std::max(hi, std::get<1>(row));
    }
    if ((hi - lo) % slot) throw InputError(path.string() + ": slot starts are not aligned to " + std::to_string(slot) + " s");
    ax = SlotAxis::contiguous(lo, static_cast<std::size_t>((hi - lo) / slot + 1), slot);
  }
  const auto n = static_cast<Eigen::Index>(grid.size());
  PresenceSeries p{ax, Mat::Zero(n, ax.size()), Mat::Zero(n, ax.size()), MaskMat::Constant(n, ax.size(), true)};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& [c, s, v] = rows[r];
    auto k = ax.find(s);
    if (!k) throw InputError(t.where(r) + "slot start " + std::to_string(s) + " is not on the slot axis");
    if (!p.missing(c, *k)) throw InputError(t.where(r) + "duplicate (cell, slot) row");
    p.counts(c, *k) = v;
    p.missing(c, *k) = false;
  }
  p.densities = presence_density(p.counts, grid);
  return p;
}

void write_presence(const fs::path& path, const PresenceSeries& presence, const GridTessellation& grid) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << "cell_id,slot_start_s,count\n";
  for (Eigen::Index k = 0; k < presence.axis.size(); ++k)
    for (Eigen::Index i = 0; i < presence.cells(); ++i)
      if (!presence.missing(i, k))
        out << csv_field(cell_name(grid, static_cast<CellIndex>(i))) << ','
            << presence.axis.starts[static_cast<std::size_t>(k)] << ',' << format_number(presence.counts(i, k)) << '\n';
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

VolumeSeries read_volumes(const fs::path& path, const GridTessellation& grid, const SlotAxis& axis) {
  const CsvTable t = read_csv(path, {"cell_id", "slot_start_s", "kind", "count"});
  const auto cc = t.column("cell_id"), cs = t.column("slot_start_s"), ck = t.column("kind"), cn = t.column("count");
  VolumeSeries v;
  v.axis = axis;
  for (auto& m : v.counts) m = Mat::Zero(static_cast<Eigen::Index>(grid.size()), axis.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const CellIndex c = cell_of(grid, t, r, cc);
    const Seconds s = parse_int(t.rows[r][cs], "slot_start_s");
    auto k = axis.find(s);
    if (!k) throw InputError(t.where(r) + "slot start " + std::to_string(s) + " is not on the presence slot axis");
    const double n = parse_double(t.rows[r][cn], "count");
    if (!(n >= 0)) throw InputError(t.where(r) + "negative volume count");
    v[parse_event_kind(t.rows[r][ck])](c, *k) += n;
  }
  return v;
}

void write_volumes(const fs::path& path, const VolumeSeries& volumes, const GridTessellation& grid) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << "cell_id,slot_start_s,kind,count\n";
  for (Eigen::Index k = 0; k < volumes.axis.size(); ++k)
    for (Eigen::Index i = 0; i < volumes.cells(); ++i)
      for (int kind = 0; kind < kEventKinds; ++kind) {
        const double n = volumes.counts[static_cast<std::size_t>(kind)](i, k);
        if (n != 0)
          out << csv_field(cell_name(grid, static_cast<CellIndex>(i))) << ','
              << volumes.axis.starts[static_cast<std::size_t>(k)] << ',' << to_string(static_cast<EventKind>(kind))
              << ',' << format_number(n) << '\n';
      }
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

std::vector<LandUse> read_labels(const fs::path& path, const GridTessellation& grid) {
  const CsvTable t = read_csv(path, {"cell_id", "land_use"});
  const auto cc = t.column("cell_id"), cl = t.column("land_use");
  std::vector<std::optional<LandUse>> labels(grid.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const CellIndex c = cell_of(grid, t, r, cc);
    if (labels[c]) throw InputError(t.where(r) + "cell '" + t.rows[r][cc] + "' labeled twice");
    try {
      labels[c] = parse_land_use(t.rows[r][cl]);
    } catch (const InputError& e) {
      throw InputError(t.where(r) + e.what());
    }
  }
  std::vector<LandUse> out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!labels[i]) throw InputError(path.string() + ": cell '" + grid[i].id + "' has no land-use label");
    out.push_back(*labels[i]);
  }
  return out;
}

void write_labels(const fs::path& path, const GridTessellation& grid, std::span<const LandUse> labels) {
  CsvWriter w(path, {"cell_id", "land_use"});
  for (std::size_t i = 0; i < grid.size(); ++i) w.row({grid[i].id, std::string(to_string(labels[i]))});
  w.close();
}

namespace {
std::vector<std::string> hour_header(std::string first) {
  std::vector<std::string> h{std::move(first)};
  for (int i = 0; i < kHoursPerWeek; ++i) h.push_back("h" + std::to_string(i));
  return h;
}
}  // namespace

void write_signatures(const fs::path& path, const GridTessellation& grid, std::span<const WeeklySignature> sigs) {
  CsvWriter w(path, hour_header("cell_id"));
  for (const auto& s : sigs) {
    std::vector<std::string> row{grid[s.cell].id};
    for (Eigen::Index h = 0; h < s.values.size(); ++h) row.push_back(format_number(s.values[h]));
    w.row(row);
  }
  w.close();
}

std::vector<CharacteristicSignature> read_reference_signatures(const fs::path& path) {
  const CsvTable t = read_csv(path, {"land_use"});
  if (t.header.size() != static_cast<std::size_t>(kHoursPerWeek) + 1)
    throw InputError(path.string() + ": expected land_use plus 168 hourly columns");
  std::vector<CharacteristicSignature> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    CharacteristicSignature c{parse_land_use(t.rows[r][0]), Vec(kHoursPerWeek)};
    for (int h = 0; h < kHoursPerWeek; ++h) c.values[h] = parse_double(t.rows[r][static_cast<std::size_t>(h) + 1], "signature value");
    out.push_back(std::move(c));
  }
  return out;
}

void write_reference_signatures(const fs::path& path, std::span<const CharacteristicSignature> sigs) {
  CsvWriter w(path, hour_header("land_use"));
  for (const auto& s : sigs) {
    std::vector<std::string> row{std::string(to_string(s.use))};
    for (Eigen::Index h = 0; h < s.values.size(); ++h) row.push_back(format_number(s.values[h]));
    w.row(row);
  }
  w.close();
}

void write_fit(const fs::path& path, const PowerLawFit& fit, const FitMetrics& m) {
  CsvWriter w(path, {"alpha", "alpha_lo", "alpha_hi", "beta", "beta_lo", "beta_hi", "r2", "nrmse1", "nrmse2",
                     "n_inliers", "n_samples", "seed"});
  w.row({format_number(fit.alpha), format_number(fit.alpha_ci.lo), format_number(fit.alpha_ci.hi),
         format_number(fit.beta), format_number(fit.beta_ci.lo), format_number(fit.beta_ci.hi), format_number(m.r2),
         format_number(m.nrmse1), format_number(m.nrmse2), std::to_string(fit.n_inliers()),
         std::to_string(fit.n_samples()), std::to_string(fit.seed)});
  w.close();
}

FitRecord read_fit(const fs::path& path) {
  const CsvTable t = read_csv(path, {"alpha", "alpha_lo", "alpha_hi", "beta", "beta_lo", "beta_hi", "r2", "nrmse1",
                                     "nrmse2", "n_inliers", "n_samples", "seed"});
  if (t.rows.size() != 1) throw InputError(path.string() + ": expected exactly one fit row");
  auto num = [&](std::string_view c) { return parse_double(t.rows[0][t.column(c)], c); };
  FitRecord rec;
  rec.fit.alpha = num("alpha");
  rec.fit.alpha_ci = {num("alpha_lo"), num("alpha_hi")};
  rec.fit.beta = num("beta");
  rec.fit.beta_ci = {num("beta_lo"), num("beta_hi")};
  rec.fit.seed = parse_uint(t.rows[0][t.column("seed")], "seed");
  rec.metrics.r2 = num("r2");
  rec.metrics.nrmse1 = num("nrmse1");
  rec.metrics.nrmse2 = num("nrmse2");
  rec.metrics.n = static_cast<Eigen::Index>(num("n_inliers"));
  return rec;
}

std::vector<CellIndex> read_cell_list(const fs::path& path, const GridTessellation& grid) {
  const CsvTable t = read_csv(path, {"cell_id"});
  std::vector<CellIndex> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) out.push_back(cell_of(grid, t, r, t.column("cell_id")));
  return out;
}

void write_cell_list(const fs::path& path, const GridTessellation& grid, std::span<const CellIndex> cells) {
  CsvWriter w(path, {"cell_id"});
  for (CellIndex c : cells) w.row({grid[c].id});
  w.close();
}

void write_dynamic(const fs::path& path, const GridTessellation& grid, const DynamicEstimate& est, const ZScores& z) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << "cell_id,slot_start_s,rho_hat,z\n";
  for (Eigen::Index k = 0; k < est.axis.size(); ++k)
    for (Eigen::Index i = 0; i < est.rho_hat.rows(); ++i) {
      if (std::isnan(est.rho_hat(i, k))) continue;
      out << csv_field(grid[static_cast<std::size_t>(i)].id) << ',' << est.axis.starts[static_cast<std::size_t>(k)]
          << ',' << format_number(est.rho_hat(i, k)) << ',' << format_number(z.z(i, k)) << '\n';
    }
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

std::vector<EventSpec> read_event_specs(const fs::path& path, const GridTessellation& grid) {
  const CsvTable t = read_csv(path, {"event_id", "kickoff_s", "end_s", "venue"});
  const auto ci = t.column("event_id"), ck = t.column("kickoff_s"), ce = t.column("end_s"), cv = t.column("venue");
  std::vector<EventSpec> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    EventSpec e;
    e.id = t.rows[r][ci];
    e.kickoff = parse_int(t.rows[r][ck], "kickoff_s");
    e.end = parse_int(t.rows[r][ce], "end_s");
    const std::string& venue = t.rows[r][cv];
    try {
      if (trim(venue).rfind("POLYGON", 0) == 0) {
        e.venue = parse_wkt_polygon(venue);
      } else {
        for (const auto& id : split(venue, ';')) {
          auto c = grid.find(id);
          if (!c) throw InputError("unknown venue cell id '" + id + "'");
          e.venue_cells.push_back(*c);
        }
      }
    } catch (const InputError& err) {
      throw InputError(t.where(r) + err.what());
    }
    if (e.end <= e.kickoff) throw InputError(t.where(r) + "end_s must follow kickoff_s");
    out.push_back(std::move(e));
  }
  for (auto& e : out)
    for (const auto& other : out)
      if (&other != &e && day_of(other.kickoff) != day_of(e.kickoff)) e.other_event_days.push_back(day_of(other.kickoff));
  return out;
}

void write_event_specs(const fs::path& path, std::span<const EventSpec> events, const GridTessellation& grid) {
  CsvWriter w(path, {"event_id", "kickoff_s", "end_s", "venue"});
  for (const auto& e : events) {
    std::string venue;
    if (e.venue) {
      venue = to_wkt(*e.venue);
    } else {
      for (std::size_t i = 0; i < e.venue_cells.size(); ++i) venue += (i ? ";" : "") + grid[e.venue_cells[i]].id;
    }
    w.row({e.id, std::to_string(e.kickoff), std::to_string(e.end), venue});
  }
  w.close();
}

void write_attendance(const fs::path& path, std::span<const AttendanceEstimate> estimates) {
  CsvWriter w(path, {"event_id", "t_peak_s", "sigma_norm", "sigma_match", "lambda_tilde", "gamma_hat"});
  for (const auto& a : estimates)
    w.row({a.event_id, std::to_string(a.t_peak), format_number(a.sigma_norm), format_number(a.sigma_match),
           format_number(a.lambda_tilde), format_number(a.gamma_hat)});
  w.close();
}

std::vector<AttendanceRow> read_attendance(const fs::path& path) {
  const CsvTable t =
      read_csv(path, {"event_id", "t_peak_s", "sigma_norm", "sigma_match", "lambda_tilde", "gamma_hat"});
  std::vector<AttendanceRow> out;
  for (const auto& row : t.rows) {
    auto num = [&](std::string_view c) { return parse_double(row[t.column(c)], c); };
    out.push_back({row[t.column("event_id")], parse_int(row[t.column("t_peak_s")], "t_peak_s"), num("sigma_norm"),
                   num("sigma_match"), num("lambda_tilde"), num("gamma_hat")});
  }
  return out;
}

std::vector<std::pair<std::string, double>> read_event_values(const fs::path& path, std::string_view column) {
  const CsvTable t = read_csv(path, {"event_id", column});
  std::vector<std::pair<std::string, double>> out;
  for (const auto& row : t.rows) out.emplace_back(row[t.column("event_id")], parse_double(row[t.column(column)], column));
  return out;
}

void write_event_values(const fs::path& path, std::string_view column,
                        std::span<const std::pair<std::string, double>> values) {
  CsvWriter w(path, {"event_id", column});
  for (const auto& [id, v] : values) w.row({id, format_number(v)});
  w.close();
}

// ---- provenance -----------------------------------------------------------------------

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

void write_sidecar(const fs::path& output, std::string_view command, std::uint64_t config_hash, std::uint64_t seed) {
  fs::path meta = output;
  meta += ".meta";
  std::ofstream out(meta, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + meta.string() + "'");
  out << "command = " << command << '\n' << "config_hash = " << hex64(config_hash) << '\n' << "seed = " << seed << '\n';
}

}  // namespace popdense::io
