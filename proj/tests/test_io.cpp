#include "support.hpp"

#include "popdense/io.hpp"

#include <filesystem>
#include <fstream>
#include <random>

using namespace popdense;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("popdense_io_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

void put(const fs::path& path, const std::string& text) { std::ofstream(path) << text; }

std::string message_of(auto&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("csv quoting") {
  const auto t = io::parse_csv("a,b\n\"x,1\",\"say \"\"hi\"\"\"\nplain,\n", "mem");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][0] == "x,1");
  CHECK(t.rows[0][1] == "say \"hi\"");
  CHECK(t.rows[1][1] == "");
  CHECK(t.lines[1] == 3);
  CHECK(io::csv_field("x,1") == "\"x,1\"");
  CHECK(io::csv_field("plain") == "plain");

  const auto path = scratch("quote.csv");
  {
    io::CsvWriter w(path, {"k", "v"});
    w.row({"a,b", "q\"q"});
    w.close();
  }
  const auto back = io::read_csv(path, {"k", "v"});
  CHECK(back.rows[0] == std::vector<std::string>{"a,b", "q\"q"});

  CHECK(message_of([] { io::parse_csv("a,b\n1\n", "mem"); }).find("mem:2:") == 0);
  CHECK(message_of([] { io::parse_csv("a\n\"open\n", "mem"); }).find("unterminated") != std::string::npos);
  CHECK_THROWS_AS(io::parse_csv("", "mem"), InputError);
}

TEST_CASE("key values") {
  const auto kv = io::KeyValues::parse("# comment\nb = 2  # trailing\na = x\nb = 3\n", "cfg");
  CHECK(kv.get("b") == "3");
  CHECK(kv.all("b") == std::vector<std::string>{"2", "3"});
  CHECK(kv.number("b", 0) == 3.0);
  CHECK(kv.number("missing", 7) == 7.0);
  CHECK(kv.canonical() == "a=x\nb=2\nb=3\n");
  CHECK_NOTHROW(kv.check_known({"a", "b"}));
  CHECK(message_of([&] { kv.check_known({"a"}); }).find("unknown key 'b'") != std::string::npos);
  CHECK(message_of([] { io::KeyValues::parse("ok = 1\nbroken\n", "cfg"); }).find("cfg:2:") == 0);

  const auto stems = io::KeyValues::parse("call.office = 1\n", "cfg");
  CHECK_NOTHROW(stems.check_known({"call."}));
}

TEST_CASE("times of day") {
  CHECK(io::parse_time_of_day("04:00") == 4 * 3600);
  CHECK(io::parse_time_of_day("04:30:15") == 4 * 3600 + 1815);
  CHECK_THROWS_AS(io::parse_time_of_day("4h"), InputError);
}

TEST_CASE("params round trip") {
  const auto path = scratch("params.txt");
  const MultivariateParams p{2.9, 1.07, -0.3, 0.98, ActivityKind::Sms};
  io::write_params(path, p);
  const auto q = io::read_params(path);
  CHECK(q.a_alpha == p.a_alpha);
  CHECK(q.b_alpha == p.b_alpha);
  CHECK(q.a_beta == p.a_beta);
  CHECK(q.b_beta == p.b_beta);
  CHECK(q.kind == ActivityKind::Sms);
}

TEST_CASE("grid, presence and volume round trips") {
  const auto grid = testing::square_grid(3, 2, 750.0);
  const auto gpath = scratch("grid.csv");
  io::write_grid(gpath, grid);
  const auto g2 = io::read_grid(gpath);
  REQUIRE(g2.size() == grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(g2[i].id == grid[i].id);
    CHECK(g2[i].surface_km2 == grid[i].surface_km2);
  }

  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> count(0, 40);
  std::bernoulli_distribution hole(0.2);
  SlotAxis axis{900, {0, 900, 3600, 7200}};
  PresenceSeries p{axis, Mat(6, 4), Mat(6, 4), MaskMat::Constant(6, 4, false)};
  for (Eigen::Index i = 0; i < 6; ++i)
    for (Eigen::Index k = 0; k < 4; ++k) {
      p.counts(i, k) = count(rng);
      p.missing(i, k) = hole(rng);
      if (p.missing(i, k)) p.counts(i, k) = 0;
    }
  p.densities = presence_density(p.counts, grid);
  const auto ppath = scratch("presence.csv");
  io::write_presence(ppath, p, grid);
  io::write_slots(io::slots_path(ppath), axis);
  CHECK(io::slots_path(ppath).filename() == "presence_slots.csv");
  const auto q = io::read_presence(ppath, grid, 900, io::read_slots(io::slots_path(ppath)));
  CHECK(q.axis.starts == axis.starts);
  CHECK((q.missing == p.missing).all());
  CHECK(q.counts == p.counts);
  CHECK(q.densities.isApprox(p.densities));

  VolumeSeries v;
  v.axis = axis;
  for (auto& m : v.counts) {
    m = Mat::Zero(6, 4);
    m(1, 2) = count(rng) + 1;
  }
  const auto vpath = scratch("volumes.csv");
  io::write_volumes(vpath, v, grid);
  const auto w = io::read_volumes(vpath, grid, axis);
  for (int k = 0; k < kEventKinds; ++k)
    CHECK(w.counts[static_cast<std::size_t>(k)] == v.counts[static_cast<std::size_t>(k)]);
}

TEST_CASE("events round trip") {
  const auto grid = testing::square_grid(2, 2);
  EventStream s{{3, 10, 0, EventKind::SmsIn}, {1, 20, 3, EventKind::Net}, {2, 20, 2, EventKind::CallOut}};
  const auto path = scratch("events.csv");
  io::write_events(path, s, grid);
  CHECK(io::read_events(path, grid) == s);

  put(path, "device_id,timestamp_s,cell_id,kind\n1,10,c0,call_in\n1,20,nowhere,call_in\n");
  const auto msg = message_of([&] { io::read_events(path, grid); });
  CHECK(msg.find(":3:") != std::string::npos);
  CHECK(msg.find("nowhere") != std::string::npos);
}

TEST_CASE("labels and event specs") {
  const auto grid = testing::square_grid(3, 3);
  std::vector<LandUse> labels(9, LandUse::Office);
  labels[4] = LandUse::Touristic;
  const auto lpath = scratch("labels.csv");
  io::write_labels(lpath, grid, labels);
  CHECK(io::read_labels(lpath, grid) == labels);

  std::vector<EventSpec> specs{{"a", std::nullopt, {4}, 86400 + 3600, 86400 + 9000, 900, {}},
                               {"b", std::nullopt, {0, 1}, 5 * 86400, 5 * 86400 + 5400, 900, {}}};
  const auto epath = scratch("specs.csv");
  io::write_event_specs(epath, specs, grid);
  const auto back = io::read_event_specs(epath, grid);
  REQUIRE(back.size() == 2);
  CHECK(back[0].venue_cells == std::vector<CellIndex>{4});
  CHECK(back[1].venue_cells == std::vector<CellIndex>{0, 1});
  CHECK(back[0].kickoff == specs[0].kickoff);
  CHECK(back[0].other_event_days == std::vector<Day>{day_of(5 * 86400)});
}

TEST_CASE("hashing") {
  CHECK(io::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(io::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(io::hex64(255) == "00000000000000ff");
}

}  // TEST_SUITE
