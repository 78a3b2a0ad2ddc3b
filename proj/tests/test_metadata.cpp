#include "support.hpp"

#include "popdense/metadata.hpp"

#include <map>
#include <random>
#include <set>

using namespace popdense;

namespace {

// Replays each device's events independently and reports its cell at the end
// of every slot, -1 before its first event.
Mat replay_counts(const EventStream& events, std::size_t cells, const SlotAxis& axis) {
  std::map<DeviceId, std::vector<const NetworkEvent*>> by_device;
  for (const auto& e : events) by_device[e.device].push_back(&e);
  Mat counts = Mat::Zero(static_cast<Eigen::Index>(cells), axis.size());
  for (const auto& [dev, evs] : by_device)
    for (Eigen::Index k = 0; k < axis.size(); ++k) {
      const Seconds end = axis.starts[static_cast<std::size_t>(k)] + axis.slot;
      const NetworkEvent* last = nullptr;
      for (const auto* e : evs)
        if (e->time < end) last = e;
      if (last) counts(last->cell, k) += 1;
    }
  return counts;
}

EventStream random_stream(std::uint64_t seed, int devices, int n, std::size_t cells, Seconds horizon) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dev(0, devices - 1), kind(0, kEventKinds - 1);
  std::uniform_int_distribution<Seconds> time(0, horizon - 1);
  std::uniform_int_distribution<std::size_t> cell(0, cells - 1);
  EventStream s;
  for (int i = 0; i < n; ++i)
    s.push_back({static_cast<DeviceId>(dev(rng)), time(rng), static_cast<CellIndex>(cell(rng)), static_cast<EventKind>(kind(rng))});
  std::sort(s.begin(), s.end(), event_before);
  return s;
}

}  // namespace

TEST_SUITE("metadata") {

TEST_CASE("last-event rule") {
  auto grid = testing::square_grid(3, 1);
  const auto axis = SlotAxis::contiguous(0, 4);
  EventStream s{{1, 100, 0, EventKind::Net}, {1, 1800, 1, EventKind::CallIn}, {1, 2750, 2, EventKind::SmsOut}};
  const auto p = infer_presence(s, grid, axis);
  CHECK(p.counts(0, 0) == 1);  // slot ends 900 <= t1
  CHECK(p.counts(0, 1) == 1);  // slot ends 1800 <= t1
  CHECK(p.counts(1, 2) == 1);  // ends 2700, in (t1, t2]
  CHECK(p.counts(2, 3) == 1);  // after t2
  CHECK(p.counts.colwise().sum().isApprox(Eigen::RowVectorXd::Ones(4)));
}

TEST_CASE("empty stream") {
  auto grid = testing::square_grid(2, 2);
  const auto axis = SlotAxis::contiguous(0, 3);
  const auto p = infer_presence(EventStream{}, grid, axis);
  CHECK(p.counts.isZero());
  CHECK(p.missing.all());
  const auto v = aggregate_volumes(EventStream{}, grid, axis);
  for (const auto& m : v.counts) CHECK(m.isZero());
}

TEST_CASE("three devices in slot zero") {
  auto grid = testing::square_grid(3, 1);
  EventStream s{{1, 10, 0, EventKind::Net}, {2, 20, 1, EventKind::Net}, {3, 30, 2, EventKind::Net}};
  const auto p = infer_presence(s, grid, SlotAxis::contiguous(0, 5));
  for (Eigen::Index k = 0; k < 5; ++k) CHECK(p.counts.col(k) == Vec::Ones(3));
  CHECK(!p.missing.any());
}

TEST_CASE("random streams agree with per-device replay") {
  auto grid = testing::square_grid(4, 3);
  const auto axis = SlotAxis::contiguous(0, 40);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto s = random_stream(seed, 30, 400, grid.size(), 40 * 900);
    const auto p = infer_presence(s, grid, axis);
    CHECK(p.counts == replay_counts(s, grid.size(), axis));

    // Occupancy partition: column sums count devices seen so far.
    for (Eigen::Index k = 0; k < axis.size(); ++k) {
      std::set<DeviceId> seen;
      for (const auto& e : s)
        if (e.time < axis.starts[static_cast<std::size_t>(k)] + axis.slot) seen.insert(e.device);
      CHECK(p.counts.col(k).sum() == static_cast<double>(seen.size()));
    }

    // Presence ignores kinds.
    auto relabeled = s;
    for (auto& e : relabeled) e.kind = EventKind::Net;
    const auto q = infer_presence(relabeled, grid, axis);
    CHECK(q.counts == p.counts);
    CHECK((q.missing == p.missing).all());
  }
}

TEST_CASE("volumes") {
  auto grid = testing::square_grid(2, 1);
  SUBCASE("five call-ins") {
    EventStream s;
    for (int i = 0; i < 5; ++i) s.push_back({static_cast<DeviceId>(i), 100 + i, 1, EventKind::CallIn});
    const auto v = aggregate_volumes(s, grid, SlotAxis::contiguous(0, 2));
    CHECK(v[EventKind::CallIn](1, 0) == 5);
    CHECK(v[EventKind::CallIn].sum() == 5);
  }
  SUBCASE("mixed stream conserves counts per kind") {
    const auto s = random_stream(9, 20, 100, grid.size(), 4 * 900);
    const auto v = aggregate_volumes(s, grid, SlotAxis::contiguous(0, 4));
    double total = 0;
    for (int k = 0; k < kEventKinds; ++k) {
      const auto n = std::count_if(s.begin(), s.end(), [&](const auto& e) { return static_cast<int>(e.kind) == k; });
      CHECK(v.counts[static_cast<std::size_t>(k)].sum() == static_cast<double>(n));
      total += v.counts[static_cast<std::size_t>(k)].sum();
    }
    CHECK(total == 100);
  }
}

TEST_CASE("presence density") {
  GridTessellation grid({testing::cell("a", 0, 0, 2000, 1000), testing::cell("b", 0, 1000, 255, 1325)});
  Mat counts(2, 2);
  counts << 200, 0, 35, 35;
  const Mat d = presence_density(counts, grid);
  CHECK(d(0, 0) == doctest::Approx(100.0));
  CHECK(d(0, 1) == 0.0);
  CHECK(d(1, 0) == doctest::Approx(35.0 / (0.255 * 0.325)));
  CHECK(d(1, 0) == doctest::Approx(422.3).epsilon(1e-3));
}

TEST_CASE("missing cell fraction") {
  const auto axis = SlotAxis::contiguous(0, 96);
  PresenceSeries p{axis, Mat::Ones(10, 96), Mat::Ones(10, 96), MaskMat::Constant(10, 96, false)};
  const Day d = day_of(0);
  CHECK(missing_cell_fraction(p, 4 * 3600, 5 * 3600, d) == 0.0);
  p.missing.setConstant(true);
  CHECK(missing_cell_fraction(p, 4 * 3600, 5 * 3600, d) == 1.0);
  p.missing.setConstant(false);
  p.missing.topRows(9).setConstant(true);
  CHECK(missing_cell_fraction(p, 4 * 3600, 5 * 3600, d) == doctest::Approx(0.9));
}

TEST_CASE("out-of-order streams are rejected") {
  auto grid = testing::square_grid(2, 1);
  EventStream s{{1, 500, 0, EventKind::Net}, {1, 100, 1, EventKind::Net}};
  CHECK_THROWS_AS(infer_presence(s, grid, SlotAxis::contiguous(0, 2)), InputError);
}

}  // TEST_SUITE
