#include "support.hpp"

#include "popdense/filters.hpp"

#include <random>

using namespace popdense;
using namespace std::chrono;

namespace {

// 2015-03-02 is a Monday.
const Day kMonday = Day{year{2015} / 3 / 2};

PresenceSeries full_presence(std::size_t cells, int days, Day first = kMonday) {
  const auto axis = SlotAxis::contiguous(day_start(first), static_cast<std::size_t>(96 * days));
  const auto n = static_cast<Eigen::Index>(cells);
  Mat counts(n, axis.size());
  for (Eigen::Index k = 0; k < counts.cols(); ++k)
    for (Eigen::Index i = 0; i < n; ++i) counts(i, k) = static_cast<double>(1 + i + k);
  return {axis, counts, counts, MaskMat::Constant(n, axis.size(), false)};
}

void suppress(PresenceSeries& p, Day d, double fraction) {
  const auto cells = static_cast<Eigen::Index>(std::lround(fraction * static_cast<double>(p.cells())));
  for (Eigen::Index k = 0; k < p.axis.size(); ++k)
    if (day_of(p.axis.starts[static_cast<std::size_t>(k)]) == d) p.missing.block(0, k, cells, 1).setConstant(true);
}

bool same(const PresenceSeries& a, const PresenceSeries& b) {
  return a.axis.starts == b.axis.starts && a.counts == b.counts && (a.missing == b.missing).all();
}

}  // namespace

TEST_SUITE("filters") {

TEST_CASE("time filter") {
  FilterConfig cfg;
  SUBCASE("one day, four slots") {
    const auto p = apply_time_filter(full_presence(3, 1), cfg);
    CHECK(p.axis.size() == 4);
    CHECK(second_of_day(p.axis.starts.front()) == 4 * 3600);
  }
  SUBCASE("two days, eight slots in order") {
    const auto p = apply_time_filter(full_presence(3, 2), cfg);
    REQUIRE(p.axis.size() == 8);
    CHECK(std::is_sorted(p.axis.starts.begin(), p.axis.starts.end()));
    CHECK(day_of(p.axis.starts[4]) == kMonday + days{1});
  }
  SUBCASE("full-day window is the identity") {
    cfg.window_start = 0;
    cfg.window_end = kSecondsPerDay;
    const auto p = full_presence(3, 2);
    CHECK(same(apply_time_filter(p, cfg), p));
  }
}

TEST_CASE("day filter reasons") {
  FilterConfig cfg;
  const Day friday = kMonday + days{4};
  cfg.holidays = {friday};
  auto p = full_presence(10, 7);
  suppress(p, kMonday + days{1}, 0.1);
  suppress(p, friday, 0.9);
  const auto missing = daily_missing_fractions(p, cfg);
  CHECK(missing.at(kMonday + days{1}) == doctest::Approx(0.1));
  const auto out = apply_day_filter(p, cfg, missing);

  auto reasons_for = [&](Day d) {
    for (const auto& e : out.log)
      if (e.day == d) return e.reasons;
    return std::vector<std::string>{};
  };
  CHECK(reasons_for(kMonday + days{5}) == std::vector<std::string>{"weekend"});
  CHECK(reasons_for(kMonday + days{1}).empty());
  CHECK(reasons_for(friday) == std::vector<std::string>{"holiday", "missing"});
  CHECK(out.series.axis.days().size() == 4);

  // Retained slots keep their values.
  for (Eigen::Index k = 0; k < out.series.axis.size(); ++k) {
    const auto src = p.axis.find(out.series.axis.starts[static_cast<std::size_t>(k)]);
    REQUIRE(src);
    CHECK(out.series.counts.col(k) == p.counts.col(*src));
  }
}

TEST_CASE("filters are idempotent and commute") {
  FilterConfig cfg;
  auto p = full_presence(10, 9);
  suppress(p, kMonday + days{2}, 0.8);
  const auto missing = daily_missing_fractions(p, cfg);
  const auto day_time = apply_time_filter(apply_day_filter(p, cfg, missing).series, cfg);
  const auto time_day = apply_day_filter(apply_time_filter(p, cfg), cfg, missing).series;
  CHECK(same(day_time, time_day));
  CHECK(same(apply_time_filter(day_time, cfg), day_time));
  CHECK(same(apply_day_filter(day_time, cfg, missing).series, day_time));
}

TEST_CASE("metadata class ranking") {
  auto grid = testing::square_grid(5, 4);
  const auto n = static_cast<Eigen::Index>(grid.size());
  PopulationDensityMap census{Vec(n), std::nullopt};
  for (Eigen::Index i = 0; i < n; ++i) census.values[i] = 100.0 * std::exp(0.17 * static_cast<double>(i));
  auto p = full_presence(grid.size(), 1);
  for (Eigen::Index k = 0; k < p.axis.size(); ++k) {
    p.densities.col(k) = 0.3 * census.values;
    p.counts.col(k) = p.densities.col(k).cwiseProduct(grid.surfaces());
  }
  VolumeSeries v;
  v.axis = p.axis;
  std::mt19937_64 rng(4);
  std::lognormal_distribution<double> noise(0.0, 0.05), pure(3.0, 1.0);
  for (int k = 0; k < kEventKinds; ++k) {
    Mat m(n, p.axis.size());
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index s = 0; s < m.cols(); ++s)
        m(i, s) = k == static_cast<int>(EventKind::SmsOut) ? pure(rng) : census.values[i] * noise(rng);
    v.counts[static_cast<std::size_t>(k)] = m;
  }
  const auto table = rank_metadata_classes(v, p, census, grid);
  REQUIRE(table.size() == kEventKinds + 1);
  CHECK(table.front().metadata_class == "presence");
  CHECK(table.front().r == doctest::Approx(1.0));
  CHECK(table.back().metadata_class == "sms_out");
  for (const auto& row : table) {
    CHECK(row.r >= -1.0);
    CHECK(row.r <= 1.0);
  }
}

TEST_CASE("config validation") {
  FilterConfig cfg;
  cfg.window_start = 5 * 3600;
  cfg.window_end = 4 * 3600;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = {};
  cfg.missing_threshold = 1.5;
  CHECK_THROWS_AS(cfg.validate(), InputError);
}

}  // TEST_SUITE
