#include "popdense/landuse.hpp"

#include "popdense/regress.hpp"

#include <algorithm>
#include <limits>
#include <map>

namespace popdense {

namespace {

constexpr double kTieEps = 1e-12;

bool is_constant(const Vec& v) { return v.size() == 0 || v.maxCoeff() == v.minCoeff(); }

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Monday-aligned week number of a day.
long week_of(Day d) {
  // 1970-01-05 was a Monday.
  long days = d.time_since_epoch().count() - 4;
  return days >= 0 ? days / 7 : -((-days + 6) / 7);
}

Vec raw_signature(const VolumeSeries& volumes, CellIndex cell, bool& has_data) {
  // (week, hour-of-week) -> summed call+text volume
  std::map<std::pair<long, int>, double> buckets;
  for (Eigen::Index k = 0; k < volumes.axis.size(); ++k) {
    Seconds s = volumes.axis.starts[static_cast<std::size_t>(k)];
    Day d = day_of(s);
    int how = iso_weekday_index(d) * 24 + static_cast<int>(second_of_day(s) / 3600);
    double v = volumes[EventKind::CallIn](cell, k) + volumes[EventKind::CallOut](cell, k) +
               volumes[EventKind::SmsIn](cell, k) + volumes[EventKind::SmsOut](cell, k);
    buckets[{week_of(d), how}] += v;
  }
  std::vector<std::vector<double>> per_hour(kHoursPerWeek);
  for (const auto& [key, v] : buckets) per_hour[static_cast<std::size_t>(key.second)].push_back(v);
  Vec raw = Vec::Zero(kHoursPerWeek);
  has_data = !buckets.empty();
  for (int h = 0; h < kHoursPerWeek; ++h)
    if (!per_hour[static_cast<std::size_t>(h)].empty()) raw[h] = median_of(per_hour[static_cast<std::size_t>(h)]);
  return raw;
}

WeeklySignature finish(CellIndex cell, Vec raw) {
  WeeklySignature sig{cell, std::move(raw), Vec::Zero(kHoursPerWeek)};
  const double total = sig.raw.sum();
  if (total > 0) sig.values = sig.raw / total;
  return sig;
}

}  // namespace

WeeklySignature weekly_signature(const VolumeSeries& volumes, CellIndex cell) {
  if (cell >= volumes.cells()) throw InputError("unknown cell index " + std::to_string(cell));
  bool has_data = false;
  Vec raw = raw_signature(volumes, cell, has_data);
  if (!has_data || !(raw.sum() > 0))
    throw InsufficientDataError("no call or text traffic for cell index " + std::to_string(cell));
  return finish(cell, std::move(raw));
}

std::vector<WeeklySignature> weekly_signatures(const VolumeSeries& volumes) {
  std::vector<WeeklySignature> out;
  out.reserve(static_cast<std::size_t>(volumes.cells()));
  for (Eigen::Index i = 0; i < volumes.cells(); ++i) {
    bool has_data = false;
    out.push_back(finish(static_cast<CellIndex>(i), raw_signature(volumes, static_cast<CellIndex>(i), has_data)));
  }
  return out;
}

double correlation_distance(const Vec& a, const Vec& b) { return 1.0 - pearson(a, b); }

Clustering cluster_signatures(std::span<const Vec> signatures, const ClusterConfig& config) {
  if (config.k < 1) throw InputError("cluster count must be positive");
  const std::size_t total = signatures.size();
  std::vector<std::size_t> active_idx, flagged_idx;
  for (std::size_t i = 0; i < total; ++i) {
    if (i && signatures[i].size() != signatures[0].size()) throw InputError("signatures differ in length");
    (is_constant(signatures[i]) ? flagged_idx : active_idx).push_back(i);
  }
  const auto n = static_cast<Eigen::Index>(active_idx.size());
  if (n < config.k)
    throw InsufficientDataError("need at least " + std::to_string(config.k) + " non-constant signatures, got " +
                                std::to_string(n));

  // Correlation distance matrix from standardized rows.
  const Eigen::Index len = signatures[active_idx[0]].size();
  Mat z(n, len);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Vec& s = signatures[active_idx[static_cast<std::size_t>(r)]];
    Vec c = s.array() - s.mean();
    z.row(r) = (c / c.norm()).transpose();
  }
  Mat dist = (Mat::Ones(n, n) - z * z.transpose()).cwiseMax(0.0).cwiseMin(2.0);
  dist.diagonal().setZero();

  std::vector<Eigen::Index> size(static_cast<std::size_t>(n), 1);
  std::vector<Eigen::Index> parent(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) parent[static_cast<std::size_t>(i)] = i;
  std::vector<bool> alive(static_cast<std::size_t>(n), true);
  std::vector<Eigen::Index> nn(static_cast<std::size_t>(n), -1);
  std::vector<double> nn_d(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());

  auto refresh = [&](Eigen::Index i) {
    nn[static_cast<std::size_t>(i)] = -1;
    nn_d[static_cast<std::size_t>(i)] = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i && alive[static_cast<std::size_t>(j)] && dist(i, j) < nn_d[static_cast<std::size_t>(i)]) {
        nn_d[static_cast<std::size_t>(i)] = dist(i, j);
        nn[static_cast<std::size_t>(i)] = j;
      }
  };
  for (Eigen::Index i = 0; i < n; ++i) refresh(i);

  for (Eigen::Index clusters = n; clusters > config.k; --clusters) {
    Eigen::Index a = -1;
    for (Eigen::Index i = 0; i < n; ++i)
      if (alive[static_cast<std::size_t>(i)] && nn[static_cast<std::size_t>(i)] >= 0 &&
          (a < 0 || nn_d[static_cast<std::size_t>(i)] < nn_d[static_cast<std::size_t>(a)]))
        a = i;
    Eigen::Index b = nn[static_cast<std::size_t>(a)];
    if (b < a) std::swap(a, b);  // keep the lower index
    const double na = static_cast<double>(size[static_cast<std::size_t>(a)]);
    const double nb = static_cast<double>(size[static_cast<std::size_t>(b)]);
    for (Eigen::Index k = 0; k < n; ++k) {
      if (!alive[static_cast<std::size_t>(k)] || k == a || k == b) continue;
      double d;
      switch (config.linkage) {
        case Linkage::Single: d = std::min(dist(k, a), dist(k, b)); break;
        case Linkage::Complete: d = std::max(dist(k, a), dist(k, b)); break;
        default: d = (na * dist(k, a) + nb * dist(k, b)) / (na + nb); break;
      }
      dist(k, a) = dist(a, k) = d;
    }
    alive[static_cast<std::size_t>(b)] = false;
    size[static_cast<std::size_t>(a)] += size[static_cast<std::size_t>(b)];
    for (auto& p : parent)
      if (p == b) p = a;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (!alive[static_cast<std::size_t>(k)] || k == a) continue;
      auto& knn = nn[static_cast<std::size_t>(k)];
      if (knn == a || knn == b) {
        refresh(k);
      } else if (dist(k, a) < nn_d[static_cast<std::size_t>(k)] ||
                 (dist(k, a) == nn_d[static_cast<std::size_t>(k)] && a < knn)) {
        knn = a;
        nn_d[static_cast<std::size_t>(k)] = dist(k, a);
      }
    }
    refresh(a);
  }

  Clustering out;
  out.labels.assign(total, -1);
  out.constant_flagged.assign(total, false);
  std::map<Eigen::Index, int> label_of_root;
  for (Eigen::Index r = 0; r < n; ++r) {
    Eigen::Index root = parent[static_cast<std::size_t>(r)];
    auto [it, inserted] = label_of_root.try_emplace(root, static_cast<int>(label_of_root.size()));
    out.labels[active_idx[static_cast<std::size_t>(r)]] = it->second;
  }
  // Renumber by smallest member index over the full input order.
  std::vector<int> remap(label_of_root.size(), -1);
  int next = 0;
  for (std::size_t i = 0; i < total; ++i)
    if (out.labels[i] >= 0 && remap[static_cast<std::size_t>(out.labels[i])] < 0)
      remap[static_cast<std::size_t>(out.labels[i])] = next++;
  for (auto& l : out.labels)
    if (l >= 0) l = remap[static_cast<std::size_t>(l)];

  for (std::size_t f : flagged_idx) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = active_idx[0];
    for (std::size_t j : active_idx) {
      double d = (signatures[f] - signatures[j]).squaredNorm();
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    out.labels[f] = out.labels[best_j];
    out.constant_flagged[f] = true;
  }

  out.characteristic.assign(static_cast<std::size_t>(config.k), Vec::Zero(len));
  std::vector<int> members(static_cast<std::size_t>(config.k), 0);
  for (std::size_t i : active_idx) {
    out.characteristic[static_cast<std::size_t>(out.labels[i])] += signatures[i];
    ++members[static_cast<std::size_t>(out.labels[i])];
  }
  for (int c = 0; c < config.k; ++c) out.characteristic[static_cast<std::size_t>(c)] /= members[static_cast<std::size_t>(c)];
  return out;
}

Classification classify_cells(std::span<const Vec> signatures, std::span<const CharacteristicSignature> characteristic) {
  if (characteristic.empty()) throw InputError("no characteristic signatures given");
  for (const auto& c : characteristic)
    if (is_constant(c.values))
      throw InputError("characteristic signature for '" + std::string(to_string(c.use)) + "' is constant");
  Classification out;
  out.labels.reserve(signatures.size());
  out.low_confidence.reserve(signatures.size());
  for (const Vec& sig : signatures) {
    std::vector<double> r(characteristic.size(), 0.0);
    bool undefined = is_constant(sig);
    if (!undefined)
      for (std::size_t c = 0; c < characteristic.size(); ++c) r[c] = pearson(sig, characteristic[c].values);
    const double best = *std::max_element(r.begin(), r.end());
    std::size_t winner = characteristic.size();
    int tied = 0;
    for (std::size_t c = 0; c < characteristic.size(); ++c) {
      if (r[c] < best - kTieEps) continue;
      ++tied;
      if (winner == characteristic.size() || characteristic[c].use < characteristic[winner].use) winner = c;
    }
    out.labels.push_back(characteristic[winner].use);
    out.low_confidence.push_back(undefined || tied > 1);
  }
  return out;
}

}  // namespace popdense
