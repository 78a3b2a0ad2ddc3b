#pragma once

#include "popdense/metadata.hpp"

#include <span>
#include <vector>

namespace popdense {

inline constexpr int kHoursPerWeek = 168;

/// Median hourly call+text volume per hour of the week (Monday 00:00 is
/// index 0). `values` is `raw` normalized to sum to one.
struct WeeklySignature {
  CellIndex cell = 0;
  Vec raw;
  Vec values;
};

WeeklySignature weekly_signature(const VolumeSeries& volumes, CellIndex cell);

// Signatures for every cell; cells without traffic get all-zero vectors
// instead of an error so that clustering can flag them.
std::vector<WeeklySignature> weekly_signatures(const VolumeSeries& volumes);

double correlation_distance(const Vec& a, const Vec& b);

enum class Linkage { Average, Single, Complete };

struct ClusterConfig {
  int k = 5;
  Linkage linkage = Linkage::Average;
};

struct Clustering {
  std::vector<int> labels;            // cluster per signature, numbered by first member
  std::vector<Vec> characteristic;    // element-wise mean of the non-flagged members
  std::vector<bool> constant_flagged; // zero-variance signatures placed by nearest neighbour
};

Clustering cluster_signatures(std::span<const Vec> signatures, const ClusterConfig& config = {});

struct CharacteristicSignature {
  LandUse use;
  Vec values;
};

struct Classification {
  std::vector<LandUse> labels;
  std::vector<bool> low_confidence;  // tie between labels or undefined correlation
};

Classification classify_cells(std::span<const Vec> signatures, std::span<const CharacteristicSignature> characteristic);

}  // namespace popdense
