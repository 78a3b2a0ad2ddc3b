#pragma once

#include "popdense/metadata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace popdense {

// ---- expression-level statistics ------------------------------------------------

template <class DerivedX, class DerivedY>
double pearson(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  if (x.size() != y.size()) throw InputError("pearson: length mismatch");
  if (x.size() < 3) throw InsufficientDataError("pearson: fewer than 3 samples");
  const auto xc = (x.array() - x.mean()).eval();
  const auto yc = (y.array() - y.mean()).eval();
  const double sxx = xc.square().sum();
  const double syy = yc.square().sum();
  if (!(sxx > 0) || !(syy > 0)) throw DegenerateError("pearson: correlation undefined for zero-variance input");
  return std::clamp((xc * yc).sum() / std::sqrt(sxx * syy), -1.0, 1.0);
}

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
};

/// Ordinary least squares y = intercept + slope * x on centered data.
template <class DerivedX, class DerivedY>
LineFit fit_line(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  if (x.size() != y.size()) throw InputError("fit_line: length mismatch");
  if (x.size() < 2) throw InsufficientDataError("fit_line: fewer than 2 samples");
  const double mx = x.mean();
  const double my = y.mean();
  const auto xc = (x.array() - mx).eval();
  const double sxx = xc.square().sum();
  if (!(sxx > 0)) throw DegenerateError("fit_line: rank-deficient design (all x equal)");
  const double slope = (xc * (y.array() - my)).sum() / sxx;
  return {my - slope * mx, slope};
}

/// Determination coefficient against ground truth `rho`.
template <class DerivedHat, class DerivedRho>
double r_squared(const Eigen::MatrixBase<DerivedHat>& rho_hat, const Eigen::MatrixBase<DerivedRho>& rho) {
  if (rho_hat.size() != rho.size()) throw InputError("r_squared: length mismatch");
  if (rho.size() == 0) throw InsufficientDataError("r_squared: no samples");
  const double ss_tot = (rho.array() - rho.mean()).square().sum();
  if (!(ss_tot > 0)) throw DegenerateError("r_squared: undefined for constant ground truth");
  return 1.0 - (rho.array() - rho_hat.array()).square().sum() / ss_tot;
}

template <class DerivedHat, class DerivedRho>
double rmse(const Eigen::MatrixBase<DerivedHat>& rho_hat, const Eigen::MatrixBase<DerivedRho>& rho) {
  if (rho_hat.size() != rho.size()) throw InputError("rmse: length mismatch");
  if (rho.size() == 0) throw InsufficientDataError("rmse: no samples");
  return std::sqrt((rho_hat.array() - rho.array()).square().mean());
}

enum class NrmseVariant { Range = 1, Mean = 2 };

template <class DerivedHat, class DerivedRho>
double nrmse(const Eigen::MatrixBase<DerivedHat>& rho_hat, const Eigen::MatrixBase<DerivedRho>& rho,
             NrmseVariant variant) {
  const double err = rmse(rho_hat, rho);
  if (variant == NrmseVariant::Range) {
    const double range = rho.maxCoeff() - rho.minCoeff();
    if (!(range > 0)) throw InputError("nrmse(1): ground-truth range is zero");
    return err / range;
  }
  const double mean = rho.mean();
  if (!(mean > 0)) throw InputError("nrmse(2): ground-truth mean is not positive");
  return err / mean;
}

struct FitMetrics {
  double r2 = 0.0;
  double nrmse1 = 0.0;
  double nrmse2 = 0.0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  Eigen::Index n = 0;
};

FitMetrics compute_metrics(const Vec& rho_hat, const Vec& rho);

// ---- power-law regression ----------------------------------------------------------

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct PowerLawFit {
  double alpha = 1.0;
  double beta = 1.0;
  Interval alpha_ci;
  Interval beta_ci;
  Mask inliers;   // per input sample; excluded samples are never inliers
  Mask included;  // samples with sigma > 0 and rho > 0 (finite)
  std::uint64_t seed = 0;
  double residual_threshold = 0.0;

  Eigen::Index n_samples() const { return included.count(); }
  Eigen::Index n_inliers() const { return inliers.count(); }
};

struct RansacConfig {
  int min_sample = 2;
  double mad_factor = 2.0;
  // Floor on the residual threshold (log space) so noiseless data is not
  // split by rounding.
  double min_threshold = 1e-9;
  int max_iterations = 1000;
  Eigen::Index min_samples = 10;
  std::optional<double> threshold;  // overrides the MAD rule
};

/// RANSAC line fit in (log sigma, log rho) space followed by a least-squares
/// refit on the consensus set. rho_hat = alpha * sigma^beta.
PowerLawFit ransac_powerlaw_fit(const Vec& sigma, const Vec& rho, const RansacConfig& config, std::uint64_t seed);

struct BootstrapConfig {
  int resamples = 1000;
  double level = 0.95;
  Eigen::Index min_inliers = 10;
  RansacConfig ransac;  // threshold is taken from the fit being bootstrapped
};

/// Percentile bootstrap of the whole robust fit over resampled included
/// samples. Fills fit.alpha_ci/beta_ci.
void bootstrap_ci(const Vec& sigma, const Vec& rho, PowerLawFit& fit, const BootstrapConfig& config,
                  std::uint64_t seed);

Vec predict_static(const PowerLawFit& fit, const Vec& sigma);

/// Applies the model on every sample with a finite sigma and scores it.
FitMetrics evaluate_static(const PowerLawFit& fit, const Vec& sigma, const Vec& rho);

/// Cells flagged as outliers (included but not inlier) on at least
/// `threshold` of the daily fits.
std::vector<CellIndex> persistent_outlier_cells(std::span<const PowerLawFit> daily_fits, double threshold = 0.8);

// ---- training protocol -------------------------------------------------------------

/// Mean presence density per cell and day over non-missing slots
/// (cells x days); NaN where a cell has no data on a day.
struct DailyDensity {
  std::vector<Day> days;
  Mat values;
};

DailyDensity daily_mean_density(const PresenceSeries& presence);

struct StaticTrainingConfig {
  RansacConfig ransac;
  BootstrapConfig bootstrap;
  double persistence = 0.8;
  int folds = 3;
  Eigen::Index min_daily_fits = 5;
};

struct FoldResult {
  int fold = 0;
  std::vector<Day> test_days;
  PowerLawFit fit;
  FitMetrics train;  // inliers only
  FitMetrics test;   // all evaluation cells
};

struct StaticModel {
  PowerLawFit fit;
  FitMetrics train;
  std::vector<CellIndex> persistent_outliers;
  std::vector<PowerLawFit> daily_fits;
  std::vector<FoldResult> folds;
};

/// Daily fits -> persistent outliers -> contiguous k-fold evaluation -> final
/// fit on all days with bootstrap intervals. `training_cells` restricts model
/// fitting (e.g. residential cells), `evaluation_cells` the test metrics.
StaticModel train_static_model(const DailyDensity& daily, const Vec& rho, const Mask& training_cells,
                               const Mask& evaluation_cells, const StaticTrainingConfig& config, std::uint64_t seed);

// Per-row mean ignoring NaNs (NaN where a row has none) over the given columns.
Vec nan_mean_columns(const Mat& values, std::span<const Eigen::Index> columns);

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace popdense
