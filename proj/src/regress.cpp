#include "popdense/regress.hpp"

#include <algorithm>
#include <limits>
#include <random>

namespace popdense {

namespace {

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  double hi = *mid;
  if (n % 2 == 1) return hi;
  double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

// Linear-interpolation quantile of a sorted sample.
double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct LogSamples {
  std::vector<Eigen::Index> index;  // position in the input vectors
  Vec x;
  Vec y;
};

LogSamples log_samples(const Vec& sigma, const Vec& rho, const Mask& use) {
  LogSamples s;
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    if (use[i]) s.index.push_back(i);
  s.x.resize(static_cast<Eigen::Index>(s.index.size()));
  s.y.resize(s.x.size());
  for (std::size_t k = 0; k < s.index.size(); ++k) {
    s.x[static_cast<Eigen::Index>(k)] = std::log(sigma[s.index[k]]);
    s.y[static_cast<Eigen::Index>(k)] = std::log(rho[s.index[k]]);
  }
  return s;
}

Mask positive_finite(const Vec& sigma, const Vec& rho) {
  Mask m(sigma.size());
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    m[i] = std::isfinite(sigma[i]) && std::isfinite(rho[i]) && sigma[i] > 0 && rho[i] > 0;
  return m;
}

LineFit fit_subset(const Vec& x, const Vec& y, std::span<const Eigen::Index> idx) {
  Vec xs(static_cast<Eigen::Index>(idx.size())), ys(xs.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    xs[static_cast<Eigen::Index>(k)] = x[idx[k]];
    ys[static_cast<Eigen::Index>(k)] = y[idx[k]];
  }
  return fit_line(xs, ys);
}

FitMetrics metrics_on(const PowerLawFit& fit, const Vec& sigma, const Vec& rho, const Mask& use) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    if (use[i] && std::isfinite(sigma[i]) && std::isfinite(rho[i])) idx.push_back(i);
  Vec s(static_cast<Eigen::Index>(idx.size())), r(s.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    s[static_cast<Eigen::Index>(k)] = sigma[idx[k]];
    r[static_cast<Eigen::Index>(k)] = rho[idx[k]];
  }
  return compute_metrics(predict_static(fit, s), r);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

FitMetrics compute_metrics(const Vec& rho_hat, const Vec& rho) {
  FitMetrics m;
  m.n = rho.size();
  m.r2 = r_squared(rho_hat, rho);
  m.nrmse1 = nrmse(rho_hat, rho, NrmseVariant::Range);
  m.nrmse2 = nrmse(rho_hat, rho, NrmseVariant::Mean);
  m.mean = rho.mean();
  m.min = rho.minCoeff();
  m.max = rho.maxCoeff();
  return m;
}

PowerLawFit ransac_powerlaw_fit(const Vec& sigma, const Vec& rho, const RansacConfig& config, std::uint64_t seed) {
  if (sigma.size() != rho.size()) throw InputError("sigma and rho lengths differ");
  if (config.min_sample < 2) throw InputError("RANSAC minimal sample must be at least 2");
  PowerLawFit fit;
  fit.seed = seed;
  fit.included = positive_finite(sigma, rho);
  fit.inliers = Mask::Constant(sigma.size(), false);
  const LogSamples s = log_samples(sigma, rho, fit.included);
  const Eigen::Index n = s.x.size();
  if (n < std::max<Eigen::Index>(config.min_samples, config.min_sample))
    throw InsufficientDataError("RANSAC needs at least " + std::to_string(config.min_samples) +
                                " samples with positive sigma and rho, got " + std::to_string(n));

  const LineFit initial = fit_line(s.x, s.y);  // throws on all-equal sigma
  if (config.threshold) {
    fit.residual_threshold = *config.threshold;
  } else {
    Vec resid = s.y.array() - initial.intercept - initial.slope * s.x.array();
    std::vector<double> r(resid.data(), resid.data() + resid.size());
    const double med = median_of(r);
    for (auto& v : r) v = std::abs(v - med);
    fit.residual_threshold = std::max(config.mad_factor * median_of(std::move(r)), config.min_threshold);
  }

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  std::vector<Eigen::Index> sample(static_cast<std::size_t>(config.min_sample));
  Eigen::Index best_count = -1;
  double best_sum = std::numeric_limits<double>::infinity();
  std::vector<Eigen::Index> best;

  for (int it = 0; it < config.max_iterations; ++it) {
    for (std::size_t k = 0; k < sample.size(); ++k) {
      Eigen::Index cand;
      do {
        cand = pick(rng);
      } while (std::find(sample.begin(), sample.begin() + static_cast<std::ptrdiff_t>(k), cand) !=
               sample.begin() + static_cast<std::ptrdiff_t>(k));
      sample[k] = cand;
    }
    LineFit h;
    try {
      h = fit_subset(s.x, s.y, sample);
    } catch (const DegenerateError&) {
      continue;
    }
    const auto r = (s.y.array() - h.intercept - h.slope * s.x.array()).abs();
    const auto in = r <= fit.residual_threshold;
    const Eigen::Index count = in.count();
    if (count < best_count) continue;
    const double sum = in.select(r, 0.0).sum();
    if (count > best_count || sum < best_sum) {
      best_count = count;
      best_sum = sum;
      best.clear();
      for (Eigen::Index i = 0; i < n; ++i)
        if (in[i]) best.push_back(i);
    }
  }
  if (best_count < config.min_sample) throw DegenerateError("RANSAC found no non-degenerate consensus set");

  const LineFit final_fit = fit_subset(s.x, s.y, best);
  fit.alpha = std::exp(final_fit.intercept);
  fit.beta = final_fit.slope;
  fit.alpha_ci = {fit.alpha, fit.alpha};
  fit.beta_ci = {fit.beta, fit.beta};
  for (Eigen::Index k : best) fit.inliers[s.index[static_cast<std::size_t>(k)]] = true;
  return fit;
}

void bootstrap_ci(const Vec& sigma, const Vec& rho, PowerLawFit& fit, const BootstrapConfig& config,
                  std::uint64_t seed) {
  if (fit.inliers.size() != sigma.size() || fit.included.size() != sigma.size() || sigma.size() != rho.size())
    throw InputError("bootstrap inputs do not match the fit");
  if (!(config.level > 0 && config.level < 1)) throw InputError("confidence level must lie in (0, 1)");
  if (fit.n_inliers() < config.min_inliers)
    throw InsufficientDataError("bootstrap needs at least " + std::to_string(config.min_inliers) + " inliers");
  // Cases are drawn from every included sample and the whole robust fit is
  // repeated per resample with the residual threshold held fixed.
  const LogSamples s = log_samples(sigma, rho, fit.included);
  const Eigen::Index m = s.x.size();
  RansacConfig ransac = config.ransac;
  ransac.threshold = fit.residual_threshold;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, m - 1);
  std::vector<double> log_alpha, beta;
  log_alpha.reserve(static_cast<std::size_t>(config.resamples));
  beta.reserve(static_cast<std::size_t>(config.resamples));
  Vec xs(m), ys(m);
  int attempts = 0;
  while (static_cast<int>(beta.size()) < config.resamples) {
    if (++attempts > 10 * config.resamples + 100) throw DegenerateError("bootstrap resamples are all degenerate");
    for (Eigen::Index k = 0; k < m; ++k) {
      Eigen::Index j = s.index[static_cast<std::size_t>(pick(rng))];
      xs[k] = sigma[j];
      ys[k] = rho[j];
    }
    try {
      const PowerLawFit f = ransac_powerlaw_fit(xs, ys, ransac, derive_seed(seed, static_cast<std::uint64_t>(attempts)));
      log_alpha.push_back(std::log(f.alpha));
      beta.push_back(f.beta);
    } catch (const DegenerateError&) {
    } catch (const InsufficientDataError&) {
    }
  }
  std::sort(log_alpha.begin(), log_alpha.end());
  std::sort(beta.begin(), beta.end());
  const double tail = 0.5 * (1.0 - config.level);
  // Percentile bounds are widened to the point estimate when rounding puts
  // the estimate outside a degenerate interval.
  fit.alpha_ci = {std::min(fit.alpha, std::exp(quantile_sorted(log_alpha, tail))),
                  std::max(fit.alpha, std::exp(quantile_sorted(log_alpha, 1.0 - tail)))};
  fit.beta_ci = {std::min(fit.beta, quantile_sorted(beta, tail)), std::max(fit.beta, quantile_sorted(beta, 1.0 - tail))};
}

Vec predict_static(const PowerLawFit& fit, const Vec& sigma) {
  Vec out(sigma.size());
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma[i] < 0) throw InputError("negative presence density");
    out[i] = fit.alpha * std::pow(sigma[i], fit.beta);
  }
  return out;
}

FitMetrics evaluate_static(const PowerLawFit& fit, const Vec& sigma, const Vec& rho) {
  if (sigma.size() != rho.size()) throw InputError("sigma and rho lengths differ");
  return metrics_on(fit, sigma, rho, Mask::Constant(sigma.size(), true));
}

std::vector<CellIndex> persistent_outlier_cells(std::span<const PowerLawFit> daily_fits, double threshold) {
  if (daily_fits.size() < 5) throw InsufficientDataError("persistent outlier detection needs at least 5 daily fits");
  if (!(threshold >= 0 && threshold <= 1)) throw InputError("persistence threshold must lie in [0, 1]");
  const Eigen::Index cells = daily_fits.front().inliers.size();
  Eigen::VectorXi outlying = Eigen::VectorXi::Zero(cells);
  for (const auto& f : daily_fits) {
    if (f.inliers.size() != cells || f.included.size() != cells)
      throw InputError("daily fits cover different cell sets");
    outlying += (f.included && !f.inliers).cast<int>().matrix();
  }
  std::vector<CellIndex> out;
  const double days = static_cast<double>(daily_fits.size());
  for (Eigen::Index i = 0; i < cells; ++i)
    if (outlying[i] > 0 && static_cast<double>(outlying[i]) / days >= threshold) out.push_back(static_cast<CellIndex>(i));
  return out;
}

DailyDensity daily_mean_density(const PresenceSeries& presence) {
  DailyDensity out;
  out.days = presence.axis.days();
  out.values = Mat::Constant(presence.cells(), static_cast<Eigen::Index>(out.days.size()),
                             std::numeric_limits<double>::quiet_NaN());
  Mat sum = Mat::Zero(out.values.rows(), out.values.cols());
  Eigen::MatrixXi n = Eigen::MatrixXi::Zero(out.values.rows(), out.values.cols());
  for (Eigen::Index k = 0; k < presence.axis.size(); ++k) {
    Day d = day_of(presence.axis.starts[static_cast<std::size_t>(k)]);
    auto col = static_cast<Eigen::Index>(std::lower_bound(out.days.begin(), out.days.end(), d) - out.days.begin());
    for (Eigen::Index i = 0; i < presence.cells(); ++i)
      if (!presence.missing(i, k)) {
        sum(i, col) += presence.densities(i, k);
        n(i, col) += 1;
      }
  }
  for (Eigen::Index i = 0; i < sum.rows(); ++i)
    for (Eigen::Index d = 0; d < sum.cols(); ++d)
      if (n(i, d) > 0) out.values(i, d) = sum(i, d) / n(i, d);
  return out;
}

Vec nan_mean_columns(const Mat& values, std::span<const Eigen::Index> columns) {
  Vec out(values.rows());
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    double sum = 0.0;
    int n = 0;
    for (Eigen::Index c : columns)
      if (std::isfinite(values(i, c))) {
        sum += values(i, c);
        ++n;
      }
    out[i] = n ? sum / n : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

StaticModel train_static_model(const DailyDensity& daily, const Vec& rho, const Mask& training_cells,
                               const Mask& evaluation_cells, const StaticTrainingConfig& config, std::uint64_t seed) {
  const Eigen::Index cells = rho.size();
  if (daily.values.rows() != cells || training_cells.size() != cells || evaluation_cells.size() != cells)
    throw InputError("training inputs cover different cell sets");
  const auto n_days = static_cast<Eigen::Index>(daily.days.size());
  if (n_days < config.folds) throw InsufficientDataError("fewer retained days than cross-validation folds");
  const double nan = std::numeric_limits<double>::quiet_NaN();

  auto restrict_to = [&](Vec sigma, const Mask& keep) {
    for (Eigen::Index i = 0; i < cells; ++i)
      if (!keep[i]) sigma[i] = nan;
    return sigma;
  };

  StaticModel model;
  Mask fit_cells = training_cells;
  std::uint64_t stream = 0;
  if (n_days >= config.min_daily_fits) {
    for (Eigen::Index d = 0; d < n_days; ++d) {
      Vec sigma = restrict_to(daily.values.col(d), training_cells);
      try {
        model.daily_fits.push_back(ransac_powerlaw_fit(sigma, rho, config.ransac, derive_seed(seed, stream++)));
      } catch (const InsufficientDataError&) {
      }
    }
    if (static_cast<Eigen::Index>(model.daily_fits.size()) >= config.min_daily_fits) {
      model.persistent_outliers = persistent_outlier_cells(model.daily_fits, config.persistence);
      for (CellIndex c : model.persistent_outliers) fit_cells[c] = false;
    }
  }

  // Contiguous, nearly equal blocks of days.
  for (int f = 0; f < config.folds; ++f) {
    const Eigen::Index lo = n_days * f / config.folds;
    const Eigen::Index hi = n_days * (f + 1) / config.folds;
    std::vector<Eigen::Index> train_cols, test_cols;
    for (Eigen::Index d = 0; d < n_days; ++d) (d >= lo && d < hi ? test_cols : train_cols).push_back(d);
    FoldResult fold;
    fold.fold = f;
    for (Eigen::Index d : test_cols) fold.test_days.push_back(daily.days[static_cast<std::size_t>(d)]);
    Vec sigma_train = restrict_to(nan_mean_columns(daily.values, train_cols), fit_cells);
    fold.fit = ransac_powerlaw_fit(sigma_train, rho, config.ransac, derive_seed(seed, stream++));
    fold.train = metrics_on(fold.fit, sigma_train, rho, fold.fit.inliers);
    Vec sigma_test = nan_mean_columns(daily.values, test_cols);
    fold.test = metrics_on(fold.fit, sigma_test, rho, evaluation_cells);
    model.folds.push_back(std::move(fold));
  }

  std::vector<Eigen::Index> all(static_cast<std::size_t>(n_days));
  for (Eigen::Index d = 0; d < n_days; ++d) all[static_cast<std::size_t>(d)] = d;
  Vec sigma_all = restrict_to(nan_mean_columns(daily.values, all), fit_cells);
  model.fit = ransac_powerlaw_fit(sigma_all, rho, config.ransac, derive_seed(seed, stream++));
  BootstrapConfig bootstrap = config.bootstrap;
  bootstrap.ransac = config.ransac;
  bootstrap_ci(sigma_all, rho, model.fit, bootstrap, derive_seed(seed, stream++));
  model.train = metrics_on(model.fit, sigma_all, rho, model.fit.inliers);
  return model;
}

}  // namespace popdense
