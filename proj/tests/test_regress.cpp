#include "support.hpp"

#include "popdense/regress.hpp"

#include <random>

using namespace popdense;

namespace {

struct Sample {
  Vec sigma;
  Vec rho;
  Mask outlier;
};

// rho = alpha * sigma^beta * lognormal(noise), with a fraction of gross outliers.
Sample power_law(std::uint64_t seed, Eigen::Index n, double alpha, double beta, double noise, double outliers) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> logs(std::log(5.0), std::log(5000.0));
  std::normal_distribution<double> eps(0.0, 1.0);
  std::bernoulli_distribution gross(outliers);
  std::uniform_real_distribution<double> jump(3.0, 6.0);
  Sample s{Vec(n), Vec(n), Mask::Constant(n, false)};
  for (Eigen::Index i = 0; i < n; ++i) {
    s.sigma[i] = std::exp(logs(rng));
    double log_rho = std::log(alpha) + beta * std::log(s.sigma[i]) + noise * eps(rng);
    if (gross(rng)) {
      s.outlier[i] = true;
      log_rho += jump(rng);
    }
    s.rho[i] = std::exp(log_rho);
  }
  return s;
}

// Ordinary least squares in log space over the selected samples.
LineFit log_ls(const Sample& s, const Mask& use) {
  std::vector<double> x, y;
  for (Eigen::Index i = 0; i < s.sigma.size(); ++i)
    if (use[i]) {
      x.push_back(std::log(s.sigma[i]));
      y.push_back(std::log(s.rho[i]));
    }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return {my - sxy / sxx * mx, sxy / sxx};
}

}  // namespace

TEST_SUITE("regress") {

TEST_CASE("pearson") {
  Vec x(3), y(3);
  x << 1, 2, 3;
  CHECK(pearson(x, Vec(2 * x)) == doctest::Approx(1.0));
  CHECK(pearson(x, Vec((-x).array() + 7)) == doctest::Approx(-1.0));
  y << 1, 3, 2;
  CHECK(pearson(x, y) == doctest::Approx(0.5));
  CHECK_THROWS_AS(pearson(x, Vec(Vec::Ones(3))), DegenerateError);
}

TEST_CASE("metrics") {
  Vec rho(3), hat(3);
  rho << 1, 2, 3;
  hat << 1, 2, 4;
  CHECK(r_squared(rho, rho) == 1.0);
  CHECK(r_squared(Vec(Vec::Constant(3, rho.mean())), rho) == doctest::Approx(0.0));
  CHECK(r_squared(hat, rho) == doctest::Approx(0.5));

  Vec a(2), b(2);
  a << 0, 10;
  b << 5, 5;
  CHECK(rmse(b, a) == doctest::Approx(5.0));
  CHECK(nrmse(b, a, NrmseVariant::Range) == doctest::Approx(0.5));
  CHECK(nrmse(b, a, NrmseVariant::Mean) == doctest::Approx(1.0));
  CHECK(nrmse(a, a, NrmseVariant::Range) == 0.0);
  CHECK(nrmse(a, a, NrmseVariant::Mean) == 0.0);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(1.0, 100.0);
  for (int t = 0; t < 50; ++t) {
    Vec r(20), h(20);
    for (Eigen::Index i = 0; i < 20; ++i) {
      r[i] = u(rng);
      h[i] = u(rng);
    }
    const auto m = compute_metrics(h, r);
    CHECK(std::abs(m.nrmse1 * (m.max - m.min) - m.nrmse2 * m.mean) < 1e-12 * m.nrmse2 * m.mean + 1e-12);
  }
}

TEST_CASE("ransac recovers noiseless power laws") {
  const auto s = power_law(1, 300, 3.45, 0.97, 0.0, 0.0);
  const auto fit = ransac_powerlaw_fit(s.sigma, s.rho, {}, 7);
  CHECK(std::abs(fit.alpha - 3.45) < 1e-9);
  CHECK(std::abs(fit.beta - 0.97) < 1e-9);
  CHECK(fit.n_inliers() == 300);
}

TEST_CASE("ransac with gross outliers equals least squares on the true inliers") {
  const auto s = power_law(2, 400, 3.45, 0.97, 0.0, 0.1);
  const auto fit = ransac_powerlaw_fit(s.sigma, s.rho, {}, 7);
  CHECK((fit.inliers == !s.outlier).all());
  const auto ls = log_ls(s, !s.outlier);
  CHECK(std::log(fit.alpha) == doctest::Approx(ls.intercept).epsilon(1e-12));
  CHECK(fit.beta == doctest::Approx(ls.slope).epsilon(1e-12));
}

TEST_CASE("ransac rejects degenerate input") {
  Vec sigma = Vec::Constant(30, 10.0), rho = Vec::LinSpaced(30, 1.0, 50.0);
  CHECK_THROWS_AS(ransac_powerlaw_fit(sigma, rho, {}, 1), DegenerateError);
  Vec few = Vec::LinSpaced(4, 1.0, 4.0);
  CHECK_THROWS_AS(ransac_powerlaw_fit(few, few, {}, 1), InsufficientDataError);
}

TEST_CASE("ransac properties") {
  const auto s = power_law(3, 250, 2.5, 1.02, 0.2, 0.1);
  const auto fit = ransac_powerlaw_fit(s.sigma, s.rho, {}, 99);

  SUBCASE("deterministic per seed") {
    const auto again = ransac_powerlaw_fit(s.sigma, s.rho, {}, 99);
    CHECK(again.alpha == fit.alpha);
    CHECK(again.beta == fit.beta);
    CHECK((again.inliers == fit.inliers).all());
  }
  SUBCASE("rescaling sigma shifts alpha only") {
    const double c = 7.5;
    const auto scaled = ransac_powerlaw_fit(Vec(c * s.sigma), s.rho, {}, 99);
    CHECK((scaled.inliers == fit.inliers).all());
    CHECK(scaled.beta == doctest::Approx(fit.beta).epsilon(1e-9));
    CHECK(scaled.alpha == doctest::Approx(fit.alpha * std::pow(c, -fit.beta)).epsilon(1e-9));
  }
  SUBCASE("inlier refit is least-squares optimal") {
    std::vector<double> x, y;
    for (Eigen::Index i = 0; i < s.sigma.size(); ++i)
      if (fit.inliers[i]) {
        x.push_back(std::log(s.sigma[i]));
        y.push_back(std::log(s.rho[i]));
      }
    auto sse = [&](double a, double b) {
      double e = 0;
      for (std::size_t i = 0; i < x.size(); ++i) e += std::pow(y[i] - a - b * x[i], 2);
      return e;
    };
    const double best = sse(std::log(fit.alpha), fit.beta);
    for (double da = -0.05; da <= 0.05; da += 0.01)
      for (double db = -0.02; db <= 0.02; db += 0.005) CHECK(sse(std::log(fit.alpha) + da, fit.beta + db) >= best);
  }
}

TEST_CASE("bootstrap intervals") {
  SUBCASE("noiseless data give degenerate intervals") {
    const auto s = power_law(4, 200, 3.45, 0.97, 0.0, 0.0);
    auto fit = ransac_powerlaw_fit(s.sigma, s.rho, {}, 1);
    bootstrap_ci(s.sigma, s.rho, fit, {}, 2);
    CHECK(fit.alpha_ci.hi - fit.alpha_ci.lo < 1e-6);
    CHECK(fit.beta_ci.hi - fit.beta_ci.lo < 1e-6);
  }
  SUBCASE("heteroscedastic data are covered at least 90% of the time") {
    BootstrapConfig cfg;
    cfg.resamples = 400;
    cfg.ransac.max_iterations = 200;
    int covered = 0;
    for (std::uint64_t t = 0; t < 100; ++t) {
      std::mt19937_64 rng(1000 + t);
      std::uniform_real_distribution<double> logs(std::log(5.0), std::log(5000.0));
      std::normal_distribution<double> eps(0.0, 1.0);
      Vec sigma(150), rho(150);
      for (Eigen::Index i = 0; i < 150; ++i) {
        sigma[i] = std::exp(logs(rng));
        const double spread = 0.05 + 0.04 * std::log(sigma[i]);
        rho[i] = 3.45 * std::pow(sigma[i], 0.97) * std::exp(spread * eps(rng));
      }
      auto fit = ransac_powerlaw_fit(sigma, rho, {}, t);
      bootstrap_ci(sigma, rho, fit, cfg, t + 1);
      if (fit.beta_ci.lo <= 0.97 && 0.97 <= fit.beta_ci.hi) ++covered;
    }
    CHECK(covered >= 90);
  }
}

TEST_CASE("persistent outliers") {
  const Eigen::Index cells = 3;
  std::vector<PowerLawFit> days(10);
  for (std::size_t d = 0; d < days.size(); ++d) {
    days[d].included = Mask::Constant(cells, true);
    days[d].inliers = Mask::Constant(cells, true);
    days[d].inliers[0] = false;      // outlying every day
    days[d].inliers[2] = d >= 3;     // outlying 3 of 10 days
  }
  CHECK(persistent_outlier_cells(days, 0.8) == std::vector<CellIndex>{0});
}

TEST_CASE("static evaluation") {
  const auto s = power_law(6, 200, 3.0, 1.0, 0.0, 0.0);
  const auto fit = ransac_powerlaw_fit(s.sigma, s.rho, {}, 1);
  CHECK(evaluate_static(fit, s.sigma, s.rho).r2 == doctest::Approx(1.0));

  const auto noisy = power_law(7, 200, 3.0, 1.0, 0.3, 0.0);
  Vec shuffled = noisy.rho;
  std::mt19937_64 rng(2);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  CHECK(evaluate_static(fit, noisy.sigma, shuffled).r2 < 0.2);
}

TEST_CASE("train_static_model on clean days") {
  const auto s = power_law(8, 120, 3.45, 0.97, 0.0, 0.0);
  DailyDensity daily;
  for (int d = 0; d < 9; ++d) daily.days.push_back(Day{std::chrono::days{16500 + d}});
  daily.values = s.sigma.replicate(1, 9);
  const Mask all = Mask::Constant(120, true);
  StaticTrainingConfig cfg;
  const auto model = train_static_model(daily, s.rho, all, all, cfg, 5);
  CHECK(model.fit.alpha == doctest::Approx(3.45));
  CHECK(model.fit.beta == doctest::Approx(0.97));
  REQUIRE(model.folds.size() == 3);
  for (const auto& f : model.folds) CHECK(f.test.r2 == doctest::Approx(1.0));
  CHECK(model.persistent_outliers.empty());
}

TEST_CASE("nan_mean_columns and derive_seed") {
  Mat m(2, 3);
  m << 1, std::nan(""), 3, std::nan(""), std::nan(""), std::nan("");
  std::vector<Eigen::Index> cols{0, 1, 2};
  const Vec r = nan_mean_columns(m, cols);
  CHECK(r[0] == 2.0);
  CHECK(std::isnan(r[1]));
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
}

}  // TEST_SUITE
