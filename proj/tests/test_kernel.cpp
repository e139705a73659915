#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "smile/kernel.hpp"
#include "smile/rng.hpp"

namespace {

// Composite Simpson oracle on [-1, 1]; plenty for 1e-10 on smooth integrands.
template <typename F>
double simpson(F f, int panels = 4000) {
  const double a = -1.0, b = 1.0;
  const double h = (b - a) / panels;
  double acc = f(a) + f(b);
  for (int i = 1; i < panels; ++i) acc += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

}  // namespace

TEST_CASE("epanechnikov point values") {
  CHECK(smile::epanechnikov(0.0) == Catch::Approx(0.75));
  CHECK(smile::epanechnikov(1.0) == 0.0);
  CHECK(smile::epanechnikov(-1.0) == 0.0);
  CHECK(smile::epanechnikov(1.5) == 0.0);
  CHECK(smile::epanechnikov(0.5) == Catch::Approx(0.5625));
}

TEST_CASE("kernel symmetry") {
  smile::Rng rng(smile::Seed{5});
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform(-2.0, 2.0);
    REQUIRE(smile::epanechnikov(u) == smile::epanechnikov(-u));
  }
}

TEST_CASE("kernel constants match quadrature") {
  const auto k = smile::kernel_constants();
  const double l2 = simpson([](double u) {
    const double v = smile::epanechnikov(u);
    return v * v;
  });
  const double mu2 = simpson([](double u) { return u * u * smile::epanechnikov(u); });
  const double dl2 = simpson([](double u) {
    const double v = -1.5 * u;  // K'(u) on the support
    return v * v;
  });
  CHECK(k.l2norm_sq == Catch::Approx(l2).margin(1e-8));
  CHECK(k.mu2 == Catch::Approx(mu2).margin(1e-8));
  CHECK(k.deriv_l2norm_sq == Catch::Approx(dl2).margin(1e-8));
  CHECK(k.l2norm_sq == Catch::Approx(0.6));
  CHECK(k.mu2 == Catch::Approx(0.2));
  CHECK(k.deriv_l2norm_sq == Catch::Approx(1.5));
}

TEST_CASE("rot bandwidth clamps") {
  const int n = 50;
  Eigen::VectorXd x(n), y(n);
  for (int i = 0; i < n; ++i) x[i] = static_cast<double>(i) / (n - 1);

  // exactly quartic response: zero residual variance, lower clamp
  for (int i = 0; i < n; ++i) y[i] = 1.0 + x[i] - 2.0 * std::pow(x[i], 4);
  CHECK(smile::rot_bandwidth(x, y).h == Catch::Approx(1.0 / n));

  // pure linear response: zero curvature, upper clamp
  smile::Rng rng(smile::Seed{3});
  for (int i = 0; i < n; ++i) y[i] = 2.0 * x[i];
  CHECK(smile::rot_bandwidth(x, y).h == Catch::Approx(0.5));
}

TEST_CASE("rot bandwidth equals the closed form") {
  smile::Rng rng(smile::Seed{17});
  const int n = 500;
  Eigen::VectorXd x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x[i] = rng.uniform(0.0, 1.0);
    y[i] = std::sin(2.0 * M_PI * x[i]) + rng.normal(0.0, 0.5);
  }

  // independent evaluation: quartic fit through normal equations
  Eigen::MatrixXd v(n, 5);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 5; ++j) v(i, j) = std::pow(x[i], j);
  }
  const Eigen::VectorXd coef = (v.transpose() * v).ldlt().solve(v.transpose() * y);
  const double sigma2 = (y - v * coef).squaredNorm() / (n - 5);
  double curv = 0.0;
  for (int i = 0; i < n; ++i) {
    const double m2 = 2 * coef[2] + 6 * coef[3] * x[i] + 12 * coef[4] * x[i] * x[i];
    curv += m2 * m2;
  }
  const double range = x.maxCoeff() - x.minCoeff();
  const double expect = std::pow(0.6 * sigma2 * range / (0.04 * curv), 0.2);

  CHECK(smile::rot_bandwidth(x, y).h == Catch::Approx(expect).epsilon(1e-12));
}

TEST_CASE("rot bandwidth is invariant to shifting y") {
  smile::Rng rng(smile::Seed{29});
  const int n = 120;
  Eigen::VectorXd x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x[i] = rng.uniform(-1.0, 1.0);
    y[i] = x[i] * x[i] + rng.normal(0.0, 0.3);
  }
  const double h1 = smile::rot_bandwidth(x, y).h;
  const double h2 = smile::rot_bandwidth(x, (y.array() + 11.5).matrix()).h;
  CHECK(h1 == Catch::Approx(h2).epsilon(1e-12));
}

TEST_CASE("rot bandwidth error paths") {
  Eigen::VectorXd x = Eigen::VectorXd::Ones(30), y = Eigen::VectorXd::Zero(30);
  CHECK_THROWS_AS(smile::rot_bandwidth(x, y), smile::DegenerateColumn);
  Eigen::VectorXd x2(30), y2(30);
  for (int i = 0; i < 30; ++i) {
    x2[i] = i % 3;  // only 3 distinct values: quartic pilot is singular
    y2[i] = i;
  }
  CHECK_THROWS_AS(smile::rot_bandwidth(x2, y2), smile::SingularPilotFit);
  CHECK_THROWS_AS(smile::rot_bandwidth(x.head(5), y.head(5)), smile::InvalidArgs);
}

TEST_CASE("local linear reproduces constants and lines") {
  smile::Rng rng(smile::Seed{41});
  const int n = 60;
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = rng.uniform(0.0, 1.0);

  const Eigen::VectorXd c = Eigen::VectorXd::Constant(n, 3.25);
  for (double x0 : {0.2, 0.5, 0.9}) {
    const auto fit = smile::local_linear(x, c, {0.3}, x0);
    CHECK(fit.intercept == Catch::Approx(3.25).margin(1e-12));
    CHECK(fit.slope == Catch::Approx(0.0).margin(1e-9));
  }

  const Eigen::VectorXd lin = 2.0 * x;
  for (double x0 : {0.3, 0.45, 0.7}) {
    const auto fit = smile::local_linear(x, lin, {0.25}, x0);
    CHECK(fit.intercept == Catch::Approx(2.0 * x0).margin(1e-10));
    CHECK(fit.slope == Catch::Approx(2.0).margin(1e-9));
  }
}

TEST_CASE("local linear matches the 2x2 normal-equation oracle") {
  Eigen::VectorXd x(7), y(7);
  x << 0.0, 0.15, 0.3, 0.45, 0.6, 0.75, 0.9;
  y << 1.0, -0.5, 0.25, 2.0, 1.5, -1.0, 0.75;
  const double h = 0.5, x0 = 0.45;

  Eigen::Matrix2d a = Eigen::Matrix2d::Zero();
  Eigen::Vector2d b = Eigen::Vector2d::Zero();
  for (int i = 0; i < 7; ++i) {
    const double w = smile::epanechnikov((x[i] - x0) / h);
    const double d = x[i] - x0;
    a(0, 0) += w;
    a(0, 1) += w * d;
    a(1, 0) += w * d;
    a(1, 1) += w * d * d;
    b[0] += w * y[i];
    b[1] += w * d * y[i];
  }
  const Eigen::Vector2d sol = a.fullPivLu().solve(b);

  const auto fit = smile::local_linear(x, y, {h}, x0);
  CHECK(fit.intercept == Catch::Approx(sol[0]).epsilon(1e-12));
  CHECK(fit.slope == Catch::Approx(sol[1]).epsilon(1e-12));
}

TEST_CASE("local linear is affine equivariant in y") {
  smile::Rng rng(smile::Seed{59});
  const int n = 80;
  Eigen::VectorXd x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x[i] = rng.uniform(0.0, 1.0);
    y[i] = std::cos(3.0 * x[i]) + rng.normal(0.0, 0.2);
  }
  const double a = -2.5, b = 0.75;
  for (double x0 : {0.25, 0.5, 0.75}) {
    const auto base = smile::local_linear(x, y, {0.2}, x0);
    const auto scaled = smile::local_linear(x, (a * y.array() + b).matrix(), {0.2}, x0);
    CHECK(scaled.intercept == Catch::Approx(a * base.intercept + b).margin(1e-10));
    CHECK(scaled.slope == Catch::Approx(a * base.slope).margin(1e-10));
  }
}

TEST_CASE("local linear insufficient data") {
  Eigen::VectorXd x(5), y(5);
  x << 0.0, 0.1, 0.2, 0.8, 0.9;
  y << 1, 2, 3, 4, 5;
  CHECK_THROWS_AS(smile::local_linear(x, y, {0.05}, 0.5), smile::InsufficientLocalData);

  Eigen::VectorXd xx = Eigen::VectorXd::Constant(5, 0.5);
  CHECK_THROWS_AS(smile::local_linear(xx, y, {0.05}, 0.5), smile::InsufficientLocalData);
}

TEST_CASE("kernel density integrates to about one") {
  smile::Rng rng(smile::Seed{67});
  const int n = 400;
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = rng.uniform(0.0, 1.0);
  const smile::Bandwidth h{0.1};
  double mass = 0.0;
  const int grid = 400;
  for (int g = 0; g <= grid; ++g) {
    const double t = -0.2 + 1.4 * g / grid;
    mass += smile::kernel_density(x, h, t) * (1.4 / grid);
  }
  CHECK(mass == Catch::Approx(1.0).margin(0.01));
}
