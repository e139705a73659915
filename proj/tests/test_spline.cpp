#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "smile/rng.hpp"
#include "smile/spline.hpp"

using smile::KnotVector;

namespace {

// Independent order-2 (linear hat) basis for the oracle check: hats over
// knots {a, t1, ..., tN, b}, evaluated directly from the piecewise-linear
// definition rather than any recursion.
double hat_value(const std::vector<double>& knots, std::size_t j, double x) {
  const double left = j == 0 ? knots.front() : knots[j - 1];
  const double mid = knots[j];
  const double right = j + 1 == knots.size() ? knots.back() : knots[j + 1];
  if (x < left || x > right) return 0.0;
  if (x == mid) return 1.0;
  if (x < mid) return left == mid ? 0.0 : (x - left) / (mid - left);
  return right == mid ? 0.0 : (right - x) / (right - mid);
}

}  // namespace

TEST_CASE("place_knots quantile examples") {
  Eigen::VectorXd x9(9);
  x9 << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  auto kv = smile::place_knots(x9, 1);
  CHECK(kv.interior[0] == Catch::Approx(5.0));
  CHECK(kv.a == Catch::Approx(1.0));
  CHECK(kv.b == Catch::Approx(9.0));

  Eigen::VectorXd x11(11);
  for (int i = 0; i <= 10; ++i) x11[i] = i;
  CHECK(smile::place_knots(x11, 1).interior[0] == Catch::Approx(5.0));

  Eigen::VectorXd grid(101);
  for (int i = 0; i <= 100; ++i) grid[i] = i / 100.0;
  auto kv3 = smile::place_knots(grid, 3);
  CHECK(kv3.interior[0] == Catch::Approx(0.25));
  CHECK(kv3.interior[1] == Catch::Approx(0.50));
  CHECK(kv3.interior[2] == Catch::Approx(0.75));
}

TEST_CASE("place_knots degenerate input") {
  Eigen::VectorXd constant = Eigen::VectorXd::Ones(20);
  CHECK_THROWS_AS(smile::place_knots(constant, 1), smile::DegenerateColumn);
  Eigen::VectorXd three(3);
  three << 1, 2, 3;
  CHECK_THROWS_AS(smile::place_knots(three, 2), smile::DegenerateColumn);
  CHECK_THROWS_AS(smile::place_knots(three, 0), smile::InvalidN);
}

TEST_CASE("constant basis single-knot example") {
  Eigen::VectorXd x(4);
  x << 1, 2, 3, 4;
  KnotVector kv;
  kv.a = 1;
  kv.b = 4;
  kv.interior.resize(1);
  kv.interior << 2.5;
  const auto block = smile::constant_basis(x, kv);
  REQUIRE(block.size() == 1);
  CHECK(block.values(0, 0) == Catch::Approx(-1.0));
  CHECK(block.values(1, 0) == Catch::Approx(-1.0));
  CHECK(block.values(2, 0) == Catch::Approx(1.0));
  CHECK(block.values(3, 0) == Catch::Approx(1.0));
}

TEST_CASE("constant basis empty bin") {
  Eigen::VectorXd x(4);
  x << 0.0, 0.1, 0.9, 1.0;
  KnotVector kv;
  kv.a = 0;
  kv.b = 1;
  kv.interior.resize(2);
  kv.interior << 0.4, 0.6;  // middle bin has no points
  CHECK_THROWS_AS(smile::constant_basis(x, kv), smile::EmptyBin);
}

TEST_CASE("basis columns are centered and standardized") {
  smile::Rng rng(smile::Seed{31});
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 40 + static_cast<int>(rng.next_u64() % 160);
    const int knots = 2 + static_cast<int>(rng.next_u64() % 7);
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = rng.uniform(-1.0, 2.0);
    const auto kv = smile::place_knots(x, knots);

    const auto cb = smile::constant_basis(x, kv);
    for (Eigen::Index j = 0; j < cb.size(); ++j) {
      REQUIRE(std::fabs(cb.values.col(j).mean()) <= 1e-10);
      REQUIRE(std::fabs(cb.values.col(j).squaredNorm() / n - 1.0) <= 1e-10);
    }

    const int order = 2 + static_cast<int>(rng.next_u64() % 3);
    const auto bb = smile::bspline_basis(x, kv, order);
    REQUIRE(bb.size() == knots + order - 1);
    for (Eigen::Index j = 0; j < bb.size(); ++j) {
      REQUIRE(std::fabs(bb.values.col(j).mean()) <= 1e-10);
      REQUIRE(std::fabs(bb.values.col(j).squaredNorm() / n - 1.0) <= 1e-10);
    }
  }
}

TEST_CASE("constant basis is piecewise constant and permutation equivariant") {
  smile::Rng rng(smile::Seed{57});
  const int n = 80;
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = rng.uniform(0.0, 1.0);
  const auto kv = smile::place_knots(x, 4);
  const auto block = smile::constant_basis(x, kv);

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (kv.bin(x[i]) == kv.bin(x[j])) {
        REQUIRE(block.values.row(i) == block.values.row(j));
      }
    }
  }

  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = (i * 37 + 11) % n;
  Eigen::VectorXd xp(n);
  for (int i = 0; i < n; ++i) xp[i] = x[perm[i]];
  const auto blockp = smile::constant_basis(xp, kv);
  for (int i = 0; i < n; ++i) {
    REQUIRE((blockp.values.row(i) - block.values.row(perm[i])).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("raw b-spline rows are a nonnegative partition of unity") {
  smile::Rng rng(smile::Seed{91});
  Eigen::VectorXd x(60);
  for (int i = 0; i < 60; ++i) x[i] = rng.uniform(-2.0, 3.0);
  const auto kv = smile::place_knots(x, 5);
  for (int order = 2; order <= 4; ++order) {
    for (int i = 0; i < 60; ++i) {
      const Eigen::VectorXd row = smile::detail::bspline_raw_row(kv, order, x[i]);
      REQUIRE(row.minCoeff() >= 0.0);
      REQUIRE(row.sum() == Catch::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("order-2 basis matches the direct hat-function oracle") {
  Eigen::VectorXd x(41);
  for (int i = 0; i <= 40; ++i) x[i] = i / 40.0;
  KnotVector kv;
  kv.a = 0;
  kv.b = 1;
  kv.interior.resize(1);
  kv.interior << 0.5;
  const std::vector<double> hk = {0.0, 0.5, 1.0};

  const auto block = smile::bspline_basis(x, kv, 2);
  REQUIRE(block.size() == 2);
  const int n = static_cast<int>(x.size());
  for (std::size_t j = 1; j < hk.size(); ++j) {  // first raw column dropped
    Eigen::VectorXd raw(n);
    for (int i = 0; i < n; ++i) raw[i] = hat_value(hk, j, x[i]);
    const Eigen::VectorXd centered = raw.array() - raw.mean();
    const Eigen::VectorXd expect = centered / std::sqrt(centered.squaredNorm() / n);
    REQUIRE((block.values.col(j - 1) - expect).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("cubic basis with four knots has seven columns") {
  smile::Rng rng(smile::Seed{13});
  Eigen::VectorXd x(200);
  for (int i = 0; i < 200; ++i) x[i] = rng.uniform(-0.5, 0.5);
  const auto kv = smile::place_knots(x, 4);
  const auto block = smile::bspline_basis(x, kv, 4);
  CHECK(block.size() == 7);
}

TEST_CASE("bspline_basis rejects unsupported orders") {
  Eigen::VectorXd x(30);
  for (int i = 0; i < 30; ++i) x[i] = i;
  const auto kv = smile::place_knots(x, 2);
  CHECK_THROWS_AS(smile::bspline_basis(x, kv, 1), smile::UnsupportedOrder);
  CHECK_THROWS_AS(smile::bspline_basis(x, kv, 5), smile::UnsupportedOrder);
}

TEST_CASE("basis evaluation reproduces training rows") {
  smile::Rng rng(smile::Seed{73});
  Eigen::VectorXd x(90);
  for (int i = 0; i < 90; ++i) x[i] = rng.uniform(0.0, 1.0);
  const auto kv = smile::place_knots(x, 3);

  const auto cb = smile::constant_basis(x, kv);
  const auto bb = smile::bspline_basis(x, kv, 4);
  for (int i = 0; i < 90; ++i) {
    REQUIRE((cb.eval(x[i]).transpose() - cb.values.row(i)).cwiseAbs().maxCoeff() <= 1e-12);
    REQUIRE((bb.eval(x[i]).transpose() - bb.values.row(i)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("cubic second derivative matches finite differences") {
  smile::Rng rng(smile::Seed{77});
  Eigen::VectorXd x(150);
  for (int i = 0; i < 150; ++i) x[i] = rng.uniform(0.0, 1.0);
  const auto kv = smile::place_knots(x, 4);
  const auto bb = smile::bspline_basis(x, kv, 4);
  Eigen::VectorXd coef(bb.size());
  for (Eigen::Index j = 0; j < coef.size(); ++j) coef[j] = rng.normal();

  const double eps = 1e-5;
  for (double t : {0.2, 0.35, 0.55, 0.8}) {
    const double fd = (bb.fitted_value(t + eps, coef) - 2.0 * bb.fitted_value(t, coef) +
                       bb.fitted_value(t - eps, coef)) /
                      (eps * eps);
    CHECK(bb.fitted_d2(t, coef) == Catch::Approx(fd).margin(5e-3));
  }
}

TEST_CASE("rule-of-thumb interior knot count") {
  CHECK(smile::rule_of_thumb_knots(500, 4, 3) == 14);
  CHECK(smile::rule_of_thumb_knots(100, 2, 10) == 3);
  CHECK(smile::rule_of_thumb_knots(100, 4, 100) == 1);
  CHECK_THROWS_AS(smile::rule_of_thumb_knots(4, 4, 1), smile::InvalidArgs);
}
