#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "smile/rng.hpp"
#include "smile/solver.hpp"

using smile::CoefTriple;
using smile::GroupClass;
using smile::GroupedDesign;
using smile::PenaltySpec;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

//! n rows, n_scalar scalar groups and n_spline groups of width spline_dim,
//! standard normal entries.
GroupedDesign random_design(smile::Rng& rng, int n, int n_scalar, int n_spline,
                            int spline_dim) {
  GroupedDesign design;
  for (int k = 0; k < n_scalar; ++k) {
    Eigen::VectorXd col(n);
    for (int i = 0; i < n; ++i) col[i] = rng.normal();
    design.add_scalar("s" + std::to_string(k), GroupClass::z_linear, col);
  }
  for (int l = 0; l < n_spline; ++l) {
    Eigen::MatrixXd cols(n, spline_dim);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < spline_dim; ++j) cols(i, j) = rng.normal();
    }
    design.add_block("g" + std::to_string(l), GroupClass::x_spline, cols);
  }
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = rng.normal();
  design.set_response(y);
  design.finalize();
  return design;
}

// Direct subgradient-condition evaluation, independent of the library path.
double kkt_oracle(const GroupedDesign& design, const PenaltySpec& pen,
                  const Eigen::VectorXd& flat) {
  const Eigen::VectorXd r = design.response() - design.matrix() * flat;
  double worst = 0.0;
  for (std::size_t m = 0; m < design.groups().size(); ++m) {
    const auto& g = design.groups()[m];
    const double w = pen.weight(static_cast<Eigen::Index>(m));
    const Eigen::VectorXd grad =
        design.matrix().middleCols(g.offset, g.dim).transpose() * r;
    const Eigen::VectorXd seg = flat.segment(g.offset, g.dim);
    if (seg.norm() > 0.0) {
      if (std::isinf(w)) return kInf;
      worst = std::max(worst,
                       (grad - pen.lambda_for(g.cls) * w * seg / seg.norm()).norm());
    } else if (!std::isinf(w)) {
      worst = std::max(worst, std::max(grad.norm() - pen.lambda_for(g.cls) * w, 0.0));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("group soft threshold") {
  Eigen::VectorXd z(2);
  z << 3, 4;
  CHECK((smile::group_soft_threshold(z, 0.0) - z).norm() == 0.0);
  CHECK(smile::group_soft_threshold(z, 5.0).norm() == 0.0);
  CHECK(smile::group_soft_threshold(z, 6.0).norm() == 0.0);
  const Eigen::VectorXd s = smile::group_soft_threshold(z, 2.5);
  CHECK(s[0] == Catch::Approx(1.5));
  CHECK(s[1] == Catch::Approx(2.0));
}

TEST_CASE("qr factors reproduce blocks") {
  smile::Rng rng(smile::Seed{101});
  const auto design = random_design(rng, 40, 3, 2, 4);
  for (const auto& g : design.groups()) {
    const Eigen::MatrixXd rebuilt = g.q * g.r;
    REQUIRE((rebuilt - design.block(g)).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("unpenalized fit equals QR least squares") {
  smile::Rng rng(smile::Seed{103});
  const auto design = random_design(rng, 50, 8, 3, 4);
  const auto theta = smile::fit_penalized(design, PenaltySpec::uniform(0.0),
                                          design.zero_coefs(), 1e-10, 50000);
  const Eigen::VectorXd flat = design.flatten(theta);
  const Eigen::VectorXd ls = design.matrix().householderQr().solve(design.response());
  CHECK((flat - ls).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("lambda above lambda_max yields the null model") {
  smile::Rng rng(smile::Seed{107});
  const auto design = random_design(rng, 30, 5, 2, 3);
  double lambda_max = 0.0;
  for (const auto& g : design.groups()) {
    lambda_max = std::max(lambda_max,
                          (design.block(g).transpose() * design.response()).norm());
  }
  const auto theta = smile::fit_penalized(design, PenaltySpec::uniform(1.01 * lambda_max),
                                          design.zero_coefs());
  CHECK(design.flatten(theta).norm() == 0.0);
}

TEST_CASE("single orthonormal group has the soft-threshold solution") {
  smile::Rng rng(smile::Seed{109});
  const int n = 30, d = 4;
  Eigen::MatrixXd raw(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) raw(i, j) = rng.normal();
  }
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, d);

  GroupedDesign design;
  design.add_block("g", GroupClass::x_spline, q);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = rng.normal();
  design.set_response(y);
  design.finalize();

  const double lambda = 0.4 * (q.transpose() * y).norm();
  PenaltySpec pen;
  pen.lambda_xs = lambda;
  const auto theta = smile::fit_penalized(design, pen, design.zero_coefs(), 1e-10, 10000);
  const Eigen::VectorXd expect = smile::group_soft_threshold(q.transpose() * y, lambda);
  CHECK((design.flatten(theta) - expect).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("kkt residual examples and oracle") {
  smile::Rng rng(smile::Seed{113});
  auto design = random_design(rng, 20, 6, 8, 3);  // 6 + 24 = 30 columns

  PenaltySpec huge = PenaltySpec::uniform(1e9);
  CHECK(smile::kkt_residual(design, huge, design.zero_coefs()) == 0.0);

  PenaltySpec pen;
  pen.lambda_z = 0.7;
  pen.lambda_xs = 1.3;
  pen.weights = Eigen::VectorXd::Ones(14);
  pen.weights[3] = 2.5;
  pen.weights[9] = 0.4;
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd flat(design.total_cols());
    for (Eigen::Index j = 0; j < flat.size(); ++j) {
      flat[j] = rng.bernoulli(0.3) ? 0.0 : rng.normal();
    }
    // zero a couple of whole groups so both KKT branches are exercised
    flat.segment(design.groups()[7].offset, design.groups()[7].dim).setZero();
    flat[design.groups()[1].offset] = 0.0;
    const double lib = smile::kkt_residual(design, pen, design.unflatten(flat));
    const double oracle = kkt_oracle(design, pen, flat);
    REQUIRE(lib == Catch::Approx(oracle).margin(1e-12));
  }
}

TEST_CASE("solver output certifies against its own KKT system") {
  smile::Rng rng(smile::Seed{127});
  for (int rep = 0; rep < 10; ++rep) {
    auto design = random_design(rng, 40, 10, 4, 3);
    PenaltySpec pen;
    pen.lambda_z = 0.5 + rng.uniform01();
    pen.lambda_xs = 0.5 + rng.uniform01();
    const double tol = 1e-8;
    const auto theta = smile::fit_penalized(design, pen, design.zero_coefs(), tol);
    REQUIRE(smile::kkt_residual(design, pen, theta) <= 10 * tol);
  }
}

TEST_CASE("adaptive weights") {
  smile::Rng rng(smile::Seed{131});
  auto design = random_design(rng, 20, 1, 1, 2);
  CoefTriple t = design.zero_coefs();
  t.alpha[0] = 0.5;
  t.gamma[0] << 0.6, 0.8;  // unit Euclidean norm
  const Eigen::VectorXd w = smile::adaptive_weights(design, t);
  CHECK(w[0] == Catch::Approx(2.0));
  CHECK(w[1] == Catch::Approx(1.0));
  t.gamma[0] << 0.48, 0.64;  // norm 0.8
  CHECK(smile::adaptive_weights(design, t)[1] == Catch::Approx(1.25));

  t.alpha[0] = 0.0;
  const Eigen::VectorXd w2 = smile::adaptive_weights(design, t);
  CHECK(std::isinf(w2[0]));

  // excluded groups stay exactly zero through a fit
  PenaltySpec pen;
  pen.lambda_z = 0.01;
  pen.lambda_xs = 0.01;
  pen.weights = w2;
  const auto fit = smile::fit_penalized(design, pen, design.zero_coefs());
  CHECK(fit.alpha[0] == 0.0);
  CHECK(fit.gamma[0].norm() > 0.0);
}

TEST_CASE("lambda path") {
  smile::Rng rng(smile::Seed{137});
  auto design = random_design(rng, 25, 4, 2, 3);
  const Eigen::VectorXd grid = smile::lambda_path(design, {}, 2);
  double lambda_max = 0.0;
  for (const auto& g : design.groups()) {
    lambda_max = std::max(lambda_max,
                          (design.block(g).transpose() * design.response()).norm());
  }
  CHECK(grid[0] == Catch::Approx(lambda_max));
  CHECK(grid[1] == Catch::Approx(1e-4 * lambda_max));

  const Eigen::VectorXd grid50 = smile::lambda_path(design, {}, 50);
  for (int i = 1; i < 50; ++i) REQUIRE(grid50[i] < grid50[i - 1]);

  Eigen::VectorXd all_inf = Eigen::VectorXd::Constant(6, kInf);
  CHECK_THROWS_AS(smile::lambda_path(design, all_inf, 10), smile::AllGroupsExcluded);

  GroupedDesign one;
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(5, 2);
  one.add_block("g", GroupClass::x_spline, q);
  Eigen::VectorXd y(5);
  y << 1, 2, 3, 4, 5;
  one.set_response(y);
  one.finalize();
  CHECK(smile::lambda_path(one, {}, 2)[0] ==
        Catch::Approx((q.transpose() * y).norm()));
}

TEST_CASE("warm starts never lose to cold starts") {
  smile::Rng rng(smile::Seed{139});
  auto design = random_design(rng, 40, 8, 4, 3);
  const Eigen::VectorXd grid = smile::lambda_path(design, {}, 12);
  CoefTriple warm = design.zero_coefs();
  for (int i = 0; i < grid.size(); ++i) {
    const PenaltySpec pen = PenaltySpec::uniform(grid[i]);
    warm = smile::fit_penalized(design, pen, warm);
    const auto cold = smile::fit_penalized(design, pen, design.zero_coefs());
    const double warm_obj = smile::penalized_objective(design, pen, warm);
    const double cold_obj = smile::penalized_objective(design, pen, cold);
    REQUIRE(warm_obj <= cold_obj + 1e-10 * (1.0 + std::fabs(cold_obj)));
  }
}

TEST_CASE("group order permutation leaves coefficients unchanged") {
  smile::Rng rng(smile::Seed{149});
  const int n = 35;
  std::vector<Eigen::MatrixXd> blocks;
  for (int l = 0; l < 6; ++l) {
    Eigen::MatrixXd cols(n, 3);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < 3; ++j) cols(i, j) = rng.normal();
    }
    blocks.push_back(cols);
  }
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = rng.normal();

  GroupedDesign a, b;
  const int perm[6] = {4, 2, 0, 5, 1, 3};
  for (int l = 0; l < 6; ++l) {
    a.add_block("g" + std::to_string(l), GroupClass::x_spline, blocks[l]);
    b.add_block("g" + std::to_string(perm[l]), GroupClass::x_spline, blocks[perm[l]]);
  }
  a.set_response(y);
  b.set_response(y);
  a.finalize();
  b.finalize();

  const PenaltySpec pen = PenaltySpec::uniform(2.0);
  const auto ta = smile::fit_penalized(a, pen, a.zero_coefs(), 1e-9);
  const auto tb = smile::fit_penalized(b, pen, b.zero_coefs(), 1e-9);
  for (int l = 0; l < 6; ++l) {
    int slot_in_b = -1;
    for (int m = 0; m < 6; ++m) {
      if (perm[m] == l) slot_in_b = m;
    }
    REQUIRE((ta.gamma[l] - tb.gamma[slot_in_b]).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("solution beats random feasible points") {
  smile::Rng rng(smile::Seed{151});
  auto design = random_design(rng, 30, 0, 5, 3);
  PenaltySpec pen;
  pen.lambda_xs = 1.5;
  const auto theta = smile::fit_penalized(design, pen, design.zero_coefs());
  const double best = smile::penalized_objective(design, pen, theta);
  CoefTriple probe = design.zero_coefs();
  for (int rep = 0; rep < 10000; ++rep) {
    for (auto& g : probe.gamma) {
      for (Eigen::Index j = 0; j < g.size(); ++j) {
        g[j] = rng.normal(0.0, rep % 2 == 0 ? 0.05 : 1.0);
      }
    }
    REQUIRE(smile::penalized_objective(design, pen, probe) >= best - 1e-10);
  }
}

TEST_CASE("fit propagates invalid arguments") {
  smile::Rng rng(smile::Seed{157});
  auto design = random_design(rng, 20, 2, 1, 2);
  CHECK_THROWS_AS(
      smile::fit_penalized(design, PenaltySpec::uniform(1.0), design.zero_coefs(), 0.0),
      smile::InvalidArgs);
}
