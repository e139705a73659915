#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "smile/errors.hpp"

namespace smile {

//! Epanechnikov kernel K(u) = 3/4 (1 - u^2) on [-1, 1].
inline double epanechnikov(double u) {
  return (u <= -1.0 || u >= 1.0) ? 0.0 : 0.75 * (1.0 - u * u);
}

//! Kernel constants entering the bias/variance and band formulas.
struct KernelSpec {
  double l2norm_sq;        // ||K||_2^2
  double mu2;              // int u^2 K(u) du
  double deriv_l2norm_sq;  // ||K'||_2^2
};

//! Exact constants for the Epanechnikov kernel:
//! ||K||_2^2 = 3/5, mu_2 = 1/5, ||K'||_2^2 = 3/2.
inline KernelSpec kernel_constants() { return {3.0 / 5.0, 1.0 / 5.0, 3.0 / 2.0}; }

struct Bandwidth {
  double h = 0.0;
};

//! Rule-of-thumb bandwidth from a global quartic pilot fit:
//!   h = [ ||K||_2^2 sigma^2 (b-a) / ( mu_2(K)^2 sum_i m''(x_i)^2 ) ]^{1/5},
//! clamped to [(b-a)/n, (b-a)/2]. Degenerate pilots hit the clamps: zero
//! residual variance gives the lower bound, zero curvature the upper.
inline Bandwidth rot_bandwidth(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  const Eigen::Index n = x.size();
  if (n < 10) throw InvalidArgs("rot_bandwidth needs n >= 10");
  const double a = x.minCoeff();
  const double b = x.maxCoeff();
  if (!(b > a)) throw DegenerateColumn("constant covariate in rot_bandwidth");

  Eigen::MatrixXd design(n, 5);
  for (Eigen::Index i = 0; i < n; ++i) {
    double v = 1.0;
    for (int j = 0; j < 5; ++j) {
      design(i, j) = v;
      v *= x[i];
    }
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 5) throw SingularPilotFit();
  const Eigen::VectorXd coef = qr.solve(y);
  const double rss = (y - design * coef).squaredNorm();
  const double sigma2 = rss / static_cast<double>(n - 5);

  double curvature = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m2 = 2.0 * coef[2] + 6.0 * coef[3] * x[i] + 12.0 * coef[4] * x[i] * x[i];
    curvature += m2 * m2;
  }

  const KernelSpec k = kernel_constants();
  const double lo = (b - a) / static_cast<double>(n);
  const double hi = (b - a) / 2.0;
  // zero curvature up to rounding in the pilot coefficients counts as the
  // degenerate flat case and takes the upper clamp
  const double y_scale2 = (y.array() - y.mean()).square().sum() / static_cast<double>(n);
  const double curv_floor = 1e-20 * static_cast<double>(n) * y_scale2 / std::pow(b - a, 4);
  double h;
  if (curvature <= curv_floor) {
    h = hi;
  } else {
    h = std::pow(k.l2norm_sq * sigma2 * (b - a) / (k.mu2 * k.mu2 * curvature), 0.2);
  }
  return {std::clamp(h, lo, hi)};
}

struct LocalFit {
  double intercept = 0.0;
  double slope = 0.0;
};

//! Weighted least-squares line through (x_i - x0, y_i) with Epanechnikov
//! weights K((x_i - x0)/h); the intercept is the local-linear estimate at x0.
inline LocalFit local_linear(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                             Bandwidth bw, double x0) {
  const double h = bw.h;
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, t0 = 0.0, t1 = 0.0;
  int in_window = 0;
  double first_x = 0.0;
  bool distinct = false;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double w = epanechnikov((x[i] - x0) / h);
    if (w <= 0.0) continue;
    if (in_window == 0) first_x = x[i];
    else if (x[i] != first_x) distinct = true;
    ++in_window;
    const double d = x[i] - x0;
    s0 += w;
    s1 += w * d;
    s2 += w * d * d;
    t0 += w * y[i];
    t1 += w * d * y[i];
  }
  if (in_window < 2 || !distinct) throw InsufficientLocalData(x0);
  const double det = s0 * s2 - s1 * s1;
  if (!(det > 0.0)) throw InsufficientLocalData(x0);
  return {(s2 * t0 - s1 * t1) / det, (s0 * t1 - s1 * t0) / det};
}

//! Kernel density estimate with the same kernel and bandwidth as the
//! regression step.
inline double kernel_density(const Eigen::VectorXd& x, Bandwidth bw, double x0) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) acc += epanechnikov((x[i] - x0) / bw.h);
  return acc / (static_cast<double>(x.size()) * bw.h);
}

}  // namespace smile
