#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "smile/errors.hpp"

namespace smile {

//! Interior knots plus boundary for one continuous covariate.
struct KnotVector {
  Eigen::VectorXd interior;  // strictly increasing, inside (a, b)
  double a = 0.0;
  double b = 1.0;

  int count() const { return static_cast<int>(interior.size()); }

  //! Bin index in [0, N] for the N+1 subintervals; the last bin is closed at b.
  int bin(double x) const {
    const int N = count();
    int j = 0;
    while (j < N && x >= interior[j]) ++j;
    return j;
  }
};

//! Type-7 empirical quantile (linear interpolation of order statistics).
inline double quantile_type7(const Eigen::VectorXd& sorted, double p) {
  const Eigen::Index n = sorted.size();
  const double k = p * static_cast<double>(n - 1);
  const Eigen::Index lo = static_cast<Eigen::Index>(std::floor(k));
  const Eigen::Index hi = std::min(lo + 1, n - 1);
  const double frac = k - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

//! Interior knots at the j/(N+1) sample quantiles, j = 1..N; boundary at the
//! sample min/max. With quantile=false, knots are equally spaced instead.
inline KnotVector place_knots(const Eigen::VectorXd& x_col, int n_interior,
                              bool quantile = true) {
  if (n_interior < 1) throw InvalidN("interior knot count must be >= 1");
  const Eigen::Index n = x_col.size();
  std::vector<double> sorted(x_col.data(), x_col.data() + n);
  std::sort(sorted.begin(), sorted.end());
  Eigen::Index distinct = n > 0 ? 1 : 0;
  for (Eigen::Index i = 1; i < n; ++i) {
    if (sorted[i] != sorted[i - 1]) ++distinct;
  }
  if (distinct < n_interior + 2) {
    throw DegenerateColumn("need at least " + std::to_string(n_interior + 2) +
                           " distinct values, found " + std::to_string(distinct));
  }
  KnotVector kv;
  kv.a = sorted.front();
  kv.b = sorted.back();
  kv.interior.resize(n_interior);
  const Eigen::Map<const Eigen::VectorXd> sorted_view(sorted.data(), n);
  for (int j = 1; j <= n_interior; ++j) {
    kv.interior[j - 1] =
        quantile ? quantile_type7(sorted_view, static_cast<double>(j) / (n_interior + 1))
                 : kv.a + (kv.b - kv.a) * static_cast<double>(j) / (n_interior + 1);
  }
  for (int j = 0; j < n_interior; ++j) {
    const double lo = (j == 0) ? kv.a : kv.interior[j - 1];
    const double hi = kv.interior[j];
    if (!(lo < hi) || !(kv.interior[n_interior - 1] < kv.b)) {
      throw DegenerateColumn("tied knots; too many duplicate values");
    }
  }
  return kv;
}

//! One covariate's spline design block. Columns are empirically centered and
//! scaled to unit empirical second moment; the transform parameters are kept
//! so new points can be mapped consistently at prediction time.
struct BasisBlock {
  Eigen::MatrixXd values;    // n x M
  int order = 1;             // d
  KnotVector knots;
  Eigen::VectorXd col_norms;   // pre-standardization empirical L2 norms
  Eigen::VectorXd col_means;   // raw-column means subtracted (d >= 2; zero for d = 1)
  Eigen::VectorXd bin_ratios;  // d = 1 only: mass ratio of bin J to bin J-1

  Eigen::Index size() const { return values.cols(); }

  //! Basis row at a point (clamped to [a, b]), in the centered/scaled basis.
  Eigen::VectorXd eval(double x) const;
  //! Second derivative of the scaled basis at a point (d >= 3).
  Eigen::VectorXd eval_d2(double x) const;

  double fitted_value(double x, const Eigen::VectorXd& coef) const {
    return eval(x).dot(coef);
  }
  double fitted_d2(double x, const Eigen::VectorXd& coef) const {
    return eval_d2(x).dot(coef);
  }
};

namespace detail {

//! Raw order-d B-spline row by Cox-de Boor recursion on the extended knot
//! vector (boundary knots repeated d times). Returns all N+d basis values.
inline Eigen::VectorXd bspline_raw_row(const KnotVector& kv, int d, double x,
                                       int deriv = 0) {
  const int N = kv.count();
  const int n_basis = N + d;
  const int n_knots = N + 2 * d;
  Eigen::VectorXd knots(n_knots);
  for (int i = 0; i < d; ++i) knots[i] = kv.a;
  for (int i = 0; i < N; ++i) knots[d + i] = kv.interior[i];
  for (int i = 0; i < d; ++i) knots[d + N + i] = kv.b;

  double xc = std::clamp(x, kv.a, kv.b);
  // knot span index mu with knots[mu] <= xc < knots[mu+1]; right-closed at b
  int mu = d - 1;
  while (mu + 1 < n_knots - d && xc >= knots[mu + 1]) ++mu;

  // order-1 seed, then raise the order
  std::vector<Eigen::VectorXd> levels(static_cast<std::size_t>(d));
  levels[0] = Eigen::VectorXd::Zero(n_basis + d - 1);
  levels[0][mu] = 1.0;
  for (int k = 2; k <= d; ++k) {
    Eigen::VectorXd cur = Eigen::VectorXd::Zero(n_basis + d - k);
    for (int i = std::max(0, mu - k + 1); i <= mu && i < cur.size(); ++i) {
      const double den1 = knots[i + k - 1] - knots[i];
      const double den2 = knots[i + k] - knots[i + 1];
      double v = 0.0;
      if (den1 > 0.0) v += (xc - knots[i]) / den1 * levels[static_cast<std::size_t>(k - 2)][i];
      if (den2 > 0.0 && i + 1 < levels[static_cast<std::size_t>(k - 2)].size()) {
        v += (knots[i + k] - xc) / den2 * levels[static_cast<std::size_t>(k - 2)][i + 1];
      }
      cur[i] = v;
    }
    levels[static_cast<std::size_t>(k - 1)] = std::move(cur);
  }

  if (deriv == 0) return levels[static_cast<std::size_t>(d - 1)].head(n_basis);

  // derivative of order r: difference the order-(d-r) values r times
  Eigen::VectorXd vals = levels[static_cast<std::size_t>(d - deriv - 1)];
  for (int r = d - deriv + 1; r <= d; ++r) {
    Eigen::VectorXd next = Eigen::VectorXd::Zero(vals.size() - 1);
    for (int i = 0; i < next.size(); ++i) {
      const double den1 = knots[i + r - 1] - knots[i];
      const double den2 = knots[i + r] - knots[i + 1];
      double v = 0.0;
      if (den1 > 0.0) v += vals[i] / den1;
      if (den2 > 0.0 && i + 1 < vals.size()) v -= vals[i + 1] / den2;
      next[i] = static_cast<double>(r - 1) * v;
    }
    vals = std::move(next);
  }
  return vals.head(n_basis);
}

}  // namespace detail

//! Standardized piecewise-constant (order-1) spline block. Column J is the
//! bin-J indicator minus the mass-ratio multiple of the bin-(J-1) indicator,
//! scaled to unit empirical second moment; empirical column means are zero by
//! construction. Requires every knot bin to contain an observation.
inline BasisBlock constant_basis(const Eigen::VectorXd& x_col, const KnotVector& knots) {
  const Eigen::Index n = x_col.size();
  const int N = knots.count();
  Eigen::VectorXi counts = Eigen::VectorXi::Zero(N + 1);
  Eigen::VectorXi bins(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    bins[i] = knots.bin(x_col[i]);
    counts[bins[i]] += 1;
  }
  for (int j = 0; j <= N; ++j) {
    if (counts[j] == 0) throw EmptyBin(j);
  }

  BasisBlock block;
  block.order = 1;
  block.knots = knots;
  block.bin_ratios.resize(N);
  block.col_norms.resize(N);
  block.col_means = Eigen::VectorXd::Zero(N);
  block.values.setZero(n, N);
  for (int J = 1; J <= N; ++J) {
    // ratio of empirical bin masses keeps the column mean exactly zero
    const double ratio = static_cast<double>(counts[J]) / counts[J - 1];
    block.bin_ratios[J - 1] = ratio;
    double ssq = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double v = 0.0;
      if (bins[i] == J) v = 1.0;
      else if (bins[i] == J - 1) v = -ratio;
      block.values(i, J - 1) = v;
      ssq += v * v;
    }
    const double norm = std::sqrt(ssq / static_cast<double>(n));
    block.col_norms[J - 1] = norm;
    block.values.col(J - 1) /= norm;
  }
  return block;
}

//! Standardized order-d B-spline block, d in {2, 3, 4}. The first raw
//! Cox-de Boor column is dropped (centering all N+d columns would leave the
//! block rank deficient), then each column is centered at its empirical mean
//! and scaled to unit empirical second moment. M = N + d - 1 columns.
inline BasisBlock bspline_basis(const Eigen::VectorXd& x_col, const KnotVector& knots,
                                int order) {
  if (order < 2 || order > 4) throw UnsupportedOrder(order);
  const Eigen::Index n = x_col.size();
  const int N = knots.count();
  Eigen::VectorXi counts = Eigen::VectorXi::Zero(N + 1);
  for (Eigen::Index i = 0; i < n; ++i) counts[knots.bin(x_col[i])] += 1;
  for (int j = 0; j <= N; ++j) {
    if (counts[j] == 0) throw EmptyBin(j);
  }

  const int M = N + order - 1;
  Eigen::MatrixXd raw(n, M);
  for (Eigen::Index i = 0; i < n; ++i) {
    raw.row(i) = detail::bspline_raw_row(knots, order, x_col[i]).tail(M).transpose();
  }

  BasisBlock block;
  block.order = order;
  block.knots = knots;
  block.col_means = raw.colwise().mean();
  block.col_norms.resize(M);
  block.values.resize(n, M);
  for (int j = 0; j < M; ++j) {
    Eigen::VectorXd centered = raw.col(j).array() - block.col_means[j];
    const double norm = std::sqrt(centered.squaredNorm() / static_cast<double>(n));
    if (!(norm > 0.0)) throw DegenerateColumn("constant spline column " + std::to_string(j));
    block.col_norms[j] = norm;
    block.values.col(j) = centered / norm;
  }
  return block;
}

inline Eigen::VectorXd BasisBlock::eval(double x) const {
  const int N = knots.count();
  if (order == 1) {
    const int j = knots.bin(std::clamp(x, knots.a, knots.b));
    Eigen::VectorXd row = Eigen::VectorXd::Zero(N);
    for (int J = 1; J <= N; ++J) {
      double v = 0.0;
      if (j == J) v = 1.0;
      else if (j == J - 1) v = -bin_ratios[J - 1];
      row[J - 1] = v / col_norms[J - 1];
    }
    return row;
  }
  const Eigen::VectorXd raw = detail::bspline_raw_row(knots, order, x).tail(size());
  return (raw - col_means).cwiseQuotient(col_norms);
}

inline Eigen::VectorXd BasisBlock::eval_d2(double x) const {
  if (order < 3) throw UnsupportedOrder(order);
  const Eigen::VectorXd raw = detail::bspline_raw_row(knots, order, x, 2).tail(size());
  return raw.cwiseQuotient(col_norms);
}

//! Rule-of-thumb interior knot count for the order-d refitting spline with s
//! selected nonlinear components:
//!   min{ floor(n^max(1/(2d), 4/(10d-5)) * ln n), floor(n/(4s)) } + 1.
inline int rule_of_thumb_knots(int n, int d, int s) {
  if (n < 8 || d < 2 || s < 1) throw InvalidArgs("rule_of_thumb_knots requires n >= 8, d >= 2, s >= 1");
  const double expo = std::max(1.0 / (2.0 * d), 4.0 / (10.0 * d - 5.0));
  const double first = std::floor(std::pow(n, expo) * std::log(n));
  const double second = std::floor(static_cast<double>(n) / (4.0 * s));
  return static_cast<int>(std::min(first, second)) + 1;
}

}  // namespace smile
