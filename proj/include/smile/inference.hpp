#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "smile/dataset.hpp"
#include "smile/errors.hpp"
#include "smile/kernel.hpp"
#include "smile/pipeline.hpp"
#include "smile/spline.hpp"
#include "smile/stats.hpp"

namespace smile {

struct RefitConfig {
  int order = 4;      // cubic B-splines by default
  int n_knots = 4;    // interior knots; <= 0 means the rule-of-thumb count
  bool equal_spaced_knots = false;
};

//! Unpenalized least-squares refit on the selected structure with order-d
//! spline blocks for the nonlinear components.
struct RefitFit {
  Eigen::VectorXd alpha_star;               // over structure.s_z
  Eigen::VectorXd beta_star;                // over structure.s_x_pl
  std::vector<Eigen::VectorXd> gamma_star;  // over structure.s_x_n()
  std::vector<BasisBlock> bases;            // aligned with gamma_star
  std::vector<int> nonlinear_index;         // structure.s_x_n()
  Eigen::VectorXd z_col_means;              // centering applied to selected z columns
  Eigen::VectorXd residuals;
  double sigma2_hat = 0.0;
  int order = 4;

  int slot_of(int ell) const {
    for (std::size_t j = 0; j < nonlinear_index.size(); ++j) {
      if (nonlinear_index[j] == ell) return static_cast<int>(j);
    }
    return -1;
  }

  //! Fitted nonlinear component at a (centered) covariate value.
  double phi_value(int ell, double x) const {
    const int j = slot_of(ell);
    if (j < 0) throw IndexNotNonlinear(ell);
    return bases[static_cast<std::size_t>(j)].fitted_value(x, gamma_star[static_cast<std::size_t>(j)]);
  }

  //! Analytic second derivative of the fitted component (order >= 3).
  double phi_second_derivative(int ell, double x) const {
    const int j = slot_of(ell);
    if (j < 0) throw IndexNotNonlinear(ell);
    return bases[static_cast<std::size_t>(j)].fitted_d2(x, gamma_star[static_cast<std::size_t>(j)]);
  }
};

//! Least-squares refit (QR) of the centered response on the selected columns:
//! selected z columns (centered), purely-linear x columns, and an order-d
//! standardized spline block per nonlinear component. The error variance uses
//! the selected-covariate count as model degrees of freedom.
inline RefitFit refit(const Dataset& ds, const ModelStructure& structure,
                      const RefitConfig& rc = {}) {
  if (!ds.centered) throw InvalidArgs("refit requires a centered dataset");
  if (structure.empty()) throw InvalidArgs("refit requires a non-empty structure");
  const Eigen::Index n = ds.n();
  const std::vector<int> nl = structure.s_x_n();

  RefitFit fit;
  fit.order = rc.order;
  fit.nonlinear_index = nl;

  int n_knots = rc.n_knots;
  if (n_knots <= 0) {
    n_knots = rule_of_thumb_knots(static_cast<int>(n), rc.order,
                                  std::max<int>(1, static_cast<int>(nl.size())));
  }

  std::vector<std::string> labels;
  const Eigen::Index t_cols = static_cast<Eigen::Index>(structure.s_z.size() + structure.s_x_pl.size());
  Eigen::Index q_cols = 0;
  fit.bases.reserve(nl.size());
  for (int ell : nl) {
    const auto kv = place_knots(ds.x.col(ell), n_knots, !rc.equal_spaced_knots);
    fit.bases.push_back(bspline_basis(ds.x.col(ell), kv, rc.order));
    q_cols += fit.bases.back().size();
  }

  Eigen::MatrixXd design(n, t_cols + q_cols);
  Eigen::Index col = 0;
  fit.z_col_means.resize(static_cast<Eigen::Index>(structure.s_z.size()));
  for (std::size_t j = 0; j < structure.s_z.size(); ++j) {
    const int k = structure.s_z[j];
    fit.z_col_means[static_cast<Eigen::Index>(j)] = ds.z.col(k).mean();
    design.col(col++) = ds.z.col(k).array() - fit.z_col_means[static_cast<Eigen::Index>(j)];
    labels.push_back(ds.z_names.empty() ? "z" + std::to_string(k + 1) : ds.z_names[static_cast<std::size_t>(k)]);
  }
  for (int l : structure.s_x_pl) {
    design.col(col++) = ds.x.col(l);
    labels.push_back(ds.x_names.empty() ? "x" + std::to_string(l + 1) : ds.x_names[static_cast<std::size_t>(l)]);
  }
  for (std::size_t j = 0; j < nl.size(); ++j) {
    const auto& block = fit.bases[j];
    design.middleCols(col, block.size()) = block.values;
    for (Eigen::Index c = 0; c < block.size(); ++c) {
      labels.push_back("x" + std::to_string(nl[j] + 1) + ":spline" + std::to_string(c + 1));
    }
    col += block.size();
  }

  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < design.cols()) {
    const Eigen::Index bad = qr.colsPermutation().indices()[qr.rank()];
    throw ModelSingular(labels[static_cast<std::size_t>(bad)]);
  }
  const Eigen::VectorXd coef = qr.solve(ds.y);
  fit.residuals = ds.y - design * coef;

  const int df_model = static_cast<int>(structure.s_z.size() + structure.s_x().size());
  if (n - df_model <= 0) throw ModelSingular("residual degrees of freedom");
  fit.sigma2_hat = fit.residuals.squaredNorm() / static_cast<double>(n - df_model);

  col = 0;
  fit.alpha_star = coef.segment(0, static_cast<Eigen::Index>(structure.s_z.size()));
  col += static_cast<Eigen::Index>(structure.s_z.size());
  fit.beta_star = coef.segment(col, static_cast<Eigen::Index>(structure.s_x_pl.size()));
  col += static_cast<Eigen::Index>(structure.s_x_pl.size());
  for (std::size_t j = 0; j < nl.size(); ++j) {
    fit.gamma_star.push_back(coef.segment(col, fit.bases[j].size()));
    col += fit.bases[j].size();
  }
  return fit;
}

//! Estimated covariance of (alpha*, beta*): sigma2 [(T - T_hat)^T (T - T_hat)]^{-1},
//! where T stacks the selected z and purely-linear x columns and T_hat is the
//! projection of T onto the selected spline columns. With no spline block this
//! is the classical OLS covariance sigma2 (T^T T)^{-1}.
inline Eigen::MatrixXd coef_covariance(const RefitFit& fit, const Dataset& ds,
                                       const ModelStructure& structure) {
  const Eigen::Index n = ds.n();
  const Eigen::Index t_cols = static_cast<Eigen::Index>(structure.s_z.size() + structure.s_x_pl.size());
  if (t_cols == 0) return Eigen::MatrixXd(0, 0);

  Eigen::MatrixXd t_mat(n, t_cols);
  Eigen::Index col = 0;
  for (std::size_t j = 0; j < structure.s_z.size(); ++j) {
    t_mat.col(col++) = ds.z.col(structure.s_z[j]).array() - fit.z_col_means[static_cast<Eigen::Index>(j)];
  }
  for (int l : structure.s_x_pl) t_mat.col(col++) = ds.x.col(l);

  Eigen::MatrixXd resid = t_mat;
  Eigen::Index q_cols = 0;
  for (const auto& b : fit.bases) q_cols += b.size();
  if (q_cols > 0) {
    Eigen::MatrixXd b_mat(n, q_cols);
    Eigen::Index bc = 0;
    for (const auto& b : fit.bases) {
      b_mat.middleCols(bc, b.size()) = b.values;
      bc += b.size();
    }
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(b_mat);
    const Eigen::MatrixXd q_thin = qr.householderQ() * Eigen::MatrixXd::Identity(n, q_cols);
    resid -= q_thin * (q_thin.transpose() * t_mat);
  }

  const Eigen::MatrixXd gram = resid.transpose() * resid;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
  if (!lu.isInvertible()) throw ModelSingular("(T - T_hat)^T (T - T_hat)");
  return fit.sigma2_hat * lu.inverse();
}

//! Pseudo-responses for component ell: the centered response minus every
//! fitted term except ell's own.
inline Eigen::VectorXd pseudo_responses(const Dataset& ds, const ModelStructure& structure,
                                        const RefitFit& fit, int ell) {
  if (fit.slot_of(ell) < 0) throw IndexNotNonlinear(ell);
  Eigen::VectorXd out = ds.y;
  for (std::size_t j = 0; j < structure.s_z.size(); ++j) {
    out -= fit.alpha_star[static_cast<Eigen::Index>(j)] *
           (ds.z.col(structure.s_z[j]).array() - fit.z_col_means[static_cast<Eigen::Index>(j)]).matrix();
  }
  for (std::size_t j = 0; j < structure.s_x_pl.size(); ++j) {
    out -= fit.beta_star[static_cast<Eigen::Index>(j)] * ds.x.col(structure.s_x_pl[j]);
  }
  for (std::size_t j = 0; j < fit.nonlinear_index.size(); ++j) {
    if (fit.nonlinear_index[j] == ell) continue;
    out -= fit.bases[j].values * fit.gamma_star[j];
  }
  return out;
}

//! Spline-backfitted local-linear curve with pointwise confidence intervals
//! and the simultaneous confidence band.
struct SbllCurve {
  Eigen::VectorXd grid;
  Eigen::VectorXd estimate;
  Eigen::VectorXd bias;     // b_hat(x) h^2, subtracted in the pointwise CI
  Eigen::VectorXd stderr_;  // v_hat(x) / sqrt(n h)
  Eigen::VectorXd ci_lo, ci_hi;
  Eigen::VectorXd scb_lo, scb_hi;
  double h = 0.0;
  double interior_lo = 0.0, interior_hi = 0.0;
  double scb_multiplier = 0.0;
};

namespace detail {

//! tau_n of the extreme-value limit at bandwidth h.
inline double scb_tau(double h) {
  const KernelSpec k = kernel_constants();
  const double root = std::sqrt(std::log(1.0 / (h * h)));
  const double ratio = std::sqrt(k.deriv_l2norm_sq) / (2.0 * M_PI * std::sqrt(k.l2norm_sq));
  return root + std::log(ratio) / root;
}

//! Full SCB half-width multiplier at level alpha.
inline double scb_multiplier(double h, double alpha) {
  const double root = std::sqrt(std::log(1.0 / (h * h)));
  return scb_tau(h) - std::log(-0.5 * std::log(1.0 - alpha)) / root;
}

inline SbllCurve sbll_from_pseudo(const Eigen::VectorXd& x_col, const Eigen::VectorXd& pseudo,
                                  const Eigen::VectorXd& grid, double alpha, double sigma2,
                                  const std::function<double(double)>& second_deriv,
                                  const std::optional<Bandwidth>& fixed_bw = {}) {
  const Eigen::Index n = x_col.size();
  const Bandwidth bw = fixed_bw ? *fixed_bw : rot_bandwidth(x_col, pseudo);
  const double a = x_col.minCoeff();
  const double b = x_col.maxCoeff();
  const double lo = a + bw.h, hi = b - bw.h;
  if (!(lo < hi)) throw BandwidthTooLarge("interior support is empty at h = " + std::to_string(bw.h));
  for (Eigen::Index g = 0; g < grid.size(); ++g) {
    if (grid[g] < lo || grid[g] > hi) {
      throw BandwidthTooLarge("grid point " + std::to_string(grid[g]) +
                              " outside the interior [" + std::to_string(lo) + ", " +
                              std::to_string(hi) + "]");
    }
  }

  const KernelSpec k = kernel_constants();
  const double z = normal_quantile(1.0 - alpha / 2.0);
  const double mult = scb_multiplier(bw.h, alpha);
  const double root_nh = std::sqrt(static_cast<double>(n) * bw.h);

  SbllCurve curve;
  curve.grid = grid;
  curve.h = bw.h;
  curve.interior_lo = lo;
  curve.interior_hi = hi;
  curve.scb_multiplier = mult;
  const Eigen::Index m = grid.size();
  curve.estimate.resize(m);
  curve.bias.resize(m);
  curve.stderr_.resize(m);
  curve.ci_lo.resize(m);
  curve.ci_hi.resize(m);
  curve.scb_lo.resize(m);
  curve.scb_hi.resize(m);
  for (Eigen::Index g = 0; g < m; ++g) {
    const double x0 = grid[g];
    curve.estimate[g] = local_linear(x_col, pseudo, bw, x0).intercept;
    const double density = kernel_density(x_col, bw, x0);
    const double v = std::sqrt(k.l2norm_sq * sigma2 / std::max(density, 1e-12));
    curve.stderr_[g] = v / root_nh;
    curve.bias[g] = 0.5 * k.mu2 * second_deriv(x0) * bw.h * bw.h;
    const double center = curve.estimate[g] - curve.bias[g];
    curve.ci_lo[g] = center - z * curve.stderr_[g];
    curve.ci_hi[g] = center + z * curve.stderr_[g];
    curve.scb_lo[g] = curve.estimate[g] - mult * curve.stderr_[g];
    curve.scb_hi[g] = curve.estimate[g] + mult * curve.stderr_[g];
  }
  return curve;
}

}  // namespace detail

//! SBLL curve for nonlinear component ell on a grid inside the interior
//! support [a + h, b - h]. The bandwidth defaults to the rule of thumb on the
//! pseudo-responses; the bias term uses the analytic second derivative of the
//! refit spline, so the refit order must be at least 3.
inline SbllCurve sbll_curve(const Dataset& ds, const RefitFit& fit,
                            const ModelStructure& structure, int ell,
                            const Eigen::VectorXd& grid, double alpha = 0.05,
                            const std::optional<Bandwidth>& bandwidth = {}) {
  if (fit.slot_of(ell) < 0) throw IndexNotNonlinear(ell);
  if (fit.order < 3) throw UnsupportedOrder(fit.order);
  const Eigen::VectorXd pseudo = pseudo_responses(ds, structure, fit, ell);
  return detail::sbll_from_pseudo(
      ds.x.col(ell), pseudo, grid, alpha, fit.sigma2_hat,
      [&](double x) { return fit.phi_second_derivative(ell, x); }, bandwidth);
}

//! True data-generating components, used by the oracle benchmark and the
//! simulation metrics. phi holds the full component functions (linear part
//! included) of the original, uncentered covariates.
struct TrueComponents {
  ModelStructure structure;
  Eigen::VectorXd alpha0;                            // length p1
  Eigen::VectorXd beta0;                             // length p2 (purely linear part)
  std::vector<std::function<double(double)>> phi;    // length p2, empty slots = zero
  double sigma = 0.0;

  double phi_at(int ell, double x_original) const {
    const auto& f = phi[static_cast<std::size_t>(ell)];
    return f ? f(x_original) : 0.0;
  }
};

//! Infeasible oracle SBLL curve: pseudo-responses built from the true
//! components instead of refit estimates, with every nuisance term centered
//! at its sample mean exactly as the refit convention centers fitted terms.
//! Bands use the true error variance and carry no spline bias estimate.
inline SbllCurve oracle_sbll(const Dataset& ds, const TrueComponents& truth, int ell,
                             const Eigen::VectorXd& grid, double alpha = 0.05) {
  if (!contains(truth.structure.s_x_n(), ell)) throw IndexNotNonlinear(ell);
  const Eigen::Index n = ds.n();
  Eigen::VectorXd pseudo = ds.y;
  for (int k : truth.structure.s_z) {
    const auto zc = ds.z.col(k);
    pseudo -= truth.alpha0[k] * (zc.array() - zc.mean()).matrix();
  }
  for (int l : truth.structure.s_x_pl) {
    pseudo -= truth.beta0[l] * ds.x.col(l);
  }
  for (int l : truth.structure.s_x_n()) {
    if (l == ell) continue;
    Eigen::VectorXd vals(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      vals[i] = truth.phi_at(l, ds.x(i, l) + (ds.centered ? ds.x_means[l] : 0.0));
    }
    pseudo -= (vals.array() - vals.mean()).matrix();
  }
  return detail::sbll_from_pseudo(ds.x.col(ell), pseudo, grid, alpha,
                                  truth.sigma * truth.sigma,
                                  [](double) { return 0.0; });
}

}  // namespace smile
