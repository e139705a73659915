#pragma once

#include <Eigen/Dense>
#include <cassert>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "smile/errors.hpp"

namespace smile {

enum class GroupClass { z_linear, x_linear, x_spline };

//! Coefficients grouped by block class: alpha for the z scalars, beta for the
//! x-linear scalars, gamma for the spline groups, in design order.
struct CoefTriple {
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
  std::vector<Eigen::VectorXd> gamma;

  double norm_sq() const {
    double s = alpha.squaredNorm() + beta.squaredNorm();
    for (const auto& g : gamma) s += g.squaredNorm();
    return s;
  }

  bool all_finite() const {
    if (!alpha.allFinite() || !beta.allFinite()) return false;
    for (const auto& g : gamma) {
      if (!g.allFinite()) return false;
    }
    return true;
  }
};

//! Penalized design with one entry per coefficient group. Groups keep their
//! thin QR factors; the d x d Gram eigendecompositions drive the exact
//! groupwise updates.
class GroupedDesign {
 public:
  struct Group {
    std::string label;
    GroupClass cls;
    Eigen::Index offset = 0;  // first column in D
    Eigen::Index dim = 0;
    Eigen::Index slot = 0;  // index within its class (alpha/beta/gamma)
    Eigen::MatrixXd q;      // thin QR: block = q * r
    Eigen::MatrixXd r;
    Eigen::VectorXd gram_eigval;  // eigendecomposition of r^T r
    Eigen::MatrixXd gram_eigvec;
  };

  void add_scalar(std::string label, GroupClass cls, const Eigen::VectorXd& col) {
    pending_.emplace_back(std::move(label), cls, col);
  }

  void add_block(std::string label, GroupClass cls, const Eigen::MatrixXd& cols) {
    pending_.emplace_back(std::move(label), cls, cols);
  }

  void set_response(const Eigen::VectorXd& y) { response_ = y; }

  void finalize() {
    Eigen::Index total = 0;
    for (const auto& [label, cls, mat] : pending_) total += mat.cols();
    const Eigen::Index n = pending_.empty() ? response_.size() : std::get<2>(pending_.front()).rows();
    d_.resize(n, total);
    groups_.clear();
    groups_.reserve(pending_.size());
    Eigen::Index offset = 0;
    Eigen::Index slots[3] = {0, 0, 0};
    for (auto& [label, cls, mat] : pending_) {
      Group g;
      g.label = std::move(label);
      g.cls = cls;
      g.offset = offset;
      g.dim = mat.cols();
      g.slot = slots[static_cast<int>(cls)]++;
      d_.middleCols(offset, g.dim) = mat;
      const Eigen::HouseholderQR<Eigen::MatrixXd> qr(mat);
      g.q = qr.householderQ() * Eigen::MatrixXd::Identity(n, g.dim);
      g.r = qr.matrixQR().topRows(g.dim).template triangularView<Eigen::Upper>();
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.r.transpose() * g.r);
      g.gram_eigval = es.eigenvalues().cwiseMax(0.0);
      g.gram_eigvec = es.eigenvectors();
      offset += g.dim;
      groups_.push_back(std::move(g));
    }
    pending_.clear();
    class_counts_[0] = slots[0];
    class_counts_[1] = slots[1];
    class_counts_[2] = slots[2];
  }

  Eigen::Index n() const { return d_.rows(); }
  Eigen::Index total_cols() const { return d_.cols(); }
  const Eigen::MatrixXd& matrix() const { return d_; }
  const Eigen::VectorXd& response() const { return response_; }
  const std::vector<Group>& groups() const { return groups_; }
  Eigen::Index count(GroupClass cls) const { return class_counts_[static_cast<int>(cls)]; }

  Eigen::Ref<const Eigen::MatrixXd> block(const Group& g) const {
    return d_.middleCols(g.offset, g.dim);
  }

  CoefTriple zero_coefs() const {
    CoefTriple t;
    t.alpha = Eigen::VectorXd::Zero(count(GroupClass::z_linear));
    t.beta = Eigen::VectorXd::Zero(count(GroupClass::x_linear));
    for (const auto& g : groups_) {
      if (g.cls == GroupClass::x_spline) t.gamma.emplace_back(Eigen::VectorXd::Zero(g.dim));
    }
    return t;
  }

  Eigen::VectorXd flatten(const CoefTriple& t) const {
    Eigen::VectorXd flat(total_cols());
    for (const auto& g : groups_) {
      if (g.cls == GroupClass::z_linear) flat[g.offset] = t.alpha[g.slot];
      else if (g.cls == GroupClass::x_linear) flat[g.offset] = t.beta[g.slot];
      else flat.segment(g.offset, g.dim) = t.gamma[static_cast<std::size_t>(g.slot)];
    }
    return flat;
  }

  CoefTriple unflatten(const Eigen::VectorXd& flat) const {
    CoefTriple t = zero_coefs();
    for (const auto& g : groups_) {
      if (g.cls == GroupClass::z_linear) t.alpha[g.slot] = flat[g.offset];
      else if (g.cls == GroupClass::x_linear) t.beta[g.slot] = flat[g.offset];
      else t.gamma[static_cast<std::size_t>(g.slot)] = flat.segment(g.offset, g.dim);
    }
    return t;
  }

 private:
  std::vector<std::tuple<std::string, GroupClass, Eigen::MatrixXd>> pending_;
  Eigen::MatrixXd d_;
  Eigen::VectorXd response_;
  std::vector<Group> groups_;
  Eigen::Index class_counts_[3] = {0, 0, 0};
};

//! Per-class penalty levels and per-group adaptive weights. A group with
//! infinite weight is excluded outright (its coefficients are pinned to zero,
//! the "infinity times zero equals zero" convention).
struct PenaltySpec {
  double lambda_z = 0.0;
  double lambda_xl = 0.0;
  double lambda_xs = 0.0;
  Eigen::VectorXd weights;  // one entry per group, default all ones

  double lambda_for(GroupClass cls) const {
    switch (cls) {
      case GroupClass::z_linear: return lambda_z;
      case GroupClass::x_linear: return lambda_xl;
      default: return lambda_xs;
    }
  }

  double weight(Eigen::Index group_index) const {
    return weights.size() == 0 ? 1.0 : weights[group_index];
  }

  static PenaltySpec uniform(double lambda) { return {lambda, lambda, lambda, {}}; }
};

struct DidNotConverge : NumericError {
  explicit DidNotConverge(CoefTriple last)
      : NumericError("DidNotConverge: group descent exhausted its sweep budget"),
        last_iterate(std::move(last)) {}
  CoefTriple last_iterate;
};

//! Multivariate soft threshold: (1 - t/||z||)_+ z.
inline Eigen::VectorXd group_soft_threshold(const Eigen::VectorXd& z, double t) {
  const double norm = z.norm();
  if (norm <= t) return Eigen::VectorXd::Zero(z.size());
  return (1.0 - t / norm) * z;
}

//! Penalized objective 1/2 ||y - D theta||^2 + sum_m lambda_m w_m ||theta_m||.
//! The half on the residual term makes the KKT system hold without stray
//! factors of two.
inline double penalized_objective(const GroupedDesign& design, const PenaltySpec& pen,
                                  const CoefTriple& theta) {
  const Eigen::VectorXd flat = design.flatten(theta);
  double obj = 0.5 * (design.response() - design.matrix() * flat).squaredNorm();
  Eigen::Index gi = 0;
  for (const auto& g : design.groups()) {
    const double norm = flat.segment(g.offset, g.dim).norm();
    const double w = pen.weight(gi++);
    if (norm > 0.0) {
      if (std::isinf(w)) return std::numeric_limits<double>::infinity();
      obj += pen.lambda_for(g.cls) * w * norm;
    }
  }
  return obj;
}

namespace detail {

//! Exact minimizer of 1/2 ||r - D_m theta||^2 + c ||theta|| for one group,
//! using the cached eigendecomposition of the group Gram matrix. The scalar
//! secular equation sum_i b_i^2 / (s lam_i + c)^2 = 1 in s = ||theta|| is
//! solved by safeguarded Newton from the left (the function is convex and
//! decreasing, so iterates increase monotonically to the root).
inline Eigen::VectorXd group_exact_min(const GroupedDesign::Group& g,
                                       const Eigen::VectorXd& v, double c) {
  if (g.dim == 1) {
    const double gram = g.gram_eigval[0];
    if (gram <= 0.0) return Eigen::VectorXd::Zero(1);
    const double z = v[0];
    const double mag = std::fabs(z) - c;
    Eigen::VectorXd out(1);
    out[0] = mag > 0.0 ? (z > 0 ? mag : -mag) / gram : 0.0;
    return out;
  }
  const Eigen::VectorXd b = g.gram_eigvec.transpose() * v;
  if (c <= 0.0) {
    // unpenalized: minimum-norm solve through the eigendecomposition
    Eigen::VectorXd scaled(b.size());
    const double eps = 1e-12 * g.gram_eigval.maxCoeff();
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      scaled[i] = g.gram_eigval[i] > eps ? b[i] / g.gram_eigval[i] : 0.0;
    }
    return g.gram_eigvec * scaled;
  }
  if (v.norm() <= c) return Eigen::VectorXd::Zero(g.dim);

  double s = 0.0;
  for (int iter = 0; iter < 64; ++iter) {
    double rho = 0.0, drho = 0.0;
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      const double den = s * g.gram_eigval[i] + c;
      const double bi2 = b[i] * b[i];
      rho += bi2 / (den * den);
      drho -= 2.0 * bi2 * g.gram_eigval[i] / (den * den * den);
    }
    const double f = rho - 1.0;
    if (std::fabs(f) < 1e-14 || drho == 0.0) break;
    const double step = -f / drho;
    s += step;
    if (std::fabs(step) < 1e-15 * (1.0 + s)) break;
  }
  Eigen::VectorXd scaled(b.size());
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    scaled[i] = s * b[i] / (s * g.gram_eigval[i] + c);
  }
  return g.gram_eigvec * scaled;
}

}  // namespace detail

//! Max KKT violation of the penalized objective at theta: for active groups
//! the norm of D_m^T r - lambda_m w_m theta_m / ||theta_m||, for zero groups
//! the excess (||D_m^T r|| - lambda_m w_m)_+, with r = y - D theta.
inline double kkt_residual(const GroupedDesign& design, const PenaltySpec& pen,
                           const CoefTriple& theta) {
  const Eigen::VectorXd flat = design.flatten(theta);
  const Eigen::VectorXd r = design.response() - design.matrix() * flat;
  double worst = 0.0;
  Eigen::Index gi = 0;
  for (const auto& g : design.groups()) {
    const double w = pen.weight(gi++);
    const Eigen::VectorXd grad = design.block(g).transpose() * r;
    const auto seg = flat.segment(g.offset, g.dim);
    const double norm = seg.norm();
    double viol;
    if (norm > 0.0) {
      viol = std::isinf(w) ? std::numeric_limits<double>::infinity()
                           : (grad - pen.lambda_for(g.cls) * w / norm * seg).norm();
    } else {
      const double slack = std::isinf(w) ? 0.0 : grad.norm() - pen.lambda_for(g.cls) * w;
      viol = std::max(slack, 0.0);
    }
    worst = std::max(worst, viol);
  }
  return worst;
}

//! Cyclic group coordinate descent with exact group updates, active-set
//! sweeps, and a final KKT certificate. Converges when the largest
//! coefficient change in a full sweep drops below tol and the KKT residual is
//! within 10 tol; otherwise throws DidNotConverge with the last iterate.
inline CoefTriple fit_penalized(const GroupedDesign& design, const PenaltySpec& pen,
                                const CoefTriple& init, double tol = 1e-7,
                                int max_sweeps = 10000) {
  if (!(tol > 0.0)) throw InvalidArgs("fit_penalized requires tol > 0");
  const auto& groups = design.groups();
  Eigen::VectorXd flat = design.flatten(init);
  Eigen::VectorXd r = design.response();
  if (flat.squaredNorm() > 0.0) r -= design.matrix() * flat;

  std::vector<char> excluded(groups.size(), 0);
  for (std::size_t m = 0; m < groups.size(); ++m) {
    if (std::isinf(pen.weight(static_cast<Eigen::Index>(m)))) {
      excluded[m] = 1;
      auto seg = flat.segment(groups[m].offset, groups[m].dim);
      if (seg.squaredNorm() > 0.0) {
        r += design.block(groups[m]) * seg;
        seg.setZero();
      }
    }
  }

  auto update_group = [&](std::size_t m) -> double {
    const auto& g = groups[m];
    auto seg = flat.segment(g.offset, g.dim);
    if (seg.squaredNorm() > 0.0) r += design.block(g) * seg;
    const Eigen::VectorXd v = design.block(g).transpose() * r;
    const double c = pen.lambda_for(g.cls) * pen.weight(static_cast<Eigen::Index>(m));
    Eigen::VectorXd updated = detail::group_exact_min(g, v, c);
    if (updated.norm() < 1e-14) updated.setZero();
    const double change = (updated - Eigen::VectorXd(seg)).cwiseAbs().maxCoeff();
    seg = updated;
    if (seg.squaredNorm() > 0.0) r -= design.block(g) * seg;
    return change;
  };

  auto sweep = [&](const std::vector<std::size_t>& which) -> double {
#ifndef NDEBUG
    const double before = 0.5 * r.squaredNorm() + [&] {
      double pensum = 0.0;
      for (std::size_t m = 0; m < groups.size(); ++m) {
        const double norm = flat.segment(groups[m].offset, groups[m].dim).norm();
        if (norm > 0.0) pensum += pen.lambda_for(groups[m].cls) * pen.weight(static_cast<Eigen::Index>(m)) * norm;
      }
      return pensum;
    }();
#endif
    double max_change = 0.0;
    for (std::size_t m : which) {
      if (excluded[m]) continue;
      max_change = std::max(max_change, update_group(m));
    }
#ifndef NDEBUG
    const double after = 0.5 * r.squaredNorm() + [&] {
      double pensum = 0.0;
      for (std::size_t m = 0; m < groups.size(); ++m) {
        const double norm = flat.segment(groups[m].offset, groups[m].dim).norm();
        if (norm > 0.0) pensum += pen.lambda_for(groups[m].cls) * pen.weight(static_cast<Eigen::Index>(m)) * norm;
      }
      return pensum;
    }();
    assert(after <= before + 1e-8 * (1.0 + std::fabs(before)) && "objective must not increase");
#endif
    return max_change;
  };

  std::vector<std::size_t> all(groups.size());
  for (std::size_t m = 0; m < groups.size(); ++m) all[m] = m;

  int used = 0;
  const double kkt_tol = 10.0 * tol;
  while (used < max_sweeps) {
    double change = sweep(all);
    ++used;
    if (!std::isfinite(change)) throw NonFiniteObjective();

    std::vector<std::size_t> active;
    for (std::size_t m = 0; m < groups.size(); ++m) {
      if (!excluded[m] && flat.segment(groups[m].offset, groups[m].dim).squaredNorm() > 0.0) {
        active.push_back(m);
      }
    }
    while (change >= tol && used < max_sweeps && !active.empty()) {
      change = sweep(active);
      ++used;
      if (!std::isfinite(change)) throw NonFiniteObjective();
    }
    if (change < tol) {
      const CoefTriple candidate = design.unflatten(flat);
      if (kkt_residual(design, pen, candidate) <= kkt_tol) return candidate;
    }
  }
  throw DidNotConverge(design.unflatten(flat));
}

//! Reciprocal-magnitude adaptive weights from an initial estimate, in design
//! group order; zero initial groups get infinite weight and stay excluded.
inline Eigen::VectorXd adaptive_weights(const GroupedDesign& design, const CoefTriple& initial) {
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::VectorXd w(static_cast<Eigen::Index>(design.groups().size()));
  Eigen::Index gi = 0;
  for (const auto& g : design.groups()) {
    double mag = 0.0;
    if (g.cls == GroupClass::z_linear) mag = std::fabs(initial.alpha[g.slot]);
    else if (g.cls == GroupClass::x_linear) mag = std::fabs(initial.beta[g.slot]);
    else mag = initial.gamma[static_cast<std::size_t>(g.slot)].norm();
    w[gi++] = mag > 0.0 ? 1.0 / mag : inf;
  }
  return w;
}

//! Log-spaced penalty grid from lambda_max (the smallest level zeroing every
//! included group) down to 1e-4 lambda_max.
inline Eigen::VectorXd lambda_path(const GroupedDesign& design, const Eigen::VectorXd& weights,
                                   int n_points) {
  if (n_points < 2) throw InvalidArgs("lambda_path needs n_points >= 2");
  double lambda_max = 0.0;
  bool any = false;
  for (std::size_t m = 0; m < design.groups().size(); ++m) {
    const auto& g = design.groups()[m];
    const double w = weights.size() == 0 ? 1.0 : weights[static_cast<Eigen::Index>(m)];
    if (!std::isfinite(w) || w <= 0.0) continue;
    any = true;
    lambda_max = std::max(lambda_max, (design.block(g).transpose() * design.response()).norm() / w);
  }
  if (!any || !(lambda_max > 0.0)) throw AllGroupsExcluded();
  Eigen::VectorXd grid(n_points);
  const double lo = std::log(1e-4 * lambda_max);
  const double hi = std::log(lambda_max);
  for (int i = 0; i < n_points; ++i) {
    grid[i] = std::exp(hi + (lo - hi) * static_cast<double>(i) / (n_points - 1));
  }
  return grid;
}

}  // namespace smile
