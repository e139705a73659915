#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "smile/dataset.hpp"
#include "smile/errors.hpp"
#include "smile/solver.hpp"
#include "smile/spline.hpp"

namespace smile {

//! Modified BIC of Lee et al.: ln(RSS) + df ln(p_total) ln(n) / (2n).
inline double bic(double rss, int df, int n, int p_total) {
  if (!(rss > 0.0) || n < 2 || p_total < 1 || df < 0) throw InvalidArgs("bic");
  return std::log(rss) + df * std::log(p_total) * std::log(n) / (2.0 * n);
}

//! Extended BIC: ln(RSS) + df ln(n)/n + df ln(p_total)/n.
inline double ebic(double rss, int df, int n, int p_total) {
  if (!(rss > 0.0) || n < 2 || p_total < 1 || df < 0) throw InvalidArgs("ebic");
  return std::log(rss) + df * std::log(n) / n + df * std::log(p_total) / n;
}

struct TuningEntry {
  double lambda = 0.0;
  double rss = 0.0;
  int df = 0;
  double score = 0.0;
};

struct TuningReport {
  std::string block;      // "init", "alpha", "beta", "gamma"
  std::string stage;      // "weights" or "adaptive"
  std::string criterion;  // "BIC" or "EBIC"
  std::vector<TuningEntry> entries;
  double chosen_lambda = 0.0;
};

//! Selected model structure: active z indices, and the purely-linear,
//! linear-and-nonlinear and purely-nonlinear x index sets (0-based, sorted,
//! pairwise disjoint).
struct ModelStructure {
  std::vector<int> s_z;
  std::vector<int> s_x_pl;
  std::vector<int> s_x_ln;
  std::vector<int> s_x_pn;

  //! Active nonlinear set (pure nonlinear plus linear-and-nonlinear).
  std::vector<int> s_x_n() const {
    std::vector<int> out = s_x_ln;
    out.insert(out.end(), s_x_pn.begin(), s_x_pn.end());
    std::sort(out.begin(), out.end());
    return out;
  }

  //! All active x indices.
  std::vector<int> s_x() const {
    std::vector<int> out = s_x_pl;
    out.insert(out.end(), s_x_ln.begin(), s_x_ln.end());
    out.insert(out.end(), s_x_pn.begin(), s_x_pn.end());
    std::sort(out.begin(), out.end());
    return out;
  }

  bool empty() const {
    return s_z.empty() && s_x_pl.empty() && s_x_ln.empty() && s_x_pn.empty();
  }
};

inline bool contains(const std::vector<int>& set, int idx) {
  return std::binary_search(set.begin(), set.end(), idx);
}

//! Exact-zero classification of a coefficient triple (the solver produces
//! exact zeros, so no thresholding is involved).
inline ModelStructure classify(const CoefTriple& theta) {
  ModelStructure s;
  for (Eigen::Index k = 0; k < theta.alpha.size(); ++k) {
    if (theta.alpha[k] != 0.0) s.s_z.push_back(static_cast<int>(k));
  }
  const Eigen::Index p2 = theta.beta.size();
  for (Eigen::Index l = 0; l < p2; ++l) {
    const bool lin = theta.beta[l] != 0.0;
    const bool nonlin = l < static_cast<Eigen::Index>(theta.gamma.size()) &&
                        theta.gamma[static_cast<std::size_t>(l)].squaredNorm() > 0.0;
    if (lin && nonlin) s.s_x_ln.push_back(static_cast<int>(l));
    else if (lin) s.s_x_pl.push_back(static_cast<int>(l));
    else if (nonlin) s.s_x_pn.push_back(static_cast<int>(l));
  }
  return s;
}

enum class Variant { smile, saplm, slm, oracle };

inline Variant variant_from_string(const std::string& s) {
  if (s == "SMILE" || s == "smile") return Variant::smile;
  if (s == "SAPLM" || s == "saplm") return Variant::saplm;
  if (s == "SLM" || s == "slm") return Variant::slm;
  if (s == "ORACLE" || s == "oracle") return Variant::oracle;
  throw InvalidArgs("unknown variant " + s);
}

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::smile: return "SMILE";
    case Variant::saplm: return "SAPLM";
    case Variant::slm: return "SLM";
    default: return "ORACLE";
  }
}

struct SelectConfig {
  int n_knots_select = 4;
  double delta0 = 1e-6;
  int outer_iters = 3;
  int lambda_grid_size = 50;
  Variant variant = Variant::smile;
  bool refit_others_free = false;  // retune with the other blocks unpenalized
  bool equal_spaced_knots = false;
  double tol = 1e-7;
  int max_sweeps = 10000;

  static SelectConfig from_json(const nlohmann::json& j) {
    SelectConfig cfg;
    if (j.contains("n_knots_select")) cfg.n_knots_select = j.at("n_knots_select").get<int>();
    if (j.contains("delta0")) cfg.delta0 = j.at("delta0").get<double>();
    if (j.contains("outer_iters")) cfg.outer_iters = j.at("outer_iters").get<int>();
    if (j.contains("lambda_grid_size")) cfg.lambda_grid_size = j.at("lambda_grid_size").get<int>();
    if (j.contains("variant")) cfg.variant = variant_from_string(j.at("variant").get<std::string>());
    if (j.contains("refit_others")) cfg.refit_others_free = j.at("refit_others").get<std::string>() == "free";
    if (j.contains("equal_spaced_knots")) cfg.equal_spaced_knots = j.at("equal_spaced_knots").get<bool>();
    if (j.contains("tol")) cfg.tol = j.at("tol").get<double>();
    if (j.contains("max_sweeps")) cfg.max_sweeps = j.at("max_sweeps").get<int>();
    return cfg;
  }
};

struct SelectionResult {
  CoefTriple theta;  // full shape: alpha p1, beta p2, gamma p2 groups
  ModelStructure structure;
  std::vector<TuningReport> reports;
};

namespace detail {

//! Selection-stage designs for one dataset/variant: the full triple-block
//! design plus one single-class design per block, sharing centered z columns
//! and the constant-spline basis blocks.
struct SelectionDesigns {
  Eigen::MatrixXd z_centered;
  Eigen::VectorXd z_means;
  std::vector<BasisBlock> spline;  // one per x column
  GroupedDesign full;
  std::optional<GroupedDesign> per_class[3];
  bool has_alpha = false, has_beta = false, has_gamma = false;
  int n_knots = 0;

  static SelectionDesigns build(const Dataset& ds, const SelectConfig& cfg) {
    SelectionDesigns out;
    out.has_alpha = ds.p1() > 0;
    out.has_beta = cfg.variant != Variant::saplm && ds.p2() > 0;
    out.has_gamma = cfg.variant != Variant::slm && ds.p2() > 0;
    out.n_knots = cfg.n_knots_select;

    out.z_means = ds.z.colwise().mean();
    out.z_centered = ds.z.rowwise() - out.z_means.transpose();

    if (out.has_gamma) {
      out.spline.reserve(static_cast<std::size_t>(ds.p2()));
      for (Eigen::Index l = 0; l < ds.p2(); ++l) {
        const auto kv = place_knots(ds.x.col(l), cfg.n_knots_select, !cfg.equal_spaced_knots);
        out.spline.push_back(constant_basis(ds.x.col(l), kv));
      }
    }

    auto add_all = [&](GroupedDesign& d, bool alpha, bool beta, bool gamma) {
      if (alpha) {
        for (Eigen::Index k = 0; k < ds.p1(); ++k) {
          d.add_scalar(ds.z_names.empty() ? "z" + std::to_string(k + 1) : ds.z_names[static_cast<std::size_t>(k)],
                       GroupClass::z_linear, out.z_centered.col(k));
        }
      }
      if (beta) {
        for (Eigen::Index l = 0; l < ds.p2(); ++l) {
          d.add_scalar(ds.x_names.empty() ? "x" + std::to_string(l + 1) : ds.x_names[static_cast<std::size_t>(l)],
                       GroupClass::x_linear, ds.x.col(l));
        }
      }
      if (gamma) {
        for (Eigen::Index l = 0; l < ds.p2(); ++l) {
          d.add_block((ds.x_names.empty() ? "x" + std::to_string(l + 1) : ds.x_names[static_cast<std::size_t>(l)]) + ":spline",
                      GroupClass::x_spline, out.spline[static_cast<std::size_t>(l)].values);
        }
      }
      d.set_response(ds.y);
      d.finalize();
    };

    add_all(out.full, out.has_alpha, out.has_beta, out.has_gamma);
    if (out.has_alpha) {
      out.per_class[0].emplace();
      add_all(*out.per_class[0], true, false, false);
    }
    if (out.has_beta) {
      out.per_class[1].emplace();
      add_all(*out.per_class[1], false, true, false);
    }
    if (out.has_gamma) {
      out.per_class[2].emplace();
      add_all(*out.per_class[2], false, false, true);
    }
    return out;
  }
};

//! Nonzero scalar count; an active spline group contributes its full width.
inline int df_of(const CoefTriple& t) {
  int df = 0;
  for (Eigen::Index k = 0; k < t.alpha.size(); ++k) df += t.alpha[k] != 0.0;
  for (Eigen::Index l = 0; l < t.beta.size(); ++l) df += t.beta[l] != 0.0;
  for (const auto& g : t.gamma) df += g.squaredNorm() > 0.0 ? static_cast<int>(g.size()) : 0;
  return df;
}

struct PathFit {
  CoefTriple best;
  TuningReport report;
};

//! Warm-started fit along a decreasing lambda grid; the criterion picks the
//! winner. df_offset accounts for coefficients of blocks held fixed.
inline PathFit tune_path(const GroupedDesign& design, const Eigen::VectorXd& weights,
                         const char* criterion, int df_offset, int n, int p_total,
                         const SelectConfig& cfg, const std::string& block_name,
                         const std::string& stage) {
  PathFit out;
  out.report.block = block_name;
  out.report.stage = stage;
  out.report.criterion = criterion;

  const Eigen::VectorXd grid = lambda_path(design, weights, cfg.lambda_grid_size);
  const bool use_ebic = std::string(criterion) == "EBIC";
  CoefTriple warm = design.zero_coefs();
  double best_score = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    PenaltySpec pen = PenaltySpec::uniform(grid[i]);
    pen.weights = weights;
    warm = fit_penalized(design, pen, warm, cfg.tol, cfg.max_sweeps);
    const double rss =
        (design.response() - design.matrix() * design.flatten(warm)).squaredNorm();
    const int df = df_offset + df_of(warm);
    const double score = use_ebic ? ebic(rss, df, n, p_total) : bic(rss, df, n, p_total);
    out.report.entries.push_back({grid[i], rss, df, score});
    if (score < best_score) {
      best_score = score;
      out.best = warm;
      out.report.chosen_lambda = grid[i];
    }
  }
  return out;
}

}  // namespace detail

//! Stage-one selection: group-LASSO initialization with a common BIC-tuned
//! penalty, then cycles of per-block adaptive reweighting and refitting
//! (BIC-tuned for the two scalar blocks, EBIC for the spline block), with the
//! other blocks held at their current solutions. Classification of the final
//! triple gives the selected structure; an empty selection is a valid result.
inline SelectionResult smile_select(const Dataset& ds, const SelectConfig& cfg) {
  if (!ds.centered) throw InvalidArgs("smile_select requires a centered dataset");
  if (cfg.variant == Variant::oracle) throw InvalidArgs("oracle variant skips selection");
  const int n = static_cast<int>(ds.n());
  const int p_total = static_cast<int>(ds.p1() + ds.p2() + ds.p2() * cfg.n_knots_select);

  auto designs = detail::SelectionDesigns::build(ds, cfg);

  SelectionResult result;

  // full-shape coefficient state; blocks absent from the variant stay zero
  CoefTriple state;
  state.alpha = Eigen::VectorXd::Zero(ds.p1());
  state.beta = Eigen::VectorXd::Zero(ds.p2());
  state.gamma.assign(static_cast<std::size_t>(designs.has_gamma ? ds.p2() : 0),
                     Eigen::VectorXd::Zero(cfg.n_knots_select));

  // step 0: common lambda over the full design, unit weights, BIC
  {
    auto init = detail::tune_path(designs.full, Eigen::VectorXd(), "BIC", 0, n, p_total,
                                  cfg, "init", "group-lasso");
    const CoefTriple& t = init.best;
    if (designs.has_alpha) state.alpha = t.alpha;
    if (designs.has_beta) state.beta = t.beta;
    if (designs.has_gamma) state.gamma = t.gamma;
    result.reports.push_back(std::move(init.report));
  }

  auto block_contribution = [&](GroupClass cls) -> Eigen::VectorXd {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(ds.n());
    if (cls == GroupClass::z_linear && designs.has_alpha) {
      acc = designs.z_centered * state.alpha;
    } else if (cls == GroupClass::x_linear && designs.has_beta) {
      acc = ds.x * state.beta;
    } else if (cls == GroupClass::x_spline && designs.has_gamma) {
      for (Eigen::Index l = 0; l < ds.p2(); ++l) {
        const auto& g = state.gamma[static_cast<std::size_t>(l)];
        if (g.squaredNorm() > 0.0) {
          acc += designs.spline[static_cast<std::size_t>(l)].values * g;
        }
      }
    }
    return acc;
  };

  auto df_fixed_except = [&](GroupClass cls) {
    CoefTriple copy = state;
    if (cls == GroupClass::z_linear) copy.alpha.setZero();
    else if (cls == GroupClass::x_linear) copy.beta.setZero();
    else for (auto& g : copy.gamma) g.setZero();
    return detail::df_of(copy);
  };

  const GroupClass order[3] = {GroupClass::z_linear, GroupClass::x_linear,
                               GroupClass::x_spline};
  const char* names[3] = {"alpha", "beta", "gamma"};
  const char* criteria[3] = {"BIC", "BIC", "EBIC"};

  // weights for the full design in the refit_others=free mode: the block
  // being tuned carries the given weights, currently-active other groups are
  // unpenalized (weight 0), inactive other groups stay excluded
  auto free_mode_weights = [&](GroupClass cls, const Eigen::VectorXd& block_w) {
    const double inf = std::numeric_limits<double>::infinity();
    const auto& groups = designs.full.groups();
    Eigen::VectorXd w(static_cast<Eigen::Index>(groups.size()));
    Eigen::Index bi = 0;
    for (std::size_t m = 0; m < groups.size(); ++m) {
      const auto& g = groups[m];
      if (g.cls == cls) {
        w[static_cast<Eigen::Index>(m)] = block_w.size() == 0 ? 1.0 : block_w[bi];
        ++bi;
      } else {
        double mag = 0.0;
        if (g.cls == GroupClass::z_linear) mag = std::fabs(state.alpha[g.slot]);
        else if (g.cls == GroupClass::x_linear) mag = std::fabs(state.beta[g.slot]);
        else mag = state.gamma[static_cast<std::size_t>(g.slot)].norm();
        w[static_cast<Eigen::Index>(m)] = mag > 0.0 ? 0.0 : inf;
      }
    }
    return w;
  };

  auto extract_block = [](const CoefTriple& t, GroupClass cls) {
    if (cls == GroupClass::z_linear) return t.alpha;
    if (cls == GroupClass::x_linear) return t.beta;
    Eigen::VectorXd flat;  // spline block handled by caller
    return flat;
  };

  for (int iter = 0; iter < cfg.outer_iters; ++iter) {
    const CoefTriple before = state;
    for (int c = 0; c < 3; ++c) {
      const GroupClass cls = order[c];
      auto& design_opt = designs.per_class[c];
      if (!design_opt) continue;
      GroupedDesign& design = *design_opt;
      GroupedDesign& fit_design = cfg.refit_others_free ? designs.full : design;

      if (!cfg.refit_others_free) {
        const Eigen::VectorXd others = block_contribution(order[(c + 1) % 3]) +
                                       block_contribution(order[(c + 2) % 3]);
        design.set_response(ds.y - others);
      }
      const int df_offset = cfg.refit_others_free ? 0 : df_fixed_except(cls);

      CoefTriple block_sol = design.zero_coefs();
      bool have_block = false;
      try {
        // weights pass: unit-weight group lasso for this block
        const Eigen::VectorXd w_init =
            cfg.refit_others_free ? free_mode_weights(cls, Eigen::VectorXd()) : Eigen::VectorXd();
        auto weights_fit = detail::tune_path(fit_design, w_init, criteria[c], df_offset,
                                             n, p_total, cfg, names[c], "weights");
        Eigen::VectorXd w = adaptive_weights(design, [&] {
          if (!cfg.refit_others_free) return weights_fit.best;
          CoefTriple sub = design.zero_coefs();
          if (cls == GroupClass::z_linear) sub.alpha = weights_fit.best.alpha;
          else if (cls == GroupClass::x_linear) sub.beta = weights_fit.best.beta;
          else sub.gamma = weights_fit.best.gamma;
          return sub;
        }());
        result.reports.push_back(std::move(weights_fit.report));

        // adaptive pass with the reciprocal-magnitude weights
        auto adaptive_fit = detail::tune_path(
            fit_design, cfg.refit_others_free ? free_mode_weights(cls, w) : w,
            criteria[c], df_offset, n, p_total, cfg, names[c], "adaptive");
        block_sol = adaptive_fit.best;
        have_block = true;
        result.reports.push_back(std::move(adaptive_fit.report));
      } catch (const AllGroupsExcluded&) {
        TuningReport excluded;
        excluded.block = names[c];
        excluded.stage = "excluded";
        excluded.criterion = criteria[c];
        result.reports.push_back(std::move(excluded));
      }

      if (cls == GroupClass::x_spline) {
        if (have_block) state.gamma = block_sol.gamma;
        else for (auto& g : state.gamma) g.setZero();
      } else {
        Eigen::VectorXd vals = have_block ? extract_block(block_sol, cls)
                                          : Eigen::VectorXd();
        if (cls == GroupClass::z_linear) {
          state.alpha = have_block ? vals : Eigen::VectorXd::Zero(ds.p1());
        } else {
          state.beta = have_block ? vals : Eigen::VectorXd::Zero(ds.p2());
        }
      }
    }
    double delta = (state.alpha - before.alpha).squaredNorm() +
                   (state.beta - before.beta).squaredNorm();
    for (std::size_t l = 0; l < state.gamma.size(); ++l) {
      delta += (state.gamma[l] - before.gamma[l]).squaredNorm();
    }
    if (delta < cfg.delta0) break;
  }

  if (state.gamma.empty()) {
    state.gamma.assign(static_cast<std::size_t>(ds.p2()),
                       Eigen::VectorXd::Zero(cfg.n_knots_select));
  }
  result.theta = std::move(state);
  result.structure = classify(result.theta);
  return result;
}

}  // namespace smile
