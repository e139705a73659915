#pragma once

#include <Eigen/Dense>
#include <optional>

#include "smile/dataset.hpp"
#include "smile/inference.hpp"
#include "smile/pipeline.hpp"

namespace smile {

struct FitConfig {
  SelectConfig select;
  int refit_order = 4;
  int refit_knots = 4;  // <= 0 delegates to the rule-of-thumb count
  double alpha = 0.05;
  int grid_size = 101;

  static FitConfig from_json(const nlohmann::json& j) {
    FitConfig cfg;
    cfg.select = SelectConfig::from_json(j);
    if (j.contains("refit_order")) cfg.refit_order = j.at("refit_order").get<int>();
    if (j.contains("refit_knots")) {
      const auto& v = j.at("refit_knots");
      cfg.refit_knots = v.is_string() ? 0 : v.get<int>();  // "auto" or a count
    }
    if (j.contains("alpha")) cfg.alpha = j.at("alpha").get<double>();
    if (j.contains("grid_size")) cfg.grid_size = j.at("grid_size").get<int>();
    return cfg;
  }
};

//! One fitted model: selected (or given) structure plus the stage-two refit.
//! Keeps the dataset centering offsets so raw covariate rows can be scored.
struct FittedModel {
  Variant variant = Variant::smile;
  ModelStructure structure;
  std::optional<SelectionResult> selection;  // absent for the oracle variant
  std::optional<RefitFit> refit_fit;         // absent when nothing was selected
  double y_mean = 0.0;
  Eigen::VectorXd x_means;
  double alpha_level = 0.05;

  bool empty() const { return !refit_fit.has_value(); }

  //! Prediction for one raw (uncentered) covariate row.
  double predict(const Eigen::VectorXd& z_row, const Eigen::VectorXd& x_row) const {
    double out = y_mean;
    if (!refit_fit) return out;
    const RefitFit& f = *refit_fit;
    for (std::size_t j = 0; j < structure.s_z.size(); ++j) {
      out += f.alpha_star[static_cast<Eigen::Index>(j)] *
             (z_row[structure.s_z[j]] - f.z_col_means[static_cast<Eigen::Index>(j)]);
    }
    for (std::size_t j = 0; j < structure.s_x_pl.size(); ++j) {
      const int l = structure.s_x_pl[j];
      out += f.beta_star[static_cast<Eigen::Index>(j)] * (x_row[l] - x_means[l]);
    }
    for (int l : f.nonlinear_index) {
      out += f.phi_value(l, x_row[l] - x_means[l]);
    }
    return out;
  }

  Eigen::VectorXd predict_all(const Dataset& raw) const {
    Eigen::VectorXd out(raw.n());
    for (Eigen::Index i = 0; i < raw.n(); ++i) {
      out[i] = predict(raw.z.row(i).transpose(), raw.x.row(i).transpose());
    }
    return out;
  }
};

//! Fit one model variant end to end. SMILE/SAPLM/SLM run stage-one selection
//! and refit the winner; the oracle skips selection and refits the true
//! structure. Accepts a raw dataset and centers it if needed.
inline FittedModel fit_variant(const Dataset& input, const FitConfig& cfg, Variant variant,
                               const TrueComponents* truth = nullptr) {
  const Dataset ds = input.centered ? input : center(input);

  FittedModel model;
  model.variant = variant;
  model.y_mean = ds.y_mean;
  model.x_means = ds.x_means;
  model.alpha_level = cfg.alpha;

  if (variant == Variant::oracle) {
    if (truth == nullptr) throw InvalidArgs("oracle variant requires the true structure");
    model.structure = truth->structure;
  } else {
    SelectConfig sel = cfg.select;
    sel.variant = variant;
    model.selection = smile_select(ds, sel);
    model.structure = model.selection->structure;
  }

  if (!model.structure.empty()) {
    RefitConfig rc;
    rc.order = cfg.refit_order;
    rc.n_knots = cfg.refit_knots;
    rc.equal_spaced_knots = cfg.select.equal_spaced_knots;
    model.refit_fit = refit(ds, model.structure, rc);
  }
  return model;
}

}  // namespace smile
