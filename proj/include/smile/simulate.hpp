#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "smile/dataset.hpp"
#include "smile/fit.hpp"
#include "smile/inference.hpp"
#include "smile/parallel.hpp"
#include "smile/rng.hpp"

namespace smile {

enum class Scenario { aplm, am, lm };

inline Scenario scenario_from_string(const std::string& s) {
  if (s == "aplm" || s == "APLM") return Scenario::aplm;
  if (s == "am" || s == "AM") return Scenario::am;
  if (s == "lm" || s == "LM") return Scenario::lm;
  throw InvalidArgs("unknown scenario " + s);
}

struct DgpSpec {
  int n = 300;
  int p1 = 200;
  int p2 = 200;
  double sigma = 0.5;
  Scenario scenario = Scenario::aplm;
  Seed seed{0};
};

namespace detail {

//! E{ 8 sin(2 pi X) / (2 - sin(2 pi X)) } over Unif[-1/2, 1/2], by Simpson.
inline double am_phi1_constant() {
  static const double value = [] {
    const int panels = 20000;
    double acc = 0.0;
    auto f = [](double x) {
      const double s = std::sin(2.0 * M_PI * x);
      return 8.0 * s / (2.0 - s);
    };
    for (int i = 0; i <= panels; ++i) {
      const double x = -0.5 + static_cast<double>(i) / panels;
      const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      acc += w * f(x);
    }
    return acc / (3.0 * panels);
  }();
  return value;
}

}  // namespace detail

//! Draw one dataset and its generating truth. z entries are Bernoulli(0.25)
//! indicators, x entries Unif[-1/2, 1/2], noise N(0, sigma^2). Component
//! centering constants are applied analytically.
inline std::pair<Dataset, TrueComponents> generate(const DgpSpec& spec) {
  if (spec.n < 50) throw InvalidArgs("generate requires n >= 50");
  if (!(spec.sigma > 0.0)) throw InvalidArgs("generate requires sigma > 0");
  Rng rng = Rng(spec.seed);

  Dataset ds;
  ds.y.resize(spec.n);
  ds.z.resize(spec.n, spec.p1);
  ds.x.resize(spec.n, spec.p2);
  ds.x_means = Eigen::VectorXd::Zero(spec.p2);
  ds.z_names.reserve(static_cast<std::size_t>(spec.p1));
  ds.x_names.reserve(static_cast<std::size_t>(spec.p2));
  for (int k = 0; k < spec.p1; ++k) ds.z_names.push_back("z_" + std::to_string(k + 1));
  for (int l = 0; l < spec.p2; ++l) ds.x_names.push_back("x_" + std::to_string(l + 1));

  for (int i = 0; i < spec.n; ++i) {
    for (int k = 0; k < spec.p1; ++k) ds.z(i, k) = rng.uniform01() > 0.75 ? 1.0 : 0.0;
    for (int l = 0; l < spec.p2; ++l) ds.x(i, l) = rng.uniform(-0.5, 0.5);
  }

  TrueComponents truth;
  truth.sigma = spec.sigma;
  truth.alpha0 = Eigen::VectorXd::Zero(spec.p1);
  truth.beta0 = Eigen::VectorXd::Zero(spec.p2);
  truth.phi.assign(static_cast<std::size_t>(spec.p2), nullptr);

  if (spec.scenario == Scenario::aplm) {
    if (spec.p1 < 3 || spec.p2 < 3) throw InvalidArgs("aplm scenario needs p1, p2 >= 3");
    truth.alpha0[0] = 3.0;
    truth.alpha0[1] = 4.0;
    truth.alpha0[2] = -2.0;
    truth.structure.s_z = {0, 1, 2};
    truth.structure.s_x_pl = {0};
    truth.structure.s_x_pn = {1};
    truth.structure.s_x_ln = {2};
    truth.beta0[0] = 9.0;
    truth.phi[0] = [](double x) { return 9.0 * x; };
    truth.phi[1] = [](double x) {
      const double c = std::cos(M_PI * x), s = std::sin(M_PI * x);
      return -1.5 * c * c + 3.0 * s * s - 0.75;
    };
    truth.phi[2] = [](double x) { return 6.0 * x + 18.0 * x * x - 1.5; };
  } else if (spec.scenario == Scenario::am) {
    if (spec.p2 < 3) throw InvalidArgs("am scenario needs p2 >= 3");
    truth.structure.s_x_pn = {0, 1};
    truth.structure.s_x_ln = {2};
    const double c1 = detail::am_phi1_constant();
    truth.phi[0] = [c1](double x) {
      const double s = std::sin(2.0 * M_PI * x);
      return 8.0 * s / (2.0 - s) - c1;
    };
    truth.phi[1] = [](double x) {
      const double c = std::cos(M_PI * x), s = std::sin(M_PI * x);
      return -3.0 * c * c + 6.0 * s * s - 1.5;
    };
    truth.phi[2] = [](double x) { return 6.0 * x + 18.0 * x * x - 1.5; };
  } else {
    if (spec.p2 < 3) throw InvalidArgs("lm scenario needs p2 >= 3");
    truth.structure.s_x_pl = {0, 1, 2};
    truth.beta0[0] = 3.0;
    truth.beta0[1] = 4.0;
    truth.beta0[2] = -2.0;
    truth.phi[0] = [](double x) { return 3.0 * x; };
    truth.phi[1] = [](double x) { return 4.0 * x; };
    truth.phi[2] = [](double x) { return -2.0 * x; };
  }

  for (int i = 0; i < spec.n; ++i) {
    double mean = 0.0;
    for (int k : truth.structure.s_z) mean += ds.z(i, k) * truth.alpha0[k];
    for (std::size_t l = 0; l < truth.phi.size(); ++l) {
      if (truth.phi[l]) mean += truth.phi[l](ds.x(i, static_cast<int>(l)));
    }
    ds.y[i] = mean + rng.normal(0.0, spec.sigma);
  }
  return {std::move(ds), std::move(truth)};
}

//! Selection and estimation statistics of one experiment, percentages in
//! [0, 100]; NaN marks an undefined ratio (empty reference set).
struct MetricsReport {
  double corrZ = 0, corrZ0 = 0, corrL = 0, corrN = 0, corrLN = 0, corrX0 = 0;
  double Zto0 = 0, LtoN = 0, NtoL = 0, Xto0 = 0;
  std::vector<double> mse_alpha;  // per truth-active z index
  double mse_beta1 = 0.0;         // first truth purely-linear coefficient
  std::vector<double> amse_phi;   // per truth-active x index
  double cv_mspe = 0.0;
  std::vector<double> coverage;   // per truth nonlinear x index
};

namespace detail {

inline double pct(int hits, int total) {
  return total == 0 ? std::numeric_limits<double>::quiet_NaN()
                    : 100.0 * hits / static_cast<double>(total);
}

inline int overlap(const std::vector<int>& a, const std::vector<int>& b) {
  int c = 0;
  for (int v : a) c += std::binary_search(b.begin(), b.end(), v) ? 1 : 0;
  return c;
}

}  // namespace detail

//! Structure-recovery statistics comparing an estimated structure to the
//! truth over the index universes {1..p1} and {1..p2}.
inline MetricsReport selection_metrics(const ModelStructure& truth,
                                       const ModelStructure& est, int p1, int p2) {
  MetricsReport m;
  const auto est_linear = [&] {  // indices with a nonzero linear part
    std::vector<int> out = est.s_x_pl;
    out.insert(out.end(), est.s_x_ln.begin(), est.s_x_ln.end());
    std::sort(out.begin(), out.end());
    return out;
  }();
  const auto est_nonlinear = est.s_x_n();
  const auto est_active = est.s_x();
  const auto truth_active = truth.s_x();

  std::vector<int> truth_nz, est_nz;
  for (int k = 0; k < p1; ++k) {
    if (!contains(truth.s_z, k)) truth_nz.push_back(k);
    if (!contains(est.s_z, k)) est_nz.push_back(k);
  }
  std::vector<int> truth_nx, est_nx;
  for (int l = 0; l < p2; ++l) {
    if (!contains(truth_active, l)) truth_nx.push_back(l);
    if (!contains(est_active, l)) est_nx.push_back(l);
  }

  m.corrZ = detail::pct(detail::overlap(truth.s_z, est.s_z), static_cast<int>(truth.s_z.size()));
  m.corrZ0 = detail::pct(detail::overlap(truth_nz, est_nz), static_cast<int>(truth_nz.size()));
  m.corrL = detail::pct(detail::overlap(truth.s_x_pl, est.s_x_pl), static_cast<int>(truth.s_x_pl.size()));
  m.corrN = detail::pct(detail::overlap(truth.s_x_pn, est.s_x_pn), static_cast<int>(truth.s_x_pn.size()));
  m.corrLN = detail::pct(detail::overlap(truth.s_x_ln, est.s_x_ln), static_cast<int>(truth.s_x_ln.size()));
  m.corrX0 = detail::pct(detail::overlap(truth_nx, est_nx), static_cast<int>(truth_nx.size()));
  m.Zto0 = detail::pct(detail::overlap(truth.s_z, est_nz), static_cast<int>(truth.s_z.size()));
  m.LtoN = detail::pct(detail::overlap(truth.s_x_pl, est_nonlinear), static_cast<int>(truth.s_x_pl.size()));
  m.NtoL = detail::pct(detail::overlap(truth.s_x_pn, est_linear), static_cast<int>(truth.s_x_pn.size()));
  m.Xto0 = detail::pct(detail::overlap(truth_active, est_nx), static_cast<int>(truth_active.size()));
  return m;
}

//! SBLL estimates of component ell at arbitrary (centered) points; shared by
//! the estimation metrics and the coverage experiment.
inline Eigen::VectorXd sbll_estimate_at(const Dataset& ds, const RefitFit& fit,
                                        const ModelStructure& structure, int ell,
                                        const Eigen::VectorXd& points) {
  const Eigen::VectorXd pseudo = pseudo_responses(ds, structure, fit, ell);
  const Bandwidth bw = rot_bandwidth(ds.x.col(ell), pseudo);
  Eigen::VectorXd out(points.size());
  for (Eigen::Index i = 0; i < points.size(); ++i) {
    out[i] = local_linear(ds.x.col(ell), pseudo, bw, points[i]).intercept;
  }
  return out;
}

//! Estimation accuracy of one fitted model on its own simulated sample:
//! squared errors for the refit coefficients and average squared error of the
//! estimated component functions at the simulated covariate values.
inline void estimation_metrics(const Dataset& ds, const TrueComponents& truth,
                               const FittedModel& model, MetricsReport& m) {
  m.mse_alpha.assign(truth.structure.s_z.size(), 0.0);
  for (std::size_t j = 0; j < truth.structure.s_z.size(); ++j) {
    const int k = truth.structure.s_z[j];
    double est = 0.0;
    if (model.refit_fit) {
      for (std::size_t r = 0; r < model.structure.s_z.size(); ++r) {
        if (model.structure.s_z[r] == k) est = model.refit_fit->alpha_star[static_cast<Eigen::Index>(r)];
      }
    }
    const double err = est - truth.alpha0[k];
    m.mse_alpha[j] = err * err;
  }

  m.mse_beta1 = std::numeric_limits<double>::quiet_NaN();
  if (!truth.structure.s_x_pl.empty()) {
    const int l1 = truth.structure.s_x_pl.front();
    double est = 0.0;
    bool defined = model.variant != Variant::saplm;
    if (model.refit_fit) {
      for (std::size_t r = 0; r < model.structure.s_x_pl.size(); ++r) {
        if (model.structure.s_x_pl[r] == l1) est = model.refit_fit->beta_star[static_cast<Eigen::Index>(r)];
      }
    }
    if (defined) {
      const double err = est - truth.beta0[l1];
      m.mse_beta1 = err * err;
    }
  }

  const auto truth_active = truth.structure.s_x();
  m.amse_phi.assign(truth_active.size(), 0.0);
  for (std::size_t j = 0; j < truth_active.size(); ++j) {
    const int ell = truth_active[j];
    Eigen::VectorXd fitted = Eigen::VectorXd::Zero(ds.n());
    if (model.refit_fit && contains(model.structure.s_x_n(), ell)) {
      fitted = sbll_estimate_at(ds, *model.refit_fit, model.structure, ell, ds.x.col(ell));
    } else if (model.refit_fit && contains(model.structure.s_x_pl, ell)) {
      double beta = 0.0;
      for (std::size_t r = 0; r < model.structure.s_x_pl.size(); ++r) {
        if (model.structure.s_x_pl[r] == ell) beta = model.refit_fit->beta_star[static_cast<Eigen::Index>(r)];
      }
      fitted = beta * ds.x.col(ell);
    }
    double acc = 0.0;
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
      const double x_orig = ds.x(i, ell) + (ds.centered ? ds.x_means[ell] : 0.0);
      const double err = fitted[i] - truth.phi_at(ell, x_orig);
      acc += err * err;
    }
    m.amse_phi[j] = acc / static_cast<double>(ds.n());
  }
}

//! Ten-fold cross-validated mean squared prediction error of one variant on a
//! raw dataset. Folds are a seeded random partition into near-equal parts.
inline double cv_mspe(const Dataset& raw, const FitConfig& cfg, Variant variant,
                      int folds = 10, Seed seed = Seed{0},
                      const TrueComponents* truth = nullptr) {
  const Eigen::Index n = raw.n();
  if (n < folds) throw InvalidArgs("cv_mspe requires n >= folds");
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  for (std::size_t i = perm.size(); i > 1; --i) {
    std::swap(perm[i - 1], perm[static_cast<std::size_t>(rng.next_u64() % i)]);
  }

  double total = 0.0;
  for (int f = 0; f < folds; ++f) {
    const Eigen::Index lo = n * f / folds;
    const Eigen::Index hi = n * (f + 1) / folds;
    const Eigen::Index n_test = hi - lo;
    const Eigen::Index n_train = n - n_test;

    Dataset train;
    train.z.resize(n_train, raw.p1());
    train.x.resize(n_train, raw.p2());
    train.y.resize(n_train);
    train.z_names = raw.z_names;
    train.x_names = raw.x_names;
    train.x_means = Eigen::VectorXd::Zero(raw.p2());
    Dataset test = train;
    test.z.resize(n_test, raw.p1());
    test.x.resize(n_test, raw.p2());
    test.y.resize(n_test);

    Eigen::Index ti = 0, si = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int row = perm[static_cast<std::size_t>(i)];
      if (i >= lo && i < hi) {
        test.y[si] = raw.y[row];
        test.z.row(si) = raw.z.row(row);
        test.x.row(si) = raw.x.row(row);
        ++si;
      } else {
        train.y[ti] = raw.y[row];
        train.z.row(ti) = raw.z.row(row);
        train.x.row(ti) = raw.x.row(row);
        ++ti;
      }
    }

    try {
      const FittedModel model = fit_variant(train, cfg, variant, truth);
      const Eigen::VectorXd pred = model.predict_all(test);
      total += (pred - test.y).squaredNorm() / static_cast<double>(n_test);
    } catch (const std::exception& e) {
      throw NumericError("cv fold " + std::to_string(f) + ": " + e.what());
    }
  }
  return total / folds;
}

//! One replicate of the coverage experiment: fit, build the SCB for each
//! truth-nonlinear component at the interior simulated covariate values, and
//! record whether the true curve stays inside everywhere. A replicate whose
//! fit drops the component counts as not covered.
inline std::vector<bool> scb_covers_truth(const Dataset& ds, const TrueComponents& truth,
                                          const FittedModel& model, double alpha) {
  const auto nl = truth.structure.s_x_n();
  std::vector<bool> covered(nl.size(), false);
  for (std::size_t j = 0; j < nl.size(); ++j) {
    const int ell = nl[j];
    if (!model.refit_fit || !contains(model.structure.s_x_n(), ell)) continue;
    const Eigen::VectorXd pseudo = pseudo_responses(ds, model.structure, *model.refit_fit, ell);
    const Bandwidth bw = rot_bandwidth(ds.x.col(ell), pseudo);
    const double lo = ds.x.col(ell).minCoeff() + bw.h;
    const double hi = ds.x.col(ell).maxCoeff() - bw.h;
    std::vector<double> pts;
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
      const double v = ds.x(i, ell);
      if (v >= lo && v <= hi) pts.push_back(v);
    }
    if (pts.empty()) continue;
    const Eigen::Map<const Eigen::VectorXd> grid(pts.data(), static_cast<Eigen::Index>(pts.size()));
    const SbllCurve curve = sbll_curve(ds, *model.refit_fit, model.structure, ell, grid, alpha);
    bool ok = true;
    for (Eigen::Index g = 0; g < grid.size(); ++g) {
      const double x_orig = grid[g] + (ds.centered ? ds.x_means[ell] : 0.0);
      const double target = truth.phi_at(ell, x_orig);
      if (target < curve.scb_lo[g] || target > curve.scb_hi[g]) {
        ok = false;
        break;
      }
    }
    covered[j] = ok;
  }
  return covered;
}

//! Replicated experiment over one DGP setting: per-variant selection,
//! estimation, prediction and coverage statistics, aggregated by averaging
//! the per-replicate values (equivalently per-column-per-replicate counting).
struct ExperimentConfig {
  DgpSpec dgp;
  int reps = 100;
  std::vector<Variant> variants = {Variant::smile};
  bool selection = true;
  bool estimation = true;
  std::vector<Variant> cv_variants;  // CV-MSPE is costly; opt in per variant
  bool coverage = false;
  double alpha = 0.05;
  int cv_folds = 10;
  int threads = 0;
  FitConfig fit;

  static ExperimentConfig from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    if (j.contains("n")) cfg.dgp.n = j.at("n").get<int>();
    if (j.contains("p1")) cfg.dgp.p1 = j.at("p1").get<int>();
    if (j.contains("p2")) cfg.dgp.p2 = j.at("p2").get<int>();
    if (j.contains("sigma")) cfg.dgp.sigma = j.at("sigma").get<double>();
    if (j.contains("scenario")) cfg.dgp.scenario = scenario_from_string(j.at("scenario").get<std::string>());
    if (j.contains("seed")) cfg.dgp.seed = Seed{j.at("seed").get<std::uint64_t>()};
    if (j.contains("reps")) cfg.reps = j.at("reps").get<int>();
    if (j.contains("variants")) {
      cfg.variants.clear();
      for (const auto& v : j.at("variants")) cfg.variants.push_back(variant_from_string(v.get<std::string>()));
    }
    if (j.contains("selection")) cfg.selection = j.at("selection").get<bool>();
    if (j.contains("estimation")) cfg.estimation = j.at("estimation").get<bool>();
    if (j.contains("cv_variants")) {
      for (const auto& v : j.at("cv_variants")) cfg.cv_variants.push_back(variant_from_string(v.get<std::string>()));
    }
    if (j.contains("coverage")) cfg.coverage = j.at("coverage").get<bool>();
    if (j.contains("alpha")) cfg.alpha = j.at("alpha").get<double>();
    if (j.contains("cv_folds")) cfg.cv_folds = j.at("cv_folds").get<int>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
    if (j.contains("select")) cfg.fit = FitConfig::from_json(j.at("select"));
    return cfg;
  }
};

struct VariantSummary {
  Variant variant = Variant::smile;
  MetricsReport mean;
  std::vector<MetricsReport> per_rep;
};

struct ExperimentResult {
  DgpSpec dgp;
  int reps = 0;
  std::vector<VariantSummary> variants;
};

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult result;
  result.dgp = cfg.dgp;
  result.reps = cfg.reps;
  result.variants.resize(cfg.variants.size());
  for (std::size_t v = 0; v < cfg.variants.size(); ++v) {
    result.variants[v].variant = cfg.variants[v];
    result.variants[v].per_rep.resize(static_cast<std::size_t>(cfg.reps));
  }

  parallel_for(static_cast<std::size_t>(cfg.reps), cfg.threads, [&](std::size_t r) {
    try {
      DgpSpec rep_spec = cfg.dgp;
      rep_spec.seed = Seed{Rng(cfg.dgp.seed).stream(r).next_u64()};
      auto [raw, truth] = generate(rep_spec);
      const Dataset ds = center(raw);
      for (std::size_t v = 0; v < cfg.variants.size(); ++v) {
        const Variant variant = cfg.variants[v];
        MetricsReport& m = result.variants[v].per_rep[r];
        const FittedModel model = fit_variant(ds, cfg.fit, variant, &truth);
        if (cfg.selection) {
          const MetricsReport sel = selection_metrics(truth.structure, model.structure,
                                                      cfg.dgp.p1, cfg.dgp.p2);
          m.corrZ = sel.corrZ;
          m.corrZ0 = sel.corrZ0;
          m.corrL = sel.corrL;
          m.corrN = sel.corrN;
          m.corrLN = sel.corrLN;
          m.corrX0 = sel.corrX0;
          m.Zto0 = sel.Zto0;
          m.LtoN = sel.LtoN;
          m.NtoL = sel.NtoL;
          m.Xto0 = sel.Xto0;
        }
        if (cfg.estimation) estimation_metrics(ds, truth, model, m);
        if (std::find(cfg.cv_variants.begin(), cfg.cv_variants.end(), variant) !=
            cfg.cv_variants.end()) {
          m.cv_mspe = cv_mspe(raw, cfg.fit, variant, cfg.cv_folds,
                              Seed{Rng(rep_spec.seed).stream(77).next_u64()}, &truth);
        } else {
          m.cv_mspe = std::numeric_limits<double>::quiet_NaN();
        }
        if (cfg.coverage) {
          const auto covered = scb_covers_truth(ds, truth, model, cfg.alpha);
          m.coverage.assign(covered.size(), 0.0);
          for (std::size_t j = 0; j < covered.size(); ++j) m.coverage[j] = covered[j] ? 100.0 : 0.0;
        }
      }
    } catch (const std::exception& e) {
      throw NumericError("replicate " + std::to_string(r) + ": " + e.what());
    }
  });

  for (auto& vs : result.variants) {
    MetricsReport& mean = vs.mean;
    mean = vs.per_rep.front();
    auto add_scalar = [&](double MetricsReport::* field) {
      double acc = 0.0;
      for (const auto& rep : vs.per_rep) acc += rep.*field;
      mean.*field = acc / cfg.reps;
    };
    add_scalar(&MetricsReport::corrZ);
    add_scalar(&MetricsReport::corrZ0);
    add_scalar(&MetricsReport::corrL);
    add_scalar(&MetricsReport::corrN);
    add_scalar(&MetricsReport::corrLN);
    add_scalar(&MetricsReport::corrX0);
    add_scalar(&MetricsReport::Zto0);
    add_scalar(&MetricsReport::LtoN);
    add_scalar(&MetricsReport::NtoL);
    add_scalar(&MetricsReport::Xto0);
    add_scalar(&MetricsReport::mse_beta1);
    add_scalar(&MetricsReport::cv_mspe);
    for (std::size_t j = 0; j < mean.mse_alpha.size(); ++j) {
      double acc = 0.0;
      for (const auto& rep : vs.per_rep) acc += rep.mse_alpha[j];
      mean.mse_alpha[j] = acc / cfg.reps;
    }
    for (std::size_t j = 0; j < mean.amse_phi.size(); ++j) {
      double acc = 0.0;
      for (const auto& rep : vs.per_rep) acc += rep.amse_phi[j];
      mean.amse_phi[j] = acc / cfg.reps;
    }
    for (std::size_t j = 0; j < mean.coverage.size(); ++j) {
      double acc = 0.0;
      for (const auto& rep : vs.per_rep) acc += rep.coverage[j];
      mean.coverage[j] = acc / cfg.reps;
    }
  }
  return result;
}

//! Coverage percentages over seeded replicates for one variant.
inline std::vector<double> coverage_experiment(const DgpSpec& spec, int reps,
                                               double alpha = 0.05,
                                               Variant variant = Variant::smile,
                                               const FitConfig& cfg = {}, int threads = 0) {
  if (reps < 50) throw InvalidArgs("coverage_experiment requires reps >= 50");
  const auto nl_count = [&] {
    DgpSpec probe = spec;
    probe.seed = Seed{spec.seed.value};
    return generate(probe).second.structure.s_x_n().size();
  }();
  std::vector<std::vector<bool>> results(static_cast<std::size_t>(reps));
  parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t r) {
    DgpSpec rep_spec = spec;
    rep_spec.seed = Seed{Rng(spec.seed).stream(r).next_u64()};
    auto [raw, truth] = generate(rep_spec);
    FitConfig rep_cfg = cfg;
    rep_cfg.alpha = alpha;
    const FittedModel model = fit_variant(raw, rep_cfg, variant, &truth);
    const Dataset ds = center(raw);
    results[r] = scb_covers_truth(ds, truth, model, alpha);
  });
  std::vector<double> coverage(nl_count, 0.0);
  for (const auto& rep : results) {
    for (std::size_t j = 0; j < coverage.size() && j < rep.size(); ++j) {
      coverage[j] += rep[j] ? 1.0 : 0.0;
    }
  }
  for (auto& c : coverage) c = 100.0 * c / reps;
  return coverage;
}

}  // namespace smile
