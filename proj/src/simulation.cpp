#include "pathmed/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "pathmed/inference.hpp"
#include "pathmed/parallel.hpp"
#include "pathmed/rng.hpp"

namespace pathmed {

DgpCoefficients DgpCoefficients::defaults() {
  DgpCoefficients c;
  c.beta_x.resize(4, 4);
  c.beta_x << 0.77, -0.86, 0.35, 0.88,
      -0.99, -0.72, -0.10, 0.54,
      -0.74, 0.10, 0.91, 0.46,
      -0.21, -0.43, -0.21, -0.70;
  c.beta_a.resize(5);
  c.beta_a << -0.36, -0.08, -0.06, 0.40, -0.14;
  c.beta_m1.resize(6);
  c.beta_m1 << 0.0, 0.30, 0.42, 0.48, 0.28, 0.41;
  c.beta_m2.resize(7);
  c.beta_m2 << 0.04, 0.20, 0.09, 0.12, 0.39, 0.34, 0.24;
  c.beta_y.resize(9);
  c.beta_y << -0.27, -0.10, 0.25, 0.20, -0.08, 0.78, 0.76, -0.40, 0.96;
  return c;
}

namespace {

void check_coeffs(const DgpCoefficients& c) {
  if (c.beta_x.rows() != 4 || c.beta_x.cols() != 4 || c.beta_a.size() != 5 ||
      c.beta_m1.size() != 6 || c.beta_m2.size() != 7 || c.beta_y.size() != 9)
    throw Error(ErrorCategory::config, "coefficient vector lengths are fixed");
}

double mean_m1(const DgpCoefficients& c, const Eigen::Vector4d& x, double a) {
  return c.beta_m1(0) + c.beta_m1.segment(1, 4).dot(x) + c.beta_m1(5) * a;
}

double mean_m2(const DgpCoefficients& c, const Eigen::Vector4d& x, double a,
               double m1) {
  return c.beta_m2(0) + c.beta_m2.segment(1, 4).dot(x) + c.beta_m2(5) * a +
         c.beta_m2(6) * m1;
}

double mean_y(const DgpCoefficients& c, double uxy, const Eigen::Vector4d& x,
              double a, double m1, double m2) {
  return c.beta_y(0) + c.beta_y(1) * uxy + c.beta_y.segment(2, 4).dot(x) +
         c.beta_y(6) * a + c.beta_y(7) * m1 + c.beta_y(8) * m2;
}

}  // namespace

ObservedData generate(const DgpCoefficients& coeffs, Index n, std::uint64_t seed) {
  check_coeffs(coeffs);
  if (n < 1) throw Error(ErrorCategory::config, "need n >= 1");
  ObservedData d;
  d.x.resize(n, 4);
  d.a.resize(n);
  d.mediators.assign(2, Matrix(n, 1));
  d.y.resize(n);
  d.x_names = {"x1", "x2", "x3", "x4"};
  d.mediator_names = {{"m1"}, {"m2"}};
  d.discrete = {{false}, {false}};

  Rng rng(derive_seed(seed, 0xd6e, 0));
  for (Index i = 0; i < n; ++i) {
    Eigen::Vector4d u;
    for (int t = 0; t < 4; ++t) u(t) = rng.normal();
    Eigen::Vector4d x;
    for (int j = 0; j < 4; ++j)
      x(j) = coeffs.beta_x.row(j).dot(u) + rng.normal();
    double pa = sigmoid(coeffs.beta_a(0) + coeffs.beta_a.segment(1, 4).dot(x));
    double a = rng.bernoulli(pa) ? 1.0 : 0.0;
    double m1 = mean_m1(coeffs, x, a) + rng.normal();
    double m2 = mean_m2(coeffs, x, a, m1) + rng.normal();
    double y = mean_y(coeffs, u(3), x, a, m1, m2) + rng.normal();
    d.x.row(i) = x.transpose();
    d.a(i) = a;
    d.mediators[0](i, 0) = m1;
    d.mediators[1](i, 0) = m2;
    d.y(i) = y;
  }
  return d;
}

Matrix false_covariates(const Matrix& x, Index* singular_rows) {
  if (x.cols() != 4)
    throw Error(ErrorCategory::data, "the transform expects four covariates");
  Matrix z(x.rows(), 4);
  for (Index i = 0; i < x.rows(); ++i) {
    double x1 = x(i, 0);
    z(i, 0) = x1;
    z(i, 1) = std::exp(x(i, 1) / 2.0);
    if (x1 == 0.0) {
      z(i, 2) = 0.0;
      if (singular_rows) ++*singular_rows;
    } else {
      z(i, 2) = std::cbrt(x(i, 2) / x1);
    }
    z(i, 3) = x(i, 3) / (std::exp(x1 / 2.0) + 1.0);
  }
  return z;
}

ObservedData attach_false_covariates(const ObservedData& data,
                                     Index* singular_rows) {
  ObservedData out = data;
  Matrix z = false_covariates(data.x.leftCols(4), singular_rows);
  out.x.resize(data.n(), data.x.cols() + 4);
  out.x << data.x, z;
  out.x_names = data.x_names;
  out.x_names.insert(out.x_names.end(), {"z1", "z2", "z3", "z4"});
  return out;
}

double oracle_truth(const DgpCoefficients& coeffs, const Regime& regime,
                    Index draws, std::uint64_t seed) {
  check_coeffs(coeffs);
  if (regime.size() != 3)
    throw Error(ErrorCategory::config, "the generating process has K = 2");
  if (draws < 100000)
    throw Error(ErrorCategory::config, "use at least 1e5 oracle draws");
  Rng rng(derive_seed(seed, 0x02ac1e, 0));
  double acc = 0.0;
  for (Index d = 0; d < draws; ++d) {
    Eigen::Vector4d u;
    for (int t = 0; t < 4; ++t) u(t) = rng.normal();
    Eigen::Vector4d x;
    for (int j = 0; j < 4; ++j)
      x(j) = coeffs.beta_x.row(j).dot(u) + rng.normal();
    double m1 = mean_m1(coeffs, x, regime.a(1)) + rng.normal();
    double m2 = mean_m2(coeffs, x, regime.a(2), m1) + rng.normal();
    acc += mean_y(coeffs, u(3), x, regime.a(3), m1, m2) + rng.normal();
  }
  return acc / static_cast<double>(draws);
}

double closed_form_theta(const DgpCoefficients& coeffs, const Regime& regime) {
  check_coeffs(coeffs);
  if (regime.size() != 3)
    throw Error(ErrorCategory::config, "the generating process has K = 2");
  Eigen::Vector4d x0 = Eigen::Vector4d::Zero();
  double em1 = mean_m1(coeffs, x0, regime.a(1));
  double em2 = mean_m2(coeffs, x0, regime.a(2), em1);
  return mean_y(coeffs, 0.0, x0, regime.a(3), em1, em2);
}

// ---------------------------------------------------------------------------
// closed-form nuisance functions
// ---------------------------------------------------------------------------

namespace {

// E[u_xy | x] = w' x with w from the joint normal of (u, x)
Eigen::Vector4d uxy_regression(const DgpCoefficients& c) {
  Matrix cov = c.beta_x * c.beta_x.transpose() + Matrix::Identity(4, 4);
  Eigen::Vector4d cross = c.beta_x.col(3);  // Cov(x_j, u_xy)
  return cov.ldlt().solve(cross);
}

DesignSpec spec_xm(int mediator_levels) {
  DesignSpec d;
  d.x_cols = {0, 1, 2, 3};
  d.mediator_levels = mediator_levels;
  return d;
}

}  // namespace

TrueNuisances true_nuisances(const DgpCoefficients& c) {
  check_coeffs(c);
  TrueNuisances out;

  {
    DesignSpec d = spec_xm(0);
    d.family = Family::logit;
    out.pi0 = make_logistic(d, c.beta_a, "true");
  }
  {
    // conditioning on m1 tilts the treatment log-odds by the Gaussian
    // likelihood ratio of m1 under the two arms
    DesignSpec d = spec_xm(1);
    d.family = Family::logit;
    Vector b(6);
    double g = c.beta_m1(5);
    b(0) = c.beta_a(0) - g * c.beta_m1(0) - g * g / 2.0;
    for (int j = 0; j < 4; ++j) b(1 + j) = c.beta_a(1 + j) - g * c.beta_m1(1 + j);
    b(5) = g;
    out.pi1 = make_logistic(d, b, "true");

    DesignSpec d2 = spec_xm(2);
    d2.family = Family::logit;
    Vector b2(7);
    double h = c.beta_m2(5);
    b2(0) = b(0) - h * c.beta_m2(0) - h * h / 2.0;
    for (int j = 0; j < 4; ++j) b2(1 + j) = b(1 + j) - h * c.beta_m2(1 + j);
    b2(5) = b(5) - h * c.beta_m2(6);
    b2(6) = h;
    out.pi2 = make_logistic(d2, b2, "true");
  }
  {
    Eigen::Vector4d w = uxy_regression(c);
    // design order: 1, x1..x4, m1, m2, a
    Vector b(8);
    b(0) = c.beta_y(0);
    for (int j = 0; j < 4; ++j) b(1 + j) = c.beta_y(2 + j) + c.beta_y(1) * w(j);
    b(5) = c.beta_y(7);
    b(6) = c.beta_y(8);
    b(7) = c.beta_y(6);
    out.outcome_coefs = b;
  }
  return out;
}

// ---------------------------------------------------------------------------
// perturbation slope
// ---------------------------------------------------------------------------

namespace {

// linear function of (1, x, m1, m2) with closed-form mediator integration
struct LinFn {
  double c0 = 0.0;
  Eigen::Vector4d cx = Eigen::Vector4d::Zero();
  double cm1 = 0.0;
  double cm2 = 0.0;

  void integrate_m2(const DgpCoefficients& c, double arm) {
    c0 += cm2 * (c.beta_m2(0) + c.beta_m2(5) * arm);
    for (int j = 0; j < 4; ++j) cx(j) += cm2 * c.beta_m2(1 + j);
    cm1 += cm2 * c.beta_m2(6);
    cm2 = 0.0;
  }
  void integrate_m1(const DgpCoefficients& c, double arm) {
    c0 += cm1 * (c.beta_m1(0) + c.beta_m1(5) * arm);
    for (int j = 0; j < 4; ++j) cx(j) += cm1 * c.beta_m1(1 + j);
    cm1 = 0.0;
  }
  FittedModel model(int mediator_levels) const {
    DesignSpec d = spec_xm(mediator_levels);
    Vector b(5 + mediator_levels);
    b(0) = c0;
    for (int j = 0; j < 4; ++j) b(1 + j) = cx(j);
    if (mediator_levels >= 1) b(5) = cm1;
    if (mediator_levels >= 2) b(6) = cm2;
    return make_linear(d, b, "true");
  }
};

// amp * cos(c0 + cx'x + cm1 m1 + cm2 m2), closed under the same integration
struct CosFn {
  double amp = 1.0;
  double c0 = 0.0;
  Eigen::Vector4d cx = Eigen::Vector4d::Zero();
  double cm1 = 0.0;
  double cm2 = 0.0;

  void integrate_m2(const DgpCoefficients& c, double arm) {
    amp *= std::exp(-cm2 * cm2 / 2.0);
    c0 += cm2 * (c.beta_m2(0) + c.beta_m2(5) * arm);
    for (int j = 0; j < 4; ++j) cx(j) += cm2 * c.beta_m2(1 + j);
    cm1 += cm2 * c.beta_m2(6);
    cm2 = 0.0;
  }
  void integrate_m1(const DgpCoefficients& c, double arm) {
    amp *= std::exp(-cm1 * cm1 / 2.0);
    c0 += cm1 * (c.beta_m1(0) + c.beta_m1(5) * arm);
    for (int j = 0; j < 4; ++j) cx(j) += cm1 * c.beta_m1(1 + j);
    cm1 = 0.0;
  }
  FittedModel model(int mediator_levels) const {
    DesignSpec d = spec_xm(mediator_levels);
    Vector b(4 + mediator_levels);
    for (int j = 0; j < 4; ++j) b(j) = cx(j);
    if (mediator_levels >= 1) b(4) = cm1;
    if (mediator_levels >= 2) b(5) = cm2;
    FittedModel m;
    m.spec = d;
    m.learner = "cosine";
    m.impl = std::make_shared<CosineModel>(d, amp, c0, b);
    return m;
  }
};

FittedModel shifted(const FittedModel& base, const FittedModel& bump, double eps) {
  FittedModel m;
  m.spec = base.spec;
  m.learner = "shifted";
  m.impl = std::make_shared<ShiftedModel>(base, bump, eps);
  return m;
}

}  // namespace

SlopeCheck perturbation_slope(const ObservedData& data,
                              const DgpCoefficients& coeffs,
                              const Regime& regime, Method method,
                              const std::vector<double>& eps_grid, double freq) {
  if (data.num_mediators() != 2)
    throw Error(ErrorCategory::config, "the slope check runs on the K=2 process");
  TrueNuisances tn = true_nuisances(coeffs);
  const int K = 2;

  // chain levels and arms for this regime
  std::vector<int> levels;
  switch (method) {
    case Method::eif2:
      levels = regime.active_positions();
      levels.insert(levels.begin(), 0);
      std::sort(levels.begin(), levels.end());
      levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
      break;
    case Method::ri:
      levels = {0, 1, 2};
      break;
    default:
      throw Error(ErrorCategory::config,
                  "the slope check compares eif2 with plain imputation");
  }

  // true level functions and the matching propagated bump
  std::map<int, FittedModel> mu_base, mu_bump;
  {
    LinFn fn;
    fn.c0 = tn.outcome_coefs(0) + tn.outcome_coefs(7) * regime.a(K + 1);
    for (int j = 0; j < 4; ++j) fn.cx(j) = tn.outcome_coefs(1 + j);
    fn.cm1 = tn.outcome_coefs(5);
    fn.cm2 = tn.outcome_coefs(6);
    CosFn bump;
    bump.amp = 1.0;
    bump.cm2 = freq;

    int current = K;
    for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
      int level = *it;
      while (current > level) {
        // integrate mediator block `current` at its regime arm
        double arm = static_cast<double>(regime.a(current));
        if (current == 2) {
          fn.integrate_m2(coeffs, arm);
          bump.integrate_m2(coeffs, arm);
        } else {
          fn.integrate_m1(coeffs, arm);
          bump.integrate_m1(coeffs, arm);
        }
        --current;
      }
      mu_base[level] = fn.model(level);
      mu_bump[level] = bump.model(level);
    }
  }

  auto rows = all_rows(data);
  GmfOptions opts;
  opts.clip = 0.0;

  Matrix summands(data.n(), static_cast<Index>(eps_grid.size()));
  double se0 = 0.0;
  for (size_t e = 0; e < eps_grid.size(); ++e) {
    NuisanceSet nuis;
    nuis.regime = regime;
    nuis.pi.assign(3, FittedModel());
    nuis.pi[0] = tn.pi0;
    nuis.pi[1] = tn.pi1;
    nuis.pi[2] = tn.pi2;
    nuis.mu_levels = levels;
    for (int level : levels)
      nuis.mu[level] = shifted(mu_base[level], mu_bump[level], eps_grid[e]);

    GmfEstimate est;
    if (method == Method::eif2)
      est = eif2(data, regime, nuis, opts);
    else
      est = regression_impute(data, regime, nuis, opts);
    summands.col(static_cast<Index>(e)) = est.summands();
    if (eps_grid[e] == 0.0)
      se0 = std::sqrt(eif_variance(est.centered()));
  }

  // quadratic fit in eps; the slope is a fixed linear combination of the
  // per-eps estimates, which gives a per-unit representation for its SE
  const Index E = static_cast<Index>(eps_grid.size());
  Matrix design(E, 3);
  for (Index e = 0; e < E; ++e) {
    double x = eps_grid[static_cast<size_t>(e)];
    design(e, 0) = 1.0;
    design(e, 1) = x;
    design(e, 2) = x * x;
  }
  Matrix pinv = (design.transpose() * design).ldlt().solve(design.transpose());
  Vector slope_weights = pinv.row(1);

  Vector per_unit = summands * slope_weights;
  double slope = per_unit.mean();
  double sd = std::sqrt((per_unit.array() - slope).square().sum() /
                        static_cast<double>(data.n() - 1));

  SlopeCheck out;
  out.slope = slope;
  out.slope_se = sd / std::sqrt(static_cast<double>(data.n()));
  out.estimate_se = se0;
  return out;
}

// ---------------------------------------------------------------------------
// replication study
// ---------------------------------------------------------------------------

std::string spec_case_name(SpecCase c) {
  switch (c) {
    case SpecCase::a: return "a";
    case SpecCase::b: return "b";
    case SpecCase::c: return "c";
    case SpecCase::d: return "d";
    case SpecCase::e: return "e";
  }
  return "?";
}

std::vector<std::string> true_roles(SpecCase c) {
  switch (c) {
    case SpecCase::a: return {"pi0", "pi1", "pi2"};
    case SpecCase::b: return {"pi0", "pi1", "mu2"};
    case SpecCase::c: return {"pi0", "mu1", "mu2"};
    case SpecCase::d: return {"mu0", "mu1", "mu2"};
    case SpecCase::e: return {};
  }
  return {};
}

LearnerPolicy case_policy(const ObservedData& data, SpecCase c) {
  if (data.x.cols() < 8)
    throw Error(ErrorCategory::config,
                "case policies need the [x | z] covariate layout");
  LearnerPolicy p = LearnerPolicy::defaults(data, LearnerKind::glm);
  std::vector<int> x_true{0, 1, 2, 3}, x_false{4, 5, 6, 7};
  auto roles = true_roles(c);
  auto is_true = [&](const std::string& role) {
    return std::find(roles.begin(), roles.end(), role) != roles.end();
  };
  for (int k = 0; k <= 2; ++k) {
    p.pi[static_cast<size_t>(k)].x_cols =
        is_true("pi" + std::to_string(k)) ? x_true : x_false;
    p.mu[static_cast<size_t>(k)].x_cols =
        is_true("mu" + std::to_string(k)) ? x_true : x_false;
  }
  for (auto& f : p.f) f.x_cols = x_true;
  return p;
}

LearnerPolicy superlearner_policy(const ObservedData& data) {
  if (data.x.cols() < 8)
    throw Error(ErrorCategory::config,
                "the ensemble policy needs the [x | z] covariate layout");
  LearnerPolicy p = LearnerPolicy::defaults(data, LearnerKind::stack);
  for (auto& s : p.pi) s.x_cols = {4, 5, 6, 7};
  for (auto& s : p.mu) s.x_cols = {4, 5, 6, 7};
  for (auto& s : p.f) s.x_cols = {4, 5, 6, 7};
  return p;
}

StudyEstimator study_estimator(const std::string& name) {
  StudyEstimator e;
  e.name = name;
  if (name == "w-a") {
    e.method = Method::w_a;
  } else if (name == "ri") {
    e.method = Method::ri;
  } else if (name == "ri-w-w") {
    e.method = Method::hybrid;
    e.hybrid = {HybridChoice::RI, HybridChoice::W, HybridChoice::W};
  } else if (name == "ri-ri-w") {
    e.method = Method::hybrid;
    e.hybrid = {HybridChoice::RI, HybridChoice::RI, HybridChoice::W};
  } else if (name == "eif2") {
    e.method = Method::eif2;
  } else if (name == "eif2-wglm") {
    e.method = Method::eif2_wglm;
  } else if (name == "np-eif2") {
    e.method = Method::eif2;
    e.parametric = false;
  } else if (name == "np-eif2-cf") {
    e.method = Method::eif2;
    e.parametric = false;
    e.folds = 5;
  } else if (name == "tmle") {
    e.method = Method::tmle;
    e.parametric = false;
  } else if (name == "tmle-cf") {
    e.method = Method::tmle;
    e.parametric = false;
    e.folds = 5;
  } else {
    throw Error(ErrorCategory::config, "unknown study estimator '" + name + "'");
  }
  return e;
}

StudyReport run_study(const StudyGrid& grid) {
  if (grid.reps < 1) throw Error(ErrorCategory::config, "need reps >= 1");
  if (grid.estimators.empty())
    throw Error(ErrorCategory::config, "the study needs at least one estimator");

  EffectSpec spec = standard_regimes(2, EffectKind::cPSE, 2);
  DgpCoefficients coeffs = DgpCoefficients::defaults();

  StudyReport report;
  report.truth =
      closed_form_theta(coeffs, spec.comparison) -
      closed_form_theta(coeffs, spec.baseline);

  int parametric_count = 0, adaptive_count = 0;
  for (const auto& e : grid.estimators)
    (e.parametric ? parametric_count : adaptive_count)++;
  const int cells_per_rep =
      parametric_count * static_cast<int>(grid.cases.size()) + adaptive_count;
  report.rows.assign(static_cast<size_t>(cells_per_rep) *
                         static_cast<size_t>(grid.reps),
                     StudyRow());

  parallel_for(grid.reps, grid.threads, [&](std::int64_t rep) {
    std::uint64_t rep_seed = derive_seed(grid.seed, 0x5e8, static_cast<std::uint64_t>(rep));
    ObservedData data = attach_false_covariates(
        generate(coeffs, grid.n, rep_seed));
    size_t slot = static_cast<size_t>(rep) * static_cast<size_t>(cells_per_rep);

    auto run_one = [&](const StudyEstimator& e, const LearnerPolicy& policy,
                       const std::string& case_name, NuisanceCache* cache) {
      StudyRow row;
      row.spec_case = case_name;
      row.estimator = e.name;
      row.replicate = static_cast<int>(rep);
      GmfOptions opts;
      opts.clip = grid.clip;
      opts.seed = derive_seed(rep_seed, 0x0e57, 1);
      opts.hybrid_choices = e.hybrid;
      InferenceOptions inf;
      inf.kind = method_is_eif(e.method) ? InferenceOptions::Kind::eif
                                         : InferenceOptions::Kind::none;
      inf.level = grid.level;
      inf.folds = e.folds;
      inf.seed = derive_seed(rep_seed, 0xf01d, 2);
      try {
        EffectEstimate est =
            estimate_effect(data, spec, e.method, policy, opts, inf, cache);
        row.estimate = est.point;
        if (std::isfinite(est.se)) {
          row.se = est.se;
          row.ci_lo = est.ci_lo;
          row.ci_hi = est.ci_hi;
          row.covered =
              (est.ci_lo <= report.truth && report.truth <= est.ci_hi) ? 1 : 0;
        }
      } catch (const Error&) {
        row.failed = 1;
      }
      report.rows[slot++] = row;
    };

    for (const auto& e : grid.estimators) {
      if (!e.parametric) continue;
      for (SpecCase c : grid.cases) {
        LearnerPolicy policy = case_policy(data, c);
        NuisanceCache cache;
        run_one(e, policy, spec_case_name(c), &cache);
      }
    }
    LearnerPolicy sl = superlearner_policy(data);
    for (const auto& e : grid.estimators) {
      if (e.parametric) continue;
      run_one(e, sl, "-", nullptr);
    }
  });

  // summaries per (case, estimator)
  std::map<std::pair<std::string, std::string>, std::vector<const StudyRow*>> groups;
  for (const auto& row : report.rows)
    groups[{row.spec_case, row.estimator}].push_back(&row);
  for (const auto& [key, rows] : groups) {
    StudySummary s;
    s.spec_case = key.first;
    s.estimator = key.second;
    s.truth = report.truth;
    double sum = 0.0, sum2 = 0.0;
    int ok = 0, covered = 0, with_ci = 0, failed = 0;
    for (const StudyRow* r : rows) {
      if (r->failed) {
        ++failed;
        continue;
      }
      ++ok;
      sum += r->estimate;
      sum2 += r->estimate * r->estimate;
      if (r->covered >= 0) {
        ++with_ci;
        covered += r->covered;
      }
    }
    s.reps = static_cast<int>(rows.size());
    s.fail_rate = static_cast<double>(failed) / static_cast<double>(rows.size());
    if (ok > 0) {
      double mean = sum / ok;
      s.mean_bias = mean - report.truth;
      double var = ok > 1 ? (sum2 - ok * mean * mean) / (ok - 1) : 0.0;
      s.sd = std::sqrt(std::max(var, 0.0));
      s.rmse = std::sqrt(std::max(var, 0.0) * (ok - 1) / ok +
                         s.mean_bias * s.mean_bias);
      if (with_ci > 0)
        s.coverage = static_cast<double>(covered) / static_cast<double>(with_ci);
    }
    report.summaries.push_back(std::move(s));
  }
  return report;
}

namespace {

std::string field(double v) {
  if (!std::isfinite(v)) return "";
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

void write_study_csv(const StudyReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw Error(ErrorCategory::config, "cannot open '" + path + "' for writing");
  out << "case,estimator,replicate,estimate,se,ci_low,ci_high,covered,failed\n";
  for (const auto& r : report.rows) {
    out << r.spec_case << ',' << r.estimator << ',' << r.replicate << ','
        << field(r.estimate) << ',' << field(r.se) << ',' << field(r.ci_lo)
        << ',' << field(r.ci_hi) << ','
        << (r.covered < 0 ? "" : std::to_string(r.covered)) << ',' << r.failed
        << '\n';
  }
}

std::string study_summary_json(const StudyReport& report) {
  nlohmann::json j;
  j["truth"] = report.truth;
  j["summaries"] = nlohmann::json::array();
  for (const auto& s : report.summaries) {
    nlohmann::json e;
    e["case"] = s.spec_case;
    e["estimator"] = s.estimator;
    e["reps"] = s.reps;
    e["mean_bias"] = s.mean_bias;
    e["sd"] = s.sd;
    e["rmse"] = s.rmse;
    if (std::isfinite(s.coverage)) e["coverage"] = s.coverage;
    e["fail_rate"] = s.fail_rate;
    j["summaries"].push_back(e);
  }
  return j.dump(2);
}

}  // namespace pathmed
