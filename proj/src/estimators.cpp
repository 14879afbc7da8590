#include "pathmed/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pathmed/rng.hpp"

namespace pathmed {

Method method_from_string(const std::string& s) {
  if (s == "plugin") return Method::plugin;
  if (s == "ri") return Method::ri;
  if (s == "w-m") return Method::w_m;
  if (s == "w-a") return Method::w_a;
  if (s == "hybrid") return Method::hybrid;
  if (s == "eif1") return Method::eif1;
  if (s == "eif2") return Method::eif2;
  if (s == "eif2-wglm") return Method::eif2_wglm;
  if (s == "tmle") return Method::tmle;
  throw Error(ErrorCategory::config, "unknown estimator '" + s + "'");
}

std::string method_name(Method m) {
  switch (m) {
    case Method::plugin: return "plugin";
    case Method::ri: return "ri";
    case Method::w_m: return "w-m";
    case Method::w_a: return "w-a";
    case Method::hybrid: return "hybrid";
    case Method::eif1: return "eif1";
    case Method::eif2: return "eif2";
    case Method::eif2_wglm: return "eif2-wglm";
    case Method::tmle: return "tmle";
  }
  return "?";
}

bool method_is_eif(Method m) {
  return m == Method::eif1 || m == Method::eif2 || m == Method::eif2_wglm ||
         m == Method::tmle;
}

std::vector<HybridChoice> hybrid_choices_from_string(const std::string& s) {
  std::vector<HybridChoice> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, '-')) {
    if (tok == "RI" || tok == "ri")
      out.push_back(HybridChoice::RI);
    else if (tok == "W" || tok == "w")
      out.push_back(HybridChoice::W);
    else
      throw Error(ErrorCategory::config, "hybrid choices must be RI or W");
  }
  if (out.empty())
    throw Error(ErrorCategory::config, "empty hybrid choice vector");
  return out;
}

namespace {

double mean_of(const Vector& v) {
  double s = 0.0;
  for (Index i = 0; i < v.size(); ++i) s += v(i);
  return s / static_cast<double>(v.size());
}

GmfEstimate finish_averaging(Vector per_unit, Method method, const Regime& regime) {
  GmfEstimate est;
  est.theta = mean_of(per_unit);
  est.summand_values = per_unit;
  est.per_unit = std::move(per_unit);
  est.eif_centered = false;
  est.method = method;
  est.regime = regime;
  return est;
}

GmfEstimate finish_eif(Vector summands, Method method, const Regime& regime) {
  GmfEstimate est;
  est.theta = mean_of(summands);
  est.per_unit = summands.array() - est.theta;
  est.summand_values = std::move(summands);
  est.eif_centered = true;
  est.method = method;
  est.regime = regime;
  return est;
}

}  // namespace

Vector GmfEstimate::centered() const {
  if (eif_centered) return per_unit;
  return per_unit.array() - mean_of(per_unit);
}

// ---------------------------------------------------------------------------
// Monte Carlo / exact evaluation of the density-integrated imputation chain:
// value at level k integrates the outcome model over mediator blocks k+1..K
// drawn at the regime's arms, starting from the unit's observed prefix.
// ---------------------------------------------------------------------------

namespace {

class ChainIntegrator {
 public:
  ChainIntegrator(const ObservedData& data, const Regime& regime,
                  const NuisanceSet& nuis, const GmfOptions& opts)
      : data_(data), regime_(regime), nuis_(nuis), opts_(opts) {
    exact_ = true;
    for (int k = 0; k < data.num_mediators(); ++k)
      if (!data.block_discrete(k)) exact_ = false;
  }

  // per-unit values of the level-k integrated imputation at observed prefixes
  double value(Index i, int level) const {
    UnitContext ctx(data_, i);
    ctx.mediator_override.resize(static_cast<size_t>(data_.num_mediators()));
    if (exact_) return exact_value(ctx, level);
    if (level == data_.num_mediators()) return outcome_value(ctx);
    return mc_value(ctx, i, level);
  }

 private:
  double outcome_value(UnitContext& ctx) const {
    ctx.a_override = static_cast<double>(regime_.outcome_arm());
    double v = nuis_.mu.at(data_.num_mediators()).predict(ctx);
    ctx.a_override.reset();
    return v;
  }

  double exact_value(UnitContext& ctx, int level) const {
    const int K = data_.num_mediators();
    if (level == K) return outcome_value(ctx);
    const DensityModel& f = nuis_.f[static_cast<size_t>(level)];
    ctx.a_override = static_cast<double>(regime_.a(level + 1));
    std::vector<double> probs(f.support().size());
    double total = 0.0;
    for (size_t s = 0; s < f.support().size(); ++s) {
      probs[s] = f.density(ctx, f.support()[s]);
      total += probs[s];
    }
    ctx.a_override.reset();
    double acc = 0.0;
    for (size_t s = 0; s < f.support().size(); ++s) {
      if (probs[s] <= 0.0) continue;
      ctx.mediator_override[static_cast<size_t>(level)] = f.support()[s];
      acc += probs[s] * exact_value(ctx, level + 1);
    }
    ctx.mediator_override[static_cast<size_t>(level)] = Vector();
    return total > 0.0 ? acc / total : acc;
  }

  double mc_value(UnitContext& ctx, Index i, int level) const {
    const int K = data_.num_mediators();
    int pairs = std::max(1, opts_.mc_draws / 2);
    Rng rng(derive_seed(opts_.seed, 0xe120u + static_cast<std::uint64_t>(level),
                        static_cast<std::uint64_t>(i)));
    double acc = 0.0;
    std::vector<double> draws(static_cast<size_t>(K - level));
    for (int d = 0; d < pairs; ++d) {
      for (auto& z : draws) z = rng.normal();
      for (int anti = 0; anti < 2; ++anti) {
        for (int j = level; j < K; ++j) {
          const DensityModel& f = nuis_.f[static_cast<size_t>(j)];
          double z = draws[static_cast<size_t>(j - level)];
          if (anti) z = -z;
          // table densities sample by inverse CDF from a uniform
          double u = f.form() == DensityForm::discrete_table
                         ? normal_cdf(z)
                         : z;
          ctx.a_override = static_cast<double>(regime_.a(j + 1));
          Vector m = f.sample(ctx, u);
          ctx.a_override.reset();
          ctx.mediator_override[static_cast<size_t>(j)] = std::move(m);
        }
        acc += outcome_value(ctx);
      }
    }
    for (int j = level; j < K; ++j)
      ctx.mediator_override[static_cast<size_t>(j)] = Vector();
    return acc / (2.0 * pairs);
  }

  const ObservedData& data_;
  const Regime& regime_;
  const NuisanceSet& nuis_;
  const GmfOptions& opts_;
  bool exact_;
};

void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(ErrorCategory::config, msg);
}

void add_clip_warning(GmfEstimate& est, const WeightLadder& ladder, Index n) {
  est.clipped += ladder.clipped;
  double rate = static_cast<double>(ladder.clipped) / std::max<Index>(n, 1);
  if (rate > 0.01)
    est.warnings.push_back({"clip-rate",
                            "more than 1% of probability evaluations were "
                            "clipped; weights may be unstable",
                            rate});
}

}  // namespace

// ---------------------------------------------------------------------------
// estimators over prepared nuisance sets
// ---------------------------------------------------------------------------

namespace {

Vector plugin_values(const ObservedData& data, const Regime& regime,
                     const NuisanceSet& nuis, const GmfOptions& opts,
                     const std::vector<Index>& rows) {
  require(nuis.has_density || data.num_mediators() == 0,
          "plug-in estimation needs mediator density models");
  require(nuis.mu.count(data.num_mediators()) == 1,
          "plug-in estimation needs the top-level outcome model");
  ChainIntegrator chain(data, regime, nuis, opts);
  Vector v(static_cast<Index>(rows.size()));
  for (size_t r = 0; r < rows.size(); ++r)
    v(static_cast<Index>(r)) = chain.value(rows[r], 0);
  return v;
}

}  // namespace

GmfEstimate plugin_mle(const ObservedData& data, const Regime& regime,
                       const NuisanceSet& nuis, const GmfOptions& opts) {
  return finish_averaging(plugin_values(data, regime, nuis, opts, all_rows(data)),
                          Method::plugin, regime);
}

GmfEstimate regression_impute(const ObservedData& data, const Regime& regime,
                              const NuisanceSet& nuis, const GmfOptions& opts) {
  (void)opts;
  require(nuis.mu.count(0) == 1, "regression imputation needs the level-0 model");
  return finish_averaging(nuis.mu_values(0, data, all_rows(data)), Method::ri,
                          regime);
}

GmfEstimate weighting_m(const ObservedData& data, const Regime& regime,
                        const NuisanceSet& nuis, const GmfOptions& opts) {
  auto rows = all_rows(data);
  require(nuis.pi[0].valid(), "mediator-density weighting needs pi_0");
  WeightLadder ladder = density_weights(data, rows, nuis, opts.clip);
  const int K = data.num_mediators();
  Vector v(static_cast<Index>(rows.size()));
  for (size_t r = 0; r < rows.size(); ++r)
    v(static_cast<Index>(r)) = ladder.w(static_cast<Index>(r), K) * data.y(rows[r]);
  GmfEstimate est = finish_averaging(std::move(v), Method::w_m, regime);
  add_clip_warning(est, ladder, data.n());
  return est;
}

GmfEstimate weighting_a(const ObservedData& data, const Regime& regime,
                        const NuisanceSet& nuis, const GmfOptions& opts) {
  auto rows = all_rows(data);
  require(nuis.pi[0].valid(), "treatment-odds weighting needs pi_0");
  WeightLadder ladder = odds_weights(data, rows, nuis, opts.clip);
  const int K = data.num_mediators();
  Vector v(static_cast<Index>(rows.size()));
  for (size_t r = 0; r < rows.size(); ++r)
    v(static_cast<Index>(r)) = ladder.w(static_cast<Index>(r), K) * data.y(rows[r]);
  GmfEstimate est = finish_averaging(std::move(v), Method::w_a, regime);
  add_clip_warning(est, ladder, data.n());
  return est;
}

namespace {

// shared by eif2, the weighted-refit variant, and the targeted variant:
// summand = mu_0 + sum over fitted levels of w * (next response - level value)
Vector eif2_summands(const ObservedData& data, const NuisanceSet& nuis,
                     const WeightLadder& ladder, const std::vector<Index>& rows,
                     std::vector<double>* term_means) {
  const std::vector<int>& levels = nuis.mu_levels;
  const int top = levels.back();
  const int K = data.num_mediators();
  (void)K;

  std::vector<Vector> mu_vals;
  mu_vals.reserve(levels.size());
  for (int level : levels) mu_vals.push_back(nuis.mu_values(level, data, rows));

  Vector m(static_cast<Index>(rows.size()));
  std::vector<double> sums(levels.size(), 0.0);
  for (size_t r = 0; r < rows.size(); ++r) {
    const Index ri = static_cast<Index>(r);
    double acc = mu_vals.front()(ri);  // level 0
    for (size_t t = 1; t < levels.size(); ++t) {
      double term = ladder.w(ri, levels[t - 1]) * (mu_vals[t](ri) - mu_vals[t - 1](ri));
      sums[t - 1] += term;
      acc += term;
    }
    double resid = ladder.w(ri, top) * (data.y(rows[r]) - mu_vals.back()(ri));
    sums.back() += resid;
    acc += resid;
    m(ri) = acc;
  }
  if (term_means) {
    term_means->clear();
    for (double s : sums) term_means->push_back(s / static_cast<double>(rows.size()));
  }
  return m;
}

}  // namespace

GmfEstimate eif2(const ObservedData& data, const Regime& regime,
                 const NuisanceSet& nuis, const GmfOptions& opts) {
  require(nuis.pi[0].valid(), "the odds-form estimating equation needs pi_0");
  require(!nuis.mu_levels.empty(), "missing imputation levels");
  auto rows = all_rows(data);
  WeightLadder ladder = odds_weights(data, rows, nuis, opts.clip);
  GmfEstimate est = finish_eif(eif2_summands(data, nuis, ladder, rows, nullptr),
                               Method::eif2, regime);
  add_clip_warning(est, ladder, data.n());
  return est;
}

GmfEstimate eif1(const ObservedData& data, const Regime& regime,
                 const NuisanceSet& nuis, const GmfOptions& opts) {
  const int K = data.num_mediators();
  require(nuis.pi[0].valid(), "the density-form estimating equation needs pi_0");
  require(nuis.mu.count(K) == 1, "missing top-level outcome model");
  require(nuis.has_density || K == 0, "density models required");
  auto rows = all_rows(data);
  WeightLadder ladder = density_weights(data, rows, nuis, opts.clip);
  ChainIntegrator chain(data, regime, nuis, opts);

  Matrix mle(static_cast<Index>(rows.size()), K + 1);
  for (size_t r = 0; r < rows.size(); ++r)
    for (int k = 0; k <= K; ++k)
      mle(static_cast<Index>(r), k) = chain.value(rows[r], k);

  Vector m(static_cast<Index>(rows.size()));
  for (size_t r = 0; r < rows.size(); ++r) {
    const Index ri = static_cast<Index>(r);
    double acc = mle(ri, 0);
    for (int k = 1; k <= K; ++k)
      acc += ladder.w(ri, k - 1) * (mle(ri, k) - mle(ri, k - 1));
    acc += ladder.w(ri, K) * (data.y(rows[r]) - mle(ri, K));
    m(ri) = acc;
  }
  GmfEstimate est = finish_eif(std::move(m), Method::eif1, regime);
  add_clip_warning(est, ladder, data.n());
  return est;
}

// ---------------------------------------------------------------------------
// hybrid estimators: one imputation-or-weighting choice per level, processed
// from the outcome level inward; ratio weights keep a running reference arm
// ---------------------------------------------------------------------------

namespace {

struct HybridState {
  Vector fit;   // running response on fit rows
  Vector eval;  // running response on eval rows
};

GmfEstimate hybrid_impl(const ObservedData& data, const Regime& regime,
                        const LearnerPolicy& policy, const GmfOptions& opts,
                        NuisanceCache& cache, const std::vector<Index>& fit_rows,
                        const std::vector<Index>& eval_rows,
                        const NuisanceOptions& nopts) {
  const int K = data.num_mediators();
  const auto& choices = opts.hybrid_choices;
  require(static_cast<int>(choices.size()) == K + 1,
          "hybrid choice vector must have length K+1");

  NuisanceSet dens;
  if (opts.hybrid_density && K > 0) {
    NuisanceOptions od = nopts;
    od.need_pi0 = false;
    od.need_pi_active = false;
    od.need_mu = false;
    od.need_density = true;
    dens = fit_nuisance_set(data, fit_rows, regime, policy, od, &cache);
  }
  auto pi_model = [&](int k) {
    return fit_pi_model(data, fit_rows, k, policy, nopts, cache);
  };

  GmfEstimate est;
  est.method = Method::hybrid;
  est.regime = regime;
  Index clipped = 0;

  HybridState st;
  st.fit.resize(static_cast<Index>(fit_rows.size()));
  for (size_t r = 0; r < fit_rows.size(); ++r)
    st.fit(static_cast<Index>(r)) = data.y(fit_rows[r]);
  st.eval.resize(static_cast<Index>(eval_rows.size()));
  for (size_t r = 0; r < eval_rows.size(); ++r)
    st.eval(static_cast<Index>(r)) = data.y(eval_rows[r]);

  int ref_arm = regime.a(K + 1);
  const bool y_bin = data.y_binary();

  for (int site = K; site >= 1; --site) {
    const HybridChoice c = choices[static_cast<size_t>(K - site)];
    if (c == HybridChoice::RI) {
      const LearnerSpec& spec = policy.mu[static_cast<size_t>(site)];
      DesignSpec d;
      d.x_cols = spec.x_cols;
      d.mediator_levels = spec.drop_mediators ? 0 : site;
      d.include_treatment = true;
      d.family = (site == K && y_bin) ? Family::logit : Family::identity;
      if (spec.kind == LearnerKind::saturated) d.family = Family::identity;
      LearnerOptions lo;
      lo.ridge = spec.ridge;
      lo.boost = policy.boost;
      lo.stack_folds = policy.stack_folds;
      lo.seed = derive_seed(nopts.seed, 0x4b1d, static_cast<std::uint64_t>(site));
      FittedModel m = fit_learner(spec.kind, data, fit_rows, st.fit, d, lo);
      double arm = static_cast<double>(ref_arm);
      st.fit = m.predict_rows(data, fit_rows, arm);
      st.eval = m.predict_rows(data, eval_rows, arm);
      ref_arm = regime.a(site);
    } else if (regime.a(site) != ref_arm) {
      // ratio weight toward arm a_site against the current reference arm
      FittedModel pk, pk1;
      if (!opts.hybrid_density) {
        pk = pi_model(site);
        pk1 = pi_model(site - 1);
      }
      auto lambda = [&](const std::vector<Index>& rows, Vector& running) {
        for (size_t r = 0; r < rows.size(); ++r) {
          UnitContext ctx(data, rows[r]);
          double ratio;
          if (opts.hybrid_density) {
            const DensityModel& f = dens.f[static_cast<size_t>(site - 1)];
            Vector value = f.observed_value(ctx);
            UnitContext num(data, rows[r], static_cast<double>(regime.a(site)));
            UnitContext den(data, rows[r], static_cast<double>(ref_arm));
            ratio = std::exp(f.log_density(num, value) - f.log_density(den, value));
            if (opts.clip > 0.0 && ratio > 1.0 / opts.clip) {
              ratio = 1.0 / opts.clip;
              ++clipped;
            }
          } else {
            double qk = pk.predict(ctx), qk1 = pk1.predict(ctx);
            double num_k = regime.a(site) == 1 ? qk : 1.0 - qk;
            double den_k = ref_arm == 1 ? qk : 1.0 - qk;
            double num_b = regime.a(site) == 1 ? qk1 : 1.0 - qk1;
            double den_b = ref_arm == 1 ? qk1 : 1.0 - qk1;
            ratio = (clip_probability(num_k, opts.clip, &clipped) /
                     clip_probability(den_k, opts.clip, &clipped)) /
                    (clip_probability(num_b, opts.clip, &clipped) /
                     clip_probability(den_b, opts.clip, &clipped));
          }
          running(static_cast<Index>(r)) *= ratio;
        }
      };
      lambda(fit_rows, st.fit);
      lambda(eval_rows, st.eval);
    }
  }

  Vector per_unit(static_cast<Index>(eval_rows.size()));
  const HybridChoice c0 = choices.back();
  if (c0 == HybridChoice::RI) {
    const LearnerSpec& spec = policy.mu[0];
    DesignSpec d;
    d.x_cols = spec.x_cols;
    d.include_treatment = true;
    d.family = (K == 0 && y_bin) ? Family::logit : Family::identity;
    if (spec.kind == LearnerKind::saturated) d.family = Family::identity;
    LearnerOptions lo;
    lo.ridge = spec.ridge;
    lo.boost = policy.boost;
    lo.stack_folds = policy.stack_folds;
    lo.seed = derive_seed(nopts.seed, 0x4b1d, 0);
    FittedModel m = fit_learner(spec.kind, data, fit_rows, st.fit, d, lo);
    per_unit = m.predict_rows(data, eval_rows, static_cast<double>(ref_arm));
  } else {
    FittedModel p0 = pi_model(0);
    for (size_t r = 0; r < eval_rows.size(); ++r) {
      UnitContext ctx(data, eval_rows[r]);
      double p1 = p0.predict(ctx);
      double parm = ref_arm == 1 ? p1 : 1.0 - p1;
      double w = data.a(eval_rows[r]) == static_cast<double>(ref_arm)
                     ? 1.0 / clip_probability(parm, opts.clip, &clipped)
                     : 0.0;
      per_unit(static_cast<Index>(r)) = w * st.eval(static_cast<Index>(r));
    }
  }
  GmfEstimate out = finish_averaging(std::move(per_unit), Method::hybrid, regime);
  out.clipped = clipped;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// targeted fluctuation of the imputation ladder
// ---------------------------------------------------------------------------

namespace {

struct Fluctuation {
  double beta = 0.0;
  bool converged = true;
};

// one-parameter logistic fluctuation: offset logit(v), covariate w (no
// intercept); solves sum w*(r - expit(logit(v) + beta*w)) = 0 by Newton
Fluctuation solve_logit_fluctuation(const Vector& resp, const Vector& offset,
                                    const Vector& w) {
  Fluctuation out;
  double beta = 0.0;
  for (int iter = 0; iter < 100; ++iter) {
    double score = 0.0, hess = 0.0;
    for (Index i = 0; i < resp.size(); ++i) {
      if (w(i) == 0.0) continue;
      double p = sigmoid(offset(i) + beta * w(i));
      score += w(i) * (resp(i) - p);
      hess += w(i) * w(i) * std::max(p * (1.0 - p), 1e-12);
    }
    if (std::abs(score) < 1e-13 * static_cast<double>(resp.size()) + 1e-13) {
      out.beta = beta;
      return out;
    }
    if (hess <= 0.0) break;
    double step = score / hess;
    step = std::clamp(step, -5.0, 5.0);
    beta += step;
    if (std::abs(step) < 1e-14) {
      out.beta = beta;
      return out;
    }
  }
  // final check: accept if the score is essentially solved
  double score = 0.0;
  for (Index i = 0; i < resp.size(); ++i) {
    if (w(i) == 0.0) continue;
    score += w(i) * (resp(i) - sigmoid(offset(i) + beta * w(i)));
  }
  if (std::abs(score) < 1e-10 * static_cast<double>(resp.size()) + 1e-10) {
    out.beta = beta;
    return out;
  }
  out.beta = 0.0;
  out.converged = false;
  return out;
}

GmfEstimate tmle_impl(const ObservedData& data, const Regime& regime,
                      const LearnerPolicy& policy, const GmfOptions& opts,
                      NuisanceCache& cache, const std::vector<Index>& fit_rows,
                      const std::vector<Index>& eval_rows,
                      const NuisanceOptions& base) {
  const int K = data.num_mediators();
  (void)K;
  NuisanceOptions nopts = base;
  nopts.need_mu = false;
  NuisanceSet pis = fit_nuisance_set(data, fit_rows, regime, policy, nopts, &cache);

  WeightLadder lad_fit = odds_weights(data, fit_rows, pis, opts.clip);
  WeightLadder lad_eval = odds_weights(data, eval_rows, pis, opts.clip);

  std::vector<int> levels = regime.active_positions();
  levels.insert(levels.begin(), 0);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  Vector resp_fit(static_cast<Index>(fit_rows.size()));
  for (size_t r = 0; r < fit_rows.size(); ++r)
    resp_fit(static_cast<Index>(r)) = data.y(fit_rows[r]);
  Vector resp_eval(static_cast<Index>(eval_rows.size()));
  for (size_t r = 0; r < eval_rows.size(); ++r)
    resp_eval(static_cast<Index>(r)) = data.y(eval_rows[r]);

  GmfEstimate est;
  est.method = Method::tmle;
  est.regime = regime;
  est.clipped = lad_fit.clipped + lad_eval.clipped;

  Vector acc_eval = Vector::Zero(static_cast<Index>(eval_rows.size()));
  std::vector<double> score_means;
  const bool y_bin = data.y_binary();

  for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
    const int level = *it;
    const double arm = static_cast<double>(regime.a(level + 1));
    const bool top = it == levels.rbegin();
    const LearnerSpec& spec = policy.mu[static_cast<size_t>(level)];
    DesignSpec d;
    d.x_cols = spec.x_cols;
    d.mediator_levels = spec.drop_mediators ? 0 : level;
    d.include_treatment = true;
    d.family = (top && y_bin) ? Family::logit : Family::identity;
    if (spec.kind == LearnerKind::saturated) d.family = Family::identity;
    LearnerOptions lo;
    lo.ridge = spec.ridge;
    lo.boost = policy.boost;
    lo.stack_folds = policy.stack_folds;
    lo.seed = derive_seed(nopts.seed, 0x731e, static_cast<std::uint64_t>(level));
    FittedModel first = fit_learner(spec.kind, data, fit_rows, resp_fit, d, lo);
    Vector v_fit = first.predict_rows(data, fit_rows, arm);
    Vector v_eval = first.predict_rows(data, eval_rows, arm);

    Vector w_fit = lad_fit.col(level), w_eval = lad_eval.col(level);

    double beta = 0.0;
    bool converged = true;
    if (opts.tmle_identity_link) {
      double num = 0.0, den = 0.0;
      for (Index i = 0; i < w_eval.size(); ++i) {
        num += w_eval(i) * (resp_eval(i) - v_eval(i));
        den += w_eval(i) * w_eval(i);
      }
      beta = den > 0.0 ? num / den : 0.0;
      for (Index i = 0; i < v_fit.size(); ++i) v_fit(i) += beta * w_fit(i);
      for (Index i = 0; i < v_eval.size(); ++i) v_eval(i) += beta * w_eval(i);
    } else {
      // logistic fluctuation; continuous working responses are mapped onto
      // [0.005, 0.995] first and mapped back afterwards
      double lo_r = std::min(resp_fit.minCoeff(), resp_eval.minCoeff());
      double hi_r = std::max(resp_fit.maxCoeff(), resp_eval.maxCoeff());
      bool unit_range = lo_r >= 0.0 && hi_r <= 1.0;
      double a0 = unit_range ? 0.0 : lo_r;
      double span = unit_range ? 1.0 : (hi_r - lo_r) / 0.99;
      double b0 = unit_range ? 0.0 : 0.005;
      if (span < 1e-12) {
        beta = 0.0;
      } else {
        auto fwd = [&](double v) {
          return std::clamp(b0 + (v - a0) / span, 1e-9, 1.0 - 1e-9);
        };
        Vector r_s(resp_eval.size()), off_s(v_eval.size());
        for (Index i = 0; i < resp_eval.size(); ++i) {
          r_s(i) = std::clamp(b0 + (resp_eval(i) - a0) / span, 0.0, 1.0);
          off_s(i) = logit(fwd(v_eval(i)));
        }
        Fluctuation fl = solve_logit_fluctuation(r_s, off_s, w_eval);
        beta = fl.beta;
        converged = fl.converged;
        auto update = [&](Vector& v, const Vector& w) {
          for (Index i = 0; i < v.size(); ++i) {
            double p = sigmoid(logit(fwd(v(i))) + beta * w(i));
            v(i) = a0 + (p - b0) * span;
          }
        };
        if (beta != 0.0 || !converged) {
          update(v_fit, w_fit);
          update(v_eval, w_eval);
        }
      }
    }
    if (!converged)
      est.warnings.push_back({"tmle-fluctuation",
                              "fluctuation at level " + std::to_string(level) +
                                  " did not converge; kept the first-step fit",
                              static_cast<double>(level)});

    double score = 0.0;
    for (Index i = 0; i < w_eval.size(); ++i) {
      double term = w_eval(i) * (resp_eval(i) - v_eval(i));
      acc_eval(i) += term;
      score += term;
    }
    score_means.push_back(score / static_cast<double>(eval_rows.size()));

    resp_fit = v_fit;
    resp_eval = v_eval;
  }

  Vector summand = resp_eval + acc_eval;  // level-0 targeted values + residuals
  GmfEstimate out = finish_eif(std::move(summand), Method::tmle, regime);
  out.score_residual_means = std::move(score_means);
  out.warnings.insert(out.warnings.end(), est.warnings.begin(), est.warnings.end());
  out.clipped = est.clipped;
  return out;
}

GmfEstimate wglm_impl(const ObservedData& data, const Regime& regime,
                      const LearnerPolicy& policy, const GmfOptions& opts,
                      NuisanceCache& cache, const std::vector<Index>& fit_rows,
                      const std::vector<Index>& eval_rows,
                      const NuisanceOptions& base) {
  for (int level : [&] {
         std::vector<int> l = regime.active_positions();
         l.push_back(0);
         return l;
       }()) {
    LearnerKind k = policy.mu[static_cast<size_t>(level)].kind;
    if (k == LearnerKind::boost || k == LearnerKind::stack)
      throw Error(ErrorCategory::config,
                  "the weighted-refit estimator requires GLM-family outcome "
                  "learners; use tmle for data-adaptive learners");
  }
  NuisanceOptions nopts = base;
  nopts.weighted = true;
  NuisanceSet nuis = fit_nuisance_set(data, fit_rows, regime, policy, nopts, &cache);
  WeightLadder ladder = odds_weights(data, eval_rows, nuis, opts.clip);
  std::vector<double> term_means;
  Vector m = eif2_summands(data, nuis, ladder, eval_rows, &term_means);
  GmfEstimate est = finish_eif(std::move(m), Method::eif2_wglm, regime);
  est.score_residual_means = term_means;
  add_clip_warning(est, ladder, static_cast<Index>(eval_rows.size()));
  if (fit_rows == eval_rows) {
    for (double t : term_means)
      if (std::abs(t) > 1e-8)
        throw Error(ErrorCategory::numeric,
                    "weighted refit failed to zero an augmentation term (" +
                        std::to_string(t) + ")");
  }
  return est;
}

}  // namespace

// ---------------------------------------------------------------------------
// driver
// ---------------------------------------------------------------------------

GmfEstimate estimate_gmf(const ObservedData& data, const Regime& regime,
                         Method method, const LearnerPolicy& policy,
                         const GmfOptions& opts, NuisanceCache* cache,
                         const std::vector<Index>& fit_rows,
                         const std::vector<Index>& eval_rows) {
  NuisanceCache local;
  NuisanceCache& c = cache ? *cache : local;

  NuisanceOptions nopts;
  nopts.clip = opts.clip;
  nopts.seed = opts.seed;
  nopts.cache_tag = "";

  auto fit_set = [&](MuMode mode, bool pi0, bool pi_active, bool mu, bool dens) {
    NuisanceOptions o = nopts;
    o.mu_mode = mode;
    o.need_pi0 = pi0;
    o.need_pi_active = pi_active;
    o.need_mu = mu;
    o.need_density = dens;
    if (dens) {
      LearnerPolicy p = policy;
      p.saturated_density = policy.saturated_density || opts.density_methods_saturated;
      return fit_nuisance_set(data, fit_rows, regime, p, o, &c);
    }
    return fit_nuisance_set(data, fit_rows, regime, policy, o, &c);
  };

  auto eval_averaging = [&](const NuisanceSet& nuis, Method m) {
    GmfEstimate est;
    switch (m) {
      case Method::plugin:
        est = finish_averaging(plugin_values(data, regime, nuis, opts, eval_rows),
                               m, regime);
        break;
      case Method::ri:
        est = finish_averaging(nuis.mu_values(0, data, eval_rows), m, regime);
        break;
      default:
        throw Error(ErrorCategory::config, "internal: bad averaging dispatch");
    }
    est.warnings.insert(est.warnings.end(), nuis.warnings.begin(),
                        nuis.warnings.end());
    return est;
  };

  switch (method) {
    case Method::plugin: {
      NuisanceSet nuis = fit_set(MuMode::top_only, false, false, true,
                                 data.num_mediators() > 0);
      return eval_averaging(nuis, Method::plugin);
    }
    case Method::ri: {
      NuisanceSet nuis = fit_set(MuMode::full, false, false, true, false);
      return eval_averaging(nuis, Method::ri);
    }
    case Method::w_m: {
      NuisanceSet nuis = fit_set(MuMode::top_only, true, false, false,
                                 data.num_mediators() > 0);
      WeightLadder ladder = density_weights(data, eval_rows, nuis, opts.clip);
      const int K = data.num_mediators();
      Vector v(static_cast<Index>(eval_rows.size()));
      for (size_t r = 0; r < eval_rows.size(); ++r)
        v(static_cast<Index>(r)) =
            ladder.w(static_cast<Index>(r), K) * data.y(eval_rows[r]);
      GmfEstimate est = finish_averaging(std::move(v), Method::w_m, regime);
      add_clip_warning(est, ladder, static_cast<Index>(eval_rows.size()));
      return est;
    }
    case Method::w_a: {
      NuisanceSet nuis = fit_set(MuMode::top_only, true, true, false, false);
      WeightLadder ladder = odds_weights(data, eval_rows, nuis, opts.clip);
      const int K = data.num_mediators();
      Vector v(static_cast<Index>(eval_rows.size()));
      for (size_t r = 0; r < eval_rows.size(); ++r)
        v(static_cast<Index>(r)) =
            ladder.w(static_cast<Index>(r), K) * data.y(eval_rows[r]);
      GmfEstimate est = finish_averaging(std::move(v), Method::w_a, regime);
      add_clip_warning(est, ladder, static_cast<Index>(eval_rows.size()));
      return est;
    }
    case Method::hybrid:
      return hybrid_impl(data, regime, policy, opts, c, fit_rows, eval_rows, nopts);
    case Method::eif1: {
      NuisanceSet nuis = fit_set(MuMode::top_only, true, false, true,
                                 data.num_mediators() > 0);
      WeightLadder ladder = density_weights(data, eval_rows, nuis, opts.clip);
      ChainIntegrator chain(data, regime, nuis, opts);
      const int K = data.num_mediators();
      Vector m(static_cast<Index>(eval_rows.size()));
      for (size_t r = 0; r < eval_rows.size(); ++r) {
        const Index ri = static_cast<Index>(r);
        Vector vals(K + 1);
        for (int k = 0; k <= K; ++k) vals(k) = chain.value(eval_rows[r], k);
        double acc = vals(0);
        for (int k = 1; k <= K; ++k)
          acc += ladder.w(ri, k - 1) * (vals(k) - vals(k - 1));
        acc += ladder.w(ri, K) * (data.y(eval_rows[r]) - vals(K));
        m(ri) = acc;
      }
      GmfEstimate est = finish_eif(std::move(m), Method::eif1, regime);
      add_clip_warning(est, ladder, static_cast<Index>(eval_rows.size()));
      return est;
    }
    case Method::eif2: {
      NuisanceSet nuis = fit_set(MuMode::collapsed, true, true, true, false);
      WeightLadder ladder = odds_weights(data, eval_rows, nuis, opts.clip);
      GmfEstimate est = finish_eif(
          eif2_summands(data, nuis, ladder, eval_rows, nullptr), Method::eif2,
          regime);
      est.warnings.insert(est.warnings.end(), nuis.warnings.begin(),
                          nuis.warnings.end());
      add_clip_warning(est, ladder, static_cast<Index>(eval_rows.size()));
      return est;
    }
    case Method::eif2_wglm:
      return wglm_impl(data, regime, policy, opts, c, fit_rows, eval_rows, nopts);
    case Method::tmle:
      return tmle_impl(data, regime, policy, opts, c, fit_rows, eval_rows, nopts);
  }
  throw Error(ErrorCategory::config, "unknown method");
}

GmfEstimate estimate_gmf(const ObservedData& data, const Regime& regime,
                         Method method, const LearnerPolicy& policy,
                         const GmfOptions& opts, NuisanceCache* cache) {
  auto rows = all_rows(data);
  return estimate_gmf(data, regime, method, policy, opts, cache, rows, rows);
}

std::vector<GmfEstimate> cross_fit_many(const ObservedData& data,
                                        const std::vector<Regime>& regimes,
                                        Method method,
                                        const LearnerPolicy& policy, int J,
                                        std::uint64_t seed,
                                        const GmfOptions& opts) {
  FoldPlan plan = make_folds(data.n(), J, seed);
  std::vector<Vector> summand(regimes.size(), Vector(data.n()));
  std::vector<GmfEstimate> merged(regimes.size());
  for (size_t g = 0; g < regimes.size(); ++g) {
    merged[g].method = method;
    merged[g].regime = regimes[g];
  }

  for (int j = 0; j < J; ++j) {
    std::vector<Index> train = plan.complement(j);
    std::vector<Index> test = plan.fold(j);
    auto has_both_arms = [&](const std::vector<Index>& rows) {
      bool t = false, c = false;
      for (Index r : rows) (data.a(r) == 1.0 ? t : c) = true;
      return t && c;
    };
    if (!has_both_arms(train) || !has_both_arms(test))
      throw Error(ErrorCategory::data,
                  "a fold has an empty treatment arm; use fewer folds");
    NuisanceCache cache;  // shared across regimes, never across folds
    GmfOptions o = opts;
    o.seed = derive_seed(seed, 0xcf17, static_cast<std::uint64_t>(j));
    for (size_t g = 0; g < regimes.size(); ++g) {
      GmfEstimate part =
          estimate_gmf(data, regimes[g], method, policy, o, &cache, train, test);
      const Vector& s = part.summands();
      for (size_t r = 0; r < test.size(); ++r)
        summand[g](test[r]) = s(static_cast<Index>(r));
      merged[g].clipped += part.clipped;
      for (const auto& w : part.warnings) merged[g].warnings.push_back(w);
      for (double sm : part.score_residual_means)
        merged[g].score_residual_means.push_back(sm);
    }
  }

  for (size_t g = 0; g < regimes.size(); ++g) {
    double theta = mean_of(summand[g]);
    merged[g].theta = theta;
    if (method_is_eif(method)) {
      merged[g].per_unit = summand[g].array() - theta;
      merged[g].eif_centered = true;
    } else {
      merged[g].per_unit = summand[g];
      merged[g].eif_centered = false;
    }
    merged[g].summand_values = std::move(summand[g]);
  }
  return merged;
}

GmfEstimate cross_fit(const ObservedData& data, const Regime& regime,
                      Method method, const LearnerPolicy& policy, int J,
                      std::uint64_t seed, const GmfOptions& opts) {
  return cross_fit_many(data, {regime}, method, policy, J, seed, opts)[0];
}

}  // namespace pathmed
