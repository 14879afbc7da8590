#include "pathmed/effects.hpp"

#include <algorithm>
#include <cmath>

#include "pathmed/inference.hpp"
#include "pathmed/rng.hpp"

namespace pathmed {

namespace {

bool adaptive_policy(const LearnerPolicy& policy) {
  auto adaptive = [](const LearnerSpec& s) {
    return s.kind == LearnerKind::boost || s.kind == LearnerKind::stack;
  };
  return std::any_of(policy.pi.begin(), policy.pi.end(), adaptive) ||
         std::any_of(policy.mu.begin(), policy.mu.end(), adaptive);
}

std::vector<GmfEstimate> run_regimes(const ObservedData& data,
                                     const std::vector<Regime>& regimes,
                                     Method method, const LearnerPolicy& policy,
                                     const GmfOptions& opts,
                                     const InferenceOptions& inf,
                                     NuisanceCache* cache) {
  if (inf.folds > 0)
    return cross_fit_many(data, regimes, method, policy, inf.folds, inf.seed, opts);
  NuisanceCache local;
  NuisanceCache& c = cache ? *cache : local;
  std::vector<GmfEstimate> out;
  out.reserve(regimes.size());
  for (const Regime& r : regimes)
    out.push_back(estimate_gmf(data, r, method, policy, opts, &c));
  return out;
}

EffectEstimate contrast(const ObservedData& data, const EffectSpec& spec,
                        const GmfEstimate& cmp, const GmfEstimate& base,
                        Method method, const LearnerPolicy& policy,
                        const GmfOptions& opts, const InferenceOptions& inf) {
  EffectEstimate out;
  out.spec = spec;
  out.method = method;
  out.level = inf.level;
  out.point = cmp.theta - base.theta;
  out.per_unit = cmp.centered() - base.centered();
  out.clipped = cmp.clipped + base.clipped;
  out.warnings = cmp.warnings;
  out.warnings.insert(out.warnings.end(), base.warnings.begin(), base.warnings.end());

  switch (inf.kind) {
    case InferenceOptions::Kind::none:
      break;
    case InferenceOptions::Kind::eif: {
      if (!method_is_eif(method)) {
        out.warnings.push_back(
            {"se-unavailable",
             "influence-function variance applies to the eif/tmle estimators; "
             "use bootstrap inference for this method",
             0.0});
        break;
      }
      double var = eif_variance(out.per_unit);
      out.se = std::sqrt(var);
      Interval ci = wald_ci(out.point, var, inf.level);
      out.ci_lo = ci.lo;
      out.ci_hi = ci.hi;
      break;
    }
    case InferenceOptions::Kind::bootstrap: {
      auto closure = [&](const ObservedData& rep) {
        GmfOptions o = opts;
        std::vector<GmfEstimate> pair =
            run_regimes(rep, {spec.comparison, spec.baseline}, method, policy, o,
                        [&] {
                          InferenceOptions i2 = inf;
                          i2.kind = InferenceOptions::Kind::none;
                          return i2;
                        }(),
                        nullptr);
        return pair[0].theta - pair[1].theta;
      };
      BootstrapResult bs = bootstrap(data, closure, inf.bootstrap_reps, inf.seed,
                                     inf.level, inf.threads,
                                     adaptive_policy(policy));
      out.se = bs.se;
      out.ci_lo = bs.ci.lo;
      out.ci_hi = bs.ci.hi;
      out.warnings.insert(out.warnings.end(), bs.warnings.begin(),
                          bs.warnings.end());
      break;
    }
  }
  return out;
}

}  // namespace

EffectEstimate estimate_effect(const ObservedData& data, const EffectSpec& spec,
                               Method method, const LearnerPolicy& policy,
                               const GmfOptions& opts,
                               const InferenceOptions& inf,
                               NuisanceCache* cache) {
  data.check();
  const int K = data.num_mediators();
  if (spec.comparison.size() != K + 1 || spec.baseline.size() != K + 1)
    throw Error(ErrorCategory::config,
                "effect regimes do not match the data's mediator count");
  std::vector<GmfEstimate> pair = run_regimes(
      data, {spec.comparison, spec.baseline}, method, policy, opts, inf, cache);
  return contrast(data, spec, pair[0], pair[1], method, policy, opts, inf);
}

Decomposition decompose_ate(const ObservedData& data, Method method,
                            const LearnerPolicy& policy, const GmfOptions& opts,
                            const InferenceOptions& inf,
                            std::vector<int> flip_order, NuisanceCache* cache) {
  data.check();
  const int K = data.num_mediators();
  if (K < 1)
    throw Error(ErrorCategory::config,
                "a total-effect decomposition needs at least one mediator");
  if (flip_order.empty())
    for (int k = K + 1; k >= 1; --k) flip_order.push_back(k);
  if (static_cast<int>(flip_order.size()) != K + 1)
    throw Error(ErrorCategory::config, "flip order must list 1..K+1 once each");
  {
    std::vector<int> sorted = flip_order;
    std::sort(sorted.begin(), sorted.end());
    for (int k = 1; k <= K + 1; ++k)
      if (sorted[static_cast<size_t>(k - 1)] != k)
        throw Error(ErrorCategory::config, "flip order must list 1..K+1 once each");
  }

  // ladder of K+2 regimes from all-zero to all-one
  std::vector<Regime> ladder;
  std::vector<int> arms(static_cast<size_t>(K + 1), 0);
  ladder.push_back(Regime(arms));
  for (int pos : flip_order) {
    arms[static_cast<size_t>(pos - 1)] = 1;
    ladder.push_back(Regime(arms));
  }

  std::vector<GmfEstimate> points =
      run_regimes(data, ladder, method, policy, opts, inf, cache);

  Decomposition out;
  auto label = [K](int pos) {
    return pos == K + 1 ? std::string("A->Y")
                        : "A->M" + std::to_string(pos) + "~>Y";
  };
  for (size_t t = 0; t + 1 < ladder.size(); ++t) {
    EffectSpec spec = EffectSpec::custom(ladder[t + 1], ladder[t]);
    EffectEstimate e = contrast(data, spec, points[t + 1], points[t], method,
                                policy, opts, inf);
    e.path_label = label(flip_order[t]);
    out.components.push_back(std::move(e));
  }
  EffectSpec total = standard_regimes(K, EffectKind::ATE);
  out.ate = contrast(data, total, points.back(), points.front(), method, policy,
                     opts, inf);
  out.ate.path_label = "ATE";
  return out;
}

// ---------------------------------------------------------------------------
// between-group disparity decomposition
// ---------------------------------------------------------------------------

namespace {

struct DisparityPoint {
  double theta = 0.0;
  Vector summand;
};

// group mean as an estimating equation: theta + I(A=g)(Y - theta)/P(A=g)
DisparityPoint group_mean_point(const ObservedData& data, int group) {
  const Index n = data.n();
  double share = 0.0;
  for (Index i = 0; i < n; ++i) share += data.a(i) == group ? 1.0 : 0.0;
  share /= static_cast<double>(n);
  double mean = 0.0;
  for (Index i = 0; i < n; ++i)
    if (data.a(i) == group) mean += data.y(i);
  mean /= share * static_cast<double>(n);
  DisparityPoint out;
  out.theta = mean;
  out.summand.resize(n);
  for (Index i = 0; i < n; ++i)
    out.summand(i) =
        mean + (data.a(i) == group ? (data.y(i) - mean) / share : 0.0);
  return out;
}

}  // namespace

Decomposition disparity_decompose(const ObservedData& grouped,
                                  const LearnerPolicy& policy,
                                  const GmfOptions& opts,
                                  const InferenceOptions& inf) {
  const ObservedData& data = as_grouped(grouped);
  const int K = data.num_mediators();
  const Index n = data.n();
  {
    Index n1 = 0;
    for (Index i = 0; i < n; ++i) n1 += data.a(i) == 1.0;
    if (n1 < 2 || n - n1 < 2)
      throw Error(ErrorCategory::data, "each group needs at least two units");
  }
  auto rows = all_rows(data);

  double share0 = 0.0;
  for (Index i = 0; i < n; ++i) share0 += data.a(i) == 0.0 ? 1.0 : 0.0;
  share0 /= static_cast<double>(n);

  // ladder point j (1..K): group-1 mean reweighted to the first j mediator
  // blocks of group 0; endpoints are the raw group means
  std::vector<DisparityPoint> ladder(static_cast<size_t>(K + 2));
  ladder[0] = group_mean_point(data, 1);
  ladder[static_cast<size_t>(K + 1)] = group_mean_point(data, 0);

  Index clipped = 0;
  NuisanceCache cache;
  NuisanceOptions nopts;
  nopts.clip = opts.clip;
  nopts.seed = opts.seed;
  for (int j = 1; j <= K; ++j) {
    // outcome mean among group 1 given the first j blocks, fit directly
    const LearnerSpec& mu_spec = policy.mu[static_cast<size_t>(j)];
    DesignSpec d;
    d.x_cols = mu_spec.x_cols;  // empty for grouped data
    d.mediator_levels = mu_spec.drop_mediators ? 0 : j;
    d.include_treatment = false;
    d.family = data.y_binary() ? Family::logit : Family::identity;
    if (mu_spec.kind == LearnerKind::saturated) d.family = Family::identity;
    std::vector<Index> g1;
    for (Index i = 0; i < n; ++i)
      if (data.a(i) == 1.0) g1.push_back(i);
    Vector y1(static_cast<Index>(g1.size()));
    for (size_t r = 0; r < g1.size(); ++r)
      y1(static_cast<Index>(r)) = data.y(g1[r]);
    LearnerOptions lo;
    lo.ridge = mu_spec.ridge;
    lo.boost = policy.boost;
    lo.stack_folds = policy.stack_folds;
    lo.seed = derive_seed(opts.seed, 0xd15b, static_cast<std::uint64_t>(j));
    FittedModel mu = fit_learner(mu_spec.kind, data, g1, y1, d, lo);
    Vector mu_all = mu.predict_rows(data, rows);

    FittedModel pi = fit_pi_model(data, rows, j, policy, nopts, cache);

    double mu0 = 0.0;
    for (Index i = 0; i < n; ++i)
      if (data.a(i) == 0.0) mu0 += mu_all(i);
    mu0 /= share0 * static_cast<double>(n);

    DisparityPoint pt;
    pt.summand.resize(n);
    for (Index i = 0; i < n; ++i) {
      UnitContext ctx(data, i);
      double p1 = pi.predict(ctx);
      double odds = clip_probability(1.0 - p1, opts.clip, &clipped) /
                    clip_probability(p1, opts.clip, &clipped);
      double m = mu0;
      if (data.a(i) == 1.0)
        m += odds / share0 * (data.y(i) - mu_all(i));
      else
        m += (mu_all(i) - mu0) / share0;
      pt.summand(i) = m;
    }
    double s = 0.0;
    for (Index i = 0; i < n; ++i) s += pt.summand(i);
    pt.theta = s / static_cast<double>(n);
    ladder[static_cast<size_t>(j)] = std::move(pt);
  }

  auto make_estimate = [&](const DisparityPoint& hi, const DisparityPoint& lo,
                           const std::string& label) {
    EffectEstimate e;
    e.path_label = label;
    e.point = hi.theta - lo.theta;
    e.per_unit = (hi.summand.array() - hi.theta) - (lo.summand.array() - lo.theta);
    e.level = inf.level;
    e.method = Method::eif2;
    if (inf.kind == InferenceOptions::Kind::eif) {
      double var = eif_variance(e.per_unit);
      e.se = std::sqrt(var);
      Interval ci = wald_ci(e.point, var, inf.level);
      e.ci_lo = ci.lo;
      e.ci_hi = ci.hi;
    }
    return e;
  };

  Decomposition out;
  // components in flip order K+1 (direct), K, ..., 1
  out.components.push_back(
      make_estimate(ladder[static_cast<size_t>(K)], ladder[static_cast<size_t>(K + 1)],
                    "A->Y"));
  for (int j = K; j >= 1; --j)
    out.components.push_back(make_estimate(ladder[static_cast<size_t>(j - 1)],
                                           ladder[static_cast<size_t>(j)],
                                           "A->M" + std::to_string(j) + "~>Y"));
  out.ate = make_estimate(ladder[0], ladder[static_cast<size_t>(K + 1)], "gap");
  out.ate.clipped = clipped;
  return out;
}

}  // namespace pathmed
