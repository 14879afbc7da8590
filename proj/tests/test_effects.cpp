#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pathmed/effects.hpp"
#include "pathmed/parallel.hpp"
#include "pathmed/simulation.hpp"
#include "test_support.hpp"

using namespace pathmed;
using pathmed::testing::BinaryDgp;

namespace {

InferenceOptions no_inference() {
  InferenceOptions inf;
  inf.kind = InferenceOptions::Kind::none;
  return inf;
}

}  // namespace

TEST_CASE("effect contrasts equal the regime-wise difference bit for bit") {
  BinaryDgp dgp;
  ObservedData d = dgp.sample(360, 17, /*binary_y=*/false);
  LearnerPolicy policy = LearnerPolicy::defaults(d);
  GmfOptions opts;
  EffectSpec spec = standard_regimes(2, EffectKind::NDE);

  EffectEstimate e = estimate_effect(d, spec, Method::eif2, policy, opts,
                                     no_inference());
  NuisanceCache cache;
  GmfEstimate cmp = estimate_gmf(d, spec.comparison, Method::eif2, policy, opts, &cache);
  GmfEstimate base = estimate_gmf(d, spec.baseline, Method::eif2, policy, opts, &cache);
  CHECK(e.point == cmp.theta - base.theta);
  CHECK(e.per_unit.mean() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("the contrast point matches the mean difference of contributions") {
  BinaryDgp dgp;
  ObservedData d = dgp.sample(300, 23, /*binary_y=*/false);
  LearnerPolicy policy = LearnerPolicy::defaults(d);
  GmfOptions opts;
  EffectSpec spec = standard_regimes(2, EffectKind::cPSE, 2);
  NuisanceCache cache;
  GmfEstimate cmp = estimate_gmf(d, spec.comparison, Method::ri, policy, opts, &cache);
  GmfEstimate base = estimate_gmf(d, spec.baseline, Method::ri, policy, opts, &cache);
  EffectEstimate e =
      estimate_effect(d, spec, Method::ri, policy, opts, no_inference());
  CHECK(e.point ==
        doctest::Approx(cmp.summands().mean() - base.summands().mean())
            .epsilon(1e-12));
}

TEST_CASE("decomposition components telescope exactly") {
  BinaryDgp dgp;
  ObservedData d = dgp.sample(400, 31, /*binary_y=*/false);
  LearnerPolicy policy = LearnerPolicy::defaults(d);
  GmfOptions opts;
  for (Method m : {Method::ri, Method::eif2, Method::w_a, Method::tmle}) {
    Decomposition dec = decompose_ate(d, m, policy, opts, no_inference());
    REQUIRE(dec.components.size() == 3);
    double total = 0.0;
    for (const auto& c : dec.components) total += c.point;
    CHECK(std::abs(total - dec.ate.point) < 1e-10);
  }
}

TEST_CASE("any flip order telescopes and keeps the total fixed") {
  BinaryDgp dgp;
  ObservedData d = dgp.sample(350, 37, /*binary_y=*/false);
  LearnerPolicy policy = LearnerPolicy::defaults(d);
  GmfOptions opts;
  Decomposition def = decompose_ate(d, Method::eif2, policy, opts, no_inference());
  for (std::vector<int> order :
       {std::vector<int>{1, 2, 3}, {2, 3, 1}, {3, 1, 2}, {1, 3, 2}}) {
    Decomposition dec =
        decompose_ate(d, Method::eif2, policy, opts, no_inference(), order);
    double total = 0.0;
    for (const auto& c : dec.components) total += c.point;
    CHECK(std::abs(total - dec.ate.point) < 1e-10);
    CHECK(dec.ate.point == doctest::Approx(def.ate.point).epsilon(1e-12));
  }
  CHECK_THROWS_AS(
      decompose_ate(d, Method::eif2, policy, opts, no_inference(), {1, 1, 2}),
      Error);
}

TEST_CASE("constant outcomes produce an all-zero decomposition") {
  BinaryDgp dgp;
  ObservedData d = dgp.sample(200, 3);
  d.y.setConstant(0.7);
  LearnerPolicy policy = LearnerPolicy::defaults(d);
  GmfOptions opts;
  Decomposition dec = decompose_ate(d, Method::eif2, policy, opts, no_inference());
  CHECK(std::abs(dec.ate.point) < 1e-8);
  for (const auto& c : dec.components) CHECK(std::abs(c.point) < 1e-8);
}

TEST_CASE("the decomposition ladder deduplicates shared fits") {
  BinaryDgp dgp;
  ObservedData d = dgp.sample(300, 41, /*binary_y=*/false);
  LearnerPolicy policy = LearnerPolicy::defaults(d);
  GmfOptions opts;
  NuisanceCache cache;
  decompose_ate(d, Method::eif2, policy, opts, no_inference(), {}, &cache);
  // ladder (0,0,0)->(0,0,1)->(0,1,1)->(1,1,1): treatment models pi0, pi2,
  // pi1 are shared across the ladder; imputation chains contribute
  // (0,0,0): mu0 | (0,0,1): mu2,mu0 | (0,1,1): mu1,mu0 | (1,1,1): mu0
  CHECK(cache.models_fit() == 3 + 6);
}

TEST_CASE("a no-mediator contrast is the classic augmented difference") {
  ObservedData d;
  const Index n = 400;
  d.x.resize(n, 1);
  d.a.resize(n);
  d.y.resize(n);
  Rng rng(12);
  for (Index i = 0; i < n; ++i) {
    d.x(i, 0) = rng.normal();
    d.a(i) = rng.bernoulli(sigmoid(0.3 * d.x(i, 0))) ? 1.0 : 0.0;
    d.y(i) = 0.5 * d.x(i, 0) + 1.2 * d.a(i) + rng.normal();
  }
  d.x_names = {"x"};
  LearnerPolicy policy = LearnerPolicy::defaults(d);
  GmfOptions opts;
  opts.clip = 0.0;
  InferenceOptions inf;
  EffectEstimate ate = estimate_effect(d, standard_regimes(0, EffectKind::ATE),
                                       Method::eif2, policy, opts, inf);

  // hand-rolled augmented contrast with the same fits
  NuisanceCache cache;
  NuisanceOptions nopts;
  nopts.clip = 0.0;
  NuisanceSet s1 = fit_nuisance_set(d, all_rows(d), Regime({1}), policy, nopts, &cache);
  NuisanceSet s0 = fit_nuisance_set(d, all_rows(d), Regime({0}), policy, nopts, &cache);
  double acc = 0.0;
  for (Index i = 0; i < n; ++i) {
    UnitContext ctx(d, i);
    double p = s1.pi[0].predict(ctx);
    double mu1 = s1.mu_value(0, d, i);
    double mu0 = s0.mu_value(0, d, i);
    double t1 = mu1 + (d.a(i) == 1.0 ? (d.y(i) - mu1) / p : 0.0);
    double t0 = mu0 + (d.a(i) == 0.0 ? (d.y(i) - mu0) / (1.0 - p) : 0.0);
    acc += t1 - t0;
  }
  CHECK(ate.point == doctest::Approx(acc / static_cast<double>(n)).epsilon(1e-12));
  CHECK(std::isfinite(ate.se));
}

TEST_CASE("synthetic direct and indirect effects match the path products") {
  DgpCoefficients coeffs = DgpCoefficients::defaults();
  const int reps = 200;
  const Index n = 2000;
  std::vector<double> nde(reps), tie(reps);
  parallel_for(reps, hardware_threads(), [&](std::int64_t r) {
    ObservedData d = generate(coeffs, n, derive_seed(404, 1, static_cast<std::uint64_t>(r)));
    LearnerPolicy policy = LearnerPolicy::defaults(d);
    GmfOptions opts;
    opts.seed = static_cast<std::uint64_t>(r);
    NuisanceCache cache;
    InferenceOptions inf;
    inf.kind = InferenceOptions::Kind::none;
    nde[static_cast<size_t>(r)] =
        estimate_effect(d, standard_regimes(2, EffectKind::NDE), Method::eif2,
                        policy, opts, inf, &cache)
            .point;
    tie[static_cast<size_t>(r)] =
        estimate_effect(d, standard_regimes(2, EffectKind::TIE_M1), Method::eif2,
                        policy, opts, inf, &cache)
            .point;
  });
  // path products of the generating coefficients
  double nde_truth = 0.76;
  double tie_truth = 0.41 * (-0.4 + 0.24 * 0.96);
  CHECK(std::abs(pathmed::testing::mean(nde) - nde_truth) < 0.02);
  CHECK(std::abs(pathmed::testing::mean(tie) - tie_truth) < 0.02);
}

TEST_CASE("regression imputation tracks the indirect path product") {
  DgpCoefficients coeffs = DgpCoefficients::defaults();
  const int reps = 200;
  std::vector<double> est(reps);
  parallel_for(reps, hardware_threads(), [&](std::int64_t r) {
    ObservedData d = generate(coeffs, 2000, derive_seed(505, 2, static_cast<std::uint64_t>(r)));
    LearnerPolicy policy = LearnerPolicy::defaults(d);
    GmfOptions opts;
    InferenceOptions inf;
    inf.kind = InferenceOptions::Kind::none;
    est[static_cast<size_t>(r)] =
        estimate_effect(d, standard_regimes(2, EffectKind::cPSE, 2), Method::ri,
                        policy, opts, inf)
            .point;
  });
  CHECK(std::abs(pathmed::testing::mean(est) - 0.34 * 0.96) < 0.02);
}

TEST_CASE("synthetic decomposition recovers all three path contributions") {
  DgpCoefficients coeffs = DgpCoefficients::defaults();
  const int reps = 100;
  std::vector<double> direct(reps), via_m2(reps), via_m1(reps), total(reps);
  parallel_for(reps, hardware_threads(), [&](std::int64_t r) {
    ObservedData d = generate(coeffs, 2000, derive_seed(606, 3, static_cast<std::uint64_t>(r)));
    LearnerPolicy policy = LearnerPolicy::defaults(d);
    GmfOptions opts;
    InferenceOptions inf;
    inf.kind = InferenceOptions::Kind::none;
    Decomposition dec = decompose_ate(d, Method::eif2, policy, opts, inf);
    direct[static_cast<size_t>(r)] = dec.components[0].point;
    via_m2[static_cast<size_t>(r)] = dec.components[1].point;
    via_m1[static_cast<size_t>(r)] = dec.components[2].point;
    total[static_cast<size_t>(r)] = dec.ate.point;
  });
  using pathmed::testing::mean;
  CHECK(std::abs(mean(direct) - 0.76) < 0.03);
  CHECK(std::abs(mean(via_m2) - 0.3264) < 0.03);
  CHECK(std::abs(mean(via_m1) - (-0.0696)) < 0.03);
  CHECK(std::abs(mean(total) - 1.0168) < 0.05);
}

TEST_CASE("exchangeable groups show no disparity") {
  const int reps = 60;
  std::vector<double> gaps(reps);
  std::vector<int> cover(reps, 0);
  parallel_for(reps, hardware_threads(), [&](std::int64_t r) {
    // both groups draw from the same law
    ObservedData d;
    const Index n = 600;
    d.x.resize(n, 0);
    d.a.resize(n);
    d.y.resize(n);
    d.mediators.assign(2, Matrix(n, 1));
    d.mediator_names = {{"m1"}, {"m2"}};
    d.discrete = {{true}, {true}};
    Rng rng(derive_seed(707, 4, static_cast<std::uint64_t>(r)));
    for (Index i = 0; i < n; ++i) {
      d.a(i) = rng.bernoulli(0.5) ? 1.0 : 0.0;
      double m1 = rng.bernoulli(0.4) ? 1.0 : 0.0;
      double m2 = rng.bernoulli(0.3 + 0.2 * m1) ? 1.0 : 0.0;
      d.mediators[0](i, 0) = m1;
      d.mediators[1](i, 0) = m2;
      d.y(i) = 0.5 + 0.4 * m1 + 0.7 * m2 + 0.5 * rng.normal();
    }
    LearnerPolicy policy = LearnerPolicy::defaults(d);
    GmfOptions opts;
    InferenceOptions inf;
    Decomposition dec = disparity_decompose(d, policy, opts, inf);
    gaps[static_cast<size_t>(r)] = dec.ate.point;
    cover[static_cast<size_t>(r)] =
        dec.ate.ci_lo <= 0.0 && 0.0 <= dec.ate.ci_hi ? 1 : 0;
    // components always telescope to the raw group gap
    double total = 0.0;
    for (const auto& c : dec.components) total += c.point;
    REQUIRE(std::abs(total - dec.ate.point) < 1e-10);
    for (const auto& c : dec.components)
      REQUIRE(std::abs(c.point) < 4.0 * c.se + 1e-9);
  });
  using pathmed::testing::mean;
  double gap_mean = mean(gaps);
  double gap_se = pathmed::testing::sd(gaps) / std::sqrt(static_cast<double>(reps));
  CHECK(std::abs(gap_mean) < 4.0 * gap_se + 0.02);
  double coverage = 0.0;
  for (int c : cover) coverage += c;
  CHECK(coverage / reps >= 0.9);
}

TEST_CASE("disparity components sum to the raw gap and match enumeration") {
  BinaryDgp dgp;
  ObservedData d = dgp.sample(800, 99, /*binary_y=*/false);
  // strip covariates: the single x column becomes part of no block
  ObservedData g;
  g.x.resize(d.n(), 0);
  g.a = d.a;
  g.y = d.y;
  g.mediators = d.mediators;
  g.mediator_names = d.mediator_names;
  g.discrete = d.discrete;

  LearnerPolicy policy = LearnerPolicy::defaults(g, LearnerKind::saturated);
  GmfOptions opts;
  opts.clip = 0.0;
  Decomposition dec = disparity_decompose(g, policy, opts, no_inference());

  double raw0 = 0.0, raw1 = 0.0;
  {
    double s1 = 0, n1 = 0, s0 = 0, n0 = 0;
    for (Index i = 0; i < g.n(); ++i) {
      if (g.a(i) == 1.0) {
        s1 += g.y(i);
        ++n1;
      } else {
        s0 += g.y(i);
        ++n0;
      }
    }
    raw1 = s1 / n1;
    raw0 = s0 / n0;
  }
  CHECK(dec.ate.point == doctest::Approx(raw1 - raw0).epsilon(1e-12));
  double total = 0.0;
  for (const auto& c : dec.components) total += c.point;
  CHECK(std::abs(total - dec.ate.point) < 1e-10);

  // the middle ladder values coincide with the generic saturated estimating
  // equation once the covariate block is empty: per-level group-1 cell means,
  // the group share, and the same odds ratios appear on both routes
  LearnerPolicy sat = LearnerPolicy::defaults(g, LearnerKind::saturated);
  NuisanceCache cache;
  GmfEstimate t001 =
      estimate_gmf(g, Regime({0, 0, 1}), Method::eif2, sat, opts, &cache);
  GmfEstimate t011 =
      estimate_gmf(g, Regime({0, 1, 1}), Method::eif2, sat, opts, &cache);
  // components are ordered [direct, via m2, via m1]
  double theta_001 = raw0 + dec.components[0].point;
  double theta_011 = theta_001 + dec.components[1].point;
  CHECK(t001.theta == doctest::Approx(theta_001).epsilon(1e-9));
  CHECK(t011.theta == doctest::Approx(theta_011).epsilon(1e-9));
}
