#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pathmed/nuisance.hpp"
#include "test_support.hpp"

using namespace pathmed;
using pathmed::testing::BinaryDgp;

namespace {

LearnerPolicy saturated_policy(const ObservedData& d) {
  LearnerPolicy p = LearnerPolicy::defaults(d, LearnerKind::saturated);
  p.saturated_density = true;
  return p;
}

}  // namespace

TEST_CASE("a mediator-free layout fits only the two base models") {
  ObservedData d;
  const Index n = 40;
  d.x.resize(n, 1);
  d.a.resize(n);
  d.y.resize(n);
  Rng rng(3);
  for (Index i = 0; i < n; ++i) {
    d.x(i, 0) = rng.normal();
    d.a(i) = rng.bernoulli(0.5) ? 1.0 : 0.0;
    d.y(i) = d.x(i, 0) + d.a(i) + rng.normal();
  }
  d.x_names = {"x"};
  LearnerPolicy policy = LearnerPolicy::defaults(d);
  NuisanceCache cache;
  NuisanceOptions opts;
  NuisanceSet set = fit_nuisance_set(d, all_rows(d), Regime({1}), policy, opts,
                                     &cache);
  CHECK(set.pi[0].valid());
  CHECK(set.mu.size() == 1);
  CHECK(set.mu.count(0) == 1);
  CHECK(cache.models_fit() == 2);
}

TEST_CASE("saturated chains reproduce the enumeration value at level zero") {
  BinaryDgp dgp;
  ObservedData d = dgp.sample(500, 12);
  Regime regime({0, 1, 1});
  LearnerPolicy policy = saturated_policy(d);
  NuisanceOptions opts;
  opts.mu_mode = MuMode::full;
  opts.need_pi0 = false;
  opts.need_pi_active = false;
  NuisanceSet set = fit_nuisance_set(d, all_rows(d), regime, policy, opts);
  REQUIRE(set.mu_levels == std::vector<int>{0, 1, 2});

  double plug = 0.0;
  Vector mu0 = set.mu_values(0, d, all_rows(d));
  // the level-0 fit conditions only on x, so group by x and compare with the
  // enumeration applied at each covariate value
  double oracle = pathmed::testing::enumeration_oracle(d, regime);
  plug = mu0.mean();
  CHECK(plug == doctest::Approx(oracle).epsilon(1e-10));
}

TEST_CASE("constant outcomes propagate through every level") {
  BinaryDgp dgp;
  ObservedData d = dgp.sample(200, 5);
  d.y.setConstant(2.5);
  Regime regime({0, 1, 1});
  LearnerPolicy policy = LearnerPolicy::defaults(d);
  NuisanceOptions opts;
  opts.mu_mode = MuMode::full;
  opts.need_pi0 = false;
  opts.need_pi_active = false;
  NuisanceSet set = fit_nuisance_set(d, all_rows(d), regime, policy, opts);
  for (int level : set.mu_levels) {
    Vector v = set.mu_values(level, d, all_rows(d));
    CHECK((v.array() - 2.5).abs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("collapsed chains fit exactly the needed levels and models") {
  BinaryDgp dgp;
  ObservedData d = dgp.sample(300, 31);
  LearnerPolicy policy = LearnerPolicy::defaults(d);
  NuisanceCache cache;
  NuisanceOptions opts;
  NuisanceSet set =
      fit_nuisance_set(d, all_rows(d), Regime({0, 0, 1}), policy, opts, &cache);
  CHECK(set.mu_levels == std::vector<int>{0, 2});
  CHECK(set.pi[0].valid());
  CHECK_FALSE(set.pi[1].valid());
  CHECK(set.pi[2].valid());
  // pi0, pi2, mu2, mu0
  CHECK(cache.models_fit() == 4);

  // a second regime sharing the treatment models reuses them
  NuisanceSet other =
      fit_nuisance_set(d, all_rows(d), Regime({0, 1, 1}), policy, opts, &cache);
  CHECK(other.mu_levels == std::vector<int>{0, 1});
  // adds pi1, mu1, mu0' but reuses pi0
  CHECK(cache.models_fit() == 7);
}

TEST_CASE("identical seeds and inputs reproduce identical fits") {
  BinaryDgp dgp;
  ObservedData d = dgp.sample(250, 8, /*binary_y=*/false);
  LearnerPolicy policy = LearnerPolicy::defaults(d, LearnerKind::stack);
  policy.boost.rounds = 30;
  NuisanceOptions opts;
  opts.seed = 99;
  NuisanceSet s1 = fit_nuisance_set(d, all_rows(d), Regime({0, 1, 1}), policy, opts);
  NuisanceSet s2 = fit_nuisance_set(d, all_rows(d), Regime({0, 1, 1}), policy, opts);
  for (int level : s1.mu_levels) {
    Vector a = s1.mu_values(level, d, all_rows(d));
    Vector b = s2.mu_values(level, d, all_rows(d));
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("non-nested imputation predictors trigger a compatibility warning") {
  BinaryDgp dgp;
  ObservedData d = dgp.sample(200, 77);
  LearnerPolicy policy = LearnerPolicy::defaults(d);
  policy.mu[2].x_cols = {};   // level 2 drops the covariate
  policy.mu[0].x_cols = {0};  // level 0 keeps it: not nested in level 2's set
  NuisanceOptions opts;
  opts.mu_mode = MuMode::full;
  opts.need_pi0 = false;
  opts.need_pi_active = false;
  NuisanceSet set = fit_nuisance_set(d, all_rows(d), Regime({0, 1, 1}), policy, opts);
  bool warned = false;
  for (const auto& w : set.warnings) warned = warned || w.code == "mu-compatibility";
  CHECK(warned);
}

TEST_CASE("failed nuisance fits name the offending model") {
  BinaryDgp dgp;
  ObservedData d = dgp.sample(120, 15);
  LearnerPolicy policy = LearnerPolicy::defaults(d);
  policy.pi[0].ridge = 0.0;
  // duplicate covariate column makes the design singular
  ObservedData bad = d;
  bad.x.resize(d.n(), 2);
  bad.x.col(0) = d.x.col(0);
  bad.x.col(1) = d.x.col(0);
  bad.x_names = {"x", "x_copy"};
  policy.pi[0].x_cols = {0, 1};
  NuisanceOptions opts;
  try {
    fit_nuisance_set(bad, all_rows(bad), Regime({0, 0, 1}), policy, opts);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("pi_0") != std::string::npos);
  }
}

TEST_CASE("odds-weight columns collapse where the regime arms agree") {
  BinaryDgp dgp;
  ObservedData d = dgp.sample(400, 51);
  LearnerPolicy policy = LearnerPolicy::defaults(d);
  NuisanceOptions opts;
  // regime with one collapsed position: w_1 must equal w_0 exactly
  NuisanceSet set = fit_nuisance_set(d, all_rows(d), Regime({0, 0, 1}), policy, opts);
  WeightLadder lad = odds_weights(d, all_rows(d), set, 0.01);
  for (Index i = 0; i < d.n(); ++i)
    CHECK(lad.w(i, 1) == lad.w(i, 0));
  // cap from clipping: every weight below (1/clip)^{K+1}
  CHECK(lad.w.maxCoeff() <= std::pow(1.0 / 0.01, 3));
}
