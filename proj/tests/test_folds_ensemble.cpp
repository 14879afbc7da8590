#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "pathmed/ensemble.hpp"
#include "pathmed/rng.hpp"
#include "test_support.hpp"

using namespace pathmed;

TEST_CASE("folds partition evenly and deterministically") {
  FoldPlan p = make_folds(10, 5, 42);
  std::vector<int> sizes(5, 0);
  for (int a : p.assignment) sizes[static_cast<size_t>(a)]++;
  for (int s : sizes) CHECK(s == 2);

  FoldPlan q = make_folds(10, 5, 42);
  CHECK(p.assignment == q.assignment);
  FoldPlan r = make_folds(10, 5, 43);
  CHECK(p.assignment != r.assignment);

  FoldPlan big = make_folds(2000, 5, 7);
  std::vector<int> big_sizes(5, 0);
  for (int a : big.assignment) big_sizes[static_cast<size_t>(a)]++;
  for (int s : big_sizes) CHECK(s == 400);

  FoldPlan odd = make_folds(11, 3, 7);
  std::vector<int> odd_sizes(3, 0);
  for (int a : odd.assignment) odd_sizes[static_cast<size_t>(a)]++;
  std::set<int> distinct(odd_sizes.begin(), odd_sizes.end());
  CHECK(*distinct.rbegin() - *distinct.begin() <= 1);

  CHECK_THROWS_AS(make_folds(4, 5, 1), Error);
  CHECK_THROWS_AS(make_folds(10, 1, 1), Error);
}

namespace {

ObservedData structured_data(Index n, std::uint64_t seed, bool binary) {
  ObservedData d;
  d.x.resize(n, 3);
  d.a = Vector::Zero(n);
  d.a(0) = 1.0;
  d.y.resize(n);
  Rng rng(seed);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < 3; ++j) d.x(i, j) = rng.normal();
    double eta = 0.6 * d.x(i, 0) - 0.9 * d.x(i, 1) + 0.4 * d.x(i, 2);
    d.y(i) = binary ? (rng.bernoulli(sigmoid(eta)) ? 1.0 : 0.0)
                    : eta + 0.5 * rng.normal();
  }
  d.x_names = {"x1", "x2", "x3"};
  return d;
}

}  // namespace

TEST_CASE("a single candidate gets weight one") {
  ObservedData d = structured_data(120, 3, false);
  DesignSpec spec;
  spec.x_cols = {0, 1, 2};
  FoldPlan folds = make_folds(d.n(), 5, 11);
  LearnerOptions opts;
  StackReport report;
  FittedModel m = stack_learners({LearnerKind::glm}, d, all_rows(d), d.y, spec,
                                 folds, opts, &report);
  CHECK(report.weights.size() == 1);
  CHECK(report.weights(0) == doctest::Approx(1.0));
  CHECK(m.learner == "stack");
}

TEST_CASE("the matching specification dominates an intercept-only candidate") {
  ObservedData d = structured_data(400, 9, false);
  DesignSpec spec;
  spec.x_cols = {0, 1, 2};
  FoldPlan folds = make_folds(d.n(), 5, 13);
  // boosting with zero rounds predicts the training mean, which makes it the
  // intercept-only candidate
  LearnerOptions opts;
  opts.boost.rounds = 0;
  StackReport report;
  stack_learners({LearnerKind::glm, LearnerKind::boost}, d, all_rows(d), d.y,
                 spec, folds, opts, &report);
  CHECK(report.weights(0) >= 0.8);
  // the cross-validated loss ordering backs the weight assignment
  CHECK(report.candidate_cv_loss(0) < report.candidate_cv_loss(1));
}

TEST_CASE("stack weights stay on the simplex and never lose to a candidate") {
  for (bool binary : {false, true}) {
    ObservedData d = structured_data(250, binary ? 21 : 22, binary);
    DesignSpec spec;
    spec.x_cols = {0, 1, 2};
    spec.family = binary ? Family::logit : Family::identity;
    FoldPlan folds = make_folds(d.n(), 5, 17);
    LearnerOptions opts;
    opts.boost.rounds = 50;
    StackReport report;
    stack_learners({LearnerKind::glm, LearnerKind::glm2, LearnerKind::boost}, d,
                   all_rows(d), d.y, spec, folds, opts, &report);
    double total = 0.0;
    for (Index c = 0; c < report.weights.size(); ++c) {
      CHECK(report.weights(c) >= 0.0);
      total += report.weights(c);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(report.ensemble_cv_loss <= report.candidate_cv_loss.minCoeff() + 1e-12);
  }
}

TEST_CASE("boosting fits a nonlinear signal better than its null") {
  ObservedData d = structured_data(500, 33, false);
  for (Index i = 0; i < d.n(); ++i)
    d.y(i) = std::abs(d.x(i, 0)) + 0.2 * d.y(i);  // stump-friendly shape
  DesignSpec spec;
  spec.x_cols = {0, 1, 2};
  BoostOptions opts;
  opts.seed = 5;
  FittedModel m = fit_boost(d, all_rows(d), d.y, spec, opts);
  Vector pred = m.predict_rows(d, all_rows(d));
  double mse = (pred - d.y).squaredNorm() / static_cast<double>(d.n());
  double var = (d.y.array() - d.y.mean()).square().sum() / static_cast<double>(d.n());
  CHECK(mse < 0.5 * var);
}
