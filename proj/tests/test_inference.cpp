#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pathmed/glm.hpp"
#include "pathmed/inference.hpp"
#include "pathmed/rng.hpp"
#include "test_support.hpp"

using namespace pathmed;

TEST_CASE("plug-in variance from per-unit contributions") {
  Vector zero = Vector::Zero(10);
  CHECK(eif_variance(zero) == 0.0);

  Vector pm(2);
  pm << -1.0, 1.0;
  CHECK(eif_variance(pm) == doctest::Approx(0.5).epsilon(1e-15));

  Rng rng(4);
  Vector phi(37);
  for (Index i = 0; i < phi.size(); ++i) phi(i) = rng.normal();
  phi.array() -= phi.mean();
  double direct = 0.0;
  for (Index i = 0; i < phi.size(); ++i) direct += phi(i) * phi(i);
  direct /= 37.0 * 37.0;
  CHECK(eif_variance(phi) == doctest::Approx(direct).epsilon(1e-12));

  // scaling property
  CHECK(eif_variance(3.0 * phi) == doctest::Approx(9.0 * eif_variance(phi)).epsilon(1e-12));

  Vector tiny(1);
  CHECK_THROWS_AS(eif_variance(tiny), Error);
}

TEST_CASE("interval construction") {
  Interval degenerate = wald_ci(1.3, 0.0, 0.95);
  CHECK(degenerate.lo == 1.3);
  CHECK(degenerate.hi == 1.3);

  Interval i = wald_ci(0.0, 1.0, 0.95);
  CHECK(i.lo == doctest::Approx(-1.959964).epsilon(1e-5));
  CHECK(i.hi == doctest::Approx(1.959964).epsilon(1e-5));

  // width scales exactly with the standard error
  Interval wide = wald_ci(0.0, 4.0, 0.95);
  CHECK(wide.hi - wide.lo == doctest::Approx(2.0 * (i.hi - i.lo)).epsilon(1e-12));

  // always contains the point
  Rng rng(9);
  for (int t = 0; t < 50; ++t) {
    double point = rng.normal() * 10;
    double var = rng.uniform() * 5;
    double level = 0.5 + 0.49 * rng.uniform();
    Interval c = wald_ci(point, var, level);
    CHECK(c.lo <= point);
    CHECK(point <= c.hi);
  }
  CHECK_THROWS_AS(wald_ci(0, -1.0, 0.95), Error);
  CHECK_THROWS_AS(wald_ci(0, 1.0, 1.5), Error);
}

namespace {

ObservedData normal_sample(Index n, std::uint64_t seed) {
  ObservedData d;
  d.x.resize(n, 0);
  d.a.resize(n);
  d.y.resize(n);
  Rng rng(seed);
  for (Index i = 0; i < n; ++i) {
    d.a(i) = i % 2;
    d.y(i) = rng.normal();
  }
  return d;
}

}  // namespace

TEST_CASE("resampling a constant statistic gives a zero-width interval") {
  ObservedData d = normal_sample(50, 1);
  auto closure = [](const ObservedData&) { return 2.5; };
  BootstrapResult r = bootstrap(d, closure, 100, 11);
  CHECK(r.se == 0.0);
  CHECK(r.ci.lo == 2.5);
  CHECK(r.ci.hi == 2.5);
}

TEST_CASE("resampling is deterministic for a fixed seed and thread count") {
  ObservedData d = normal_sample(80, 2);
  auto closure = [](const ObservedData& rep) { return rep.y.mean(); };
  BootstrapResult a = bootstrap(d, closure, 200, 5, 0.95, 1);
  BootstrapResult b = bootstrap(d, closure, 200, 5, 0.95, 1);
  CHECK((a.replicates - b.replicates).cwiseAbs().maxCoeff() == 0.0);
  BootstrapResult c = bootstrap(d, closure, 200, 5, 0.95, 2);
  CHECK((a.replicates - c.replicates).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("resampled standard error of a mean tracks its closed form") {
  ObservedData d = normal_sample(500, 3);
  auto closure = [](const ObservedData& rep) { return rep.y.mean(); };
  BootstrapResult r = bootstrap(d, closure, 1000, 7);
  double s = std::sqrt((d.y.array() - d.y.mean()).square().sum() / 499.0);
  double target = s / std::sqrt(500.0);
  CHECK(std::abs(r.se - target) / target < 0.15);
}

TEST_CASE("replicates drawing an empty arm are redrawn") {
  // one treated unit: empty arms happen often but not always
  ObservedData d;
  d.x.resize(8, 0);
  d.a = Vector::Zero(8);
  d.a(0) = 1.0;
  d.y.resize(8);
  for (Index i = 0; i < 8; ++i) d.y(i) = static_cast<double>(i);
  int calls = 0;
  auto closure = [&calls](const ObservedData& rep) {
    bool t = false, c = false;
    for (Index i = 0; i < rep.n(); ++i) (rep.a(i) == 1.0 ? t : c) = true;
    REQUIRE(t);
    REQUIRE(c);
    ++calls;
    return rep.y.mean();
  };
  BootstrapResult r = bootstrap(d, closure, 50, 21);
  CHECK(calls == 50);
  CHECK(r.replicates.size() == 50);
}

TEST_CASE("adaptive-learner closures carry a warning") {
  ObservedData d = normal_sample(40, 4);
  auto closure = [](const ObservedData& rep) { return rep.y.mean(); };
  BootstrapResult r = bootstrap(d, closure, 10, 3, 0.95, 1, true);
  REQUIRE(!r.warnings.empty());
  CHECK(r.warnings[0].code == "bootstrap-adaptive");
}

TEST_CASE("pooling combines imputations by the stated rules") {
  // identical imputations: no between-imputation spread
  PooledEstimate same = rubin_pool({1.5, 1.5, 1.5}, {0.2, 0.2, 0.2});
  CHECK(same.between == 0.0);
  CHECK(same.total == doctest::Approx(0.2).epsilon(1e-15));

  PooledEstimate p = rubin_pool({1.0, 3.0}, {1.0, 1.0});
  CHECK(p.point == 2.0);
  CHECK(p.within == 1.0);
  CHECK(p.between == 2.0);
  CHECK(p.total == doctest::Approx(4.0).epsilon(1e-15));

  PooledEstimate single = rubin_pool({0.7}, {0.09});
  CHECK(single.point == 0.7);
  CHECK(single.total == doctest::Approx(0.09).epsilon(1e-15));

  CHECK_THROWS_AS(rubin_pool({1.0, 2.0}, {1.0}), Error);
}

TEST_CASE("pooling is permutation invariant") {
  std::vector<double> pts{0.2, 0.9, -0.4, 1.1};
  std::vector<double> vars{0.5, 0.1, 0.3, 0.2};
  PooledEstimate a = rubin_pool(pts, vars);
  PooledEstimate b = rubin_pool({1.1, -0.4, 0.9, 0.2}, {0.2, 0.3, 0.1, 0.5});
  CHECK(a.point == doctest::Approx(b.point).epsilon(1e-15));
  CHECK(a.within == doctest::Approx(b.within).epsilon(1e-15));
  CHECK(a.between == doctest::Approx(b.between).epsilon(1e-14));
  CHECK(a.total == doctest::Approx(b.total).epsilon(1e-14));
}
