#ifndef PATHMED_TEST_SUPPORT_HPP
#define PATHMED_TEST_SUPPORT_HPP

// Shared fixtures and independent oracles for the test suite. Everything in
// here is deliberately written against first principles (direct enumeration,
// brute-force summation) rather than through the library's own code paths.

#include <map>
#include <string>
#include <vector>

#include "pathmed/data.hpp"
#include "pathmed/rng.hpp"

namespace pathmed::testing {

// Small all-binary generating process with one binary covariate and two
// binary mediators; conditional probabilities stay inside [0.25, 0.75] so
// every cell is populated at moderate n and weights stay bounded.
struct BinaryDgp {
  double px = 0.45;
  double pa(double x) const { return 0.35 + 0.2 * x; }
  double pm1(double x, double a) const { return 0.3 + 0.15 * x + 0.2 * a; }
  double pm2(double x, double a, double m1) const {
    return 0.3 + 0.1 * x + 0.2 * a + 0.15 * m1;
  }
  double ey(double x, double a, double m1, double m2) const {
    return 0.1 + 0.15 * x + 0.2 * a + 0.1 * m1 + 0.25 * m2;
  }

  ObservedData sample(Index n, std::uint64_t seed, bool binary_y = true) const;

  // exact mean potential outcome by enumeration of the population law
  double truth(const Regime& regime) const;
};

// Enumeration of the identification formula on an observed sample with
// empirical conditional frequencies; the oracle every saturated estimator
// must reproduce.
double enumeration_oracle(const ObservedData& data, const Regime& regime);

// mean and standard deviation helpers
double mean(const std::vector<double>& v);
double sd(const std::vector<double>& v);

// writes the dataset's declared columns to a header-first CSV
void write_dataset_csv(const ObservedData& d, const std::string& path);
std::string slurp(const std::string& path);

}  // namespace pathmed::testing

#endif
