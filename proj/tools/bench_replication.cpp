// Compares the serial reference path of the replication kernels against the
// OpenMP path and checks that results agree bit for bit.

#include <chrono>
#include <cstring>
#include <iostream>

#include "pathmed/parallel.hpp"
#include "pathmed/simulation.hpp"

namespace pm = pathmed;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

pm::StudyReport run(int threads, int reps, long n) {
  pm::StudyGrid grid;
  grid.reps = reps;
  grid.n = n;
  grid.threads = threads;
  grid.cases = {pm::SpecCase::a, pm::SpecCase::d};
  grid.estimators = {pm::study_estimator("eif2"), pm::study_estimator("ri"),
                     pm::study_estimator("w-a")};
  return pm::run_study(grid);
}

bool same(const pm::StudyReport& a, const pm::StudyReport& b) {
  if (a.rows.size() != b.rows.size()) return false;
  for (size_t i = 0; i < a.rows.size(); ++i) {
    const auto& l = a.rows[i];
    const auto& r = b.rows[i];
    if (l.estimator != r.estimator || l.spec_case != r.spec_case) return false;
    if (std::memcmp(&l.estimate, &r.estimate, sizeof(double)) != 0) return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  int reps = argc > 1 ? std::atoi(argv[1]) : 24;
  long n = argc > 2 ? std::atol(argv[2]) : 1000;
  int max_threads = pm::hardware_threads();

  std::cout << "replication study benchmark: reps=" << reps << " n=" << n
            << "\n";
  auto t0 = std::chrono::steady_clock::now();
  pm::StudyReport serial = run(1, reps, n);
  double t_serial = seconds_since(t0);
  std::cout << "  serial reference: " << t_serial << " s\n";

  for (int threads = 2; threads <= max_threads; threads *= 2) {
    t0 = std::chrono::steady_clock::now();
    pm::StudyReport parallel = run(threads, reps, n);
    double t_par = seconds_since(t0);
    std::cout << "  threads=" << threads << ": " << t_par << " s  (speedup "
              << t_serial / t_par << "x, results "
              << (same(serial, parallel) ? "identical" : "DIFFER") << ")\n";
    if (!same(serial, parallel)) return 1;
  }
  return 0;
}
