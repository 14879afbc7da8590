#include "pathmed/folds.hpp"

#include <algorithm>
#include <numeric>

#include "pathmed/rng.hpp"

namespace pathmed {

std::vector<Index> FoldPlan::fold(int j) const {
  std::vector<Index> out;
  for (size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] == j) out.push_back(static_cast<Index>(i));
  return out;
}

std::vector<Index> FoldPlan::complement(int j) const {
  std::vector<Index> out;
  for (size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] != j) out.push_back(static_cast<Index>(i));
  return out;
}

FoldPlan make_folds(Index n, int J, std::uint64_t seed) {
  if (J < 2) throw Error(ErrorCategory::config, "fold count must be >= 2");
  if (n < J)
    throw Error(ErrorCategory::config,
                "not enough units for " + std::to_string(J) + " folds");
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index(0));
  Rng rng(derive_seed(seed, /*tag=*/0xf01d5, 0));
  // Fisher-Yates; deal the shuffled units round-robin
  for (Index i = n - 1; i > 0; --i) {
    Index j = static_cast<Index>(rng.uniform_int(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[i], order[j]);
  }
  FoldPlan plan;
  plan.J = J;
  plan.seed = seed;
  plan.assignment.assign(static_cast<size_t>(n), 0);
  for (Index pos = 0; pos < n; ++pos)
    plan.assignment[static_cast<size_t>(order[pos])] = static_cast<int>(pos % J);
  return plan;
}

}  // namespace pathmed
