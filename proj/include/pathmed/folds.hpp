#ifndef PATHMED_FOLDS_HPP
#define PATHMED_FOLDS_HPP

#include <cstdint>
#include <vector>

#include "pathmed/types.hpp"

namespace pathmed {

struct FoldPlan {
  int J = 0;
  std::vector<int> assignment;  // per unit, in 0..J-1
  std::uint64_t seed = 0;

  std::vector<Index> fold(int j) const;
  std::vector<Index> complement(int j) const;
};

// Random partition into J folds whose sizes differ by at most one;
// deterministic given the seed.
FoldPlan make_folds(Index n, int J, std::uint64_t seed);

}  // namespace pathmed

#endif
