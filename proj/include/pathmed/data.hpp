#ifndef PATHMED_DATA_HPP
#define PATHMED_DATA_HPP

#include <optional>
#include <string>
#include <vector>

#include "pathmed/types.hpp"

namespace pathmed {

// Observed sample with declared roles: covariate block x, binary treatment a,
// K causally ordered mediator blocks, outcome y. Mediator order is declared
// by the caller, never inferred. Immutable after construction by convention;
// safe to share across threads.
struct ObservedData {
  Matrix x;                        // n x p_x (p_x may be 0)
  Vector a;                        // 0/1
  std::vector<Matrix> mediators;   // K blocks, block k is n x p_k
  Vector y;

  std::vector<std::string> x_names;
  std::vector<std::vector<std::string>> mediator_names;
  std::string a_name = "a";
  std::string y_name = "y";
  // per block, per column: true if the column is integer-coded discrete
  std::vector<std::vector<bool>> discrete;

  Index n() const { return y.size(); }
  int num_mediators() const { return static_cast<int>(mediators.size()); }
  bool block_discrete(int k) const;  // all columns of block k tagged discrete
  bool y_binary() const;

  // structural checks: shapes, binary a, finite values; throws Error(data)
  void check() const;
};

// Per-path treatment assignments (a_1, ..., a_{K+1}) indexing the mean
// potential outcome ladder. assignments[j] is a_{j+1} in 1-based terms.
struct Regime {
  std::vector<int> assignments;

  Regime() = default;
  explicit Regime(std::vector<int> a);

  int size() const { return static_cast<int>(assignments.size()); }
  // 1-based accessor: a(k) for k in 1..K+1
  int a(int k) const { return assignments.at(k - 1); }
  int outcome_arm() const { return assignments.back(); }
  bool operator==(const Regime& o) const { return assignments == o.assignments; }

  std::string str() const;

  static Regime constant(int K, int arm);
  // positions k in 1..K where a_k != a_{k+1}
  std::vector<int> active_positions() const;
};

enum class EffectKind { NDE, NIE_M1, TIE_M1, nPSE, cPSE, ATE, Custom };

std::string effect_kind_name(EffectKind kind);

// A contrast of two regimes (comparison minus baseline). The named kinds are
// constructed through standard_regimes, which enforces the defining pairs.
struct EffectSpec {
  EffectKind kind = EffectKind::Custom;
  int mediator_index = 0;  // k for nPSE/cPSE
  Regime comparison;
  Regime baseline;

  std::string label() const;
  static EffectSpec custom(Regime comparison, Regime baseline);
};

// Standard regime pair for the requested effect on a K-mediator layout.
// nPSE/cPSE require k >= 2 (use NIE/TIE for the first mediator) and k <= K.
EffectSpec standard_regimes(int K, EffectKind kind, int k = 0);

struct StratumFlag {
  int stratum = 0;           // decile of the coarse propensity fit
  double mean_propensity = 0.0;
  Index count = 0;
};

struct Diagnostics {
  Index n = 0;
  int K = 0;
  Index n_treated = 0;
  Index n_control = 0;
  std::vector<Index> block_widths;
  std::vector<StratumFlag> positivity_flags;  // strata with propensity < clip
  Index units_below_clip = 0;
};

// Structural validation plus a positivity diagnostic from a coarse logistic
// fit of a on x. Hard errors: an empty arm, or any non-finite value (the
// message names the offending column).
Diagnostics validate(const ObservedData& data, double clip = 0.01);

// Group-disparity layout: no covariates, the group indicator plays the role
// of the treatment. Throws Error(data) if x has columns.
ObservedData as_grouped(ObservedData data);

}  // namespace pathmed

#endif
