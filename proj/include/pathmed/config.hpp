#ifndef PATHMED_CONFIG_HPP
#define PATHMED_CONFIG_HPP

#include <optional>

#include "pathmed/effects.hpp"
#include "pathmed/simulation.hpp"

namespace pathmed {

struct EffectRequest {
  EffectKind kind = EffectKind::ATE;
  int k = 0;
  std::optional<Regime> comparison;  // for custom contrasts
  std::optional<Regime> baseline;
};

// Run configuration: a JSON file declares the inputs, variable roles,
// estimator, learners, and inference choices; command-line flags override
// individual fields.
struct RunConfig {
  std::vector<std::string> inputs;  // one per imputation
  std::string treatment;
  std::string outcome;
  std::vector<std::string> covariates;
  std::vector<std::vector<std::string>> mediators;  // ordered blocks
  std::vector<std::string> discrete;                // discrete-coded columns

  Method method = Method::eif2;
  std::vector<HybridChoice> hybrid;
  std::string learner = "glm";  // default learner for every nuisance
  std::map<std::string, std::string> learner_overrides;  // role -> learner
  std::map<std::string, std::vector<std::string>> predictor_overrides;
  bool arm_restricted_outcome = false;

  std::vector<EffectRequest> effects;
  int folds = 0;
  std::uint64_t seed = 1;
  double clip = 0.01;
  int mc_draws = 200;
  std::string inference = "eif";  // eif | bootstrap | none
  int bootstrap_reps = 1000;
  double level = 0.95;
  int threads = 1;
  std::string output = "report.json";
};

RunConfig load_config(const std::string& path);

// Materialize one input file against the declared roles.
ObservedData load_dataset(const RunConfig& config, const std::string& path);

LearnerPolicy build_policy(const RunConfig& config, const ObservedData& data);

}  // namespace pathmed

#endif
