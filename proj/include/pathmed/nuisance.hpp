#ifndef PATHMED_NUISANCE_HPP
#define PATHMED_NUISANCE_HPP

#include <functional>
#include <map>
#include <optional>
#include <unordered_map>

#include "pathmed/density.hpp"
#include "pathmed/ensemble.hpp"

namespace pathmed {

// Learner choice and predictor set for one nuisance function. x_cols selects
// covariate columns (the route to deliberate misspecification: point it at
// transformed columns). drop_mediators fits the model without mediator
// predictors, another controlled misspecification.
struct LearnerSpec {
  LearnerKind kind = LearnerKind::glm;
  std::vector<int> x_cols;
  double ridge = 1e-6;
  bool drop_mediators = false;

  std::string id() const;
};

struct LearnerPolicy {
  std::vector<LearnerSpec> pi;  // treatment models, index 0..K
  std::vector<LearnerSpec> mu;  // outcome/imputation levels 0..K
  std::vector<LearnerSpec> f;   // mediator density conditioning, block 1..K
  bool saturated_density = false;
  bool arm_restricted_outcome = false;  // fit mu on the target arm, without A
  int stack_folds = 5;
  BoostOptions boost;

  static LearnerPolicy defaults(const ObservedData& data,
                                LearnerKind kind = LearnerKind::glm);
};

struct ModelMeta {
  std::string role;  // "pi0", "mu2", "f1", ...
  std::string learner;
  std::vector<int> x_cols;
};

// Deduplicates fits shared between regimes (shared treatment models, shared
// imputation chains up to the flipped coordinate). Also counts actual fits.
class NuisanceCache {
 public:
  FittedModel get_or_fit(const std::string& key, const ModelMeta& meta,
                         const std::function<FittedModel()>& fit);
  const DensityModel& get_or_fit_density(
      const std::string& key, const ModelMeta& meta,
      const std::function<DensityModel()>& fit);

  int models_fit() const { return fits_; }
  const std::vector<ModelMeta>& fitted() const { return meta_; }

 private:
  std::unordered_map<std::string, FittedModel> models_;
  std::unordered_map<std::string, DensityModel> densities_;
  std::vector<ModelMeta> meta_;
  int fits_ = 0;
};

// Which imputation levels to fit: only the levels the regime needs (arms
// change there), the full ladder 0..K, or just the top-level outcome model.
enum class MuMode { collapsed, full, top_only };

struct NuisanceOptions {
  MuMode mu_mode = MuMode::collapsed;
  bool need_pi0 = true;
  bool need_pi_active = true;  // pi_k at positions where the arms change
  bool need_mu = true;
  bool need_density = false;   // f_1..f_K
  bool weighted = false;       // refit the mu chain with ladder weights
  double clip = 0.01;          // used by the weighted refit
  std::uint64_t seed = 1;
  std::string cache_tag;       // extra key segment (e.g. fold id)
};

// Treatment model for a on (x, blocks 1..k), deduplicated through the cache.
FittedModel fit_pi_model(const ObservedData& data, const std::vector<Index>& rows,
                         int k, const LearnerPolicy& policy,
                         const NuisanceOptions& opts, NuisanceCache& cache);

struct NuisanceSet {
  Regime regime;
  std::vector<FittedModel> pi;        // size K+1; entries valid when needed
  std::map<int, FittedModel> mu;      // fitted levels
  std::map<int, double> mu_arm;       // evaluation arm per fitted level
  std::vector<DensityModel> f;        // size K when densities were requested
  bool has_density = false;
  bool weighted = false;
  std::vector<int> mu_levels;         // ascending
  std::vector<Warning> warnings;

  // value of the level-ell imputation function for one unit
  double mu_value(int level, const ObservedData& data, Index i) const;
  Vector mu_values(int level, const ObservedData& data,
                   const std::vector<Index>& rows) const;
};

NuisanceSet fit_nuisance_set(const ObservedData& data,
                             const std::vector<Index>& rows,
                             const Regime& regime, const LearnerPolicy& policy,
                             const NuisanceOptions& opts,
                             NuisanceCache* cache = nullptr);

// Inverse-probability weight ladders. Column k holds w_k for 0 <= k <= K:
// the indicator of the arm that multiplies the (k+1)-level residual, times
// the clipped probability ratios up to level k.
struct WeightLadder {
  Matrix w;            // rows.size() x (K+1)
  Index clipped = 0;   // probability/ratio evaluations that hit the clip
  double cap = 0.0;    // (1/clip)^(K+1) when clip > 0

  Vector col(int k) const { return w.col(k); }
};

// Treatment-odds realization: w_k = I(A=a_{k+1}) / pi_0(a_1|X) *
// prod_{j<=k} pi_j(a_j|X,Mbar_j)/pi_j(a_{j+1}|X,Mbar_j).
WeightLadder odds_weights(const ObservedData& data, const std::vector<Index>& rows,
                          const NuisanceSet& nuis, double clip);

// Mediator-density realization: w_k = I(A=a_{k+1}) / pi_0(a_{k+1}|X) *
// prod_{j<=k} f_j(M_j|X,a_j,...)/f_j(M_j|X,a_{k+1},...).
WeightLadder density_weights(const ObservedData& data,
                             const std::vector<Index>& rows,
                             const NuisanceSet& nuis, double clip);

double clip_probability(double p, double clip, Index* clipped);

}  // namespace pathmed

#endif
