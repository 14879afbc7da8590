#include "pathmed/nuisance.hpp"

#include <algorithm>
#include <sstream>

#include "pathmed/rng.hpp"

namespace pathmed {

std::string LearnerSpec::id() const {
  std::ostringstream os;
  os << learner_kind_name(kind) << ";x=";
  for (int c : x_cols) os << c << ",";
  os << ";r=" << ridge;
  if (drop_mediators) os << ";nomed";
  return os.str();
}

LearnerPolicy LearnerPolicy::defaults(const ObservedData& data, LearnerKind kind) {
  LearnerPolicy p;
  LearnerSpec s;
  s.kind = kind;
  for (int j = 0; j < data.x.cols(); ++j) s.x_cols.push_back(j);
  const int K = data.num_mediators();
  p.pi.assign(static_cast<size_t>(K + 1), s);
  p.mu.assign(static_cast<size_t>(K + 1), s);
  p.f.assign(static_cast<size_t>(K), s);
  return p;
}

FittedModel NuisanceCache::get_or_fit(const std::string& key,
                                      const ModelMeta& meta,
                                      const std::function<FittedModel()>& fit) {
  auto it = models_.find(key);
  if (it != models_.end()) return it->second;
  FittedModel m = fit();
  ++fits_;
  meta_.push_back(meta);
  models_.emplace(key, m);
  return m;
}

const DensityModel& NuisanceCache::get_or_fit_density(
    const std::string& key, const ModelMeta& meta,
    const std::function<DensityModel()>& fit) {
  auto it = densities_.find(key);
  if (it != densities_.end()) return it->second;
  ++fits_;
  meta_.push_back(meta);
  return densities_.emplace(key, fit()).first->second;
}

double NuisanceSet::mu_value(int level, const ObservedData& data, Index i) const {
  UnitContext ctx(data, i);
  auto arm = mu_arm.find(level);
  if (arm != mu_arm.end()) ctx.a_override = arm->second;
  return mu.at(level).predict(ctx);
}

Vector NuisanceSet::mu_values(int level, const ObservedData& data,
                              const std::vector<Index>& rows) const {
  std::optional<double> arm;
  auto it = mu_arm.find(level);
  if (it != mu_arm.end()) arm = it->second;
  return mu.at(level).predict_rows(data, rows, arm);
}

double clip_probability(double p, double clip, Index* clipped) {
  if (clip <= 0.0) return p;
  double c = std::clamp(p, clip, 1.0 - clip);
  if (clipped && c != p) ++*clipped;
  return c;
}

FittedModel fit_pi_model(const ObservedData& data, const std::vector<Index>& rows,
                         int k, const LearnerPolicy& policy,
                         const NuisanceOptions& opts, NuisanceCache& cache) {
  const LearnerSpec& spec = policy.pi.at(static_cast<size_t>(k));
  DesignSpec d;
  d.x_cols = spec.x_cols;
  d.mediator_levels = spec.drop_mediators ? 0 : k;
  d.include_treatment = false;
  d.family = Family::logit;
  std::string key = "pi|" + std::to_string(k) + "|" + spec.id() + "|" + opts.cache_tag;
  return cache.get_or_fit(
      key, {"pi" + std::to_string(k), learner_kind_name(spec.kind), spec.x_cols},
      [&]() {
        try {
          Vector resp(static_cast<Index>(rows.size()));
          for (size_t r = 0; r < rows.size(); ++r)
            resp(static_cast<Index>(r)) = data.a(rows[r]);
          LearnerOptions lo;
          lo.ridge = spec.ridge;
          lo.boost = policy.boost;
          lo.stack_folds = policy.stack_folds;
          lo.seed = derive_seed(opts.seed, 0x9100, static_cast<std::uint64_t>(k));
          return fit_learner(spec.kind, data, rows, resp, d, lo);
        } catch (const Error& e) {
          throw Error(e.category(), "fitting treatment model pi_" +
                                        std::to_string(k) + " failed: " + e.what());
        }
      });
}

namespace {

DesignSpec mu_design(const LearnerSpec& spec, int level, bool include_a,
                     Family family) {
  DesignSpec d;
  d.x_cols = spec.x_cols;
  d.mediator_levels = spec.drop_mediators ? 0 : level;
  d.include_treatment = include_a;
  d.family = family;
  return d;
}

LearnerOptions learner_options(const LearnerPolicy& policy,
                               const LearnerSpec& spec, std::uint64_t seed) {
  LearnerOptions o;
  o.ridge = spec.ridge;
  o.boost = policy.boost;
  o.stack_folds = policy.stack_folds;
  o.seed = seed;
  return o;
}

std::vector<Index> arm_subset(const ObservedData& data,
                              const std::vector<Index>& rows, double arm) {
  std::vector<Index> out;
  for (Index r : rows)
    if (data.a(r) == arm) out.push_back(r);
  if (out.empty())
    throw Error(ErrorCategory::data, "no units in the required treatment arm");
  return out;
}

void check_compatibility(const LearnerPolicy& policy,
                         const std::vector<int>& levels,
                         std::vector<Warning>& warnings) {
  for (size_t t = 0; t + 1 < levels.size(); ++t) {
    const auto& lo = policy.mu[static_cast<size_t>(levels[t])].x_cols;
    const auto& hi = policy.mu[static_cast<size_t>(levels[t + 1])].x_cols;
    for (int c : lo) {
      if (std::find(hi.begin(), hi.end(), c) == hi.end()) {
        warnings.push_back(
            {"mu-compatibility",
             "predictors of imputation level " + std::to_string(levels[t]) +
                 " are not nested in level " + std::to_string(levels[t + 1]) +
                 "; iterated fits may be mutually incompatible",
             static_cast<double>(levels[t])});
        break;
      }
    }
  }
}

}  // namespace

NuisanceSet fit_nuisance_set(const ObservedData& data,
                             const std::vector<Index>& rows,
                             const Regime& regime, const LearnerPolicy& policy,
                             const NuisanceOptions& opts, NuisanceCache* cache) {
  const int K = data.num_mediators();
  if (regime.size() != K + 1)
    throw Error(ErrorCategory::config,
                "regime length " + std::to_string(regime.size()) +
                    " does not match K+1 = " + std::to_string(K + 1));
  if (static_cast<int>(policy.pi.size()) != K + 1 ||
      static_cast<int>(policy.mu.size()) != K + 1)
    throw Error(ErrorCategory::config, "learner policy does not cover K+1 levels");

  NuisanceCache local;
  NuisanceCache& c = cache ? *cache : local;

  NuisanceSet out;
  out.regime = regime;
  out.pi.resize(static_cast<size_t>(K + 1));
  out.weighted = opts.weighted;

  std::vector<int> active = regime.active_positions();

  if (opts.need_pi0)
    out.pi[0] = fit_pi_model(data, rows, 0, policy, opts, c);
  if (opts.need_pi_active)
    for (int k : active)
      out.pi[static_cast<size_t>(k)] = fit_pi_model(data, rows, k, policy, opts, c);

  if (opts.need_density) {
    if (static_cast<int>(policy.f.size()) != K)
      throw Error(ErrorCategory::config, "learner policy does not cover K density blocks");
    out.has_density = true;
    for (int k = 0; k < K; ++k) {
      const LearnerSpec& spec = policy.f[static_cast<size_t>(k)];
      DesignSpec d;
      d.x_cols = spec.x_cols;
      d.mediator_levels = k;
      d.include_treatment = true;
      std::string key = "f|" + std::to_string(k + 1) + "|" + spec.id() + "|" +
                        (policy.saturated_density ? "sat|" : "") + opts.cache_tag;
      out.f.push_back(c.get_or_fit_density(
          key, {"f" + std::to_string(k + 1), "density", spec.x_cols}, [&]() {
            try {
              DensityOptions od;
              od.saturated = policy.saturated_density;
              od.ridge = spec.ridge;
              return fit_density(data, rows, k, d, od);
            } catch (const Error& e) {
              throw Error(e.category(),
                          "fitting mediator density f_" + std::to_string(k + 1) +
                              " failed: " + e.what());
            }
          }));
    }
  }

  if (!opts.need_mu) return out;

  // imputation levels: every level for the full chain, otherwise only the
  // levels where the regime's arm changes (plus level 0)
  std::vector<int> levels;
  switch (opts.mu_mode) {
    case MuMode::collapsed:
      levels = active;
      levels.insert(levels.begin(), 0);
      break;
    case MuMode::full:
      for (int l = 0; l <= K; ++l) levels.push_back(l);
      break;
    case MuMode::top_only:
      levels.push_back(K);
      break;
  }
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  out.mu_levels = levels;
  check_compatibility(policy, levels, out.warnings);

  // needed for the weighted refit: weights at each fitted level
  WeightLadder ladder;
  if (opts.weighted) {
    for (int k : active)
      if (!out.pi[static_cast<size_t>(k)].valid())
        throw Error(ErrorCategory::config,
                    "weighted refit requires treatment models");
    ladder = odds_weights(data, rows, out, opts.clip);
  }

  const bool y_bin = data.y_binary();
  Vector response(static_cast<Index>(rows.size()));
  for (size_t r = 0; r < rows.size(); ++r)
    response(static_cast<Index>(r)) = data.y(rows[r]);
  std::string chain_sig = "Y";

  for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
    const int level = *it;
    const double arm = static_cast<double>(regime.a(level + 1));
    const LearnerSpec& spec = policy.mu[static_cast<size_t>(level)];
    // top fitted level regresses Y itself; binary outcomes get a logit link
    // there (and through a weighted chain, where range matters)
    const bool top = it == levels.rbegin();
    Family fam = (y_bin && (top || opts.weighted)) ? Family::logit : Family::identity;
    if (spec.kind == LearnerKind::saturated) fam = Family::identity;

    chain_sig = "L" + std::to_string(level) + "@" + std::to_string(regime.a(level + 1)) +
                "<" + chain_sig;
    std::string key = "mu|" + std::to_string(level) + "|" + chain_sig + "|" +
                      spec.id() + "|" + (opts.weighted ? "w|" : "") +
                      (policy.arm_restricted_outcome ? "ar|" : "") + opts.cache_tag;

    FittedModel model = c.get_or_fit(
        key, {"mu" + std::to_string(level), learner_kind_name(spec.kind), spec.x_cols},
        [&]() {
          try {
            LearnerOptions lo = learner_options(
                policy, spec, derive_seed(opts.seed, 0x3700, static_cast<std::uint64_t>(level)));
            if (opts.weighted) {
              // score-matched refit: ladder weights select the target arm, so
              // the design drops A; canonical-link score equations then zero
              // the weighted residual terms
              DesignSpec d = mu_design(spec, level, false, fam);
              Vector w = ladder.col(level);
              if (spec.kind == LearnerKind::saturated)
                return fit_saturated(data, rows, response, d, w);
              if (spec.kind != LearnerKind::glm && spec.kind != LearnerKind::glm2)
                throw Error(ErrorCategory::config,
                            "the weighted-refit estimator requires GLM-family "
                            "outcome learners; use the targeting estimator for "
                            "data-adaptive learners");
              DesignSpec d2 = d;
              d2.expand = spec.kind == LearnerKind::glm2;
              if (fam == Family::logit) {
                GlmOptions g;
                g.ridge = 0.0;  // keep the weighted score equations exact
                return fit_logistic(data, rows, response, d2, g, w);
              }
              return fit_linear(data, rows, response, d2, 0.0, w);
            }
            if (policy.arm_restricted_outcome) {
              DesignSpec d = mu_design(spec, level, false, fam);
              std::vector<Index> sub = arm_subset(data, rows, arm);
              Vector sub_resp(static_cast<Index>(sub.size()));
              Index pos = 0;
              for (size_t r = 0; r < rows.size(); ++r)
                if (data.a(rows[r]) == arm) sub_resp(pos++) = response(static_cast<Index>(r));
              return fit_learner(spec.kind, data, sub, sub_resp, d,
                                 learner_options(policy, spec,
                                                 derive_seed(opts.seed, 0x3700,
                                                             static_cast<std::uint64_t>(level))));
            }
            DesignSpec d = mu_design(spec, level, true, fam);
            return fit_learner(spec.kind, data, rows, response, d, lo);
          } catch (const Error& e) {
            throw Error(e.category(),
                        "fitting imputation model mu_" + std::to_string(level) +
                            " failed: " + e.what());
          }
        });
    out.mu[level] = model;
    if (!opts.weighted && !policy.arm_restricted_outcome) out.mu_arm[level] = arm;
    // next (lower) level regresses this level's fitted values
    response = out.mu_values(level, data, rows);
  }
  return out;
}

WeightLadder odds_weights(const ObservedData& data, const std::vector<Index>& rows,
                          const NuisanceSet& nuis, double clip) {
  const Regime& regime = nuis.regime;
  const int K = regime.size() - 1;
  WeightLadder out;
  out.cap = clip > 0 ? std::pow(1.0 / clip, K + 1) : 0.0;
  out.w.setZero(static_cast<Index>(rows.size()), K + 1);
  for (size_t r = 0; r < rows.size(); ++r) {
    UnitContext ctx(data, rows[r]);
    double p1 = nuis.pi[0].predict(ctx);
    double base = regime.a(1) == 1 ? p1 : 1.0 - p1;
    double cum = 1.0 / clip_probability(base, clip, &out.clipped);
    for (int k = 0; k <= K; ++k) {
      if (k >= 1) {
        if (regime.a(k) == regime.a(k + 1)) {
          // arms agree: the odds ratio is identically one
        } else {
          double pk = nuis.pi[static_cast<size_t>(k)].predict(ctx);
          double num = regime.a(k) == 1 ? pk : 1.0 - pk;
          double den = regime.a(k + 1) == 1 ? pk : 1.0 - pk;
          cum *= clip_probability(num, clip, &out.clipped) /
                 clip_probability(den, clip, &out.clipped);
        }
      }
      if (data.a(rows[r]) == static_cast<double>(regime.a(k + 1)))
        out.w(static_cast<Index>(r), k) = cum;
    }
  }
  return out;
}

WeightLadder density_weights(const ObservedData& data,
                             const std::vector<Index>& rows,
                             const NuisanceSet& nuis, double clip) {
  const Regime& regime = nuis.regime;
  const int K = regime.size() - 1;
  if (nuis.f.size() != static_cast<size_t>(K))
    throw Error(ErrorCategory::config, "density weights need all K density models");
  WeightLadder out;
  out.cap = clip > 0 ? std::pow(1.0 / clip, K + 1) : 0.0;
  out.w.setZero(static_cast<Index>(rows.size()), K + 1);
  for (size_t r = 0; r < rows.size(); ++r) {
    UnitContext ctx(data, rows[r]);
    double p1 = nuis.pi[0].predict(ctx);
    for (int k = 0; k <= K; ++k) {
      const int ref = regime.a(k + 1);  // the arm whose units are reweighted
      if (data.a(rows[r]) != static_cast<double>(ref)) continue;
      double base = ref == 1 ? p1 : 1.0 - p1;
      double w = 1.0 / clip_probability(base, clip, &out.clipped);
      for (int j = 1; j <= k; ++j) {
        const DensityModel& fj = nuis.f[static_cast<size_t>(j - 1)];
        Vector value = fj.observed_value(ctx);
        UnitContext num_ctx(data, rows[r], static_cast<double>(regime.a(j)));
        UnitContext den_ctx(data, rows[r], static_cast<double>(ref));
        double ratio = std::exp(fj.log_density(num_ctx, value) -
                                fj.log_density(den_ctx, value));
        if (clip > 0.0 && ratio > 1.0 / clip) {
          ratio = 1.0 / clip;
          ++out.clipped;
        }
        w *= ratio;
      }
      out.w(static_cast<Index>(r), k) = w;
    }
  }
  return out;
}

}  // namespace pathmed
