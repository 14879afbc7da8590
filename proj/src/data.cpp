#include "pathmed/data.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pathmed/design.hpp"
#include "pathmed/glm.hpp"

namespace pathmed {

bool ObservedData::block_discrete(int k) const {
  if (k >= static_cast<int>(discrete.size())) return false;
  const auto& tags = discrete[k];
  if (tags.size() != static_cast<size_t>(mediators[k].cols())) return false;
  return std::all_of(tags.begin(), tags.end(), [](bool b) { return b; });
}

bool ObservedData::y_binary() const {
  for (Index i = 0; i < y.size(); ++i)
    if (y(i) != 0.0 && y(i) != 1.0) return false;
  return true;
}

namespace {

void check_finite(const Matrix& m, const std::vector<std::string>& names,
                  const std::string& block) {
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      if (!std::isfinite(m(i, j))) {
        std::string col = j < static_cast<Index>(names.size())
                              ? names[j]
                              : block + "[" + std::to_string(j) + "]";
        throw Error(ErrorCategory::data,
                    "non-finite value in column '" + col + "' at row " +
                        std::to_string(i + 1) +
                        "; resolve missing data upstream");
      }
    }
  }
}

}  // namespace

void ObservedData::check() const {
  const Index nn = y.size();
  if (nn == 0) throw Error(ErrorCategory::data, "empty dataset");
  if (a.size() != nn)
    throw Error(ErrorCategory::data, "treatment length does not match outcome");
  if (x.cols() > 0 && x.rows() != nn)
    throw Error(ErrorCategory::data, "covariate rows do not match outcome");
  for (int k = 0; k < num_mediators(); ++k) {
    if (mediators[k].rows() != nn)
      throw Error(ErrorCategory::data, "mediator block " + std::to_string(k + 1) +
                                           " rows do not match outcome");
    if (mediators[k].cols() == 0)
      throw Error(ErrorCategory::data,
                  "mediator block " + std::to_string(k + 1) + " has no columns");
  }
  Index treated = 0;
  for (Index i = 0; i < nn; ++i) {
    if (a(i) != 0.0 && a(i) != 1.0)
      throw Error(ErrorCategory::data,
                  "treatment column '" + a_name + "' must be 0/1 (row " +
                      std::to_string(i + 1) + ")");
    treated += a(i) == 1.0;
  }
  if (treated == 0) throw Error(ErrorCategory::data, "empty treated arm");
  if (treated == nn) throw Error(ErrorCategory::data, "empty control arm");

  check_finite(x, x_names, "x");
  check_finite(y, {y_name}, "y");
  for (int k = 0; k < num_mediators(); ++k) {
    check_finite(mediators[k],
                 k < static_cast<int>(mediator_names.size())
                     ? mediator_names[k]
                     : std::vector<std::string>{},
                 "m" + std::to_string(k + 1));
  }
}

Regime::Regime(std::vector<int> a) : assignments(std::move(a)) {
  for (int v : assignments)
    if (v != 0 && v != 1)
      throw Error(ErrorCategory::config, "regime entries must be 0 or 1");
  if (assignments.empty())
    throw Error(ErrorCategory::config, "regime must have length K+1 >= 1");
}

std::string Regime::str() const {
  std::string s = "(";
  for (size_t i = 0; i < assignments.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(assignments[i]);
  }
  return s + ")";
}

Regime Regime::constant(int K, int arm) {
  return Regime(std::vector<int>(K + 1, arm));
}

std::vector<int> Regime::active_positions() const {
  std::vector<int> out;
  for (int k = 1; k + 1 <= size(); ++k)
    if (a(k) != a(k + 1)) out.push_back(k);
  return out;
}

std::string effect_kind_name(EffectKind kind) {
  switch (kind) {
    case EffectKind::NDE: return "NDE";
    case EffectKind::NIE_M1: return "NIE_M1";
    case EffectKind::TIE_M1: return "TIE_M1";
    case EffectKind::nPSE: return "nPSE";
    case EffectKind::cPSE: return "cPSE";
    case EffectKind::ATE: return "ATE";
    case EffectKind::Custom: return "custom";
  }
  return "?";
}

std::string EffectSpec::label() const {
  if (kind == EffectKind::nPSE || kind == EffectKind::cPSE)
    return effect_kind_name(kind) + "_M" + std::to_string(mediator_index);
  if (kind == EffectKind::Custom)
    return "theta" + comparison.str() + " - theta" + baseline.str();
  return effect_kind_name(kind);
}

EffectSpec EffectSpec::custom(Regime comparison, Regime baseline) {
  if (comparison.size() != baseline.size())
    throw Error(ErrorCategory::config, "regime lengths differ in contrast");
  EffectSpec s;
  s.kind = EffectKind::Custom;
  s.comparison = std::move(comparison);
  s.baseline = std::move(baseline);
  return s;
}

EffectSpec standard_regimes(int K, EffectKind kind, int k) {
  if (K < 0) throw Error(ErrorCategory::config, "K must be >= 0");
  EffectSpec s;
  s.kind = kind;
  s.mediator_index = k;
  auto vec = [K](int fill) { return std::vector<int>(K + 1, fill); };
  switch (kind) {
    case EffectKind::ATE: {
      s.comparison = Regime(vec(1));
      s.baseline = Regime(vec(0));
      return s;
    }
    case EffectKind::NDE: {
      auto c = vec(0);
      c[K] = 1;
      s.comparison = Regime(c);
      s.baseline = Regime(vec(0));
      return s;
    }
    case EffectKind::NIE_M1: {
      if (K < 1) throw Error(ErrorCategory::config, "NIE_M1 requires K >= 1");
      auto c = vec(0);
      c[0] = 1;
      s.comparison = Regime(c);
      s.baseline = Regime(vec(0));
      s.mediator_index = 1;
      return s;
    }
    case EffectKind::TIE_M1: {
      if (K < 1) throw Error(ErrorCategory::config, "TIE_M1 requires K >= 1");
      auto b = vec(1);
      b[0] = 0;
      s.comparison = Regime(vec(1));
      s.baseline = Regime(b);
      s.mediator_index = 1;
      return s;
    }
    case EffectKind::nPSE: {
      if (k < 2)
        throw Error(ErrorCategory::config,
                    "nPSE is defined for k >= 2; use NIE_M1/TIE_M1 for the "
                    "first mediator");
      if (k > K) throw Error(ErrorCategory::config, "nPSE index k exceeds K");
      auto c = vec(0);
      c[k - 1] = 1;
      s.comparison = Regime(c);
      s.baseline = Regime(vec(0));
      return s;
    }
    case EffectKind::cPSE: {
      if (k < 2)
        throw Error(ErrorCategory::config,
                    "cPSE is defined for k >= 2; use NIE_M1/TIE_M1 for the "
                    "first mediator");
      if (k > K) throw Error(ErrorCategory::config, "cPSE index k exceeds K");
      auto c = vec(1);
      auto b = vec(1);
      for (int j = 0; j < k - 1; ++j) c[j] = 0;
      for (int j = 0; j < k; ++j) b[j] = 0;
      s.comparison = Regime(c);
      s.baseline = Regime(b);
      return s;
    }
    case EffectKind::Custom:
      throw Error(ErrorCategory::config,
                  "custom contrasts take explicit regimes");
  }
  throw Error(ErrorCategory::config, "unknown effect kind");
}

Diagnostics validate(const ObservedData& data, double clip) {
  data.check();
  Diagnostics d;
  d.n = data.n();
  d.K = data.num_mediators();
  for (Index i = 0; i < data.n(); ++i)
    (data.a(i) == 1.0 ? d.n_treated : d.n_control)++;
  for (const auto& m : data.mediators) d.block_widths.push_back(m.cols());

  // coarse propensity fit: main-effects logistic of a on x
  DesignSpec spec;
  for (int j = 0; j < data.x.cols(); ++j) spec.x_cols.push_back(j);
  spec.family = Family::logit;
  auto rows = all_rows(data);
  FittedModel pi = fit_logistic(data, rows, data.a, spec);
  Vector p = pi.predict_rows(data, rows);

  std::vector<Index> order(rows.begin(), rows.end());
  std::sort(order.begin(), order.end(),
            [&](Index l, Index r) { return p(l) < p(r); });
  const int strata = 10;
  for (int s = 0; s < strata; ++s) {
    Index lo = s * data.n() / strata, hi = (s + 1) * data.n() / strata;
    if (lo >= hi) continue;
    double mean = 0.0;
    Index flagged = 0;
    for (Index t = lo; t < hi; ++t) {
      double pi_t = p(order[t]);
      mean += pi_t;
      if (std::min(pi_t, 1.0 - pi_t) < clip) ++flagged;
    }
    mean /= static_cast<double>(hi - lo);
    d.units_below_clip += flagged;
    if (std::min(mean, 1.0 - mean) < clip)
      d.positivity_flags.push_back({s, mean, hi - lo});
  }
  return d;
}

ObservedData as_grouped(ObservedData data) {
  if (data.x.cols() != 0)
    throw Error(ErrorCategory::data,
                "group disparity decomposition takes no covariates");
  data.check();
  return data;
}

}  // namespace pathmed
