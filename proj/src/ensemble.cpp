#include "pathmed/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "pathmed/rng.hpp"

namespace pathmed {

namespace {

double loss_of(Family family, const Vector& y, const Vector& pred) {
  double total = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    if (family == Family::identity) {
      double e = y(i) - pred(i);
      total += e * e;
    } else {
      double p = std::clamp(pred(i), 1e-12, 1.0 - 1e-12);
      total += -(y(i) * std::log(p) + (1.0 - y(i)) * std::log1p(-p));
    }
  }
  return total / static_cast<double>(y.size());
}

}  // namespace

FittedModel fit_boost(const ObservedData& data, const std::vector<Index>& rows,
                      const Vector& response, const DesignSpec& spec,
                      const BoostOptions& opts) {
  const bool logistic = spec.family == Family::logit;
  Matrix X = build_design(data, spec, rows);
  const Index n = X.rows();
  const Index p = X.cols() - 1;  // features past the intercept

  // seeded shuffle; the tail is the early-stopping holdout
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index(0));
  Rng rng(derive_seed(opts.seed, /*tag=*/0xb005, 0));
  for (Index i = n - 1; i > 0; --i) {
    Index j = static_cast<Index>(rng.uniform_int(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[i], order[j]);
  }
  Index n_hold = static_cast<Index>(std::floor(opts.holdout * static_cast<double>(n)));
  if (n_hold < 2) n_hold = 0;  // too small to guide stopping
  Index n_train = n - n_hold;
  std::vector<Index> tr(order.begin(), order.begin() + n_train);
  std::vector<Index> ho(order.begin() + n_train, order.end());

  // per-feature sort order of the training rows, computed once
  std::vector<std::vector<Index>> sorted(static_cast<size_t>(p));
  for (Index f = 0; f < p; ++f) {
    sorted[static_cast<size_t>(f)] = tr;
    std::sort(sorted[static_cast<size_t>(f)].begin(),
              sorted[static_cast<size_t>(f)].end(),
              [&](Index l, Index r) { return X(l, f + 1) < X(r, f + 1); });
  }

  double y_mean = 0.0;
  for (Index r : tr) y_mean += response(r);
  y_mean /= static_cast<double>(n_train);
  double f0 = logistic ? logit(std::clamp(y_mean, 1e-6, 1.0 - 1e-6)) : y_mean;

  Vector score = Vector::Constant(n, f0);
  std::vector<Stump> stumps;
  stumps.reserve(static_cast<size_t>(opts.rounds));

  auto holdout_loss = [&]() {
    if (n_hold == 0) return 0.0;
    Vector yh(n_hold), ph(n_hold);
    for (Index i = 0; i < n_hold; ++i) {
      yh(i) = response(ho[static_cast<size_t>(i)]);
      double s = score(ho[static_cast<size_t>(i)]);
      ph(i) = logistic ? sigmoid(s) : s;
    }
    return loss_of(spec.family, yh, ph);
  };

  double best_loss = holdout_loss();
  int best_round = 0;
  Vector grad(n), hess(n);
  for (int round = 0; round < opts.rounds; ++round) {
    for (Index r : tr) {
      if (logistic) {
        double pr = sigmoid(score(r));
        grad(r) = response(r) - pr;
        hess(r) = std::max(pr * (1.0 - pr), 1e-6);
      } else {
        grad(r) = response(r) - score(r);
        hess(r) = 1.0;
      }
    }
    double g_tot = 0.0, h_tot = 0.0;
    for (Index r : tr) {
      g_tot += grad(r);
      h_tot += hess(r);
    }

    Stump best;
    double best_gain = -1.0;
    for (Index f = 0; f < p; ++f) {
      const auto& ord = sorted[static_cast<size_t>(f)];
      double gl = 0.0, hl = 0.0;
      for (Index t = 0; t + 1 < n_train; ++t) {
        Index r = ord[static_cast<size_t>(t)];
        gl += grad(r);
        hl += hess(r);
        double v = X(r, f + 1);
        double v_next = X(ord[static_cast<size_t>(t + 1)], f + 1);
        if (v_next <= v) continue;
        double gr = g_tot - gl, hr = h_tot - hl;
        double gain = gl * gl / hl + gr * gr / hr - g_tot * g_tot / h_tot;
        if (gain > best_gain) {
          best_gain = gain;
          best.feature = static_cast<int>(f);
          best.threshold = 0.5 * (v + v_next);
          best.left = opts.learning_rate * gl / hl;
          best.right = opts.learning_rate * gr / hr;
        }
      }
    }
    if (best_gain <= 0.0) break;
    stumps.push_back(best);
    for (Index i = 0; i < n; ++i)
      score(i) += X(i, best.feature + 1) <= best.threshold ? best.left : best.right;

    if (n_hold > 0) {
      double loss = holdout_loss();
      if (loss < best_loss - 1e-12) {
        best_loss = loss;
        best_round = round + 1;
      } else if (round + 1 - best_round >= opts.patience) {
        break;
      }
    } else {
      best_round = round + 1;
    }
  }
  stumps.resize(static_cast<size_t>(best_round));

  FittedModel m;
  m.spec = spec;
  m.learner = "boost";
  m.impl = std::make_shared<BoostModel>(spec, f0, std::move(stumps), logistic);
  return m;
}

LearnerKind learner_kind_from_string(const std::string& s) {
  if (s == "glm") return LearnerKind::glm;
  if (s == "glm2") return LearnerKind::glm2;
  if (s == "boost") return LearnerKind::boost;
  if (s == "stack") return LearnerKind::stack;
  if (s == "saturated") return LearnerKind::saturated;
  throw Error(ErrorCategory::config, "unknown learner '" + s + "'");
}

std::string learner_kind_name(LearnerKind k) {
  switch (k) {
    case LearnerKind::glm: return "glm";
    case LearnerKind::glm2: return "glm2";
    case LearnerKind::boost: return "boost";
    case LearnerKind::stack: return "stack";
    case LearnerKind::saturated: return "saturated";
  }
  return "?";
}

FittedModel fit_learner(LearnerKind kind, const ObservedData& data,
                        const std::vector<Index>& rows, const Vector& response,
                        const DesignSpec& spec, const LearnerOptions& opts) {
  DesignSpec s = spec;
  switch (kind) {
    case LearnerKind::glm:
      s.expand = false;
      break;
    case LearnerKind::glm2:
    case LearnerKind::boost:
      s.expand = true;
      break;
    default:
      break;
  }
  switch (kind) {
    case LearnerKind::glm:
    case LearnerKind::glm2: {
      if (s.family == Family::logit) {
        GlmOptions g;
        g.ridge = opts.ridge;
        FittedModel m = fit_logistic(data, rows, response, s, g);
        m.learner = learner_kind_name(kind);
        return m;
      }
      FittedModel m = fit_linear(data, rows, response, s, opts.ridge);
      m.learner = learner_kind_name(kind);
      return m;
    }
    case LearnerKind::boost: {
      BoostOptions b = opts.boost;
      b.seed = derive_seed(opts.seed, 0xb0057, 1);
      return fit_boost(data, rows, response, s, b);
    }
    case LearnerKind::saturated:
      return fit_saturated(data, rows, response, s);
    case LearnerKind::stack: {
      FoldPlan folds = make_folds(static_cast<Index>(rows.size()),
                                  std::min<Index>(opts.stack_folds,
                                                  static_cast<Index>(rows.size())),
                                  derive_seed(opts.seed, 0x57ac, 2));
      return stack_learners({LearnerKind::glm, LearnerKind::glm2, LearnerKind::boost},
                            data, rows, response, spec, folds, opts);
    }
  }
  throw Error(ErrorCategory::config, "unknown learner kind");
}

namespace {

void simplex_grid(int C, int steps, std::vector<std::vector<int>>& out) {
  std::vector<int> cur(static_cast<size_t>(C), 0);
  std::function<void(int, int)> rec = [&](int idx, int remaining) {
    if (idx == C - 1) {
      cur[static_cast<size_t>(idx)] = remaining;
      out.push_back(cur);
      return;
    }
    for (int v = 0; v <= remaining; ++v) {
      cur[static_cast<size_t>(idx)] = v;
      rec(idx + 1, remaining - v);
    }
  };
  rec(0, steps);
}

}  // namespace

FittedModel stack_learners(const std::vector<LearnerKind>& candidates,
                           const ObservedData& data,
                           const std::vector<Index>& rows, const Vector& response,
                           const DesignSpec& spec, const FoldPlan& folds,
                           const LearnerOptions& opts, StackReport* report) {
  if (candidates.empty())
    throw Error(ErrorCategory::config, "stack requires at least one candidate");
  if (folds.assignment.size() != rows.size())
    throw Error(ErrorCategory::config,
                "fold plan does not cover the training rows");
  const int C = static_cast<int>(candidates.size());
  const Index n = static_cast<Index>(rows.size());

  // out-of-fold predictions per candidate
  Matrix cv_pred(n, C);
  for (int j = 0; j < folds.J; ++j) {
    std::vector<Index> tr_pos = folds.complement(j);
    std::vector<Index> te_pos = folds.fold(j);
    std::vector<Index> tr_rows(tr_pos.size());
    Vector tr_y(static_cast<Index>(tr_pos.size()));
    for (size_t t = 0; t < tr_pos.size(); ++t) {
      tr_rows[t] = rows[static_cast<size_t>(tr_pos[t])];
      tr_y(static_cast<Index>(t)) = response(tr_pos[t]);
    }
    std::vector<Index> te_rows(te_pos.size());
    for (size_t t = 0; t < te_pos.size(); ++t)
      te_rows[t] = rows[static_cast<size_t>(te_pos[t])];
    for (int c = 0; c < C; ++c) {
      LearnerOptions o = opts;
      o.seed = derive_seed(opts.seed, 0xcf01d, static_cast<std::uint64_t>(j * 97 + c));
      FittedModel m = fit_learner(candidates[static_cast<size_t>(c)], data,
                                  tr_rows, tr_y, spec, o);
      Vector pred = m.predict_rows(data, te_rows);
      for (size_t t = 0; t < te_pos.size(); ++t)
        cv_pred(te_pos[t], c) = pred(static_cast<Index>(t));
    }
  }

  Vector cand_loss(C);
  for (int c = 0; c < C; ++c) cand_loss(c) = loss_of(spec.family, response, cv_pred.col(c));

  const int steps = 20;  // resolution 0.05
  std::vector<std::vector<int>> grid;
  simplex_grid(C, steps, grid);
  double best_loss = std::numeric_limits<double>::infinity();
  Vector best_w = Vector::Zero(C);
  Vector combo(n);
  for (const auto& g : grid) {
    combo.setZero();
    for (int c = 0; c < C; ++c)
      if (g[static_cast<size_t>(c)] > 0)
        combo += (g[static_cast<size_t>(c)] / static_cast<double>(steps)) * cv_pred.col(c);
    double loss = loss_of(spec.family, response, combo);
    if (loss < best_loss) {
      best_loss = loss;
      for (int c = 0; c < C; ++c)
        best_w(c) = g[static_cast<size_t>(c)] / static_cast<double>(steps);
    }
  }

  std::vector<FittedModel> members;
  members.reserve(static_cast<size_t>(C));
  for (int c = 0; c < C; ++c) {
    LearnerOptions o = opts;
    o.seed = derive_seed(opts.seed, 0xf111, static_cast<std::uint64_t>(c));
    members.push_back(fit_learner(candidates[static_cast<size_t>(c)], data, rows,
                                  response, spec, o));
  }
  if (report) {
    report->weights = best_w;
    report->candidate_cv_loss = cand_loss;
    report->ensemble_cv_loss = best_loss;
  }
  FittedModel m;
  m.spec = spec;
  m.learner = "stack";
  m.impl = std::make_shared<EnsembleModel>(std::move(members), std::move(best_w));
  return m;
}

}  // namespace pathmed
