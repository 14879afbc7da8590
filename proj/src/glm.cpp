#include "pathmed/glm.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace pathmed {

Vector FittedModel::predict_rows(const ObservedData& data,
                                 const std::vector<Index>& rows,
                                 std::optional<double> a_override) const {
  Vector out(static_cast<Index>(rows.size()));
  for (size_t r = 0; r < rows.size(); ++r) {
    UnitContext ctx(data, rows[r]);
    ctx.a_override = a_override;
    out(static_cast<Index>(r)) = impl->predict(ctx);
  }
  return out;
}

Vector FittedModel::predict_all(const ObservedData& data,
                                std::optional<double> a_override) const {
  return predict_rows(data, all_rows(data), a_override);
}

double LinearModel::predict(const UnitContext& ctx) const {
  Eigen::RowVectorXd row;
  fill_design_row(ctx, spec_, row);
  double eta = row * beta_;
  return logistic_ ? sigmoid(eta) : eta;
}

std::string SaturatedModel::cell_key(const UnitContext& ctx,
                                     const DesignSpec& spec) {
  const ObservedData& d = *ctx.data;
  std::string key;
  key.reserve(32);
  auto push = [&key](double v) {
    key += std::to_string(static_cast<long long>(std::llround(v)));
    key += '|';
  };
  for (int j : spec.x_cols) push(d.x(ctx.i, j));
  for (int k = 0; k < spec.mediator_levels; ++k)
    for (Index c = 0; c < d.mediators[k].cols(); ++c)
      push(ctx.mediator(k, c));
  if (spec.include_treatment) push(ctx.a());
  return key;
}

double SaturatedModel::predict(const UnitContext& ctx) const {
  auto it = cells_.find(cell_key(ctx, spec_));
  return it == cells_.end() ? fallback_ : it->second;
}

double BoostModel::predict(const UnitContext& ctx) const {
  Eigen::RowVectorXd row;
  fill_design_row(ctx, spec_, row);
  double score = f0_;
  for (const Stump& s : stumps_)
    score += row(s.feature + 1) <= s.threshold ? s.left : s.right;
  return logistic_ ? sigmoid(score) : score;
}

double EnsembleModel::predict(const UnitContext& ctx) const {
  double out = 0.0;
  for (Index c = 0; c < weights_.size(); ++c)
    if (weights_(c) > 0.0) out += weights_(c) * members_[c].predict(ctx);
  return out;
}

double CosineModel::predict(const UnitContext& ctx) const {
  Eigen::RowVectorXd row;
  fill_design_row(ctx, spec_, row);
  double arg = offset_;
  for (Index j = 0; j < coefs_.size(); ++j) arg += coefs_(j) * row(j + 1);
  return amplitude_ * std::cos(arg);
}

FittedModel make_linear(DesignSpec spec, Vector beta, std::string learner) {
  FittedModel m;
  m.spec = spec;
  m.learner = std::move(learner);
  m.impl = std::make_shared<LinearModel>(std::move(spec), std::move(beta), false);
  return m;
}

FittedModel make_logistic(DesignSpec spec, Vector beta, std::string learner) {
  FittedModel m;
  m.spec = spec;
  m.learner = std::move(learner);
  m.impl = std::make_shared<LinearModel>(std::move(spec), std::move(beta), true);
  return m;
}

FittedModel make_constant(double value) {
  FittedModel m;
  m.learner = "constant";
  m.impl = std::make_shared<ConstantModel>(value);
  return m;
}

const Vector* model_coefficients(const FittedModel& m) {
  if (auto* lin = dynamic_cast<const LinearModel*>(m.impl.get()))
    return &lin->coefficients();
  return nullptr;
}

namespace {

struct DesignProblem {
  Matrix X;
  Vector y;
  Vector w;  // empty means unweighted
};

DesignProblem assemble(const ObservedData& data, const std::vector<Index>& rows,
                       const Vector& response, const DesignSpec& spec,
                       const Vector& weights) {
  if (response.size() != static_cast<Index>(rows.size()))
    throw Error(ErrorCategory::numeric, "response length does not match rows");
  DesignProblem p;
  if (weights.size() == 0) {
    p.X = build_design(data, spec, rows);
    p.y = response;
    return p;
  }
  if (weights.size() != static_cast<Index>(rows.size()))
    throw Error(ErrorCategory::numeric, "weight length does not match rows");
  // drop zero-weight rows; they carry no information and can degrade scaling
  std::vector<Index> keep;
  for (Index r = 0; r < weights.size(); ++r)
    if (weights(r) > 0.0) keep.push_back(r);
  if (keep.empty())
    throw Error(ErrorCategory::numeric, "all observation weights are zero");
  std::vector<Index> sub(keep.size());
  p.y.resize(static_cast<Index>(keep.size()));
  p.w.resize(static_cast<Index>(keep.size()));
  for (size_t r = 0; r < keep.size(); ++r) {
    sub[r] = rows[static_cast<size_t>(keep[r])];
    p.y(static_cast<Index>(r)) = response(keep[r]);
    p.w(static_cast<Index>(r)) = weights(keep[r]);
  }
  p.X = build_design(data, spec, sub);
  return p;
}

Vector solve_penalized(const Matrix& X, const Vector& y, const Vector& w,
                       double ridge) {
  const Index p = X.cols();
  Matrix XtX(p, p);
  Vector Xty(p);
  if (w.size() == 0) {
    XtX.noalias() = X.transpose() * X;
    Xty.noalias() = X.transpose() * y;
  } else {
    Matrix Xw = w.asDiagonal() * X;
    XtX.noalias() = X.transpose() * Xw;
    Xty.noalias() = X.transpose() * (w.cwiseProduct(y));
  }
  if (ridge > 0.0) XtX.diagonal().array() += ridge;
  if (ridge == 0.0) {
    Eigen::ColPivHouseholderQR<Matrix> qr(w.size() == 0
                                              ? X
                                              : Matrix(w.cwiseSqrt().asDiagonal() * X));
    if (qr.rank() < p)
      throw Error(ErrorCategory::numeric,
                  "design is rank deficient; consider a small ridge penalty");
    return qr.solve(w.size() == 0 ? y : Vector(w.cwiseSqrt().cwiseProduct(y)));
  }
  return XtX.ldlt().solve(Xty);
}

}  // namespace

FittedModel fit_linear(const ObservedData& data, const std::vector<Index>& rows,
                       const Vector& response, const DesignSpec& spec,
                       double ridge, const Vector& weights) {
  if (ridge < 0.0)
    throw Error(ErrorCategory::config, "ridge penalty must be nonnegative");
  DesignProblem p = assemble(data, rows, response, spec, weights);
  Vector beta = solve_penalized(p.X, p.y, p.w, ridge);
  return make_linear(spec, std::move(beta), "glm");
}

namespace {

double penalized_loglik(const Matrix& X, const Vector& y, const Vector& w,
                        const Vector& beta, double ridge) {
  Vector eta = X * beta;
  double ll = 0.0;
  for (Index i = 0; i < eta.size(); ++i) {
    double z = eta(i);
    // log(1 + e^z) computed stably
    double log1pexp = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    double term = y(i) * z - log1pexp;
    ll += w.size() == 0 ? term : w(i) * term;
  }
  return ll - 0.5 * ridge * beta.squaredNorm();
}

}  // namespace

FittedModel fit_logistic(const ObservedData& data, const std::vector<Index>& rows,
                         const Vector& response, const DesignSpec& spec,
                         const GlmOptions& opts, const Vector& weights,
                         IrlsReport* report) {
  if (opts.ridge < 0.0)
    throw Error(ErrorCategory::config, "ridge penalty must be nonnegative");
  for (Index i = 0; i < response.size(); ++i)
    if (!(response(i) >= 0.0 && response(i) <= 1.0))
      throw Error(ErrorCategory::numeric,
                  "logistic response must lie in [0,1]");
  DesignProblem p = assemble(data, rows, response, spec, weights);
  const Index d = p.X.cols();
  if (opts.ridge == 0.0) {
    Eigen::ColPivHouseholderQR<Matrix> qr(p.X);
    if (qr.rank() < d)
      throw Error(ErrorCategory::numeric,
                  "design is rank deficient; consider a small ridge penalty");
  }
  Vector beta = Vector::Zero(d);
  double obj = penalized_loglik(p.X, p.y, p.w, beta, opts.ridge);
  if (report) {
    *report = IrlsReport();
    report->objective_path.push_back(obj);
  }
  bool converged = false;
  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    Vector eta = p.X * beta;
    Vector prob(eta.size()), irls_w(eta.size());
    for (Index i = 0; i < eta.size(); ++i) {
      double pi = sigmoid(std::clamp(eta(i), -35.0, 35.0));
      prob(i) = pi;
      double wi = p.w.size() == 0 ? 1.0 : p.w(i);
      irls_w(i) = std::max(wi * pi * (1.0 - pi), 1e-12);
    }
    Vector resid = p.y - prob;
    if (p.w.size() != 0) resid = p.w.cwiseProduct(resid);
    Vector grad = p.X.transpose() * resid - opts.ridge * beta;
    Matrix H = p.X.transpose() * (irls_w.asDiagonal() * p.X);
    H.diagonal().array() += opts.ridge + 1e-12;
    Vector step = H.ldlt().solve(grad);

    // step halving keeps the penalized objective non-decreasing
    double scale = 1.0;
    bool improved = false;
    double new_obj = obj;
    Vector cand = beta;
    for (int h = 0; h < 30; ++h) {
      cand = beta + scale * step;
      new_obj = penalized_loglik(p.X, p.y, p.w, cand, opts.ridge);
      if (new_obj >= obj - 1e-12) {
        improved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!improved) {
      converged = step.cwiseAbs().maxCoeff() < 1e-4;
      break;
    }
    beta = cand;
    obj = std::max(new_obj, obj);
    if (report) report->objective_path.push_back(obj);
    if ((scale * step).cwiseAbs().maxCoeff() < opts.tol) {
      converged = true;
      ++iter;
      break;
    }
  }
  if (report) {
    report->iterations = iter;
    report->converged = converged;
  }
  if (!converged && opts.ridge == 0.0)
    throw Error(ErrorCategory::numeric,
                "logistic fit did not converge (possible separation); "
                "consider a small ridge penalty");
  return make_logistic(spec, std::move(beta), "glm");
}

FittedModel fit_saturated(const ObservedData& data, const std::vector<Index>& rows,
                          const Vector& response, const DesignSpec& spec,
                          const Vector& weights) {
  std::unordered_map<std::string, double> sums, counts;
  double total = 0.0, total_w = 0.0;
  for (size_t r = 0; r < rows.size(); ++r) {
    double w = weights.size() == 0 ? 1.0 : weights(static_cast<Index>(r));
    if (w <= 0.0) continue;
    UnitContext ctx(data, rows[r]);
    std::string key = SaturatedModel::cell_key(ctx, spec);
    sums[key] += w * response(static_cast<Index>(r));
    counts[key] += w;
    total += w * response(static_cast<Index>(r));
    total_w += w;
  }
  if (total_w <= 0.0)
    throw Error(ErrorCategory::numeric, "no usable rows in saturated fit");
  std::unordered_map<std::string, double> cells;
  cells.reserve(sums.size());
  for (auto& [key, s] : sums) cells[key] = s / counts[key];
  FittedModel m;
  m.spec = spec;
  m.learner = "saturated";
  m.impl = std::make_shared<SaturatedModel>(spec, std::move(cells), total / total_w);
  return m;
}

// Acklam's rational approximation with one Halley refinement.
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw Error(ErrorCategory::numeric, "quantile level must be in (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley step against the exact CDF
  double e = normal_cdf(x) - p;
  double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  x = x - u / (1.0 + x * u / 2.0);
  return x;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace pathmed
