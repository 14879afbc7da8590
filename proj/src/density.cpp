#include "pathmed/density.hpp"

#include <algorithm>
#include <cmath>

namespace pathmed {

namespace {

std::string value_key(const Vector& v) {
  std::string key;
  for (Index c = 0; c < v.size(); ++c) {
    key += std::to_string(static_cast<long long>(std::llround(v(c))));
    key += '|';
  }
  return key;
}

constexpr double kLog2Pi = 1.8378770664093454836;

}  // namespace

Vector DensityModel::observed_value(const UnitContext& ctx) const {
  const Matrix& m = ctx.data->mediators[static_cast<size_t>(block_)];
  Vector v(m.cols());
  for (Index c = 0; c < m.cols(); ++c) v(c) = ctx.mediator(block_, c);
  return v;
}

std::ptrdiff_t DensityModel::support_index(const Vector& value) const {
  std::string key = value_key(value);
  for (size_t s = 0; s < support_.size(); ++s)
    if (value_key(support_[s]) == key) return static_cast<std::ptrdiff_t>(s);
  return -1;
}

void DensityModel::level_probs(const UnitContext& ctx,
                               std::vector<double>& probs) const {
  probs.resize(support_.size());
  double total = 0.0;
  for (size_t s = 0; s < support_.size(); ++s) {
    double p = std::max(level_models_[s].predict(ctx), 0.0);
    probs[s] = p;
    total += p;
  }
  if (total <= 0.0) {
    std::fill(probs.begin(), probs.end(), 1.0 / static_cast<double>(probs.size()));
    return;
  }
  for (double& p : probs) p /= total;
}

double DensityModel::log_density(const UnitContext& ctx, const Vector& value) const {
  if (form_ == DensityForm::gaussian_linear) {
    double mean = mean_.predict(ctx);
    double r = value(0) - mean;
    return -0.5 * (kLog2Pi + std::log(sigma2_)) - r * r / (2.0 * sigma2_);
  }
  std::ptrdiff_t idx = support_index(value);
  if (idx < 0) return std::log(1e-300);
  std::vector<double> probs;
  level_probs(ctx, probs);
  return std::log(std::max(probs[static_cast<size_t>(idx)], 1e-300));
}

Vector DensityModel::sample(const UnitContext& ctx, double z_or_u) const {
  if (form_ == DensityForm::gaussian_linear) {
    Vector v(1);
    v(0) = mean_.predict(ctx) + std::sqrt(sigma2_) * z_or_u;
    return v;
  }
  std::vector<double> probs;
  level_probs(ctx, probs);
  double cum = 0.0;
  for (size_t s = 0; s < probs.size(); ++s) {
    cum += probs[s];
    if (z_or_u <= cum || s + 1 == probs.size()) return support_[s];
  }
  return support_.back();
}

DensityModel fit_density(const ObservedData& data, const std::vector<Index>& rows,
                         int block, const DesignSpec& conditioning,
                         const DensityOptions& opts) {
  if (block < 0 || block >= data.num_mediators())
    throw Error(ErrorCategory::config, "mediator block out of range");
  if (conditioning.mediator_levels != block || !conditioning.include_treatment)
    throw Error(ErrorCategory::config,
                "density conditioning must cover (x, a, earlier blocks)");
  const Matrix& m = data.mediators[static_cast<size_t>(block)];
  const bool discrete = data.block_discrete(block);
  if (!discrete && m.cols() > 1)
    throw Error(ErrorCategory::data,
                "multivariate continuous mediator blocks have no density model; "
                "use a treatment-odds estimator (no mediator densities needed)");

  DensityModel out;
  out.block_ = block;
  out.conditioning_ = conditioning;

  if (!discrete) {
    out.form_ = DensityForm::gaussian_linear;
    Vector response(static_cast<Index>(rows.size()));
    for (size_t r = 0; r < rows.size(); ++r)
      response(static_cast<Index>(r)) = m(rows[r], 0);
    out.mean_ = fit_linear(data, rows, response, conditioning, opts.ridge);
    Vector fitted = out.mean_.predict_rows(data, rows);
    double rss = (response - fitted).squaredNorm();
    double dof = static_cast<double>(rows.size()) -
                 static_cast<double>(design_width(data, conditioning));
    out.sigma2_ = std::max(rss / std::max(dof, 1.0), 1e-12);
    return out;
  }

  out.form_ = DensityForm::discrete_table;
  // observed support, in a deterministic order
  std::map<std::string, Vector> levels;
  for (Index r : rows) {
    Vector v = m.row(r);
    levels.emplace(value_key(v), v);
  }
  for (auto& [key, v] : levels) out.support_.push_back(v);

  for (const Vector& level : out.support_) {
    Vector indicator(static_cast<Index>(rows.size()));
    std::string key = value_key(level);
    for (size_t r = 0; r < rows.size(); ++r)
      indicator(static_cast<Index>(r)) =
          value_key(Vector(m.row(rows[r]))) == key ? 1.0 : 0.0;
    if (opts.saturated) {
      out.level_models_.push_back(
          fit_saturated(data, rows, indicator, conditioning));
    } else {
      DesignSpec s = conditioning;
      s.family = Family::logit;
      GlmOptions g;
      g.ridge = std::max(opts.ridge, 1e-8);
      out.level_models_.push_back(fit_logistic(data, rows, indicator, s, g));
    }
  }
  return out;
}

}  // namespace pathmed
