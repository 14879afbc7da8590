#ifndef PATHMED_DENSITY_HPP
#define PATHMED_DENSITY_HPP

#include <map>
#include <memory>

#include "pathmed/glm.hpp"
#include "pathmed/rng.hpp"

namespace pathmed {

enum class DensityForm { discrete_table, gaussian_linear };

struct DensityOptions {
  bool saturated = false;  // exact conditional frequencies (discrete blocks)
  double ridge = 1e-6;
};

// Conditional law of mediator block k given (x, a, earlier blocks). Two
// forms: a probability table over the block's observed finite support, or a
// homoskedastic Gaussian around a linear mean (univariate blocks). The
// conditioning arm comes from ctx.a_override; earlier blocks may be
// overridden through the context, which is what the Monte Carlo path
// sampler does.
class DensityModel {
 public:
  DensityForm form() const { return form_; }
  int block() const { return block_; }

  double log_density(const UnitContext& ctx, const Vector& value) const;
  double density(const UnitContext& ctx, const Vector& value) const {
    return std::exp(log_density(ctx, value));
  }
  // observed value of the block for unit ctx.i (or its override)
  Vector observed_value(const UnitContext& ctx) const;

  // antithetic-capable sampler: z is a standard normal draw for the
  // Gaussian form, a uniform for the table form (inverse CDF)
  Vector sample(const UnitContext& ctx, double z_or_u) const;

  const std::vector<Vector>& support() const { return support_; }
  double sigma2() const { return sigma2_; }
  const FittedModel& mean_model() const { return mean_; }

  friend DensityModel fit_density(const ObservedData&, const std::vector<Index>&,
                                  int, const DesignSpec&, const DensityOptions&);

 private:
  DensityForm form_ = DensityForm::gaussian_linear;
  int block_ = 0;
  DesignSpec conditioning_;
  // gaussian-linear
  FittedModel mean_;
  double sigma2_ = 1.0;
  // discrete table: per-level probability models (saturated or logistic),
  // normalized over the support at evaluation time
  std::vector<Vector> support_;
  std::vector<FittedModel> level_models_;

  std::ptrdiff_t support_index(const Vector& value) const;
  void level_probs(const UnitContext& ctx, std::vector<double>& probs) const;
};

// Fits the conditional density of block k. All-discrete blocks get the
// table form; univariate continuous blocks get the Gaussian-linear form;
// multivariate continuous blocks are not supported here (use the estimators
// based on treatment odds, which need no mediator densities).
DensityModel fit_density(const ObservedData& data, const std::vector<Index>& rows,
                         int block, const DesignSpec& conditioning,
                         const DensityOptions& opts = DensityOptions());

}  // namespace pathmed

#endif
