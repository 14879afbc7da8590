#ifndef PATHMED_MODEL_HPP
#define PATHMED_MODEL_HPP

#include <cmath>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "pathmed/design.hpp"

namespace pathmed {

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}
inline double logit(double p) { return std::log(p / (1.0 - p)); }

class Model {
 public:
  virtual ~Model() = default;
  virtual double predict(const UnitContext& ctx) const = 0;
};

// Value-semantic handle around an immutable fitted model. Probabilistic
// models (Family::logit) predict in (0,1); identity models predict a mean.
struct FittedModel {
  std::shared_ptr<const Model> impl;
  DesignSpec spec;
  std::string learner;

  bool valid() const { return impl != nullptr; }
  double predict(const UnitContext& ctx) const { return impl->predict(ctx); }
  Vector predict_rows(const ObservedData& data, const std::vector<Index>& rows,
                      std::optional<double> a_override = std::nullopt) const;
  Vector predict_all(const ObservedData& data,
                     std::optional<double> a_override = std::nullopt) const;
};

class LinearModel : public Model {
 public:
  LinearModel(DesignSpec spec, Vector beta, bool logistic)
      : spec_(std::move(spec)), beta_(std::move(beta)), logistic_(logistic) {}
  double predict(const UnitContext& ctx) const override;
  const Vector& coefficients() const { return beta_; }
  bool logistic() const { return logistic_; }

 private:
  DesignSpec spec_;
  Vector beta_;
  bool logistic_;
};

// Cell-mean model over integer-coded predictors; exact empirical conditional
// means. Unseen cells fall back to the training mean.
class SaturatedModel : public Model {
 public:
  SaturatedModel(DesignSpec spec, std::unordered_map<std::string, double> cells,
                 double fallback)
      : spec_(std::move(spec)), cells_(std::move(cells)), fallback_(fallback) {}
  double predict(const UnitContext& ctx) const override;
  static std::string cell_key(const UnitContext& ctx, const DesignSpec& spec);

 private:
  DesignSpec spec_;
  std::unordered_map<std::string, double> cells_;
  double fallback_;
};

struct Stump {
  int feature = 0;  // index into the design row past the intercept
  double threshold = 0.0;
  double left = 0.0;
  double right = 0.0;
};

class BoostModel : public Model {
 public:
  BoostModel(DesignSpec spec, double f0, std::vector<Stump> stumps, bool logistic)
      : spec_(std::move(spec)), f0_(f0), stumps_(std::move(stumps)),
        logistic_(logistic) {}
  double predict(const UnitContext& ctx) const override;
  int rounds() const { return static_cast<int>(stumps_.size()); }

 private:
  DesignSpec spec_;
  double f0_;
  std::vector<Stump> stumps_;
  bool logistic_;
};

class EnsembleModel : public Model {
 public:
  EnsembleModel(std::vector<FittedModel> members, Vector weights)
      : members_(std::move(members)), weights_(std::move(weights)) {}
  double predict(const UnitContext& ctx) const override;
  const Vector& weights() const { return weights_; }
  const std::vector<FittedModel>& members() const { return members_; }

 private:
  std::vector<FittedModel> members_;
  Vector weights_;
};

class ConstantModel : public Model {
 public:
  explicit ConstantModel(double value) : value_(value) {}
  double predict(const UnitContext&) const override { return value_; }

 private:
  double value_;
};

// base + scale * bump; used to evaluate estimators along a perturbation path
class ShiftedModel : public Model {
 public:
  ShiftedModel(FittedModel base, FittedModel bump, double scale)
      : base_(std::move(base)), bump_(std::move(bump)), scale_(scale) {}
  double predict(const UnitContext& ctx) const override {
    return base_.predict(ctx) + scale_ * bump_.predict(ctx);
  }

 private:
  FittedModel base_;
  FittedModel bump_;
  double scale_;
};

// amplitude * cos(offset + sum_j coef_j * feature_j) over the raw features of
// `spec` (no intercept, no expansion); bounded, with closed-form Gaussian
// conditional expectations, which makes it a convenient perturbation shape.
class CosineModel : public Model {
 public:
  CosineModel(DesignSpec spec, double amplitude, double offset, Vector coefs)
      : spec_(std::move(spec)), amplitude_(amplitude), offset_(offset),
        coefs_(std::move(coefs)) {}
  double predict(const UnitContext& ctx) const override;

 private:
  DesignSpec spec_;
  double amplitude_;
  double offset_;
  Vector coefs_;
};

FittedModel make_linear(DesignSpec spec, Vector beta, std::string learner = "linear");
FittedModel make_logistic(DesignSpec spec, Vector beta, std::string learner = "logit");
FittedModel make_constant(double value);

// coefficient payload of a (possibly wrapped) linear/logit model, or nullptr
const Vector* model_coefficients(const FittedModel& m);

}  // namespace pathmed

#endif
