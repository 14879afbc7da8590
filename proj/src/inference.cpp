#include "pathmed/inference.hpp"

#include <algorithm>
#include <cmath>

#include "pathmed/glm.hpp"
#include "pathmed/parallel.hpp"
#include "pathmed/rng.hpp"

namespace pathmed {

double eif_variance(const Vector& phi) {
  if (phi.size() < 2)
    throw Error(ErrorCategory::numeric, "variance needs at least two units");
  double n = static_cast<double>(phi.size());
  double second = 0.0;
  for (Index i = 0; i < phi.size(); ++i) second += phi(i) * phi(i);
  return second / n / n;
}

Interval wald_ci(double point, double variance, double level) {
  if (variance < 0.0)
    throw Error(ErrorCategory::numeric, "negative variance");
  if (!(level > 0.0 && level < 1.0))
    throw Error(ErrorCategory::config, "confidence level must be in (0,1)");
  double z = normal_quantile(0.5 + level / 2.0);
  double half = z * std::sqrt(variance);
  return {point - half, point + half};
}

namespace {

ObservedData resample(const ObservedData& data, Rng& rng) {
  const Index n = data.n();
  ObservedData out = data;
  std::vector<Index> pick(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i)
    pick[static_cast<size_t>(i)] = static_cast<Index>(rng.uniform_int(static_cast<std::uint64_t>(n)));
  for (Index i = 0; i < n; ++i) {
    Index s = pick[static_cast<size_t>(i)];
    if (out.x.cols() > 0) out.x.row(i) = data.x.row(s);
    out.a(i) = data.a(s);
    out.y(i) = data.y(s);
    for (int k = 0; k < data.num_mediators(); ++k)
      out.mediators[static_cast<size_t>(k)].row(i) =
          data.mediators[static_cast<size_t>(k)].row(s);
  }
  return out;
}

bool has_both_arms(const ObservedData& data) {
  bool t = false, c = false;
  for (Index i = 0; i < data.n(); ++i) (data.a(i) == 1.0 ? t : c) = true;
  return t && c;
}

}  // namespace

BootstrapResult bootstrap(const ObservedData& data,
                          const std::function<double(const ObservedData&)>& estimator,
                          int B, std::uint64_t seed, double level, int threads,
                          bool adaptive_learners) {
  if (B < 2) throw Error(ErrorCategory::config, "bootstrap needs B >= 2");
  BootstrapResult out;
  if (adaptive_learners)
    out.warnings.push_back(
        {"bootstrap-adaptive",
         "resampling has no guarantee with data-adaptive nuisance learners; "
         "prefer the influence-function variance",
         0.0});
  out.replicates.resize(B);
  parallel_for(B, threads, [&](std::int64_t b) {
    Rng rng(derive_seed(seed, 0xb007, static_cast<std::uint64_t>(b)));
    for (int attempt = 0;; ++attempt) {
      ObservedData rep = resample(data, rng);
      if (has_both_arms(rep)) {
        out.replicates(static_cast<Index>(b)) = estimator(rep);
        break;
      }
      if (attempt >= 9)
        throw Error(ErrorCategory::data,
                    "bootstrap replicate kept drawing an empty arm");
    }
  });

  double mean = out.replicates.mean();
  double ss = 0.0;
  for (Index b = 0; b < out.replicates.size(); ++b) {
    double d = out.replicates(b) - mean;
    ss += d * d;
  }
  out.se = std::sqrt(ss / static_cast<double>(B - 1));

  std::vector<double> sorted(out.replicates.data(),
                             out.replicates.data() + out.replicates.size());
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    double pos = q * static_cast<double>(B - 1);
    Index lo = static_cast<Index>(std::floor(pos));
    Index hi = std::min<Index>(lo + 1, B - 1);
    double frac = pos - static_cast<double>(lo);
    return (1.0 - frac) * sorted[static_cast<size_t>(lo)] +
           frac * sorted[static_cast<size_t>(hi)];
  };
  out.ci = {quantile((1.0 - level) / 2.0), quantile(0.5 + level / 2.0)};
  return out;
}

PooledEstimate rubin_pool(const std::vector<double>& points,
                          const std::vector<double>& variances) {
  if (points.empty())
    throw Error(ErrorCategory::config, "pooling needs at least one imputation");
  if (points.size() != variances.size())
    throw Error(ErrorCategory::config,
                "pooling needs one variance per point estimate");
  PooledEstimate out;
  out.m = static_cast<int>(points.size());
  for (double p : points) out.point += p;
  out.point /= out.m;
  for (double v : variances) out.within += v;
  out.within /= out.m;
  if (out.m > 1) {
    for (double p : points) {
      double d = p - out.point;
      out.between += d * d;
    }
    out.between /= out.m - 1;
  }
  out.total = out.within + (1.0 + 1.0 / out.m) * out.between;
  return out;
}

}  // namespace pathmed
