#ifndef PATHMED_DESIGN_HPP
#define PATHMED_DESIGN_HPP

#include <optional>
#include <vector>

#include "pathmed/data.hpp"
#include "pathmed/types.hpp"

namespace pathmed {

enum class Family { identity, logit };

// Predictor layout for a model fit: selected covariate columns (optionally
// expanded with squares and pairwise interactions), mediator blocks
// 1..mediator_levels, and optionally the treatment. The expansion is
// deterministic given the spec, so nested specs stay mutually compatible.
struct DesignSpec {
  std::vector<int> x_cols;
  int mediator_levels = 0;
  bool include_treatment = false;
  bool expand = false;  // squares + pairwise interactions of x_cols
  Family family = Family::identity;

  bool operator==(const DesignSpec& o) const = default;
};

// One unit's feature context. Mediator blocks may be overridden (used by
// Monte Carlo integration over sampled mediator paths) and the treatment is
// taken from `a_override` when set.
struct UnitContext {
  const ObservedData* data = nullptr;
  Index i = 0;
  std::optional<double> a_override;
  // per block: if non-empty, use these values instead of the observed row
  std::vector<Vector> mediator_override;

  UnitContext(const ObservedData& d, Index row) : data(&d), i(row) {}
  UnitContext(const ObservedData& d, Index row, double arm)
      : data(&d), i(row), a_override(arm) {}

  double a() const { return a_override ? *a_override : (*data).a(i); }
  double mediator(int block, Index col) const {
    if (block < static_cast<int>(mediator_override.size()) &&
        mediator_override[block].size() > 0)
      return mediator_override[block](col);
    return data->mediators[block](i, col);
  }
};

// number of columns of the design row, including the leading intercept
Index design_width(const ObservedData& data, const DesignSpec& spec);

// resizes `row` to the design width and fills it (intercept first)
void fill_design_row(const UnitContext& ctx, const DesignSpec& spec,
                     Eigen::RowVectorXd& row);

// rows: training subset (indices into data); a_override applies to all rows
Matrix build_design(const ObservedData& data, const DesignSpec& spec,
                    const std::vector<Index>& rows,
                    std::optional<double> a_override = std::nullopt);

std::vector<Index> all_rows(const ObservedData& data);

}  // namespace pathmed

#endif
