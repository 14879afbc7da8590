#include "pathmed/design.hpp"

namespace pathmed {

namespace {

Index base_feature_count(const ObservedData& data, const DesignSpec& spec) {
  Index p = static_cast<Index>(spec.x_cols.size());
  for (int k = 0; k < spec.mediator_levels; ++k) p += data.mediators[k].cols();
  if (spec.include_treatment) p += 1;
  return p;
}

}  // namespace

Index design_width(const ObservedData& data, const DesignSpec& spec) {
  Index p = 1 + base_feature_count(data, spec);
  if (spec.expand) {
    Index q = static_cast<Index>(spec.x_cols.size());
    p += q + q * (q - 1) / 2;
  }
  return p;
}

void fill_design_row(const UnitContext& ctx, const DesignSpec& spec,
                     Eigen::RowVectorXd& row) {
  const ObservedData& d = *ctx.data;
  row.resize(design_width(d, spec));
  Index pos = 0;
  row(pos++) = 1.0;
  for (int j : spec.x_cols) row(pos++) = d.x(ctx.i, j);
  if (spec.expand) {
    const Index q = static_cast<Index>(spec.x_cols.size());
    for (Index u = 0; u < q; ++u) {
      double vu = d.x(ctx.i, spec.x_cols[u]);
      row(pos++) = vu * vu;
    }
    for (Index u = 0; u < q; ++u)
      for (Index v = u + 1; v < q; ++v)
        row(pos++) = d.x(ctx.i, spec.x_cols[u]) * d.x(ctx.i, spec.x_cols[v]);
  }
  for (int k = 0; k < spec.mediator_levels; ++k)
    for (Index c = 0; c < d.mediators[k].cols(); ++c)
      row(pos++) = ctx.mediator(k, c);
  if (spec.include_treatment) row(pos++) = ctx.a();
}

Matrix build_design(const ObservedData& data, const DesignSpec& spec,
                    const std::vector<Index>& rows,
                    std::optional<double> a_override) {
  Matrix out(static_cast<Index>(rows.size()), design_width(data, spec));
  Eigen::RowVectorXd row;
  for (size_t r = 0; r < rows.size(); ++r) {
    UnitContext ctx(data, rows[r]);
    ctx.a_override = a_override;
    fill_design_row(ctx, spec, row);
    out.row(static_cast<Index>(r)) = row;
  }
  return out;
}

std::vector<Index> all_rows(const ObservedData& data) {
  std::vector<Index> rows(data.n());
  for (Index i = 0; i < data.n(); ++i) rows[static_cast<size_t>(i)] = i;
  return rows;
}

}  // namespace pathmed
