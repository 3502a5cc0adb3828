#pragma once

#include <vector>

#include "mce/mpe_solver.hpp"

namespace mce::detail {

struct RowKey {
  int player, x, label, action, deviation;
};

// sigma(a | cell) enters row `row` with weight `w` and flow gain `du`; the
// continuation gain is looked up through `dev`.
struct ObEntry {
  int row;
  int k;  // cell * A + a
  double w;
  double du;
  int dev;
};

// Continuation difference delta * (f(. | ad, x) - f(. | a, x)) for player i.
struct DevTerm {
  int player, x, a, ad;
  std::vector<double> df;
};

struct ObStructure {
  std::vector<RowKey> rows;
  std::vector<ObEntry> entries;
  std::vector<int> row_begin;
  std::vector<int> state_row_begin;
  std::vector<DevTerm> devs;

  // Rows are ordered by state, so the rows of x are contiguous. Rows with
  // deviation == action are skipped unless `include_null` is set.
  static ObStructure build(const BasicGame& g, const CellLayout& layout, bool include_null = false);

  // delta * sum_y df(y) V_i(y) for every DevTerm.
  std::vector<double> dev_values(const std::vector<double>& V, int X) const;

  int num_rows() const { return static_cast<int>(rows.size()); }
};

}  // namespace mce::detail
