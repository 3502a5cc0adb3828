#include <algorithm>

#include "mce/mce_identifier.hpp"
#include "mce_identifier/structure.hpp"

namespace mce {

// Under the null structure each obedience row sums over every shock at x,
// so the continuation part only involves sum_e psi * sigma(a | x, e), which
// consistency pins to phi(a | x). That makes the program linear.
LinearProgram null_info_lp(const BasicGame& g, const CCPTable& phi) {
  phi.validate(1e-9);
  if (phi.n_states != g.num_states() || phi.n_joint_actions != g.num_joint_actions())
    throw ModelError("CCP table does not match the game dimensions");
  auto layout = CellLayout::build(g, InformationStructure::null_info(g));
  const int X = g.num_states(), A = g.num_joint_actions(), N = g.n_players;
  const int C = layout->size();
  auto st = detail::ObStructure::build(g, *layout);

  LinearProgram lp;
  for (int c = 0; c < C; ++c)
    for (int a = 0; a < A; ++a) lp.add_col(0.0, 0.0, phi.at(layout->cells[c].x, a) > 0.0 ? 1.0 : 0.0);
  const int v0 = lp.num_cols();
  for (int k = 0; k < N * X; ++k) lp.add_col(0.0, -kInf, kInf);
  const int tcol = lp.add_col(1.0, 0.0, kInf);

  for (int r = 0; r < st.num_rows(); ++r) {
    const auto& key = st.rows[r];
    int row = lp.add_row(RowSense::le, 0.0);
    for (int e = st.row_begin[r]; e < st.row_begin[r + 1]; ++e) {
      const auto& en = st.entries[e];
      lp.add_entry(row, en.k, en.w * en.du);
    }
    std::vector<double> cv(X, 0.0);
    for (int a = 0; a < A; ++a) {
      if (g.actions.digit(a, key.player) != key.action) continue;
      double p = phi.at(key.x, a);
      if (p == 0.0) continue;
      int ad = g.actions.with_digit(a, key.player, key.deviation);
      for (int y = 0; y < X; ++y) cv[y] += p * g.discount * (g.f(y, ad, key.x) - g.f(y, a, key.x));
    }
    for (int y = 0; y < X; ++y) lp.add_entry(row, v0 + key.player * X + y, cv[y]);
    lp.add_entry(row, tcol, -1.0);
  }

  for (int i = 0; i < N; ++i)
    for (int x = 0; x < X; ++x) {
      int row = lp.add_row(RowSense::eq, 0.0);
      std::vector<double> cv(X, 0.0);
      cv[x] += 1.0;
      for (int a = 0; a < A; ++a) {
        double p = phi.at(x, a);
        if (p == 0.0) continue;
        for (int y = 0; y < X; ++y) cv[y] -= g.discount * p * g.f(y, a, x);
      }
      for (int y = 0; y < X; ++y) lp.add_entry(row, v0 + i * X + y, cv[y]);
      for (int c = layout->state_begin[x]; c < layout->state_begin[x + 1]; ++c) {
        const auto& cell = layout->cells[c];
        int ei = g.joint_shocks.digit(cell.e, i);
        for (int a = 0; a < A; ++a) lp.add_entry(row, c * A + a, -cell.weight * g.u(i, a, x, ei));
      }
    }

  for (int x = 0; x < X; ++x)
    for (int a = 0; a < A; ++a) {
      if (phi.at(x, a) == 0.0) continue;
      int row = lp.add_row(RowSense::eq, phi.at(x, a));
      for (int c = layout->state_begin[x]; c < layout->state_begin[x + 1]; ++c)
        lp.add_entry(row, c * A + a, layout->cells[c].weight);
    }
  for (int c = 0; c < C; ++c) {
    int row = lp.add_row(RowSense::eq, 1.0);
    for (int a = 0; a < A; ++a) lp.add_entry(row, c * A + a, 1.0);
  }
  return lp;
}

NullInfoResult null_info_member(const BasicGame& g, const CCPTable& phi, double tol) {
  LinearProgram lp = null_info_lp(g, phi);
  LpOutcome out = solve_lp(lp);
  NullInfoResult res;
  res.lp_status = out.status;
  if (out.status != LpStatus::optimal) {
    res.member = false;
    res.t = kInf;
    return res;
  }
  const int X = g.num_states(), A = g.num_joint_actions(), N = g.n_players;
  res.sigma.layout = CellLayout::build(g, InformationStructure::null_info(g));
  res.sigma.n_joint_actions = A;
  const int ns = res.sigma.layout->size() * A;
  res.sigma.sigma.assign(out.solution.begin(), out.solution.begin() + ns);
  res.V.n_players = N;
  res.V.n_states = X;
  res.V.v.assign(out.solution.begin() + ns, out.solution.begin() + ns + N * X);
  res.t = std::max(0.0, out.solution.back());
  res.member = res.t <= tol;
  return res;
}

}  // namespace mce
