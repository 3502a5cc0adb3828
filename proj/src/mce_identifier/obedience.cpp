#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include "mce/mce_identifier.hpp"
#include "mce_identifier/structure.hpp"

namespace mce {

namespace detail {

ObStructure ObStructure::build(const BasicGame& g, const CellLayout& layout, bool include_null) {
  ObStructure s;
  const int X = g.num_states(), A = g.num_joint_actions(), N = g.n_players;
  std::map<std::tuple<int, int, int, int>, int> dev_index;
  auto dev_of = [&](int i, int x, int a, int ad) {
    auto key = std::make_tuple(i, x, a, ad);
    auto it = dev_index.find(key);
    if (it != dev_index.end()) return it->second;
    DevTerm d{i, x, a, ad, std::vector<double>(X, 0.0)};
    for (int y = 0; y < X; ++y) d.df[y] = g.discount * (g.f(y, ad, x) - g.f(y, a, x));
    s.devs.push_back(std::move(d));
    int id = static_cast<int>(s.devs.size()) - 1;
    dev_index.emplace(key, id);
    return id;
  };

  for (int x = 0; x < X; ++x) {
    s.state_row_begin.push_back(s.num_rows());
    const int c0 = layout.state_begin[x], c1 = layout.state_begin[x + 1];
    for (int i = 0; i < N; ++i) {
      std::set<int> labels;
      for (int c = c0; c < c1; ++c) labels.insert(layout.label(c, i));
      const int Ai = g.num_actions(i);
      for (int l : labels)
        for (int ai = 0; ai < Ai; ++ai)
          for (int dv = 0; dv < Ai; ++dv) {
            if (dv == ai && !include_null) continue;
            const int row = s.num_rows();
            s.rows.push_back({i, x, l, ai, dv});
            s.row_begin.push_back(static_cast<int>(s.entries.size()));
            for (int c = c0; c < c1; ++c) {
              if (layout.label(c, i) != l) continue;
              const int ei = g.joint_shocks.digit(layout.cells[c].e, i);
              for (int a = 0; a < A; ++a) {
                if (g.actions.digit(a, i) != ai) continue;
                const int ad = g.actions.with_digit(a, i, dv);
                ObEntry en;
                en.row = row;
                en.k = c * A + a;
                en.w = layout.cells[c].weight;
                en.du = g.u(i, ad, x, ei) - g.u(i, a, x, ei);
                en.dev = dev_of(i, x, a, ad);
                s.entries.push_back(en);
              }
            }
          }
    }
  }
  s.state_row_begin.push_back(s.num_rows());
  s.row_begin.push_back(static_cast<int>(s.entries.size()));
  return s;
}

std::vector<double> ObStructure::dev_values(const std::vector<double>& V, int X) const {
  std::vector<double> out(devs.size(), 0.0);
  for (size_t d = 0; d < devs.size(); ++d) {
    const double* v = &V[static_cast<size_t>(devs[d].player) * X];
    double s = 0.0;
    for (int y = 0; y < X; ++y) s += devs[d].df[y] * v[y];
    out[d] = s;
  }
  return out;
}

}  // namespace detail

std::vector<ObedienceRow> obedience_residuals(const BasicGame& g, const DecisionRule& rule, const ValueFunction& V) {
  auto st = detail::ObStructure::build(g, *rule.layout, true);
  std::vector<double> gv = st.dev_values(V.v, g.num_states());
  std::vector<ObedienceRow> out;
  out.reserve(st.rows.size());
  for (int r = 0; r < st.num_rows(); ++r) {
    const auto& key = st.rows[r];
    ObedienceRow row{key.player, key.x, key.label, key.action, key.deviation, 0.0};
    if (key.action != key.deviation) {
      double s = 0.0;
      for (int e = st.row_begin[r]; e < st.row_begin[r + 1]; ++e) {
        const auto& en = st.entries[e];
        s += en.w * rule.sigma[en.k] * (en.du + gv[en.dev]);
      }
      row.value = s;
    }
    out.push_back(row);
  }
  return out;
}

void certificate_residuals(const BasicGame& g, const CCPTable& phi, const DecisionRule& rule, const ValueFunction& V,
                           double& e3, double& e4) {
  const int X = g.num_states(), A = g.num_joint_actions(), N = g.n_players;
  CCPTable implied = induced_ccp(g, rule);
  e4 = 0.0;
  for (size_t k = 0; k < phi.p.size(); ++k) e4 = std::max(e4, std::abs(implied.p[k] - phi.p[k]));
  std::vector<double> flow(static_cast<size_t>(N) * X, 0.0);
  for (int c = 0; c < rule.layout->size(); ++c) {
    const auto& cell = rule.layout->cells[c];
    for (int a = 0; a < A; ++a) {
      double w = cell.weight * rule.at(c, a);
      if (w == 0.0) continue;
      for (int i = 0; i < N; ++i) flow[i * X + cell.x] += w * g.u(i, a, cell.x, g.joint_shocks.digit(cell.e, i));
    }
  }
  e3 = 0.0;
  for (int i = 0; i < N; ++i)
    for (int x = 0; x < X; ++x) {
      double cont = 0.0;
      for (int a = 0; a < A; ++a) {
        double p = phi.at(x, a);
        if (p == 0.0) continue;
        for (int y = 0; y < X; ++y) cont += p * g.f(y, a, x) * V.at(i, y);
      }
      e3 = std::max(e3, std::abs(V.at(i, x) - flow[i * X + x] - g.discount * cont));
    }
}

std::string to_string(Membership m) {
  switch (m) {
    case Membership::member:
      return "member";
    case Membership::non_member:
      return "non_member";
    case Membership::consistency_infeasible:
      return "consistency_infeasible";
  }
  return "unknown";
}

}  // namespace mce
