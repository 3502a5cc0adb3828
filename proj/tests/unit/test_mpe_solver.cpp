#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "mce/mce_identifier.hpp"
#include "mce/mpe_solver.hpp"
#include "oracles.hpp"

using namespace mce;

namespace {

BasicGame exp2_game() { return build_experiment2(std::vector<double>{1.2, -0.8, -0.5, 1.0, 0.3}, 1.0, -1.0); }

// Largest gain any player in a two-player game gets by switching actions at
// any (x, e_i) with positive probability on the current action, computed
// directly from payoffs, transitions and the other player's strategy.
double direct_best_response_gap(const BasicGame& g, const StrategyProfile& b, const ValueFunction& V) {
  const int X = g.num_states();
  double worst = 0.0;
  for (int i = 0; i < 2; ++i) {
    const int j = 1 - i;
    for (int x = 0; x < X; ++x)
      for (int ei = 0; ei < g.num_shocks(i); ++ei) {
        double val[2] = {0.0, 0.0};
        for (int ai = 0; ai < 2; ++ai)
          for (int ej = 0; ej < g.num_shocks(j); ++ej)
            for (int aj = 0; aj < 2; ++aj) {
              const double pj = g.shocks[j].weights[ej] * b.at(g, j, x, ej, aj);
              const int a = i == 0 ? ai * 2 + aj : aj * 2 + ai;
              double cont = 0.0;
              for (int y = 0; y < X; ++y) cont += g.f(y, a, x) * V.at(i, y);
              val[ai] += pj * (g.u(i, a, x, ei) + g.discount * cont);
            }
        const double best = std::max(val[0], val[1]);
        for (int ai = 0; ai < 2; ++ai)
          if (b.at(g, i, x, ei, ai) > 1e-12) worst = std::max(worst, best - val[ai]);
      }
  }
  return worst;
}

}  // namespace

TEST_CASE("ex-ante values match simulation for a random profile") {
  BasicGame g = exp2_game();
  StrategyProfile beta = random_profile(g, 5, 0);
  ValueFunction V = ex_ante_value(g, beta);
  oracle::McEstimate mc = oracle::monte_carlo_values(g, beta, 20000, 17);
  for (int i = 0; i < 2; ++i)
    for (int x = 0; x < 4; ++x) {
      const double diff = std::abs(V.at(i, x) - mc.mean[i * 4 + x]);
      CHECK(diff <= 4.0 * mc.se[i * 4 + x]);
    }
}

TEST_CASE("solved equilibria are best responses and satisfy obedience") {
  for (int which = 0; which < 2; ++which) {
    BasicGame g = which == 0 ? build_experiment1(std::vector<double>{1.0, 1.4, 1.0, 1.0}) : exp2_game();
    MpeOptions opts;
    opts.restarts = 4;
    MpeResult res = solve_mpe(g, opts);
    int solved = 0;
    for (const MpeRun& run : res.runs) {
      if (!run.converged) continue;
      ++solved;
      CHECK(run.deviation_residual <= opts.residual_tol);
      CHECK(direct_best_response_gap(g, run.beta, run.V) <= 1e-8);
      DecisionRule rule = product_rule(g, run.beta);
      double worst = 0.0;
      for (const ObedienceRow& r : obedience_residuals(g, rule, run.V)) worst = std::max(worst, r.value);
      CHECK(worst <= 1e-8);
      CCPTable phi = induced_ccp(g, rule);
      for (size_t k = 0; k < phi.p.size(); ++k) CHECK(phi.p[k] == doctest::Approx(run.phi.p[k]).epsilon(1e-12));
    }
    CHECK(solved >= 1);
  }
}

TEST_CASE("deviation residual is positive away from equilibrium") {
  BasicGame g = exp2_game();
  StrategyProfile beta = uniform_profile(g);
  ValueFunction V = ex_ante_value(g, beta);
  const double r = deviation_residual(g, beta, V);
  CHECK(r > 1e-3);
  CHECK(r == doctest::Approx(direct_best_response_gap(g, beta, V)).epsilon(1e-10));
}

TEST_CASE("runs are reproducible for a fixed seed") {
  BasicGame g = exp2_game();
  MpeOptions opts;
  opts.restarts = 3;
  opts.seed = 42;
  MpeResult a = solve_mpe(g, opts);
  opts.jobs = 2;
  MpeResult b = solve_mpe(g, opts);
  REQUIRE(a.selected == b.selected);
  CHECK(a.chosen().phi.p == b.chosen().phi.p);
}

TEST_CASE("selection policies") {
  std::vector<MpeRun> runs(3);
  for (int k = 0; k < 3; ++k) {
    runs[k].phi.n_states = 1;
    runs[k].phi.n_joint_actions = 2;
    runs[k].phi.p = {1.0 - 0.3 * k, 0.3 * k};
    runs[k].converged = k > 0;
  }
  CHECK(select_equilibrium(runs, SelectionPolicy::first) == 1);
  CHECK(select_equilibrium(runs, SelectionPolicy::max_joint_activity) == 2);
  for (auto& r : runs) r.converged = false;
  CHECK_THROWS_AS(select_equilibrium(runs, SelectionPolicy::first), MpeError);
  CHECK(parse_selection_policy("max_joint_activity") == SelectionPolicy::max_joint_activity);
  CHECK_THROWS(parse_selection_policy("random"));
}
