#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "mce/mce_identifier.hpp"
#include "mce/mpe_solver.hpp"
#include "oracles.hpp"

using namespace mce;

namespace {

CCPTable equilibrium_ccp(const BasicGame& g, SelectionPolicy policy = SelectionPolicy::first) {
  MpeOptions opts;
  opts.restarts = 8;
  opts.policy = policy;
  return solve_mpe(g, opts).chosen().phi;
}

BasicGame exp2_game(const std::vector<double>& th, double discount = 0.9) {
  Exp2Options o;
  o.discount = discount;
  return build_experiment2(th, 1.0, -1.0, o);
}

const std::vector<double> kExp2Truth = {1.2, -0.8, -0.5, 1.0, 0.3};

}  // namespace

TEST_CASE("obedience rows vanish for a product rule at its own equilibrium") {
  BasicGame g = exp2_game(kExp2Truth);
  MpeOptions opts;
  opts.restarts = 2;
  MpeRun run = solve_mpe(g, opts).chosen();
  DecisionRule rule = product_rule(g, run.beta);
  double e3 = 1.0, e4 = 1.0;
  certificate_residuals(g, run.phi, rule, run.V, e3, e4);
  CHECK(e3 <= 1e-12);
  CHECK(e4 <= 1e-9);
  for (const ObedienceRow& r : obedience_residuals(g, rule, run.V))
    if (r.action == r.deviation) CHECK(r.value == 0.0);
}

TEST_CASE("static games: criterion agrees with an independent correlated-equilibrium LP") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(-1.5, 1.5);
  BasicGame g0 = exp2_game(kExp2Truth, 0.0);
  CCPTable phi = equilibrium_ccp(g0);
  InformationStructure info = InformationStructure::private_shock(g0);
  int inside = 0;
  for (int k = 0; k < 6; ++k) {
    std::vector<double> th = kExp2Truth;
    if (k > 0)
      for (int j = 0; j < 4; ++j) th[j] += 0.3 * U(rng);
    BasicGame g = exp2_game(th, 0.0);
    CriterionOptions opts;
    opts.restarts = 4;
    FeasibilityResult r = criterion_q(g, info, phi, opts);
    const double want = std::max(0.0, oracle::static_bce_level(g, phi));
    CHECK(r.q_value == doctest::Approx(want).epsilon(1e-6).scale(1.0));
    inside += want <= 1e-9;
  }
  CHECK(inside >= 1);
}

TEST_CASE("one-player micro game: criterion agrees with a brute-force rule grid") {
  CCPTable phi;
  phi.n_states = 1;
  phi.n_joint_actions = 2;
  phi.p = {0.5, 0.5};
  // The identified set for this choice frequency is |b0| <= |b1|.
  const double pts[][2] = {{-1.05, 1}, {-0.95, 1}, {0.95, 1}, {1.05, 1}, {0.5, 1}, {1.5, 1}, {0.95, -1}, {1.05, -1}};
  for (const auto& p : pts) {
    BasicGame g = oracle::micro_game(p[0], p[1]);
    CriterionOptions opts;
    opts.restarts = 4;
    FeasibilityResult r = criterion_q(g, InformationStructure::private_shock(g), phi, opts);
    const double grid = oracle::micro_grid_level(g, phi);
    const bool inside = std::abs(p[0]) <= std::abs(p[1]);
    CAPTURE(p[0]);
    CAPTURE(p[1]);
    CHECK((r.status == Membership::member) == inside);
    CHECK((grid <= 1e-9) == inside);
    CHECK(r.q_value <= grid + 1e-9);
    CHECK(r.q_value >= grid - 0.01 * (std::abs(p[0]) + std::abs(p[1])));
  }
}

TEST_CASE("null-information LP accepts the truth and rejects a distant point") {
  BasicGame g = build_experiment1(std::vector<double>{1.0, 1.4, 1.0, 1.0});
  CCPTable phi = equilibrium_ccp(g);
  NullInfoResult at = null_info_member(g, phi, 1e-8);
  CHECK(at.member);
  CHECK(at.lp_status == LpStatus::optimal);
  NullInfoResult far = null_info_member(build_experiment1(std::vector<double>{10.0, 10.0, 1.0, 1.0}), phi, 1e-8);
  CHECK_FALSE(far.member);
  CHECK(far.t > 1e-3);

  LinearProgram lp = null_info_lp(g, phi);
  CHECK(lp.num_cols() > 0);
  CHECK(solve_lp(lp).objective_value == doctest::Approx(at.t).epsilon(1e-9).scale(1.0));
}

TEST_CASE("sharp members pass the outer test") {
  BasicGame g0 = exp2_game(kExp2Truth);
  CCPTable phi = equilibrium_ccp(g0, SelectionPolicy::max_joint_activity);
  const std::vector<std::vector<double>> points = {
      kExp2Truth, {1.25, -0.8, -0.5, 1.0, 0.3}, {1.2, -0.75, -0.45, 0.95, 0.3}, {2.0, -0.8, -0.5, 1.0, 0.3}};
  int sharp = 0;
  for (const auto& th : points) {
    BasicGame g = exp2_game(th);
    CriterionOptions opts;
    opts.restarts = 4;
    FeasibilityResult r = criterion_q(g, InformationStructure::private_shock(g), phi, opts);
    NullInfoResult outer = null_info_member(g, phi, opts.member_tol * g.num_shocks(0));
    if (r.status == Membership::member) {
      ++sharp;
      CHECK(outer.member);
      CHECK(r.e3_residual <= 1e-9);
    }
  }
  CHECK(sharp >= 1);
}

TEST_CASE("criterion is deterministic across thread counts") {
  BasicGame g0 = exp2_game(kExp2Truth);
  CCPTable phi = equilibrium_ccp(g0);
  BasicGame g = exp2_game({1.3, -0.7, -0.5, 1.0, 0.3});
  CriterionOptions opts;
  opts.restarts = 3;
  opts.seed = 9;
  opts.early_stop = false;
  FeasibilityResult a = criterion_q(g, InformationStructure::private_shock(g), phi, opts);
  opts.jobs = 2;
  FeasibilityResult b = criterion_q(g, InformationStructure::private_shock(g), phi, opts);
  CHECK(a.q_value == b.q_value);
  CHECK(a.restart_q == b.restart_q);
}
