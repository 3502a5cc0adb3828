#include <cmath>
#include <random>

#include "doctest.h"
#include "mce/game_core.hpp"
#include "mce/model.hpp"

using namespace mce;

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

const char* kExp2Model = R"({
  "template": "exp2",
  "theta": {"m": 1.2, "c": -0.8, "e": -0.5, "w": 1.0, "kappa": 0.3},
  "fixed_keys": ["kappa"],
  "covariate_support": [-1.0, 1.0]
})";

const char* kCustomModel = R"({
  "template": "custom",
  "players": 1,
  "actions": [["stay", "go"]],
  "states": ["a", "b"],
  "discount": 0.5,
  "shock_spec": {"values": [[-1.0, 1.0]]},
  "transition": [[[1, 0], [0, 1]], [[0.5, 0.5], [0.25, 0.75]]],
  "payoff": [[[[0, 0], [0, 0]], [[-1, 1], [0.5, 2.5]]]]
})";

}  // namespace

TEST_CASE("logistic shock points sit at the midpoint quantiles") {
  ShockGrid g = discretize_shock({ShockFamily::logistic, 8});
  REQUIRE(g.size() == 8);
  for (int k = 0; k < 8; ++k) {
    const double q = (k + 0.5) / 8.0;
    CHECK(1.0 / (1.0 + std::exp(-g.points[k])) == doctest::Approx(q).epsilon(1e-12));
    CHECK(g.weights[k] == 0.125);
  }
  CHECK(g.points[0] == -g.points[7]);
}

TEST_CASE("normal shock points sit at the midpoint quantiles") {
  ShockGrid g = discretize_shock({ShockFamily::standard_normal, 7});
  for (int k = 0; k < 7; ++k) CHECK(normal_cdf(g.points[k]) == doctest::Approx((k + 0.5) / 7.0).epsilon(1e-12));
  CHECK(g.points[3] == 0.0);
  CHECK_THROWS_AS(discretize_shock({ShockFamily::logistic, 0}), ModelError);
  CHECK_THROWS_AS(parse_shock_family("cauchy"), ModelError);
}

TEST_CASE("radix puts player 0 in the most significant digit") {
  Radix r({2, 3});
  CHECK(r.total() == 6);
  CHECK(r.digit(5, 0) == 1);
  CHECK(r.digit(5, 1) == 2);
  CHECK(r.with_digit(5, 0, 0) == 2);
  CHECK(r.with_digit(0, 1, 2) == 2);
}

TEST_CASE("experiment 1 game layout") {
  BasicGame g = build_experiment1(std::vector<double>{1.0, 1.4, 1.0, 1.0});
  REQUIRE(g.num_states() == 12);
  CHECK(g.num_joint_actions() == 4);
  CHECK(g.discount == 0.96);
  CHECK(g.state_labels[1 * 4 + 1 * 2 + 0] == "s=6;z1=1;z2=0");

  // Firm 1 enters alone in s=10 with z1=0: RS*log(10) - FC - EC + e.
  const int x = 2 * 4 + 0 * 2 + 1, a = 2 * 1 + 0;
  const double expect = std::log(10.0) - 1.0 - 1.0;
  for (int e = 0; e < 8; ++e) CHECK(g.u(0, a, x, e) == doctest::Approx(expect + g.shocks[0].points[e]).epsilon(1e-14));
  // Both enter: competition term RN applies to each firm; z2 = 1 so firm 2 pays no entry cost.
  CHECK(g.u(1, 3, x, 0) == doctest::Approx(std::log(10.0) - 1.4 - 1.0 + g.shocks[1].points[0]));
  // Staying out pays nothing.
  CHECK(g.u(0, 1, x, 3) == 0.0);

  // Next-period incumbency equals the action profile; size follows the chain.
  const int from = 1 * 4 + 0;  // s=6, nobody in
  double total = 0.0;
  for (int y = 0; y < 12; ++y) total += g.f(y, 3, from);
  CHECK(total == doctest::Approx(1.0));
  CHECK(g.f(0 * 4 + 3, 3, from) == doctest::Approx(0.2));
  CHECK(g.f(1 * 4 + 3, 3, from) == doctest::Approx(0.6));
  CHECK(g.f(1 * 4 + 0, 3, from) == 0.0);
}

TEST_CASE("experiment 2 game layout") {
  BasicGame g = build_experiment2(std::vector<double>{1.2, -0.8, -0.5, 1.0, 0.3}, -0.5, 0.5);
  REQUIRE(g.num_states() == 4);
  CHECK(g.discount == 0.9);
  // State z1=1, z2=0; both enter.
  const int x = 2, a = 3;
  CHECK(g.u(0, a, x, 0) == doctest::Approx(1.2 - 0.8 + 1.0 * -0.5 + g.shocks[0].points[0]));
  CHECK(g.u(1, a, x, 0) == doctest::Approx(1.2 - 0.8 - 0.5 + 1.0 * 0.5 + g.shocks[1].points[0]));
  // Exit value for an incumbent is kappa.
  CHECK(g.u(0, 0, x, 5) == doctest::Approx(0.3));
  CHECK(g.u(1, 0, x, 5) == 0.0);
  for (int b = 0; b < 4; ++b) CHECK(g.f(b, b, x) == 1.0);
}

TEST_CASE("theta_for names the offending coefficient") {
  GameTemplate t = experiment1_template();
  CHECK(theta_for(t, {{"EC", "RS", "FC", "RN"}, {4, 1, 3, 2}}) == std::vector<double>{1, 2, 3, 4});
  try {
    theta_for(t, {{"RS", "RN", "FC"}, {1, 2, 3}});
    FAIL("expected ModelError");
  } catch (const ModelError& e) {
    CHECK(std::string(e.what()).find("'EC'") != std::string::npos);
  }
  try {
    theta_for(t, {{"RS", "RN", "FC", "EC", "XX"}, {1, 2, 3, 4, 5}});
    FAIL("expected ModelError");
  } catch (const ModelError& e) {
    CHECK(std::string(e.what()).find("'XX'") != std::string::npos);
  }
}

TEST_CASE("model parsing rejects malformed descriptions") {
  CHECK_THROWS_AS(parse_model("{"), ModelError);
  CHECK_THROWS_AS(parse_model(R"({"template": "exp3"})"), ModelError);
  CHECK_THROWS_AS(parse_model(R"({"template": "exp1", "theta": {"RS": 1, "RN": 1, "FC": 1}})"), ModelError);
  CHECK_THROWS_AS(parse_model(R"({"template": "exp1", "discount": 1.0,
                                  "theta": {"RS": 1, "RN": 1, "FC": 1, "EC": 1}})"),
                  ModelError);
  CHECK_THROWS_AS(parse_model(R"({"template": "exp1", "fixed_keys": ["kappa"],
                                  "theta": {"RS": 1, "RN": 1, "FC": 1, "EC": 1}})"),
                  ModelError);
  try {
    parse_model(R"({"template": "exp1", "theta": {"RS": 1, "RN": 1, "FC": 1, "EC": 1, "Z": 0}})");
    FAIL("expected ModelError");
  } catch (const ModelError& e) {
    CHECK(std::string(e.what()).find("'Z'") != std::string::npos);
  }
}

TEST_CASE("experiment 2 model has four cells and fixes kappa") {
  Model m = parse_model(kExp2Model);
  CHECK(m.num_cells() == 4);
  CHECK(m.free_keys() == std::vector<std::string>{"m", "c", "e", "w"});
  CHECK(m.cell_covariates(1) == std::vector<double>{-1.0, 1.0});
  BasicGame g = m.build(3, {1.0, 0.0, 0.0, 0.0});
  CHECK(g.u(0, 0, 3, 0) == doctest::Approx(0.3));

  Model again = parse_model(model_to_json(m));
  CHECK(model_to_json(again) == model_to_json(m));
}

TEST_CASE("custom model parses and round-trips") {
  Model m = parse_model(kCustomModel);
  const BasicGame& g = m.custom_game;
  CHECK(g.n_players == 1);
  CHECK(g.num_states() == 2);
  CHECK(g.f(1, 1, 1) == 0.75);
  CHECK(g.u(0, 1, 1, 1) == 2.5);
  Model again = parse_model(model_to_json(m));
  CHECK(again.custom_game.payoff == g.payoff);
  CHECK(again.custom_game.transition == g.transition);

  // A transition row that does not sum to one is rejected.
  std::string bad = kCustomModel;
  bad.replace(bad.find("0.25, 0.75"), 10, "0.25, 0.70");
  CHECK_THROWS_AS(parse_model(bad), ModelError);
}

TEST_CASE("CCP CSV round trip is bit-exact and skips comment lines") {
  Model m = parse_model(kExp2Model);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.01, 1.0);
  CcpData data;
  for (int c = 0; c < m.num_cells(); ++c) {
    CCPTable t;
    t.n_states = 4;
    t.n_joint_actions = 4;
    for (int x = 0; x < 4; ++x) {
      double w[4], s = 0.0;
      for (double& v : w) s += (v = U(rng));
      for (double v : w) t.p.push_back(v / s);
    }
    data.cells.push_back(t);
  }
  const std::string csv = ccp_to_csv(m, data);
  CcpData back = ccp_from_csv(m, "# provenance line\n" + csv + "# trailing comment\n");
  REQUIRE(back.cells.size() == data.cells.size());
  for (size_t c = 0; c < data.cells.size(); ++c) CHECK(back.cells[c].p == data.cells[c].p);
  CHECK(ccp_to_csv(m, back) == csv);

  CHECK(format_double(0.1) == "0.1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
