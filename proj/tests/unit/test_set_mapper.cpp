#include <cmath>

#include "doctest.h"
#include "mce/set_mapper.hpp"

using namespace mce;

namespace {

struct Fixture {
  Model model;
  CcpData data;
};

const Fixture& exp1() {
  static const Fixture f = [] {
    Fixture x;
    x.model = parse_model(R"({"template": "exp1", "theta": {"RS": 1.0, "RN": 1.4, "FC": 1.0, "EC": 1.0}})");
    MpeOptions o;
    o.restarts = 8;
    x.data.cells.push_back(solve_mpe(x.model.build(0, x.model.free_values()), o).chosen().phi);
    return x;
  }();
  return f;
}

MembershipOptions quick() {
  MembershipOptions o;
  o.criterion.restarts = 4;
  return o;
}

ProjectionResult fake(const std::string& label, double lo, double hi) {
  ProjectionResult r;
  r.label = label;
  r.lower = lo;
  r.upper = hi;
  return r;
}

}  // namespace

TEST_CASE("null-baseline projections contain the truth") {
  const Fixture& f = exp1();
  IdentificationProblem prob(f.model, f.data, Baseline::null_info, quick());
  ProjectionOptions po;
  po.step = 0.25;
  po.tol = 1e-2;
  po.probes = 4;
  po.search_radius = 8.0;
  const std::vector<double> truth = f.model.free_values();
  for (const std::string key : {"RS", "EC"}) {
    ProjectionResult r = project_coordinate(prob, key, truth, po);
    const double t = truth[key == "RS" ? 0 : 3];
    CAPTURE(key);
    CHECK(r.lower <= t);
    CHECK(r.upper >= t);
    CHECK(r.upper - r.lower > 0.0);
    CHECK(r.lo.value == r.lower);
  }
}

TEST_CASE("projection input checks") {
  const Fixture& f = exp1();
  IdentificationProblem prob(f.model, f.data, Baseline::null_info, quick());
  ProjectionOptions po;
  CHECK_THROWS(project(prob, {0, 0, 0, 0}, f.model.free_values(), po));
  CHECK_THROWS(project(prob, {1, 0, 0}, f.model.free_values(), po));
  CHECK_THROWS_AS(project(prob, {1, 0, 0, 0}, {10.0, 10.0, 1.0, 1.0}, po), IdentificationError);
  po.method = "simulated_annealing";
  CHECK_THROWS(project(prob, {1, 0, 0, 0}, f.model.free_values(), po));
  CHECK_THROWS(project_coordinate(prob, "kappa", f.model.free_values(), ProjectionOptions{}));
}

TEST_CASE("a point with very large market-size and competition effects is outside the outer set") {
  const Fixture& f = exp1();
  IdentificationProblem prob(f.model, f.data, Baseline::null_info, quick());
  PointEvaluation e = prob.evaluate({10.0, 10.0, 1.0, 1.0});
  CHECK_FALSE(e.outer_member);
  CHECK_FALSE(e.member);
  CHECK(prob.evaluate(f.model.free_values()).member);
}

TEST_CASE("sharp membership at the truth carries certificates") {
  const Fixture& f = exp1();
  IdentificationProblem prob(f.model, f.data, Baseline::private_shock, quick());
  PointEvaluation e = prob.evaluate(f.model.free_values());
  CHECK(e.member);
  CHECK(e.outer_member);
  CHECK(e.sharp_evaluated);
  CHECK(e.certificates.size() == 1);
  CHECK(prob.outer_tolerance() == doctest::Approx(8e-6));
}

TEST_CASE("small scan has no sharp-but-not-outer nodes") {
  const Fixture& f = exp1();
  ScanSpec spec;
  spec.x_key = "RS";
  spec.y_key = "RN";
  spec.x_min = 0.8;
  spec.x_max = 1.2;
  spec.y_min = 1.2;
  spec.y_max = 1.6;
  spec.step = 0.2;
  spec.base = {1.0, 1.4, 1.0, 1.0};
  MembershipOptions o = quick();
  o.outer_prune = false;
  ScanGrid grid = scan_2d(f.model, f.data, spec, o);
  REQUIRE(grid.xs.size() == 3);
  REQUIRE(grid.ys.size() == 3);
  CHECK(grid.xs[1] == doctest::Approx(1.0));
  CHECK(grid.violations() == 0);
  // The centre node is the truth.
  CHECK(grid.sharp[4]);
  CHECK(grid.outer[4]);
  for (size_t k = 0; k < grid.sharp.size(); ++k)
    if (grid.sharp[k]) CHECK(grid.outer[k]);
}

TEST_CASE("shrinkage report") {
  std::vector<ProjectionResult> d0 = {fake("m", 1.0, 2.0), fake("c", -1.0, 0.0)};
  SUBCASE("identical inputs give zero shrinkage") {
    auto rows = shrinkage_report(d0, d0, "s", "s");
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) {
      CHECK(r.width0 == r.width1);
      CHECK_FALSE(r.shrinks);
    }
  }
  SUBCASE("narrower second design") {
    std::vector<ProjectionResult> d1 = {fake("m", 1.2, 1.8), fake("c", -1.0, 0.0)};
    auto rows = shrinkage_report(d0, d1, "s", "s");
    CHECK(rows[0].shrinks);
    CHECK(rows[0].width1 == doctest::Approx(0.6));
    CHECK_FALSE(rows[1].shrinks);
  }
  SUBCASE("mismatched settings or coordinates are errors") {
    CHECK_THROWS_AS(shrinkage_report(d0, d0, "s", "t"), ModelError);
    std::vector<ProjectionResult> d1 = {fake("m", 1.2, 1.8), fake("e", -1.0, 0.0)};
    CHECK_THROWS_AS(shrinkage_report(d0, d1, "s", "s"), ModelError);
  }
}

TEST_CASE("baseline names") {
  CHECK(parse_baseline("private") == Baseline::private_shock);
  CHECK(parse_baseline("null") == Baseline::null_info);
  CHECK_THROWS(parse_baseline("public"));
}
