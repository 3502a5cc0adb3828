#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "mce/mce_identifier.hpp"
#include "mce/model.hpp"

namespace mce {

// Which information structure defines membership. `private_shock` is the
// sharp set under the players-see-their-own-shock baseline; `null_info` is
// the outer set from the exact LP.
enum class Baseline { private_shock, null_info };
Baseline parse_baseline(const std::string& s);  // "private" | "null"
std::string to_string(Baseline b);

class IdentificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MembershipOptions {
  CriterionOptions criterion;
  // Skip the sharp program wherever the outer LP already rejects.
  bool outer_prune = true;
};

// Membership of one coefficient point, pooled over the covariate cells of
// the model: a point is a member when every cell is.
struct PointEvaluation {
  std::vector<double> theta;  // free coefficients
  bool member = false;
  Membership status = Membership::non_member;
  // Largest criterion over the cells evaluated. When the evaluation stopped
  // at the first failing cell this is a lower bound on the pooled value.
  double q_value = 0.0;
  bool outer_member = false;
  double outer_t = 0.0;
  bool sharp_evaluated = false;
  int failing_cell = -1;
  int restarts_used = 0;
  // Per-cell certificate rules, filled for sharp members.
  std::vector<std::vector<double>> certificates;
  std::vector<FeasibilityResult> cell_results;
};

// A model, its CCP data and a baseline; answers membership queries.
class IdentificationProblem {
 public:
  IdentificationProblem(const Model& model, const CcpData& data, Baseline baseline, MembershipOptions opts);

  const Model& model() const { return model_; }
  const CcpData& data() const { return data_; }
  Baseline baseline() const { return baseline_; }
  const MembershipOptions& options() const { return opts_; }
  int dim() const { return static_cast<int>(model_.free_keys().size()); }

  // Tolerance applied to the outer LP value. A null-information obedience
  // row is the sum of the private-signal rows it pools, so a sharp member
  // with criterion q has outer value at most (signals per player) * q; the
  // outer tolerance is scaled the same way so that sharp membership implies
  // outer membership at the level of decisions too.
  double outer_tolerance() const;

  // `warm` holds per-cell start rules (e.g. a neighbour's certificates).
  // With `stop_early` the cells stop at the first failure.
  PointEvaluation evaluate(const std::vector<double>& theta, const std::vector<std::vector<double>>* warm = nullptr,
                           bool stop_early = true) const;

 private:
  const Model& model_;
  const CcpData& data_;
  Baseline baseline_;
  MembershipOptions opts_;
};

struct ProjectionOptions {
  std::string method = "grid_bisect";  // grid_bisect | joint_nlp
  double step = 0.1;                   // sweep step along the direction
  double tol = 1e-3;                   // bisection tolerance on each boundary
  int probes = 16;                     // coarse points checked beyond a boundary
  double search_radius = 5.0;          // furthest distance from the anchor per side
  int jobs = 1;
  // joint_nlp: sequential LP iterations per start, the starts used (the
  // grid endpoint, then the anchor) and the weight on the obedience
  // relaxation in the merit function.
  int nlp_max_iters = 60;
  int nlp_starts = 1;
  double nlp_penalty = 1e3;
};

struct EndpointDiagnostics {
  double value = 0.0;
  std::vector<double> theta;
  bool at_search_limit = false;
  int evaluations = 0;
  int bisection_steps = 0;
  int probes_evaluated = 0;
  int probe_members = 0;
  double q_at_endpoint = 0.0;
  // Criterion at the closest rejected point beyond the endpoint.
  double q_beyond = 0.0;
  bool certified = false;
};

struct ProjectionResult {
  std::string label;               // coordinate name or "direction"
  std::vector<double> direction;   // over the free coefficients
  double anchor_value = 0.0;       // direction . anchor
  double lower = 0.0;
  double upper = 0.0;
  std::string method;
  EndpointDiagnostics lo;
  EndpointDiagnostics hi;
};

// Interval of direction . theta over the identified set, through `anchor`.
ProjectionResult project(const IdentificationProblem& problem, const std::vector<double>& direction,
                         const std::vector<double>& anchor, const ProjectionOptions& opts);
ProjectionResult project_coordinate(const IdentificationProblem& problem, const std::string& key,
                                    const std::vector<double>& anchor, const ProjectionOptions& opts);

struct ScanSpec {
  std::string x_key, y_key;
  double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
  double step = 0.1;
  std::vector<double> base;  // values for the other free coefficients
  int jobs = 1;
};

struct ScanGrid {
  std::string x_key, y_key;
  std::vector<double> xs, ys;
  // Row-major over (y, x): entry iy * xs.size() + ix.
  std::vector<char> sharp, outer;
  std::vector<double> q_sharp, t_outer;
  int violations() const;  // nodes that are sharp but not outer members
};

// Sharp regime: private-shock criterion; outer regime: null-information LP.
// The sharp program runs at every node unless `opts.outer_prune` is set.
ScanGrid scan_2d(const Model& model, const CcpData& data, const ScanSpec& spec, const MembershipOptions& opts);

struct ShrinkageRow {
  std::string coordinate;
  double lower0 = 0.0, upper0 = 0.0, lower1 = 0.0, upper1 = 0.0;
  double width0 = 0.0, width1 = 0.0;
  bool shrinks = false;  // width1 < width0
};

// Compares projections from two covariate designs coordinate by
// coordinate. Both sides must come from identical projection settings,
// passed here as opaque fingerprints.
std::vector<ShrinkageRow> shrinkage_report(const std::vector<ProjectionResult>& design0,
                                           const std::vector<ProjectionResult>& design1,
                                           const std::string& settings0, const std::string& settings1);

}  // namespace mce
