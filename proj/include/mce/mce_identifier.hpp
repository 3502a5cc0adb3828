#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mce/game_core.hpp"
#include "mce/linear_solvers.hpp"
#include "mce/mpe_solver.hpp"

namespace mce {

// One obedience constraint: player i at state x with signal `label`,
// recommended action `action`, contemplating `deviation`.
struct ObedienceRow {
  int player = 0;
  int x = 0;
  int label = 0;
  int action = 0;
  int deviation = 0;
  double value = 0.0;
};

// Denominator-free obedience terms
//   L = sum_{cells with this signal, a with a_i = action} psi*pi*sigma * dv_i(deviation, a, x, e_i)
// with dv built from V. Rows with deviation == action are included and are
// identically zero.
std::vector<ObedienceRow> obedience_residuals(const BasicGame& g, const DecisionRule& rule, const ValueFunction& V);

enum class Membership { member, non_member, consistency_infeasible };
std::string to_string(Membership m);

struct FeasibilityResult {
  double q_value = 0.0;
  Membership status = Membership::non_member;
  DecisionRule sigma;
  ValueFunction V;
  double e3_residual = 0.0;
  double e4_residual = 0.0;
  int restarts_used = 0;
  std::uint64_t seed = 0;
  std::vector<double> restart_q;
  bool polished = false;
};

struct CriterionOptions {
  int restarts = 20;
  std::uint64_t seed = 0;
  double member_tol = 1e-6;
  int alt_max_iters = 60;
  double alt_tol = 1e-10;
  // Restarts whose alternation ends below this level get the joint
  // linearised polish on (sigma, V).
  double polish_threshold = 1e-2;
  int polish_max_iters = 60;
  // Only the best few restarts are polished.
  int polish_candidates = 2;
  // Polish stops once the criterion has fallen by less than this fraction
  // over the last `polish_window` iterations (and is still far from zero).
  int polish_window = 8;
  double polish_min_progress = 0.1;
  // Decision rules tried before the default starts, e.g. the certificate of a
  // nearby member. Entries with the wrong size or that do not reproduce the
  // CCPs are ignored.
  std::vector<std::vector<double>> warm_starts;
  bool early_stop = true;
  int jobs = 1;
};

// Q(theta) for a fixed game: the smallest uniform relaxation t of the
// obedience constraints over (sigma, V) that reproduce phi with the
// data-fixed value equations.
FeasibilityResult criterion_q(const BasicGame& g, const InformationStructure& info, const CCPTable& phi,
                              const CriterionOptions& opts = {});

struct NullInfoResult {
  bool member = false;
  double t = 0.0;
  LpStatus lp_status = LpStatus::infeasible;
  DecisionRule sigma;
  ValueFunction V;
};

// Exact LP test under the null structure. Member iff the relaxation level t
// is at most `tol`.
NullInfoResult null_info_member(const BasicGame& g, const CCPTable& phi, double tol = 1e-9);

// LP form of the null-structure program, exposed for MPS dumps. Columns are
// sigma (cell-major), then V (player-major), then t.
LinearProgram null_info_lp(const BasicGame& g, const CCPTable& phi);

// Max |e3| and |e4| residuals of a certificate against phi.
void certificate_residuals(const BasicGame& g, const CCPTable& phi, const DecisionRule& rule, const ValueFunction& V,
                           double& e3, double& e4);

}  // namespace mce
