#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mce/game_core.hpp"

namespace mce {

// phi(a | x), stored at x * A + a.
struct CCPTable {
  int n_states = 0;
  int n_joint_actions = 0;
  std::vector<double> p;

  double at(int x, int a) const { return p[static_cast<size_t>(x) * n_joint_actions + a]; }
  double& at(int x, int a) { return p[static_cast<size_t>(x) * n_joint_actions + a]; }
  void validate(double tol = 1e-12) const;
};

// V_i(x), stored at i * X + x.
struct ValueFunction {
  int n_players = 0;
  int n_states = 0;
  std::vector<double> v;

  double at(int i, int x) const { return v[static_cast<size_t>(i) * n_states + x]; }
  double& at(int i, int x) { return v[static_cast<size_t>(i) * n_states + x]; }
};

// beta_i(a_i | x, t_i) stored per player at (x * T_i + t_i) * A_i + a_i.
// Under the private-shock structure t_i is player i's own shock index.
struct StrategyProfile {
  std::vector<std::vector<double>> beta;

  double at(const BasicGame& g, int i, int x, int ti, int ai) const {
    return beta[i][(static_cast<size_t>(x) * g.num_shocks(i) + ti) * g.num_actions(i) + ai];
  }
};

// One support point (x, e, t) of psi * pi; the mediator conditions on it.
struct DecisionCell {
  int x;
  int e;
  int t;
  double weight;
};

struct CellLayout {
  std::vector<DecisionCell> cells;
  std::vector<int> state_begin;  // cells of state x are [state_begin[x], state_begin[x+1])
  std::vector<int> labels;       // signal of player i in cell c at c * n_players + i
  std::vector<int> n_labels;     // per-player signal count
  int n_players = 0;

  static std::shared_ptr<const CellLayout> build(const BasicGame& g, const InformationStructure& info);
  int size() const { return static_cast<int>(cells.size()); }
  int label(int c, int i) const { return labels[static_cast<size_t>(c) * n_players + i]; }
};

// sigma(a | cell), stored at cell * A + a.
struct DecisionRule {
  std::shared_ptr<const CellLayout> layout;
  int n_joint_actions = 0;
  std::vector<double> sigma;

  double at(int c, int a) const { return sigma[static_cast<size_t>(c) * n_joint_actions + a]; }
  void validate(double tol = 1e-10) const;
};

DecisionRule product_rule(const BasicGame& g, const StrategyProfile& beta);
CCPTable induced_ccp(const BasicGame& g, const DecisionRule& rule);

ValueFunction ex_ante_value(const BasicGame& g, const DecisionRule& rule);
ValueFunction ex_ante_value(const BasicGame& g, const StrategyProfile& beta);

// v_i(a, x, e_i) with the same layout as BasicGame::payoff.
struct OutcomeValue {
  std::vector<std::vector<double>> v;
  double at(const BasicGame& g, int i, int a, int x, int ei) const {
    return v[i][(static_cast<size_t>(a) * g.num_states() + x) * g.num_shocks(i) + ei];
  }
  // Gain to player i from switching to action dev in outcome (a, x, e_i).
  double deviation(const BasicGame& g, int i, int dev, int a, int x, int ei) const {
    return at(g, i, g.actions.with_digit(a, i, dev), x, ei) - at(g, i, a, x, ei);
  }
};

OutcomeValue outcome_value(const BasicGame& g, const ValueFunction& V);

enum class SelectionPolicy { first, max_joint_activity };
SelectionPolicy parse_selection_policy(const std::string& s);
std::string to_string(SelectionPolicy p);

struct MpeOptions {
  double damping = 0.5;
  double ccp_tol = 1e-10;
  double tie_tol = 1e-12;
  double residual_tol = 1e-8;
  int max_sweeps = 10000;
  int restarts = 16;
  std::uint64_t seed = 0;
  SelectionPolicy policy = SelectionPolicy::first;
  int jobs = 1;
};

struct MpeRun {
  int index = 0;
  bool converged = false;
  int sweeps = 0;
  double ccp_change = 0.0;
  double deviation_residual = 0.0;
  StrategyProfile beta;
  CCPTable phi;
  ValueFunction V;
  std::string message;
};

struct MpeResult {
  std::vector<MpeRun> runs;
  int selected = -1;
  std::uint64_t seed = 0;
  const MpeRun& chosen() const { return runs.at(selected); }
};

class MpeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Uniform draw on the simplex for every (x, e_i) row of every player.
StrategyProfile random_profile(const BasicGame& g, std::uint64_t seed, int run);
StrategyProfile uniform_profile(const BasicGame& g);

MpeRun solve_mpe_from(const BasicGame& g, const StrategyProfile& start, const MpeOptions& opts);

// Multi-start damped best response; run k starts from random_profile(seed, k).
MpeResult solve_mpe(const BasicGame& g, const MpeOptions& opts = {});

// Index of the selected run among converged ones. Throws MpeError when no
// run qualifies.
int select_equilibrium(const std::vector<MpeRun>& runs, SelectionPolicy policy);

// Largest expected one-shot deviation gain over on-support actions.
double deviation_residual(const BasicGame& g, const StrategyProfile& beta, const ValueFunction& V);

// Sum over states of the probability that every player takes its last
// action (the joint action (1,1) for binary entry games).
double joint_activity(const BasicGame& g, const CCPTable& phi);

}  // namespace mce
