#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mce {

enum class ShockFamily { logistic, standard_normal };

struct ShockSpec {
  ShockFamily family = ShockFamily::logistic;
  int n_points = 8;
};

struct ShockGrid {
  std::vector<double> points;
  std::vector<double> weights;
  int size() const { return static_cast<int>(points.size()); }
};

ShockGrid discretize_shock(const ShockSpec& spec);
ShockFamily parse_shock_family(const std::string& name);
std::string to_string(ShockFamily f);

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Mixed-radix index over per-player sizes; player 0 is the most significant
// digit, so for two binary players the joint index is a1*2 + a2.
class Radix {
 public:
  Radix() = default;
  explicit Radix(std::vector<int> sizes);
  int total() const { return total_; }
  int digit(int joint, int i) const { return (joint / stride_[i]) % sizes_[i]; }
  int with_digit(int joint, int i, int value) const { return joint + (value - digit(joint, i)) * stride_[i]; }
  int size(int i) const { return sizes_[i]; }
  int count() const { return static_cast<int>(sizes_.size()); }

 private:
  std::vector<int> sizes_;
  std::vector<int> stride_;
  int total_ = 1;
};

struct BasicGame {
  int n_players = 0;
  std::vector<std::vector<std::string>> action_labels;
  std::vector<std::string> state_labels;
  std::vector<ShockGrid> shocks;
  // f(y | a, x) stored at ((a * X) + x) * X + y.
  std::vector<double> transition;
  // u_i(a, x, e_i) stored per player at (a * X + x) * E_i + e_i.
  std::vector<std::vector<double>> payoff;
  // Optional state-dependent prior psi(e | x) at x * E + e; empty means the
  // product of the per-player shock weights.
  std::vector<double> prior_table;
  double discount = 0.0;
  std::vector<std::string> player_labels;
  // Optional factor decomposition of states, used for labelled CSV output.
  std::vector<std::string> state_factor_names;
  std::vector<std::vector<std::string>> state_factor_values;

  Radix actions;
  Radix joint_shocks;

  // Call after filling the fields above; sets up the index helpers and
  // checks all invariants.
  void finalize();
  void validate() const;

  int num_states() const { return static_cast<int>(state_labels.size()); }
  int num_joint_actions() const { return actions.total(); }
  int num_joint_shocks() const { return joint_shocks.total(); }
  int num_actions(int i) const { return actions.size(i); }
  int num_shocks(int i) const { return shocks[i].size(); }

  double f(int y, int a, int x) const { return transition[(static_cast<size_t>(a) * num_states() + x) * num_states() + y]; }
  double u(int i, int a, int x, int ei) const {
    return payoff[i][(static_cast<size_t>(a) * num_states() + x) * num_shocks(i) + ei];
  }
  double& u_ref(int i, int a, int x, int ei) {
    return payoff[i][(static_cast<size_t>(a) * num_states() + x) * num_shocks(i) + ei];
  }
  std::string joint_action_label(int a) const;
};

// psi(. | x) over joint shock indices.
std::vector<double> prior(const BasicGame& game, int x);

enum class InfoTag { null_info, private_shock, general };
std::string to_string(InfoTag t);

struct InformationStructure {
  InfoTag tag = InfoTag::null_info;
  std::vector<int> n_signals;
  // pi(t | x, e) at (x * E + e) * T + t, t a joint signal index.
  std::vector<double> kernel;
  Radix signals;

  static InformationStructure null_info(const BasicGame& g);
  static InformationStructure private_shock(const BasicGame& g);
  static InformationStructure general(const BasicGame& g, std::vector<int> n_signals, std::vector<double> kernel);
  void validate(const BasicGame& g) const;
  double pi(int t, int x, int e, int n_joint_shocks) const {
    return kernel[(static_cast<size_t>(x) * n_joint_shocks + e) * signals.total() + t];
  }
};

// A payoff template: named coefficients plus a builder. Payoffs must be
// affine in the coefficient vector; identification code relies on it.
struct GameTemplate {
  std::string name;
  std::vector<std::string> keys;
  std::function<BasicGame(const std::vector<double>&)> build;

  int dim() const { return static_cast<int>(keys.size()); }
  int key_index(const std::string& key) const;
};

struct NamedTheta {
  std::vector<std::string> keys;
  std::vector<double> values;
};

// Orders a named coefficient set by the template keys. Throws ModelError
// naming the first missing or unknown key.
std::vector<double> theta_for(const GameTemplate& tpl, const NamedTheta& theta);

struct Exp1Options {
  int shock_points = 8;
  double discount = 0.96;
};

struct Exp2Options {
  int shock_points = 8;
  double discount = 0.9;
};

// theta order: RS, RN, FC, EC.
BasicGame build_experiment1(const NamedTheta& theta, const Exp1Options& opts = {});
BasicGame build_experiment1(const std::vector<double>& theta, const Exp1Options& opts = {});
GameTemplate experiment1_template(const Exp1Options& opts = {});

// theta order: m, c, e, w, kappa.
BasicGame build_experiment2(const NamedTheta& theta, double w1, double w2, const Exp2Options& opts = {});
BasicGame build_experiment2(const std::vector<double>& theta, double w1, double w2, const Exp2Options& opts = {});
GameTemplate experiment2_template(double w1, double w2, const Exp2Options& opts = {});

// Template over the first four Experiment 2 coefficients with kappa held at
// a known value.
GameTemplate experiment2_known_kappa_template(double w1, double w2, double kappa, const Exp2Options& opts = {});

}  // namespace mce
