#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "mce/linear_solvers.hpp"
#include "mce_identifier/structure.hpp"

namespace mce::detail {

// The bilinear feasibility program for one game and one CCP table.
//
// Given sigma, the value equations with data-fixed continuation
//   K V_i = R_i sigma,   K = I - delta * sum_a phi(a|x) f(.|a,x)
// determine V uniquely, so the true criterion of a rule is the largest
// obedience row evaluated at (sigma, V(sigma)).
class SharpProgram {
 public:
  SharpProgram(const BasicGame& g, const InformationStructure& info, const CCPTable& phi);

  int sigma_size() const { return ns_; }
  int value_size() const { return N_ * X_; }
  const CellLayout& layout() const { return *layout_; }
  std::shared_ptr<const CellLayout> layout_ptr() const { return layout_; }

  std::vector<double> value_of(const std::vector<double>& sigma) const;
  std::vector<double> rows(const std::vector<double>& sigma, const std::vector<double>& V) const;
  // max(0, largest row) at (sigma, V(sigma)); V(sigma) returned through V.
  double criterion(const std::vector<double>& sigma, std::vector<double>* V = nullptr) const;

  std::vector<double> phi_rule() const;
  std::vector<double> random_rule(std::mt19937_64& rng);

  // Given V, minimise the obedience relaxation over sigma one state at a time.
  std::vector<double> best_sigma_given_value(const std::vector<double>& V);

  // R_i sigma for every (player, state): the right-hand side of the value
  // equations.
  std::vector<double> flow_values(const std::vector<double>& sigma) const;

  // Sensitivities of the obedience rows and of R_i sigma to coefficient
  // changes, for linearisations that also move the coefficients. Column
  // cols[j] of the host LP is the change in coefficient j.
  struct ThetaTerms {
    std::vector<int> cols;
    std::vector<std::vector<double>> drow;   // [j][row]
    std::vector<std::vector<double>> dflow;  // [j][player * X + state]
  };

  // Appends the linearisation of the program around (sigma, V) to `lp`:
  // sigma and V columns in boxes of radius rs and rv, obedience rows bounded
  // by column `tcol`, consistency, simplex and value equations. Returns the
  // index of the first sigma column; V columns follow the sigma columns.
  int append_linearisation(LinearProgram& lp, const std::vector<double>& sigma, const std::vector<double>& V,
                           double rs, double rv, int tcol, const ThetaTerms* theta) const;
  void clamp_sigma(std::vector<double>& sigma) const;

  // One trust-region step of the linearisation of sigma * V around
  // (sigma, V). Returns false if the subproblem fails.
  bool linearised_step(const std::vector<double>& sigma, const std::vector<double>& V, double radius_sigma,
                       double radius_value, std::vector<double>& sigma_out, std::vector<double>& V_out,
                       double& t_model);

  void reset_bases();

  // Largest deviation from e4 and the simplex rows.
  double consistency_gap(const std::vector<double>& sigma) const;

 private:
  LinearProgram block_lp(int x, const std::vector<double>* gv, bool with_t) const;

  const BasicGame& g_;
  const CCPTable& phi_;
  std::shared_ptr<const CellLayout> layout_;
  ObStructure st_;
  int X_, A_, N_, ns_;
  std::vector<double> upper_;  // 0 where phi(a|x) = 0
  std::vector<std::vector<double>> flow_;  // per player, weight * u at each sigma index
  Eigen::MatrixXd K_;
  Eigen::PartialPivLU<Eigen::MatrixXd> K_lu_;
  std::vector<Basis> block_basis_;
  Basis joint_basis_;
};

}  // namespace mce::detail
