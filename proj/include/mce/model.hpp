#pragma once

#include <string>
#include <vector>

#include "mce/game_core.hpp"
#include "mce/mpe_solver.hpp"

namespace mce {

// A model description as read from a model file: a payoff template plus the
// primitives that do not depend on the coefficients.
//
// Experiment 2 keeps a covariate w_i that is fixed within a market. The
// model then stands for one game per covariate cell (w_1, w_2) drawn from
// covariate_support x covariate_support, and a CCP data set carries one
// table per cell.
struct Model {
  std::string template_name = "exp1";  // exp1 | exp2 | custom
  ShockSpec shock;
  double discount = 0.96;
  // Full coefficient point (data-generating values for generate-ccp and the
  // default anchor elsewhere).
  NamedTheta theta;
  // Coefficients held at their value in `theta` during identification.
  std::vector<std::string> fixed_keys;
  std::vector<double> covariate_support;
  // template == custom: the game itself; there are no coefficients.
  BasicGame custom_game;

  int num_cells() const;
  // Covariate values (w_1, w_2) of a cell; empty for single-cell models.
  std::vector<double> cell_covariates(int cell) const;
  std::vector<std::string> cell_factor_names() const;

  // Coefficient names in template order, and the subset left free.
  std::vector<std::string> all_keys() const;
  std::vector<std::string> free_keys() const;

  // The game for one cell at a point given over the free keys; fixed keys
  // take their values from `theta`.
  BasicGame build(int cell, const std::vector<double>& free_values) const;
  // Free-key values of `theta`, in free_keys() order.
  std::vector<double> free_values(const NamedTheta& point) const;
  std::vector<double> free_values() const { return free_values(theta); }
};

// Parsing throws ModelError with a message naming the offending field.
Model parse_model(const std::string& json_text);
Model load_model(const std::string& path);
std::string model_to_json(const Model& m);

// Conditional choice probabilities for every covariate cell of a model.
struct CcpData {
  std::vector<CCPTable> cells;
};

// CSV layout: one column per covariate factor, one per state factor, then
// "action" (joint action label) and "probability". Rows are ordered by
// cell, state, joint action. Probabilities use the shortest decimal that
// reads back to the same double. Lines starting with '#' are comments.
std::string ccp_to_csv(const Model& m, const CcpData& data);
CcpData ccp_from_csv(const Model& m, const std::string& csv_text);
CcpData load_ccp(const Model& m, const std::string& path);

// Transition kernel f(y | a, x) under the model as CSV with columns
// state factors, action, next-state factors, probability.
std::string transition_to_csv(const BasicGame& g);

// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace mce
