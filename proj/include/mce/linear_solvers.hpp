#pragma once

#include <Eigen/Dense>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mce {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowSense { le, eq, ge };

struct LpEntry {
  int row;
  int col;
  double value;
};

// min c'x  s.t.  row_r(x) {<=,=,>=} rhs_r,  lower <= x <= upper.
struct LinearProgram {
  std::vector<double> objective;
  std::vector<double> col_lower;
  std::vector<double> col_upper;
  std::vector<RowSense> sense;
  std::vector<double> rhs;
  std::vector<LpEntry> entries;

  int num_cols() const { return static_cast<int>(objective.size()); }
  int num_rows() const { return static_cast<int>(rhs.size()); }

  int add_col(double cost, double lower, double upper);
  int add_row(RowSense s, double b);
  void add_entry(int row, int col, double value);
  void add_row(const std::vector<int>& cols, const std::vector<double>& vals, RowSense s, double b);
};

enum class LpStatus { optimal, infeasible, unbounded };
const char* to_string(LpStatus s);

// Variables 0..n-1 are structural, n..n+m-1 are row activities.
struct Basis {
  std::vector<int> head;
  std::vector<signed char> state;
  bool empty() const { return head.empty(); }
};

struct LpOutcome {
  LpStatus status = LpStatus::infeasible;
  std::vector<double> solution;
  std::vector<double> row_activity;
  std::vector<double> duals;
  double objective_value = 0.0;
  int iterations = 0;
  Basis basis;
};

struct SimplexOptions {
  double primal_tol = 1e-9;
  double dual_tol = 1e-9;
  double pivot_tol = 1e-9;
  int max_iterations = 0;  // 0 picks a size-based limit
  int refactor_interval = 80;
  int degenerate_before_bland = 60;
  const Basis* warm_start = nullptr;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalBreakdown : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularMatrix : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void validate(const LinearProgram& lp);

LpOutcome solve_lp(const LinearProgram& lp, const SimplexOptions& opts = {});

// Largest violation of a row or bound by x.
double primal_violation(const LinearProgram& lp, const std::vector<double>& x);

Eigen::VectorXd solve_linear_system(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

void write_mps(const LinearProgram& lp, std::ostream& out, const std::string& name = "MCELP");

}  // namespace mce
