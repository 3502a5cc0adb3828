#include <Eigen/LU>
#include <cmath>

#include "mce/linear_solvers.hpp"

namespace mce {

Eigen::VectorXd solve_linear_system(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  if (a.rows() != a.cols()) throw DimensionMismatch("linear system matrix is not square");
  if (a.rows() != b.size()) throw DimensionMismatch("right-hand side length does not match the matrix");
  if (a.rows() == 0) return Eigen::VectorXd();
  if (!a.allFinite() || !b.allFinite()) throw std::invalid_argument("non-finite entry in linear system");

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  // PartialPivLU never reports failure, so singularity is detected from the
  // factor diagonal and the condition estimate.
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const auto& lu_mat = lu.matrixLU();
  for (Eigen::Index k = 0; k < lu_mat.rows(); ++k)
    if (!(std::abs(lu_mat(k, k)) > 1e-14 * scale)) throw SingularMatrix("matrix is singular to working precision");
  if (lu.rcond() < 1e-15) throw SingularMatrix("matrix is numerically singular (rcond below 1e-15)");

  Eigen::VectorXd x = lu.solve(b);
  for (int pass = 0; pass < 2; ++pass) {
    Eigen::VectorXd r = b - a * x;
    if (r.lpNorm<Eigen::Infinity>() <= 1e-13 * (1.0 + b.lpNorm<Eigen::Infinity>())) break;
    x += lu.solve(r);
  }
  return x;
}

}  // namespace mce
