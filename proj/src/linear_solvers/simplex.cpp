// Bounded primal revised simplex.
//
// Every row r gets a logical variable s_r with A x - s = 0, so row senses
// become bounds on s_r and the all-logical basis (-I) is always available.
// Phase 1 minimises the sum of bound violations of the basic variables; the
// cost vector is rebuilt every iteration, so phases switch automatically.
// The basis is kept as a sparse LU factorisation plus a product-form eta
// file that is discarded on each refactorisation.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "mce/linear_solvers.hpp"

namespace mce {

int LinearProgram::add_col(double cost, double lower, double upper) {
  objective.push_back(cost);
  col_lower.push_back(lower);
  col_upper.push_back(upper);
  return num_cols() - 1;
}

int LinearProgram::add_row(RowSense s, double b) {
  sense.push_back(s);
  rhs.push_back(b);
  return num_rows() - 1;
}

void LinearProgram::add_entry(int row, int col, double value) {
  if (value != 0.0) entries.push_back({row, col, value});
}

void LinearProgram::add_row(const std::vector<int>& cols, const std::vector<double>& vals, RowSense s,
                            double b) {
  if (cols.size() != vals.size()) throw DimensionMismatch("row index/value lengths differ");
  int r = add_row(s, b);
  for (size_t k = 0; k < cols.size(); ++k) add_entry(r, cols[k], vals[k]);
}

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::optimal:
      return "optimal";
    case LpStatus::infeasible:
      return "infeasible";
    case LpStatus::unbounded:
      return "unbounded";
  }
  return "unknown";
}

void validate(const LinearProgram& lp) {
  const size_t n = lp.objective.size();
  if (lp.col_lower.size() != n || lp.col_upper.size() != n)
    throw DimensionMismatch("bound vectors do not match the number of columns");
  if (lp.sense.size() != lp.rhs.size()) throw DimensionMismatch("row sense and rhs lengths differ");
  for (const auto& e : lp.entries) {
    if (e.row < 0 || e.row >= lp.num_rows() || e.col < 0 || e.col >= lp.num_cols())
      throw DimensionMismatch("constraint entry outside the declared dimensions");
    if (std::isnan(e.value)) throw std::invalid_argument("NaN constraint coefficient");
  }
  for (size_t j = 0; j < n; ++j) {
    if (std::isnan(lp.objective[j]) || std::isnan(lp.col_lower[j]) || std::isnan(lp.col_upper[j]))
      throw std::invalid_argument("NaN in objective or bounds");
    if (lp.col_lower[j] > lp.col_upper[j]) throw std::invalid_argument("column lower bound exceeds upper bound");
  }
  for (double b : lp.rhs)
    if (std::isnan(b)) throw std::invalid_argument("NaN right-hand side");
}

double primal_violation(const LinearProgram& lp, const std::vector<double>& x) {
  std::vector<double> act(lp.num_rows(), 0.0);
  for (const auto& e : lp.entries) act[e.row] += e.value * x[e.col];
  double worst = 0.0;
  for (int r = 0; r < lp.num_rows(); ++r) {
    double d = act[r] - lp.rhs[r];
    if (lp.sense[r] == RowSense::le) worst = std::max(worst, d);
    else if (lp.sense[r] == RowSense::ge) worst = std::max(worst, -d);
    else worst = std::max(worst, std::abs(d));
  }
  for (int j = 0; j < lp.num_cols(); ++j) {
    worst = std::max(worst, lp.col_lower[j] - x[j]);
    worst = std::max(worst, x[j] - lp.col_upper[j]);
  }
  return worst;
}

namespace {

enum : signed char { kBasic = 0, kLower = 1, kUpper = 2, kFree = 3 };

using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

struct Eta {
  int pos;
  double pivot;
  std::vector<int> idx;
  std::vector<double> val;
};

class RevisedSimplex {
 public:
  RevisedSimplex(const LinearProgram& lp, const SimplexOptions& opts) : lp_(lp), opt_(opts) {
    n_ = lp.num_cols();
    m_ = lp.num_rows();
    N_ = n_ + m_;
    A_.resize(m_, n_);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(lp.entries.size());
    for (const auto& e : lp.entries) trip.emplace_back(e.row, e.col, e.value);
    A_.setFromTriplets(trip.begin(), trip.end());
    A_.makeCompressed();

    lo_.resize(N_);
    up_.resize(N_);
    cost_.assign(N_, 0.0);
    for (int j = 0; j < n_; ++j) {
      lo_[j] = lp.col_lower[j];
      up_[j] = lp.col_upper[j];
      cost_[j] = lp.objective[j];
    }
    for (int r = 0; r < m_; ++r) {
      double b = lp.rhs[r];
      lo_[n_ + r] = lp.sense[r] == RowSense::le ? -kInf : b;
      up_[n_ + r] = lp.sense[r] == RowSense::ge ? kInf : b;
    }
    x_.assign(N_, 0.0);
    state_.assign(N_, kLower);
    head_.assign(m_, 0);
    max_iter_ = opt_.max_iterations > 0 ? opt_.max_iterations : std::max(20000, 60 * (n_ + m_));
  }

  LpOutcome run() {
    bool warm = opt_.warm_start && load_warm(*opt_.warm_start);
    if (!warm) slack_basis();
    factor_or_recover();
    compute_basic_values();

    std::vector<double> cB(m_), d_dummy;
    int degenerate = 0;
    bool fresh = true;
    for (iter_ = 0; iter_ < max_iter_; ++iter_) {
      if (static_cast<int>(etas_.size()) >= opt_.refactor_interval) {
        factor_or_recover();
        compute_basic_values();
        fresh = true;
      }
      bool phase1 = false;
      for (int p = 0; p < m_; ++p) {
        int j = head_[p];
        if (x_[j] < lo_[j] - opt_.primal_tol) {
          cB[p] = -1.0;
          phase1 = true;
        } else if (x_[j] > up_[j] + opt_.primal_tol) {
          cB[p] = 1.0;
          phase1 = true;
        } else {
          cB[p] = 0.0;
        }
      }
      if (!phase1)
        for (int p = 0; p < m_; ++p) cB[p] = cost_[head_[p]];
      Eigen::VectorXd y = btran(cB);

      bool bland = degenerate >= opt_.degenerate_before_bland;
      int q = -1;
      double dq = 0.0, best = 0.0;
      for (int j = 0; j < N_; ++j) {
        signed char s = state_[j];
        if (s == kBasic) continue;
        if (lo_[j] == up_[j]) continue;
        double d = phase1 ? 0.0 : cost_[j];
        if (j < n_) {
          for (SpMat::InnerIterator it(A_, j); it; ++it) d -= y[it.row()] * it.value();
        } else {
          d += y[j - n_];
        }
        bool ok = (s == kLower && d < -opt_.dual_tol) || (s == kUpper && d > opt_.dual_tol) ||
                  (s == kFree && std::abs(d) > opt_.dual_tol);
        if (!ok) continue;
        if (bland) {
          q = j;
          dq = d;
          break;
        }
        if (std::abs(d) > best) {
          best = std::abs(d);
          q = j;
          dq = d;
        }
      }

      if (q < 0) {
        if (!fresh) {
          factor_or_recover();
          compute_basic_values();
          fresh = true;
          continue;
        }
        if (snaps_ < 3 && snap_nonbasic()) {
          ++snaps_;
          compute_basic_values();
          continue;
        }
        LpOutcome out;
        out.iterations = iter_;
        out.status = phase1 ? LpStatus::infeasible : LpStatus::optimal;
        finish(out, y);
        return out;
      }

      Eigen::VectorXd alpha = ftran_column(q);
      const double dir = dq < 0 ? 1.0 : -1.0;

      // Harris two-pass ratio test.
      double theta_max = kInf;
      for (int p = 0; p < m_; ++p) {
        double a = alpha[p];
        if (std::abs(a) <= opt_.pivot_tol) continue;
        double rate = -dir * a;
        double lim;
        if (!limit(p, rate, opt_.primal_tol, lim)) continue;
        theta_max = std::min(theta_max, lim);
      }
      double range = dir > 0 ? up_[q] - x_[q] : x_[q] - lo_[q];
      if (range < kInf && range <= theta_max) {
        flip(q, dir, alpha);
        degenerate = 0;
        fresh = false;
        continue;
      }
      if (theta_max == kInf) {
        if (!phase1) {
          LpOutcome out;
          out.iterations = iter_;
          out.status = LpStatus::unbounded;
          finish(out, y);
          return out;
        }
        if (!fresh) {
          factor_or_recover();
          compute_basic_values();
          fresh = true;
          continue;
        }
        throw NumericalBreakdown("phase-1 ratio test found no blocking variable");
      }
      int r = -1;
      double best_piv = 0.0, theta = 0.0;
      for (int p = 0; p < m_; ++p) {
        double a = alpha[p];
        if (std::abs(a) <= opt_.pivot_tol) continue;
        double rate = -dir * a;
        double lim;
        if (!limit(p, rate, 0.0, lim)) continue;
        if (lim > theta_max) continue;
        bool better = std::abs(a) > best_piv;
        if (bland && r >= 0 && std::abs(a) > 1e-7 && best_piv > 1e-7) better = head_[p] < head_[r];
        if (better) {
          best_piv = std::abs(a);
          r = p;
          theta = std::max(0.0, lim);
        }
      }
      if (r < 0) throw NumericalBreakdown("ratio test selected no pivot");
      degenerate = theta <= 1e-12 ? degenerate + 1 : 0;
      pivot(q, r, dir, theta, alpha);
      fresh = false;
    }
    std::ostringstream msg;
    msg << "simplex iteration limit " << max_iter_ << " reached";
    throw NumericalBreakdown(msg.str());
  }

 private:
  // Step length at which basic position p reaches its blocking bound when
  // moving with the given rate; false when it never blocks.
  bool limit(int p, double rate, double relax, double& lim) const {
    int j = head_[p];
    double v = x_[j];
    if (rate < 0) {
      if (v < lo_[j] - opt_.primal_tol) return false;
      double bound = v > up_[j] + opt_.primal_tol ? up_[j] : lo_[j];
      if (bound == -kInf) return false;
      lim = (v - (bound - relax)) / (-rate);
    } else {
      if (v > up_[j] + opt_.primal_tol) return false;
      double bound = v < lo_[j] - opt_.primal_tol ? lo_[j] : up_[j];
      if (bound == kInf) return false;
      lim = ((bound + relax) - v) / rate;
    }
    return true;
  }

  double blocking_bound(int p, double rate) const {
    int j = head_[p];
    double v = x_[j];
    if (rate < 0) return v > up_[j] + opt_.primal_tol ? up_[j] : lo_[j];
    return v < lo_[j] - opt_.primal_tol ? lo_[j] : up_[j];
  }

  void flip(int q, double dir, const Eigen::VectorXd& alpha) {
    const double target = dir > 0 ? up_[q] : lo_[q];
    const double step = std::abs(target - x_[q]);
    x_[q] = target;
    state_[q] = dir > 0 ? kUpper : kLower;
    for (int p = 0; p < m_; ++p) x_[head_[p]] -= dir * step * alpha[p];
  }

  void pivot(int q, int r, double dir, double theta, const Eigen::VectorXd& alpha) {
    double rate_r = -dir * alpha[r];
    double bound = blocking_bound(r, rate_r);
    x_[q] += dir * theta;
    for (int p = 0; p < m_; ++p) x_[head_[p]] -= dir * theta * alpha[p];
    int leaving = head_[r];
    // Harris may stop the leaving variable slightly past its bound. It stays
    // nonbasic at that value; basic values are always computed from the
    // actual nonbasic values, so nothing drifts. snap_nonbasic() cleans up.
    state_[leaving] = (bound == lo_[leaving]) ? kLower : kUpper;
    head_[r] = q;
    state_[q] = kBasic;

    Eta e;
    e.pos = r;
    e.pivot = alpha[r];
    for (int p = 0; p < m_; ++p)
      if (p != r && alpha[p] != 0.0) {
        e.idx.push_back(p);
        e.val.push_back(alpha[p]);
      }
    etas_.push_back(std::move(e));
  }

  // Moves nonbasic variables left off their bound back onto it. Returns
  // whether anything moved.
  bool snap_nonbasic() {
    bool moved = false;
    for (int j = 0; j < N_; ++j) {
      const signed char s = state_[j];
      double target;
      if (s == kLower) target = lo_[j];
      else if (s == kUpper) target = up_[j];
      else continue;
      if (x_[j] != target) {
        x_[j] = target;
        moved = true;
      }
    }
    return moved;
  }

  void place_nonbasic(int j) {
    if (lo_[j] > -kInf) {
      state_[j] = kLower;
      x_[j] = lo_[j];
    } else if (up_[j] < kInf) {
      state_[j] = kUpper;
      x_[j] = up_[j];
    } else {
      state_[j] = kFree;
      x_[j] = 0.0;
    }
  }

  void slack_basis() {
    for (int j = 0; j < n_; ++j) place_nonbasic(j);
    for (int r = 0; r < m_; ++r) {
      head_[r] = n_ + r;
      state_[n_ + r] = kBasic;
    }
  }

  bool load_warm(const Basis& b) {
    if (static_cast<int>(b.head.size()) != m_ || static_cast<int>(b.state.size()) != N_) return false;
    std::vector<char> seen(N_, 0);
    for (int p = 0; p < m_; ++p) {
      int j = b.head[p];
      if (j < 0 || j >= N_ || seen[j] || b.state[j] != kBasic) return false;
      seen[j] = 1;
    }
    head_ = b.head;
    for (int j = 0; j < N_; ++j) {
      if (seen[j]) {
        state_[j] = kBasic;
        continue;
      }
      signed char s = b.state[j];
      if (s == kLower && lo_[j] > -kInf) {
        state_[j] = kLower;
        x_[j] = lo_[j];
      } else if (s == kUpper && up_[j] < kInf) {
        state_[j] = kUpper;
        x_[j] = up_[j];
      } else {
        place_nonbasic(j);
      }
    }
    return true;
  }

  bool factor() {
    SpMat B(m_, m_);
    std::vector<Eigen::Triplet<double>> trip;
    for (int p = 0; p < m_; ++p) {
      int j = head_[p];
      if (j < n_) {
        for (SpMat::InnerIterator it(A_, j); it; ++it) trip.emplace_back(it.row(), p, it.value());
      } else {
        trip.emplace_back(j - n_, p, -1.0);
      }
    }
    B.setFromTriplets(trip.begin(), trip.end());
    B.makeCompressed();
    etas_.clear();
    if (m_ == 0) return true;
    lu_.analyzePattern(B);
    lu_.factorize(B);
    return lu_.info() == Eigen::Success;
  }

  void factor_or_recover() {
    if (factor()) return;
    for (int attempt = 0; attempt < 2; ++attempt) {
      ++recoveries_;
      for (int p = 0; p < m_; ++p) {
        int j = head_[p];
        if (j < n_) {
          double v = x_[j];
          if (lo_[j] > -kInf && (up_[j] == kInf || std::abs(v - lo_[j]) <= std::abs(v - up_[j]))) {
            state_[j] = kLower;
            x_[j] = lo_[j];
          } else if (up_[j] < kInf) {
            state_[j] = kUpper;
            x_[j] = up_[j];
          } else {
            state_[j] = kFree;
            x_[j] = 0.0;
          }
        }
      }
      for (int r = 0; r < m_; ++r) {
        head_[r] = n_ + r;
        state_[n_ + r] = kBasic;
      }
      if (recoveries_ <= 3 && factor()) return;
    }
    throw NumericalBreakdown("singular basis after refactorisation attempts");
  }

  void compute_basic_values() {
    if (m_ == 0) return;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
    for (int j = 0; j < N_; ++j) {
      if (state_[j] == kBasic || x_[j] == 0.0) continue;
      if (j < n_) {
        for (SpMat::InnerIterator it(A_, j); it; ++it) rhs[it.row()] -= it.value() * x_[j];
      } else {
        rhs[j - n_] += x_[j];
      }
    }
    Eigen::VectorXd xb = lu_.solve(rhs);
    for (int p = 0; p < m_; ++p) x_[head_[p]] = xb[p];
  }

  Eigen::VectorXd ftran_column(int q) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(m_);
    if (q < n_) {
      for (SpMat::InnerIterator it(A_, q); it; ++it) v[it.row()] = it.value();
    } else {
      v[q - n_] = -1.0;
    }
    if (m_ == 0) return v;
    Eigen::VectorXd z = lu_.solve(v);
    for (const Eta& e : etas_) {
      double zr = z[e.pos] / e.pivot;
      if (zr != 0.0)
        for (size_t k = 0; k < e.idx.size(); ++k) z[e.idx[k]] -= e.val[k] * zr;
      z[e.pos] = zr;
    }
    return z;
  }

  Eigen::VectorXd btran(const std::vector<double>& c) {
    Eigen::VectorXd v(m_);
    for (int p = 0; p < m_; ++p) v[p] = c[p];
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double s = v[it->pos];
      for (size_t k = 0; k < it->idx.size(); ++k) s -= it->val[k] * v[it->idx[k]];
      v[it->pos] = s / it->pivot;
    }
    if (m_ == 0) return v;
    return lu_.transpose().solve(v);
  }

  void finish(LpOutcome& out, const Eigen::VectorXd& y) {
    out.solution.assign(x_.begin(), x_.begin() + n_);
    out.row_activity.assign(x_.begin() + n_, x_.end());
    out.duals.assign(y.data(), y.data() + m_);
    out.objective_value = 0.0;
    for (int j = 0; j < n_; ++j) out.objective_value += cost_[j] * x_[j];
    out.basis.head = head_;
    out.basis.state = state_;
  }

  const LinearProgram& lp_;
  SimplexOptions opt_;
  int n_ = 0, m_ = 0, N_ = 0;
  SpMat A_;
  std::vector<double> lo_, up_, cost_, x_;
  std::vector<signed char> state_;
  std::vector<int> head_;
  std::vector<Eta> etas_;
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
  int iter_ = 0;
  int max_iter_ = 0;
  int recoveries_ = 0;
  int snaps_ = 0;
};

}  // namespace

LpOutcome solve_lp(const LinearProgram& lp, const SimplexOptions& opts) {
  validate(lp);
  RevisedSimplex s(lp, opts);
  return s.run();
}

}  // namespace mce
