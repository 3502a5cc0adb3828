#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "mce/mce_identifier.hpp"
#include "mce_identifier/sharp_program.hpp"
#include "util/parallel.hpp"

namespace mce {

namespace detail {

SharpProgram::SharpProgram(const BasicGame& g, const InformationStructure& info, const CCPTable& phi)
    : g_(g), phi_(phi) {
  if (phi.n_states != g.num_states() || phi.n_joint_actions != g.num_joint_actions())
    throw ModelError("CCP table does not match the game dimensions");
  layout_ = CellLayout::build(g, info);
  st_ = ObStructure::build(g, *layout_);
  X_ = g.num_states();
  A_ = g.num_joint_actions();
  N_ = g.n_players;
  ns_ = layout_->size() * A_;

  upper_.assign(ns_, 1.0);
  for (int c = 0; c < layout_->size(); ++c)
    for (int a = 0; a < A_; ++a)
      if (phi.at(layout_->cells[c].x, a) == 0.0) upper_[c * A_ + a] = 0.0;

  flow_.assign(N_, std::vector<double>(ns_, 0.0));
  for (int c = 0; c < layout_->size(); ++c) {
    const auto& cell = layout_->cells[c];
    for (int i = 0; i < N_; ++i) {
      int ei = g.joint_shocks.digit(cell.e, i);
      for (int a = 0; a < A_; ++a) flow_[i][c * A_ + a] = cell.weight * g.u(i, a, cell.x, ei);
    }
  }

  K_ = Eigen::MatrixXd::Identity(X_, X_);
  for (int x = 0; x < X_; ++x)
    for (int a = 0; a < A_; ++a) {
      double p = phi.at(x, a);
      if (p == 0.0) continue;
      for (int y = 0; y < X_; ++y) K_(x, y) -= g.discount * p * g.f(y, a, x);
    }
  K_lu_.compute(K_);
  block_basis_.resize(X_);
}

void SharpProgram::reset_bases() {
  for (auto& b : block_basis_) b = Basis{};
  joint_basis_ = Basis{};
}

std::vector<double> SharpProgram::value_of(const std::vector<double>& sigma) const {
  std::vector<double> V(static_cast<size_t>(N_) * X_);
  for (int i = 0; i < N_; ++i) {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(X_);
    for (int c = 0; c < layout_->size(); ++c) {
      int x = layout_->cells[c].x;
      for (int a = 0; a < A_; ++a) r[x] += flow_[i][c * A_ + a] * sigma[c * A_ + a];
    }
    Eigen::VectorXd v = K_lu_.solve(r);
    Eigen::VectorXd res = r - K_ * v;
    v += K_lu_.solve(res);
    for (int x = 0; x < X_; ++x) V[i * X_ + x] = v[x];
  }
  return V;
}

std::vector<double> SharpProgram::rows(const std::vector<double>& sigma, const std::vector<double>& V) const {
  std::vector<double> gv = st_.dev_values(V, X_);
  std::vector<double> out(st_.num_rows(), 0.0);
  for (const auto& en : st_.entries) out[en.row] += en.w * sigma[en.k] * (en.du + gv[en.dev]);
  return out;
}

double SharpProgram::criterion(const std::vector<double>& sigma, std::vector<double>* Vout) const {
  std::vector<double> V = value_of(sigma);
  std::vector<double> r = rows(sigma, V);
  double t = 0.0;
  for (double v : r) t = std::max(t, v);
  if (Vout) *Vout = std::move(V);
  return t;
}

std::vector<double> SharpProgram::phi_rule() const {
  std::vector<double> s(ns_);
  for (int c = 0; c < layout_->size(); ++c)
    for (int a = 0; a < A_; ++a) s[c * A_ + a] = phi_.at(layout_->cells[c].x, a);
  return s;
}

double SharpProgram::consistency_gap(const std::vector<double>& sigma) const {
  double gap = 0.0;
  std::vector<double> implied(static_cast<size_t>(X_) * A_, 0.0);
  for (int c = 0; c < layout_->size(); ++c) {
    double s = 0.0;
    for (int a = 0; a < A_; ++a) {
      double v = sigma[c * A_ + a];
      gap = std::max(gap, -v);
      s += v;
      implied[layout_->cells[c].x * A_ + a] += layout_->cells[c].weight * v;
    }
    gap = std::max(gap, std::abs(s - 1.0));
  }
  for (int x = 0; x < X_; ++x)
    for (int a = 0; a < A_; ++a) gap = std::max(gap, std::abs(implied[x * A_ + a] - phi_.at(x, a)));
  return gap;
}

// Local LP over the sigma entries of state x: consistency and simplex rows,
// plus the obedience rows relaxed by t when gv is given.
LinearProgram SharpProgram::block_lp(int x, const std::vector<double>* gv, bool with_t) const {
  const int c0 = layout_->state_begin[x], c1 = layout_->state_begin[x + 1];
  const int k0 = c0 * A_;
  LinearProgram lp;
  for (int k = k0; k < c1 * A_; ++k) lp.add_col(0.0, 0.0, upper_[k]);
  int tcol = -1;
  if (with_t) tcol = lp.add_col(1.0, 0.0, kInf);
  if (gv) {
    for (int r = st_.state_row_begin[x]; r < st_.state_row_begin[x + 1]; ++r) {
      int row = lp.add_row(RowSense::le, 0.0);
      for (int e = st_.row_begin[r]; e < st_.row_begin[r + 1]; ++e) {
        const auto& en = st_.entries[e];
        lp.add_entry(row, en.k - k0, en.w * (en.du + (*gv)[en.dev]));
      }
      lp.add_entry(row, tcol, -1.0);
    }
  }
  for (int a = 0; a < A_; ++a) {
    if (phi_.at(x, a) == 0.0) continue;
    int row = lp.add_row(RowSense::eq, phi_.at(x, a));
    for (int c = c0; c < c1; ++c) lp.add_entry(row, c * A_ + a - k0, layout_->cells[c].weight);
  }
  for (int c = c0; c < c1; ++c) {
    int row = lp.add_row(RowSense::eq, 1.0);
    for (int a = 0; a < A_; ++a) lp.add_entry(row, c * A_ + a - k0, 1.0);
  }
  return lp;
}

std::vector<double> SharpProgram::random_rule(std::mt19937_64& rng) {
  std::vector<double> vertex(ns_, 0.0);
  for (int x = 0; x < X_; ++x) {
    LinearProgram lp = block_lp(x, nullptr, false);
    // Box-Muller on the raw generator keeps draws library-independent.
    for (auto& c : lp.objective) {
      double u1 = unit_uniform(rng()), u2 = unit_uniform(rng());
      c = std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(6.283185307179586 * u2);
    }
    LpOutcome out = solve_lp(lp);
    if (out.status != LpStatus::optimal) throw ModelError("no decision rule reproduces the CCPs at some state");
    const int k0 = layout_->state_begin[x] * A_;
    for (int k = 0; k < lp.num_cols(); ++k) vertex[k0 + k] = std::clamp(out.solution[k], 0.0, upper_[k0 + k]);
  }
  double lam = unit_uniform(rng());
  std::vector<double> base = phi_rule();
  for (int k = 0; k < ns_; ++k) vertex[k] = lam * vertex[k] + (1.0 - lam) * base[k];
  return vertex;
}

std::vector<double> SharpProgram::best_sigma_given_value(const std::vector<double>& V) {
  std::vector<double> gv = st_.dev_values(V, X_);
  std::vector<double> sigma(ns_, 0.0);
  for (int x = 0; x < X_; ++x) {
    LinearProgram lp = block_lp(x, &gv, true);
    SimplexOptions opt;
    if (!block_basis_[x].empty()) opt.warm_start = &block_basis_[x];
    LpOutcome out = solve_lp(lp, opt);
    if (out.status != LpStatus::optimal)
      throw NumericalBreakdown("state subproblem failed: " + std::string(to_string(out.status)));
    block_basis_[x] = out.basis;
    const int k0 = layout_->state_begin[x] * A_;
    for (int k = 0; k + 1 < lp.num_cols(); ++k) sigma[k0 + k] = std::clamp(out.solution[k], 0.0, upper_[k0 + k]);
  }
  return sigma;
}

std::vector<double> SharpProgram::flow_values(const std::vector<double>& sigma) const {
  std::vector<double> r(static_cast<size_t>(N_) * X_, 0.0);
  for (int i = 0; i < N_; ++i)
    for (int c = 0; c < layout_->size(); ++c) {
      const int x = layout_->cells[c].x;
      for (int a = 0; a < A_; ++a) r[i * X_ + x] += flow_[i][c * A_ + a] * sigma[c * A_ + a];
    }
  return r;
}

int SharpProgram::append_linearisation(LinearProgram& lp, const std::vector<double>& sigma,
                                       const std::vector<double>& V, double rs, double rv, int tcol,
                                       const ThetaTerms* theta) const {
  std::vector<double> gv = st_.dev_values(V, X_);
  const int s0 = lp.num_cols();
  for (int k = 0; k < ns_; ++k)
    lp.add_col(0.0, std::max(0.0, sigma[k] - rs), std::min(upper_[k], sigma[k] + rs));
  const int v0 = lp.num_cols();
  for (int k = 0; k < N_ * X_; ++k) lp.add_col(0.0, V[k] - rv, V[k] + rv);
  const int nt = theta ? static_cast<int>(theta->cols.size()) : 0;

  std::vector<double> wv(static_cast<size_t>(N_) * X_);
  for (int r = 0; r < st_.num_rows(); ++r) {
    std::fill(wv.begin(), wv.end(), 0.0);
    double rhs = 0.0;
    int row = lp.add_row(RowSense::le, 0.0);
    for (int e = st_.row_begin[r]; e < st_.row_begin[r + 1]; ++e) {
      const auto& en = st_.entries[e];
      lp.add_entry(row, s0 + en.k, en.w * (en.du + gv[en.dev]));
      double s = en.w * sigma[en.k];
      if (s == 0.0) continue;
      const auto& d = st_.devs[en.dev];
      for (int y = 0; y < X_; ++y) wv[d.player * X_ + y] += s * d.df[y];
      rhs += s * gv[en.dev];
    }
    for (int k = 0; k < N_ * X_; ++k) lp.add_entry(row, v0 + k, wv[k]);
    for (int j = 0; j < nt; ++j) lp.add_entry(row, theta->cols[j], theta->drow[j][r]);
    lp.add_entry(row, tcol, -1.0);
    lp.rhs[row] = rhs;
  }
  for (int x = 0; x < X_; ++x) {
    const int c0 = layout_->state_begin[x], c1 = layout_->state_begin[x + 1];
    for (int a = 0; a < A_; ++a) {
      if (phi_.at(x, a) == 0.0) continue;
      int row = lp.add_row(RowSense::eq, phi_.at(x, a));
      for (int c = c0; c < c1; ++c) lp.add_entry(row, s0 + c * A_ + a, layout_->cells[c].weight);
    }
    for (int c = c0; c < c1; ++c) {
      int row = lp.add_row(RowSense::eq, 1.0);
      for (int a = 0; a < A_; ++a) lp.add_entry(row, s0 + c * A_ + a, 1.0);
    }
  }
  for (int i = 0; i < N_; ++i)
    for (int x = 0; x < X_; ++x) {
      int row = lp.add_row(RowSense::eq, 0.0);
      for (int y = 0; y < X_; ++y) lp.add_entry(row, v0 + i * X_ + y, K_(x, y));
      for (int c = layout_->state_begin[x]; c < layout_->state_begin[x + 1]; ++c)
        for (int a = 0; a < A_; ++a) lp.add_entry(row, s0 + c * A_ + a, -flow_[i][c * A_ + a]);
      for (int j = 0; j < nt; ++j) lp.add_entry(row, theta->cols[j], -theta->dflow[j][i * X_ + x]);
    }
  return s0;
}

bool SharpProgram::linearised_step(const std::vector<double>& sigma, const std::vector<double>& V,
                                   double rs, double rv, std::vector<double>& sigma_out,
                                   std::vector<double>& V_out, double& t_model) {
  LinearProgram lp;
  const int tcol = lp.add_col(1.0, 0.0, kInf);
  const int s0 = append_linearisation(lp, sigma, V, rs, rv, tcol, nullptr);
  const int v0 = s0 + ns_;

  SimplexOptions opt;
  if (!joint_basis_.empty()) opt.warm_start = &joint_basis_;
  LpOutcome out;
  try {
    out = solve_lp(lp, opt);
  } catch (const NumericalBreakdown&) {
    joint_basis_ = Basis{};
    return false;
  }
  if (out.status != LpStatus::optimal) return false;
  joint_basis_ = out.basis;
  sigma_out.assign(out.solution.begin() + s0, out.solution.begin() + s0 + ns_);
  clamp_sigma(sigma_out);
  V_out.assign(out.solution.begin() + v0, out.solution.begin() + v0 + N_ * X_);
  t_model = out.solution[tcol];
  return true;
}

void SharpProgram::clamp_sigma(std::vector<double>& sigma) const {
  for (int k = 0; k < ns_; ++k) sigma[k] = std::clamp(sigma[k], 0.0, upper_[k]);
}

}  // namespace detail

namespace {

struct RestartOutcome {
  double q = std::numeric_limits<double>::infinity();
  std::vector<double> sigma;
  bool polished = false;
};

RestartOutcome alternate(detail::SharpProgram& prog, std::vector<double> sigma, const CriterionOptions& opts) {
  RestartOutcome best;
  std::vector<double> V;
  double t = prog.criterion(sigma, &V);
  best.q = t;
  best.sigma = sigma;
  for (int it = 0; it < opts.alt_max_iters && best.q > 0.0; ++it) {
    std::vector<double> next = prog.best_sigma_given_value(V);
    std::vector<double> Vn;
    double tn = prog.criterion(next, &Vn);
    if (tn < best.q) {
      best.q = tn;
      best.sigma = next;
    }
    if (std::abs(tn - t) <= opts.alt_tol) break;
    sigma = std::move(next);
    V = std::move(Vn);
    t = tn;
  }
  return best;
}

// Trust-region sequential LP on (sigma, V) jointly. The merit is the true
// criterion at (sigma, V(sigma)), so accepted steps never increase it. The
// run ends early at a first-order stationary point (the model cannot cut
// the criterion by a meaningful fraction) or when progress over a window of
// iterations is too slow.
RestartOutcome polish(detail::SharpProgram& prog, RestartOutcome start, const CriterionOptions& opts) {
  std::vector<double> sigma = start.sigma, V;
  double t = prog.criterion(sigma, &V);
  double vscale = 1.0;
  for (double v : V) vscale = std::max(vscale, std::abs(v));
  double rs = 0.2;
  const double target = std::min(1e-9, opts.member_tol);
  std::vector<double> history{t};
  for (int it = 0; it < opts.polish_max_iters && t > target && rs >= 1e-7; ++it) {
    std::vector<double> s2, V2;
    double tm;
    if (!prog.linearised_step(sigma, V, rs, rs * vscale, s2, V2, tm)) {
      rs *= 0.5;
      continue;
    }
    const double pred = t - std::max(0.0, tm);
    if (t > opts.member_tol && rs >= 0.05 && pred < 1e-3 * t) break;
    std::vector<double> V2true;
    double t2 = prog.criterion(s2, &V2true);
    const double act = t - t2;
    if (act > 0.0 && act > 0.1 * pred) {
      sigma = std::move(s2);
      V = std::move(V2true);
      t = t2;
      if (act > 0.5 * pred) rs = std::min(1.0, 2.0 * rs);
    } else {
      rs *= 0.3;
    }
    history.push_back(t);
    const int w = opts.polish_window;
    if (w > 0 && static_cast<int>(history.size()) > w && t > 100.0 * opts.member_tol &&
        t > (1.0 - opts.polish_min_progress) * history[history.size() - 1 - w])
      break;
  }
  if (t < start.q) {
    start.q = t;
    start.sigma = std::move(sigma);
  }
  start.polished = true;
  return start;
}

}  // namespace

FeasibilityResult criterion_q(const BasicGame& g, const InformationStructure& info, const CCPTable& phi,
                              const CriterionOptions& opts) {
  phi.validate(1e-9);
  FeasibilityResult res;
  res.seed = opts.seed;
  const int jobs = std::max(1, opts.jobs);
  std::vector<std::unique_ptr<detail::SharpProgram>> progs;
  for (int j = 0; j < jobs; ++j) progs.push_back(std::make_unique<detail::SharpProgram>(g, info, phi));
  detail::SharpProgram& prog = *progs[0];
  if (prog.consistency_gap(prog.phi_rule()) > 1e-9) {
    res.status = Membership::consistency_infeasible;
    res.q_value = std::numeric_limits<double>::infinity();
    return res;
  }

  // Start list: caller-supplied rules first, then the phi rule, then random
  // vertices mixed with the phi rule.
  std::vector<std::vector<double>> warm;
  for (const auto& w : opts.warm_starts)
    if (static_cast<int>(w.size()) == prog.sigma_size() && prog.consistency_gap(w) <= 1e-7) warm.push_back(w);
  const int W = static_cast<int>(warm.size());
  const int R = W + std::max(1, opts.restarts);
  auto start_of = [&](detail::SharpProgram& pr, int r) {
    if (r < W) return warm[r];
    const int k = r - W;
    if (k == 0) return pr.phi_rule();
    std::seed_seq seq{static_cast<std::uint32_t>(opts.seed), static_cast<std::uint32_t>(opts.seed >> 32),
                      static_cast<std::uint32_t>(k), 0x71u};
    std::mt19937_64 rng(seq);
    return pr.random_rule(rng);
  };

  // Every restart starts from empty basis caches so its outcome depends on
  // the start alone, not on which worker ran it or in what order.
  std::vector<RestartOutcome> outs(R);
  int done = 0;
  while (done < R) {
    const int batch = std::min(jobs, R - done);
    parallel_for(batch, jobs, [&](int j) {
      detail::SharpProgram& pr = *progs[j];
      pr.reset_bases();
      outs[done + j] = alternate(pr, start_of(pr, done + j), opts);
    });
    done += batch;
    if (opts.early_stop) {
      bool hit = false;
      for (int r = done - batch; r < done; ++r) hit = hit || outs[r].q <= opts.member_tol;
      if (hit) break;
    }
  }
  int used = done;
  if (opts.early_stop)
    for (int r = 0; r < done; ++r)
      if (outs[r].q <= opts.member_tol) {
        used = r + 1;
        break;
      }

  // Polish the most promising restarts, best first.
  bool member_found = false;
  for (int r = 0; r < used; ++r) member_found = member_found || outs[r].q <= opts.member_tol;
  if (!member_found) {
    std::vector<int> order;
    for (int r = 0; r < used; ++r)
      if (outs[r].q < opts.polish_threshold) order.push_back(r);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return outs[a].q < outs[b].q; });
    if (static_cast<int>(order.size()) > opts.polish_candidates) order.resize(std::max(0, opts.polish_candidates));
    for (int r : order) {
      prog.reset_bases();
      outs[r] = polish(prog, std::move(outs[r]), opts);
      if (opts.early_stop && outs[r].q <= opts.member_tol) break;
    }
  }

  int best = 0;
  for (int r = 0; r < used; ++r) {
    res.restart_q.push_back(outs[r].q);
    if (outs[r].q < outs[best].q) best = r;
  }
  res.restarts_used = used;
  res.q_value = std::max(0.0, outs[best].q);
  res.polished = outs[best].polished;
  res.sigma.layout = prog.layout_ptr();
  res.sigma.n_joint_actions = g.num_joint_actions();
  res.sigma.sigma = outs[best].sigma;
  res.V.n_players = g.n_players;
  res.V.n_states = g.num_states();
  res.V.v = prog.value_of(outs[best].sigma);
  certificate_residuals(g, phi, res.sigma, res.V, res.e3_residual, res.e4_residual);
  res.status = res.q_value <= opts.member_tol ? Membership::member : Membership::non_member;
  return res;
}

}  // namespace mce
