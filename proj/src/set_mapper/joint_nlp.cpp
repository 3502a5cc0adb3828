#include "set_mapper/joint_nlp.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "mce_identifier/sharp_program.hpp"
#include "util/parallel.hpp"

namespace mce::detail {

namespace {

// Games and sharp programs for every cell at theta and at theta + e_j. The
// payoffs are affine in theta, so differences against the unit shifts are
// exact derivatives.
struct Frame {
  std::vector<double> theta;
  std::vector<BasicGame> games;  // [(j + 1) * C + c], j = -1 for theta itself
  std::vector<std::unique_ptr<SharpProgram>> progs;
  int C = 0, d = 0;

  Frame(const IdentificationProblem& problem, std::vector<double> th) : theta(std::move(th)) {
    const Model& m = problem.model();
    C = m.num_cells();
    d = static_cast<int>(theta.size());
    games.reserve(static_cast<size_t>(d + 1) * C);
    for (int j = -1; j < d; ++j) {
      std::vector<double> t = theta;
      if (j >= 0) t[j] += 1.0;
      for (int c = 0; c < C; ++c) games.push_back(m.build(c, t));
    }
    for (size_t k = 0; k < games.size(); ++k)
      progs.push_back(std::make_unique<SharpProgram>(games[k], InformationStructure::private_shock(games[k]),
                                                     problem.data().cells[k % C]));
  }
  SharpProgram& base(int c) { return *progs[c]; }
  SharpProgram& shifted(int j, int c) { return *progs[static_cast<size_t>(j + 1) * C + c]; }
};

struct Iterate {
  std::unique_ptr<Frame> frame;
  std::vector<std::vector<double>> sigma, V;
  double t = 0.0;
};

double evaluate_iterate(Iterate& it) {
  it.t = 0.0;
  it.V.assign(it.sigma.size(), {});
  for (int c = 0; c < it.frame->C; ++c) it.t = std::max(it.t, it.frame->base(c).criterion(it.sigma[c], &it.V[c]));
  return it.t;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

// Exact-penalty SLP: minimise -sign * p.theta + M * t subject to the
// linearised obedience rows being at most t, in a trust region.
CertifiedPoint run_side(const IdentificationProblem& problem, const std::vector<double>& p, double sign,
                        const CertifiedPoint& start, const ProjectionOptions& opts, EndpointDiagnostics& diag,
                        double& best_q) {
  const double tol = problem.options().criterion.member_tol;
  const double M = opts.nlp_penalty;
  const int d = static_cast<int>(p.size());
  CertifiedPoint best = start;
  double best_value = sign * dot(p, start.theta);

  Iterate cur;
  cur.frame = std::make_unique<Frame>(problem, start.theta);
  cur.sigma = start.certificates;
  evaluate_iterate(cur);
  const int C = cur.frame->C;
  double vscale = 1.0;
  for (const auto& v : cur.V)
    for (double x : v) vscale = std::max(vscale, std::abs(x));

  Basis basis;
  double rho = 0.1;
  for (int it = 0; it < opts.nlp_max_iters && rho >= 1e-6; ++it) {
    ++diag.evaluations;
    const double m0 = -sign * dot(p, cur.frame->theta) + M * cur.t;
    LinearProgram lp;
    const int tcol = lp.add_col(M, 0.0, kInf);
    SharpProgram::ThetaTerms terms;
    for (int j = 0; j < d; ++j) terms.cols.push_back(lp.add_col(-sign * p[j], -rho, rho));
    std::vector<int> s0(C);
    for (int c = 0; c < C; ++c) {
      SharpProgram& pr = cur.frame->base(c);
      std::vector<double> r0 = pr.rows(cur.sigma[c], cur.V[c]);
      std::vector<double> f0 = pr.flow_values(cur.sigma[c]);
      terms.drow.assign(d, {});
      terms.dflow.assign(d, {});
      for (int j = 0; j < d; ++j) {
        SharpProgram& ps = cur.frame->shifted(j, c);
        terms.drow[j] = ps.rows(cur.sigma[c], cur.V[c]);
        terms.dflow[j] = ps.flow_values(cur.sigma[c]);
        for (size_t r = 0; r < r0.size(); ++r) terms.drow[j][r] -= r0[r];
        for (size_t r = 0; r < f0.size(); ++r) terms.dflow[j][r] -= f0[r];
      }
      s0[c] = pr.append_linearisation(lp, cur.sigma[c], cur.V[c], rho, rho * vscale, tcol, &terms);
    }
    SimplexOptions so;
    if (!basis.empty()) so.warm_start = &basis;
    LpOutcome out;
    try {
      out = solve_lp(lp, so);
    } catch (const NumericalBreakdown&) {
      basis = Basis{};
      rho *= 0.5;
      continue;
    }
    if (out.status != LpStatus::optimal) {
      basis = Basis{};
      rho *= 0.5;
      continue;
    }
    basis = out.basis;
    std::vector<double> dtheta(d);
    for (int j = 0; j < d; ++j) dtheta[j] = out.solution[terms.cols[j]];
    const double pred = m0 - (-sign * dot(p, cur.frame->theta) - sign * dot(p, dtheta) + M * out.solution[tcol]);
    if (pred <= 1e-12 * (1.0 + std::abs(m0))) break;

    Iterate next;
    std::vector<double> th = cur.frame->theta;
    for (int j = 0; j < d; ++j) th[j] += dtheta[j];
    next.frame = std::make_unique<Frame>(problem, th);
    next.sigma.resize(C);
    for (int c = 0; c < C; ++c) {
      next.sigma[c].assign(out.solution.begin() + s0[c], out.solution.begin() + s0[c] + cur.frame->base(c).sigma_size());
      next.frame->base(c).clamp_sigma(next.sigma[c]);
    }
    evaluate_iterate(next);
    const double m1 = -sign * dot(p, th) + M * next.t;
    const double act = m0 - m1;
    if (act > 0.1 * pred) {
      cur = std::move(next);
      if (act > 0.5 * pred) rho = std::min(1.0, 2.0 * rho);
      bool consistent = true;
      for (int c = 0; c < C; ++c) consistent = consistent && cur.frame->base(c).consistency_gap(cur.sigma[c]) <= 1e-7;
      const double value = sign * dot(p, cur.frame->theta);
      if (consistent && cur.t <= tol && value > best_value) {
        best_value = value;
        best.theta = cur.frame->theta;
        best.certificates = cur.sigma;
        best_q = cur.t;
      }
    } else {
      rho *= 0.3;
    }
  }

  // The last iterate usually sits just outside the tolerance; a full
  // membership test seeded with its rules may still certify it.
  const double last = sign * dot(p, cur.frame->theta);
  if (cur.t > tol && last > best_value) {
    ++diag.evaluations;
    PointEvaluation pe = problem.evaluate(cur.frame->theta, &cur.sigma);
    if (pe.member) {
      best_value = last;
      best.theta = cur.frame->theta;
      best.certificates = std::move(pe.certificates);
      best_q = pe.q_value;
    }
  }
  return best;
}

}  // namespace

void joint_nlp_extend(const IdentificationProblem& problem, const std::vector<double>& direction,
                      const CertifiedPoint& anchor, const CertifiedPoint ends[2], const ProjectionOptions& opts,
                      ProjectionResult& res) {
  EndpointDiagnostics* diags[2] = {&res.lo, &res.hi};
  parallel_for(2, opts.jobs, [&](int s) {
    const double sign = s == 0 ? -1.0 : 1.0;
    EndpointDiagnostics& diag = *diags[s];
    std::vector<const CertifiedPoint*> starts{&ends[s]};
    if (opts.nlp_starts > 1) starts.push_back(&anchor);
    double best = sign * diag.value;
    for (const CertifiedPoint* st : starts) {
      double q = diag.q_at_endpoint;
      CertifiedPoint cp = run_side(problem, direction, sign, *st, opts, diag, q);
      const double v = sign * dot(direction, cp.theta);
      if (v > best) {
        best = v;
        diag.value = dot(direction, cp.theta);
        diag.theta = cp.theta;
        diag.q_at_endpoint = q;
        diag.at_search_limit = false;
      }
    }
  });
  res.lower = res.lo.value;
  res.upper = res.hi.value;
}

}  // namespace mce::detail
