#include "mce/set_mapper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "set_mapper/joint_nlp.hpp"
#include "util/parallel.hpp"

namespace mce {

Baseline parse_baseline(const std::string& s) {
  if (s == "private") return Baseline::private_shock;
  if (s == "null") return Baseline::null_info;
  throw ModelError("unknown baseline '" + s + "' (expected private or null)");
}

std::string to_string(Baseline b) { return b == Baseline::private_shock ? "private" : "null"; }

IdentificationProblem::IdentificationProblem(const Model& model, const CcpData& data, Baseline baseline,
                                             MembershipOptions opts)
    : model_(model), data_(data), baseline_(baseline), opts_(std::move(opts)) {
  if (static_cast<int>(data.cells.size()) != model.num_cells())
    throw ModelError("CCP data has " + std::to_string(data.cells.size()) + " cells, the model has " +
                     std::to_string(model.num_cells()));
}

double IdentificationProblem::outer_tolerance() const {
  BasicGame g = model_.build(0, model_.free_values());
  int labels = 1;
  for (int i = 0; i < g.n_players; ++i) labels = std::max(labels, g.num_shocks(i));
  return opts_.criterion.member_tol * labels;
}

PointEvaluation IdentificationProblem::evaluate(const std::vector<double>& theta,
                                                const std::vector<std::vector<double>>* warm,
                                                bool stop_early) const {
  PointEvaluation pe;
  pe.theta = theta;
  const int C = model_.num_cells();
  const double otol = outer_tolerance();
  std::vector<BasicGame> games;
  games.reserve(C);
  for (int c = 0; c < C; ++c) games.push_back(model_.build(c, theta));

  pe.outer_member = true;
  if (baseline_ == Baseline::null_info || opts_.outer_prune) {
    for (int c = 0; c < C; ++c) {
      NullInfoResult r = null_info_member(games[c], data_.cells[c], otol);
      pe.outer_t = std::max(pe.outer_t, r.t);
      if (r.t > otol) {
        pe.outer_member = false;
        if (pe.failing_cell < 0) pe.failing_cell = c;
        if (stop_early) break;
      }
    }
  }
  if (baseline_ == Baseline::null_info) {
    pe.member = pe.outer_member;
    pe.q_value = pe.outer_t;
    pe.status = pe.member ? Membership::member : Membership::non_member;
    return pe;
  }
  if (!pe.outer_member) {
    pe.member = false;
    pe.q_value = std::numeric_limits<double>::infinity();
    pe.status = Membership::non_member;
    return pe;
  }

  pe.sharp_evaluated = true;
  pe.member = true;
  pe.status = Membership::member;
  pe.failing_cell = -1;
  for (int c = 0; c < C; ++c) {
    CriterionOptions co = opts_.criterion;
    if (warm && c < static_cast<int>(warm->size()) && !(*warm)[c].empty()) co.warm_starts.push_back((*warm)[c]);
    FeasibilityResult r = criterion_q(games[c], InformationStructure::private_shock(games[c]), data_.cells[c], co);
    pe.restarts_used += r.restarts_used;
    pe.q_value = std::max(pe.q_value, r.q_value);
    if (r.status == Membership::member) {
      pe.certificates.push_back(r.sigma.sigma);
    } else {
      pe.member = false;
      if (pe.status != Membership::consistency_infeasible) pe.status = r.status;
      if (pe.failing_cell < 0) pe.failing_cell = c;
    }
    pe.cell_results.push_back(std::move(r));
    if (!pe.member && stop_early) break;
  }
  if (!pe.member) pe.certificates.clear();
  return pe;
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

// Walks away from the anchor on one side, then bisects the first rejected
// step and probes beyond the boundary for further members.
EndpointDiagnostics sweep_side(const IdentificationProblem& problem, const std::vector<double>& anchor,
                               const std::vector<double>& unit, double sign, const PointEvaluation& at_anchor,
                               const ProjectionOptions& opts, double anchor_value, detail::CertifiedPoint& end) {
  EndpointDiagnostics d;
  auto point = [&](double lam) {
    std::vector<double> th = anchor;
    for (size_t k = 0; k < th.size(); ++k) th[k] += sign * lam * unit[k];
    return th;
  };
  auto eval = [&](double lam, const std::vector<std::vector<double>>& cert) {
    ++d.evaluations;
    return problem.evaluate(point(lam), cert.empty() ? nullptr : &cert);
  };

  const double R = opts.search_radius;
  double lam_in = 0.0;
  double q_in = at_anchor.q_value;
  std::vector<std::vector<double>> cert = at_anchor.certificates;
  double lam_out = std::numeric_limits<double>::infinity();
  double q_out = 0.0;

  while (true) {
    // Sweep outward in fixed steps until the first rejection.
    lam_out = std::numeric_limits<double>::infinity();
    while (lam_in < R) {
      double lam = std::min(R, lam_in + opts.step);
      PointEvaluation pe = eval(lam, cert);
      if (pe.member) {
        lam_in = lam;
        q_in = pe.q_value;
        cert = std::move(pe.certificates);
      } else {
        lam_out = lam;
        q_out = pe.q_value;
        break;
      }
    }
    if (!(lam_out < std::numeric_limits<double>::infinity())) {
      d.at_search_limit = true;
      break;
    }
    while (lam_out - lam_in > opts.tol) {
      double mid = 0.5 * (lam_in + lam_out);
      PointEvaluation pe = eval(mid, cert);
      ++d.bisection_steps;
      if (pe.member) {
        lam_in = mid;
        q_in = pe.q_value;
        cert = std::move(pe.certificates);
      } else {
        lam_out = mid;
        q_out = pe.q_value;
      }
    }
    // Guard against a disconnected slice: coarse probes up to the radius.
    bool widened = false;
    for (int j = 1; j <= opts.probes && lam_out < R; ++j) {
      double lam = lam_out + (R - lam_out) * j / opts.probes;
      PointEvaluation pe = eval(lam, cert);
      ++d.probes_evaluated;
      if (pe.member) {
        ++d.probe_members;
        lam_in = lam;
        q_in = pe.q_value;
        cert = std::move(pe.certificates);
        widened = true;
        break;
      }
    }
    if (!widened) break;
  }
  d.value = anchor_value + sign * lam_in;
  d.theta = point(lam_in);
  d.q_at_endpoint = q_in;
  d.q_beyond = d.at_search_limit ? 0.0 : q_out;
  d.certified = true;
  end.theta = d.theta;
  end.certificates = std::move(cert);
  return d;
}

}  // namespace

ProjectionResult project(const IdentificationProblem& problem, const std::vector<double>& direction,
                         const std::vector<double>& anchor, const ProjectionOptions& opts) {
  const int d = problem.dim();
  if (static_cast<int>(direction.size()) != d || static_cast<int>(anchor.size()) != d)
    throw ModelError("direction and anchor must have one entry per free coefficient");
  const double nn = dot(direction, direction);
  if (!(nn > 0.0)) throw ModelError("projection direction must be nonzero");
  if (!(opts.step > 0.0) || !(opts.tol > 0.0) || opts.probes < 0 || !(opts.search_radius > 0.0))
    throw ModelError("projection step, tolerance and radius must be positive");

  ProjectionResult res;
  res.label = "direction";
  res.direction = direction;
  res.method = opts.method;
  res.anchor_value = dot(direction, anchor);

  PointEvaluation at_anchor = problem.evaluate(anchor);
  if (!at_anchor.member)
    throw IdentificationError("the anchor point is not a member of the identified set (criterion " +
                              format_double(at_anchor.q_value) + ")");

  if (opts.method != "grid_bisect" && opts.method != "joint_nlp")
    throw ModelError("unknown projection method '" + opts.method + "'");

  // theta(lambda) = anchor + lambda * p / |p|^2 moves p.theta by exactly lambda.
  std::vector<double> unit(direction);
  for (double& v : unit) v /= nn;
  EndpointDiagnostics sides[2];
  detail::CertifiedPoint ends[2];
  parallel_for(2, opts.jobs, [&](int s) {
    sides[s] = sweep_side(problem, anchor, unit, s == 0 ? -1.0 : 1.0, at_anchor, opts, res.anchor_value, ends[s]);
  });
  res.lo = sides[0];
  res.hi = sides[1];
  res.lower = res.lo.value;
  res.upper = res.hi.value;
  // The joint program starts from the grid endpoints, so its interval
  // contains the grid interval.
  if (opts.method == "joint_nlp" && problem.baseline() == Baseline::private_shock)
    detail::joint_nlp_extend(problem, direction, {anchor, at_anchor.certificates}, ends, opts, res);
  return res;
}

ProjectionResult project_coordinate(const IdentificationProblem& problem, const std::string& key,
                                    const std::vector<double>& anchor, const ProjectionOptions& opts) {
  const auto keys = problem.model().free_keys();
  auto it = std::find(keys.begin(), keys.end(), key);
  if (it == keys.end()) throw ModelError("'" + key + "' is not a free coefficient of the model");
  std::vector<double> dir(keys.size(), 0.0);
  dir[it - keys.begin()] = 1.0;
  ProjectionResult r = project(problem, dir, anchor, opts);
  r.label = key;
  return r;
}

int ScanGrid::violations() const {
  int v = 0;
  for (size_t k = 0; k < sharp.size(); ++k) v += sharp[k] && !outer[k];
  return v;
}

namespace {

std::vector<double> axis(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw ModelError("scan axis needs step > 0 and max >= min");
  const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
  std::vector<double> v;
  for (int k = 0; k <= n; ++k) v.push_back(lo + k * step);
  return v;
}

}  // namespace

ScanGrid scan_2d(const Model& model, const CcpData& data, const ScanSpec& spec, const MembershipOptions& opts) {
  const auto keys = model.free_keys();
  auto ix = std::find(keys.begin(), keys.end(), spec.x_key);
  auto iy = std::find(keys.begin(), keys.end(), spec.y_key);
  if (ix == keys.end() || iy == keys.end()) throw ModelError("scan coordinates must be free coefficients");
  if (ix == iy) throw ModelError("scan coordinates must differ");
  if (spec.base.size() != keys.size()) throw ModelError("scan base point has the wrong length");
  const int kx = static_cast<int>(ix - keys.begin()), ky = static_cast<int>(iy - keys.begin());

  ScanGrid grid;
  grid.x_key = spec.x_key;
  grid.y_key = spec.y_key;
  grid.xs = axis(spec.x_min, spec.x_max, spec.step);
  grid.ys = axis(spec.y_min, spec.y_max, spec.step);
  const size_t nx = grid.xs.size(), ny = grid.ys.size();
  grid.sharp.assign(nx * ny, 0);
  grid.outer.assign(nx * ny, 0);
  grid.q_sharp.assign(nx * ny, 0.0);
  grid.t_outer.assign(nx * ny, 0.0);

  IdentificationProblem sharp(model, data, Baseline::private_shock, opts);
  IdentificationProblem outer(model, data, Baseline::null_info, opts);

  // Rows run as independent jobs; within a row each node starts from the
  // certificate of its left neighbour, so results do not depend on --jobs.
  parallel_for(static_cast<int>(ny), spec.jobs, [&](int jy) {
    std::vector<std::vector<double>> cert;
    for (size_t jx = 0; jx < nx; ++jx) {
      std::vector<double> th = spec.base;
      th[kx] = grid.xs[jx];
      th[ky] = grid.ys[jy];
      const size_t k = static_cast<size_t>(jy) * nx + jx;
      PointEvaluation po = outer.evaluate(th);
      grid.outer[k] = po.member;
      grid.t_outer[k] = po.outer_t;
      PointEvaluation ps = sharp.evaluate(th, cert.empty() ? nullptr : &cert);
      grid.sharp[k] = ps.member;
      grid.q_sharp[k] = ps.q_value;
      if (ps.member) cert = std::move(ps.certificates);
    }
  });
  return grid;
}

std::vector<ShrinkageRow> shrinkage_report(const std::vector<ProjectionResult>& design0,
                                           const std::vector<ProjectionResult>& design1,
                                           const std::string& settings0, const std::string& settings1) {
  if (settings0 != settings1) throw ModelError("shrinkage comparison needs identical projection settings");
  if (design0.size() != design1.size()) throw ModelError("both designs must project the same coordinates");
  std::vector<ShrinkageRow> out;
  for (size_t k = 0; k < design0.size(); ++k) {
    if (design0[k].label != design1[k].label) throw ModelError("both designs must project the same coordinates");
    ShrinkageRow r;
    r.coordinate = design0[k].label;
    r.lower0 = design0[k].lower;
    r.upper0 = design0[k].upper;
    r.lower1 = design1[k].lower;
    r.upper1 = design1[k].upper;
    r.width0 = r.upper0 - r.lower0;
    r.width1 = r.upper1 - r.lower1;
    r.shrinks = r.width1 < r.width0;
    out.push_back(r);
  }
  return out;
}

}  // namespace mce
