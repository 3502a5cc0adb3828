#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "mce/linear_solvers.hpp"
#include "mce/mpe_solver.hpp"
#include "util/parallel.hpp"

namespace mce {

void CCPTable::validate(double tol) const {
  if (p.size() != static_cast<size_t>(n_states) * n_joint_actions) throw ModelError("CCP table has the wrong size");
  for (int x = 0; x < n_states; ++x) {
    double s = 0.0;
    for (int a = 0; a < n_joint_actions; ++a) {
      if (!(at(x, a) >= 0.0)) throw ModelError("CCP entries must be non-negative");
      s += at(x, a);
    }
    if (std::abs(s - 1.0) > tol) throw ModelError("CCP row " + std::to_string(x) + " does not sum to one");
  }
}

std::shared_ptr<const CellLayout> CellLayout::build(const BasicGame& g, const InformationStructure& info) {
  info.validate(g);
  auto out = std::make_shared<CellLayout>();
  const int X = g.num_states(), E = g.num_joint_shocks(), T = info.signals.total();
  out->n_players = g.n_players;
  out->n_labels = info.n_signals;
  for (int x = 0; x < X; ++x) {
    out->state_begin.push_back(out->size());
    std::vector<double> psi = prior(g, x);
    for (int e = 0; e < E; ++e) {
      if (psi[e] <= 0.0) continue;
      for (int t = 0; t < T; ++t) {
        double p = info.pi(t, x, e, E);
        if (p <= 0.0) continue;
        out->cells.push_back({x, e, t, psi[e] * p});
        for (int i = 0; i < g.n_players; ++i) out->labels.push_back(info.signals.digit(t, i));
      }
    }
  }
  out->state_begin.push_back(out->size());
  return out;
}

void DecisionRule::validate(double tol) const {
  if (!layout || sigma.size() != static_cast<size_t>(layout->size()) * n_joint_actions)
    throw ModelError("decision rule does not match its cell layout");
  for (int c = 0; c < layout->size(); ++c) {
    double s = 0.0;
    for (int a = 0; a < n_joint_actions; ++a) {
      if (at(c, a) < -tol) throw ModelError("decision rule has a negative entry");
      s += at(c, a);
    }
    if (std::abs(s - 1.0) > tol) throw ModelError("decision rule row does not sum to one");
  }
}

DecisionRule product_rule(const BasicGame& g, const StrategyProfile& beta) {
  DecisionRule r;
  r.layout = CellLayout::build(g, InformationStructure::private_shock(g));
  r.n_joint_actions = g.num_joint_actions();
  r.sigma.assign(static_cast<size_t>(r.layout->size()) * r.n_joint_actions, 0.0);
  for (int c = 0; c < r.layout->size(); ++c) {
    const auto& cell = r.layout->cells[c];
    for (int a = 0; a < r.n_joint_actions; ++a) {
      double p = 1.0;
      for (int i = 0; i < g.n_players; ++i)
        p *= beta.at(g, i, cell.x, g.joint_shocks.digit(cell.e, i), g.actions.digit(a, i));
      r.sigma[static_cast<size_t>(c) * r.n_joint_actions + a] = p;
    }
  }
  return r;
}

CCPTable induced_ccp(const BasicGame& g, const DecisionRule& rule) {
  CCPTable phi;
  phi.n_states = g.num_states();
  phi.n_joint_actions = g.num_joint_actions();
  phi.p.assign(static_cast<size_t>(phi.n_states) * phi.n_joint_actions, 0.0);
  for (int c = 0; c < rule.layout->size(); ++c) {
    const auto& cell = rule.layout->cells[c];
    for (int a = 0; a < phi.n_joint_actions; ++a) phi.at(cell.x, a) += cell.weight * rule.at(c, a);
  }
  return phi;
}

ValueFunction ex_ante_value(const BasicGame& g, const DecisionRule& rule) {
  const int X = g.num_states(), A = g.num_joint_actions(), N = g.n_players;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(X, X);
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(X, N);
  CCPTable phi = induced_ccp(g, rule);
  for (int x = 0; x < X; ++x)
    for (int a = 0; a < A; ++a) {
      double p = phi.at(x, a);
      if (p == 0.0) continue;
      for (int y = 0; y < X; ++y) M(x, y) += p * g.f(y, a, x);
    }
  for (int c = 0; c < rule.layout->size(); ++c) {
    const auto& cell = rule.layout->cells[c];
    for (int a = 0; a < A; ++a) {
      double w = cell.weight * rule.at(c, a);
      if (w == 0.0) continue;
      for (int i = 0; i < N; ++i) r(cell.x, i) += w * g.u(i, a, cell.x, g.joint_shocks.digit(cell.e, i));
    }
  }
  Eigen::MatrixXd K = Eigen::MatrixXd::Identity(X, X) - g.discount * M;
  ValueFunction V;
  V.n_players = N;
  V.n_states = X;
  V.v.resize(static_cast<size_t>(N) * X);
  for (int i = 0; i < N; ++i) {
    Eigen::VectorXd vi = solve_linear_system(K, r.col(i));
    for (int x = 0; x < X; ++x) V.at(i, x) = vi[x];
  }
  return V;
}

ValueFunction ex_ante_value(const BasicGame& g, const StrategyProfile& beta) {
  return ex_ante_value(g, product_rule(g, beta));
}

OutcomeValue outcome_value(const BasicGame& g, const ValueFunction& V) {
  const int X = g.num_states(), A = g.num_joint_actions();
  OutcomeValue out;
  out.v = g.payoff;
  for (int i = 0; i < g.n_players; ++i) {
    const int E = g.num_shocks(i);
    for (int a = 0; a < A; ++a)
      for (int x = 0; x < X; ++x) {
        double cont = 0.0;
        for (int y = 0; y < X; ++y) cont += g.f(y, a, x) * V.at(i, y);
        cont *= g.discount;
        for (int e = 0; e < E; ++e) out.v[i][(static_cast<size_t>(a) * X + x) * E + e] += cont;
      }
  }
  return out;
}

SelectionPolicy parse_selection_policy(const std::string& s) {
  if (s == "first") return SelectionPolicy::first;
  if (s == "max_joint_activity") return SelectionPolicy::max_joint_activity;
  throw ModelError("unknown selection policy '" + s + "'");
}

std::string to_string(SelectionPolicy p) {
  return p == SelectionPolicy::first ? "first" : "max_joint_activity";
}

namespace {

StrategyProfile empty_profile(const BasicGame& g) {
  StrategyProfile b;
  for (int i = 0; i < g.n_players; ++i)
    b.beta.emplace_back(static_cast<size_t>(g.num_states()) * g.num_shocks(i) * g.num_actions(i), 0.0);
  return b;
}

CCPTable profile_ccp(const BasicGame& g, const StrategyProfile& b) {
  const int X = g.num_states(), A = g.num_joint_actions(), E = g.num_joint_shocks();
  CCPTable phi;
  phi.n_states = X;
  phi.n_joint_actions = A;
  phi.p.assign(static_cast<size_t>(X) * A, 0.0);
  for (int x = 0; x < X; ++x) {
    std::vector<double> psi = prior(g, x);
    for (int e = 0; e < E; ++e)
      for (int a = 0; a < A; ++a) {
        double p = psi[e];
        for (int i = 0; i < g.n_players && p != 0.0; ++i)
          p *= b.at(g, i, x, g.joint_shocks.digit(e, i), g.actions.digit(a, i));
        phi.at(x, a) += p;
      }
  }
  return phi;
}

// Expected outcome value of each own action at (x, e_i), unnormalised by
// the probability of e_i, stored at (x * E_i + e_i) * A_i + a_i.
std::vector<double> action_values(const BasicGame& g, const StrategyProfile& b, const OutcomeValue& ov, int i) {
  const int X = g.num_states(), A = g.num_joint_actions(), E = g.num_joint_shocks();
  const int Ei = g.num_shocks(i), Ai = g.num_actions(i);
  std::vector<double> val(static_cast<size_t>(X) * Ei * Ai, 0.0);
  for (int x = 0; x < X; ++x) {
    std::vector<double> psi = prior(g, x);
    for (int e = 0; e < E; ++e) {
      if (psi[e] == 0.0) continue;
      int ei = g.joint_shocks.digit(e, i);
      for (int a = 0; a < A; ++a) {
        double p = psi[e];
        for (int j = 0; j < g.n_players && p != 0.0; ++j)
          if (j != i) p *= b.at(g, j, x, g.joint_shocks.digit(e, j), g.actions.digit(a, j));
        if (p == 0.0) continue;
        val[(static_cast<size_t>(x) * Ei + ei) * Ai + g.actions.digit(a, i)] += p * ov.at(g, i, a, x, ei);
      }
    }
  }
  return val;
}

// Best response row: uniform over actions within the tie band of the best.
// Returns false when the row has a tie.
bool best_response(const double* val, int Ai, double tie_tol, double* out) {
  double best = val[0];
  for (int a = 1; a < Ai; ++a) best = std::max(best, val[a]);
  double band = tie_tol * std::max(1.0, std::abs(best));
  int count = 0;
  for (int a = 0; a < Ai; ++a) count += (val[a] >= best - band);
  for (int a = 0; a < Ai; ++a) out[a] = (val[a] >= best - band) ? 1.0 / count : 0.0;
  return count == 1;
}

// Shock probabilities of player i at x, used to normalise action values.
std::vector<double> own_shock_mass(const BasicGame& g, int i, int x) {
  std::vector<double> psi = prior(g, x);
  std::vector<double> m(g.num_shocks(i), 0.0);
  for (int e = 0; e < g.num_joint_shocks(); ++e) m[g.joint_shocks.digit(e, i)] += psi[e];
  return m;
}

}  // namespace

StrategyProfile uniform_profile(const BasicGame& g) {
  StrategyProfile b = empty_profile(g);
  for (int i = 0; i < g.n_players; ++i)
    std::fill(b.beta[i].begin(), b.beta[i].end(), 1.0 / g.num_actions(i));
  return b;
}

StrategyProfile random_profile(const BasicGame& g, std::uint64_t seed, int run) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(run), 0x6d70u};
  std::mt19937_64 rng(seq);
  StrategyProfile b = empty_profile(g);
  for (int i = 0; i < g.n_players; ++i) {
    const int Ai = g.num_actions(i);
    for (size_t row = 0; row < b.beta[i].size() / Ai; ++row) {
      double* p = &b.beta[i][row * Ai];
      if (Ai == 2) {
        p[1] = unit_uniform(rng());
        p[0] = 1.0 - p[1];
        continue;
      }
      double s = 0.0;
      for (int a = 0; a < Ai; ++a) {
        p[a] = -std::log(1.0 - unit_uniform(rng()));
        s += p[a];
      }
      for (int a = 0; a < Ai; ++a) p[a] /= s;
    }
  }
  return b;
}

double deviation_residual(const BasicGame& g, const StrategyProfile& b, const ValueFunction& V) {
  OutcomeValue ov = outcome_value(g, V);
  double worst = 0.0;
  for (int i = 0; i < g.n_players; ++i) {
    const int X = g.num_states(), Ei = g.num_shocks(i), Ai = g.num_actions(i);
    std::vector<double> val = action_values(g, b, ov, i);
    for (int x = 0; x < X; ++x) {
      std::vector<double> mass = own_shock_mass(g, i, x);
      for (int ei = 0; ei < Ei; ++ei) {
        if (mass[ei] <= 0.0) continue;
        const double* v = &val[(static_cast<size_t>(x) * Ei + ei) * Ai];
        double best = *std::max_element(v, v + Ai) / mass[ei];
        for (int a = 0; a < Ai; ++a)
          if (b.at(g, i, x, ei, a) > 0.0) worst = std::max(worst, best - v[a] / mass[ei]);
      }
    }
  }
  return worst;
}

MpeRun solve_mpe_from(const BasicGame& g, const StrategyProfile& start, const MpeOptions& opts) {
  const int X = g.num_states();
  MpeRun run;
  StrategyProfile b = start;
  CCPTable phi = profile_ccp(g, b);
  std::vector<double> br;
  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    ValueFunction V = ex_ante_value(g, b);
    OutcomeValue ov = outcome_value(g, V);
    StrategyProfile next = b;
    for (int i = 0; i < g.n_players; ++i) {
      const int Ei = g.num_shocks(i), Ai = g.num_actions(i);
      std::vector<double> val = action_values(g, b, ov, i);
      br.resize(Ai);
      for (int x = 0; x < X; ++x) {
        std::vector<double> mass = own_shock_mass(g, i, x);
        for (int ei = 0; ei < Ei; ++ei) {
          size_t row = (static_cast<size_t>(x) * Ei + ei) * Ai;
          if (mass[ei] <= 0.0) continue;
          std::vector<double> v(val.begin() + row, val.begin() + row + Ai);
          for (double& t : v) t /= mass[ei];
          best_response(v.data(), Ai, opts.tie_tol, br.data());
          for (int a = 0; a < Ai; ++a)
            next.beta[i][row + a] = (1.0 - opts.damping) * b.beta[i][row + a] + opts.damping * br[a];
        }
      }
    }
    CCPTable phi_next = profile_ccp(g, next);
    double change = 0.0;
    for (size_t k = 0; k < phi.p.size(); ++k) change = std::max(change, std::abs(phi_next.p[k] - phi.p[k]));
    b = std::move(next);
    phi = std::move(phi_next);
    run.sweeps = sweep;
    run.ccp_change = change;
    if (change <= opts.ccp_tol) {
      run.converged = true;
      break;
    }
  }

  if (run.converged) {
    // Damping leaves geometric residue on abandoned actions. Rows with a
    // strict best response are snapped to it; tied rows keep their mixture.
    ValueFunction V = ex_ante_value(g, b);
    OutcomeValue ov = outcome_value(g, V);
    StrategyProfile snapped = b;
    for (int i = 0; i < g.n_players; ++i) {
      const int Ei = g.num_shocks(i), Ai = g.num_actions(i);
      std::vector<double> val = action_values(g, b, ov, i);
      br.resize(Ai);
      for (int x = 0; x < X; ++x) {
        std::vector<double> mass = own_shock_mass(g, i, x);
        for (int ei = 0; ei < Ei; ++ei) {
          if (mass[ei] <= 0.0) continue;
          size_t row = (static_cast<size_t>(x) * Ei + ei) * Ai;
          std::vector<double> v(val.begin() + row, val.begin() + row + Ai);
          for (double& t : v) t /= mass[ei];
          if (best_response(v.data(), Ai, opts.tie_tol, br.data()))
            for (int a = 0; a < Ai; ++a) snapped.beta[i][row + a] = br[a];
        }
      }
    }
    b = std::move(snapped);
    phi = profile_ccp(g, b);
  }

  run.V = ex_ante_value(g, b);
  run.deviation_residual = deviation_residual(g, b, run.V);
  if (run.converged && run.deviation_residual > opts.residual_tol) {
    run.converged = false;
    std::ostringstream m;
    m << "CCPs settled but the one-shot deviation residual is " << run.deviation_residual;
    run.message = m.str();
  } else if (!run.converged) {
    std::ostringstream m;
    m << "no convergence after " << run.sweeps << " sweeps (last CCP change " << run.ccp_change
      << ", deviation residual " << run.deviation_residual << ")";
    run.message = m.str();
  }
  run.beta = std::move(b);
  run.phi = std::move(phi);
  return run;
}

double joint_activity(const BasicGame& g, const CCPTable& phi) {
  double s = 0.0;
  for (int x = 0; x < phi.n_states; ++x) s += phi.at(x, g.num_joint_actions() - 1);
  return s;
}

int select_equilibrium(const std::vector<MpeRun>& runs, SelectionPolicy policy) {
  if (runs.empty()) throw MpeError("equilibrium selection over an empty run list");
  int chosen = -1;
  double best = -1.0;
  for (size_t k = 0; k < runs.size(); ++k) {
    const auto& r = runs[k];
    if (!r.converged) continue;
    if (policy == SelectionPolicy::first) return static_cast<int>(k);
    double s = 0.0;
    for (int x = 0; x < r.phi.n_states; ++x) s += r.phi.at(x, r.phi.n_joint_actions - 1);
    if (s > best) {
      best = s;
      chosen = static_cast<int>(k);
    }
  }
  if (chosen < 0) throw MpeError("no converged equilibrium run satisfies the selection policy");
  return chosen;
}

MpeResult solve_mpe(const BasicGame& g, const MpeOptions& opts) {
  if (opts.restarts < 1) throw MpeError("at least one start is required");
  MpeResult res;
  res.seed = opts.seed;
  res.runs.resize(opts.restarts);
  parallel_for(opts.restarts, opts.jobs, [&](int k) {
    res.runs[k] = solve_mpe_from(g, random_profile(g, opts.seed, k), opts);
    res.runs[k].index = k;
  });
  res.selected = select_equilibrium(res.runs, opts.policy);
  return res;
}

}  // namespace mce
