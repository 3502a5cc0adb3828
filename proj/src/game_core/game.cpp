#include <cmath>
#include <sstream>

#include "mce/game_core.hpp"

namespace mce {

Radix::Radix(std::vector<int> sizes) : sizes_(std::move(sizes)), stride_(sizes_.size(), 1) {
  total_ = 1;
  for (int i = static_cast<int>(sizes_.size()) - 1; i >= 0; --i) {
    if (sizes_[i] < 1) throw ModelError("radix digit with non-positive size");
    stride_[i] = total_;
    total_ *= sizes_[i];
  }
}

void BasicGame::finalize() {
  if (n_players < 1) throw ModelError("a game needs at least one player");
  if (static_cast<int>(action_labels.size()) != n_players) throw ModelError("action labels missing for some player");
  if (static_cast<int>(shocks.size()) != n_players) throw ModelError("shock grid missing for some player");
  std::vector<int> na, ne;
  for (int i = 0; i < n_players; ++i) {
    na.push_back(static_cast<int>(action_labels[i].size()));
    ne.push_back(shocks[i].size());
  }
  actions = Radix(na);
  joint_shocks = Radix(ne);
  if (player_labels.empty())
    for (int i = 0; i < n_players; ++i) player_labels.push_back("p" + std::to_string(i + 1));
  validate();
}

void BasicGame::validate() const {
  const int X = num_states();
  const int A = num_joint_actions();
  if (X < 1) throw ModelError("a game needs at least one state");
  if (!(discount >= 0.0 && discount < 1.0)) throw ModelError("discount factor must lie in [0, 1)");
  if (transition.size() != static_cast<size_t>(A) * X * X) throw ModelError("transition tensor has the wrong size");
  for (int a = 0; a < A; ++a)
    for (int x = 0; x < X; ++x) {
      double s = 0.0;
      for (int y = 0; y < X; ++y) {
        double v = f(y, a, x);
        if (!(v >= 0.0)) throw ModelError("transition probabilities must be non-negative");
        s += v;
      }
      if (std::abs(s - 1.0) > 1e-12) {
        std::ostringstream m;
        m << "transition row (a=" << a << ", x=" << x << ") sums to " << s;
        throw ModelError(m.str());
      }
    }
  for (int i = 0; i < n_players; ++i) {
    const auto& g = shocks[i];
    if (g.points.size() != g.weights.size() || g.points.empty()) throw ModelError("malformed shock grid");
    double s = 0.0;
    for (double w : g.weights) {
      if (!(w >= 0.0)) throw ModelError("shock weights must be non-negative");
      s += w;
    }
    if (std::abs(s - 1.0) > 1e-12) throw ModelError("shock weights must sum to one");
    if (payoff.size() != static_cast<size_t>(n_players) ||
        payoff[i].size() != static_cast<size_t>(A) * X * g.size())
      throw ModelError("payoff table has the wrong size");
    for (double v : payoff[i])
      if (!std::isfinite(v)) throw ModelError("payoff table contains a non-finite value");
  }
  if (!prior_table.empty()) {
    const int E = num_joint_shocks();
    if (prior_table.size() != static_cast<size_t>(X) * E) throw ModelError("prior table has the wrong size");
    for (int x = 0; x < X; ++x) {
      double s = 0.0;
      for (int e = 0; e < E; ++e) {
        double v = prior_table[static_cast<size_t>(x) * E + e];
        if (!(v >= 0.0)) throw ModelError("prior probabilities must be non-negative");
        s += v;
      }
      if (std::abs(s - 1.0) > 1e-12) throw ModelError("prior row must sum to one");
    }
  }
}

std::string BasicGame::joint_action_label(int a) const {
  std::string s;
  for (int i = 0; i < n_players; ++i) {
    if (i) s += "|";
    s += action_labels[i][actions.digit(a, i)];
  }
  return s;
}

std::vector<double> prior(const BasicGame& game, int x) {
  if (x < 0 || x >= game.num_states()) throw ModelError("state index out of range");
  const int E = game.num_joint_shocks();
  std::vector<double> p(E, 1.0);
  if (!game.prior_table.empty()) {
    for (int e = 0; e < E; ++e) p[e] = game.prior_table[static_cast<size_t>(x) * E + e];
    return p;
  }
  for (int e = 0; e < E; ++e)
    for (int i = 0; i < game.n_players; ++i) p[e] *= game.shocks[i].weights[game.joint_shocks.digit(e, i)];
  return p;
}

std::string to_string(InfoTag t) {
  switch (t) {
    case InfoTag::null_info:
      return "null";
    case InfoTag::private_shock:
      return "private";
    case InfoTag::general:
      return "general";
  }
  return "unknown";
}

InformationStructure InformationStructure::null_info(const BasicGame& g) {
  InformationStructure s;
  s.tag = InfoTag::null_info;
  s.n_signals.assign(g.n_players, 1);
  s.signals = Radix(s.n_signals);
  s.kernel.assign(static_cast<size_t>(g.num_states()) * g.num_joint_shocks(), 1.0);
  return s;
}

InformationStructure InformationStructure::private_shock(const BasicGame& g) {
  InformationStructure s;
  s.tag = InfoTag::private_shock;
  for (int i = 0; i < g.n_players; ++i) s.n_signals.push_back(g.num_shocks(i));
  s.signals = Radix(s.n_signals);
  const int X = g.num_states(), E = g.num_joint_shocks(), T = s.signals.total();
  s.kernel.assign(static_cast<size_t>(X) * E * T, 0.0);
  // Signal and shock radices coincide, so the joint signal equal to e has index e.
  for (int x = 0; x < X; ++x)
    for (int e = 0; e < E; ++e) s.kernel[(static_cast<size_t>(x) * E + e) * T + e] = 1.0;
  return s;
}

InformationStructure InformationStructure::general(const BasicGame& g, std::vector<int> n_signals,
                                                   std::vector<double> kernel) {
  InformationStructure s;
  s.tag = InfoTag::general;
  s.n_signals = std::move(n_signals);
  s.signals = Radix(s.n_signals);
  s.kernel = std::move(kernel);
  s.validate(g);
  return s;
}

void InformationStructure::validate(const BasicGame& g) const {
  if (static_cast<int>(n_signals.size()) != g.n_players) throw ModelError("signal spaces missing for some player");
  const int X = g.num_states(), E = g.num_joint_shocks(), T = signals.total();
  if (kernel.size() != static_cast<size_t>(X) * E * T) throw ModelError("signal kernel has the wrong size");
  for (int x = 0; x < X; ++x)
    for (int e = 0; e < E; ++e) {
      double s = 0.0;
      for (int t = 0; t < T; ++t) {
        double v = pi(t, x, e, E);
        if (!(v >= 0.0)) throw ModelError("signal probabilities must be non-negative");
        s += v;
      }
      if (std::abs(s - 1.0) > 1e-12) throw ModelError("signal kernel row must sum to one");
    }
  if (tag == InfoTag::null_info) {
    for (int k : n_signals)
      if (k != 1) throw ModelError("the null structure has singleton signal spaces");
  }
  if (tag == InfoTag::private_shock) {
    for (int i = 0; i < g.n_players; ++i)
      if (n_signals[i] != g.num_shocks(i)) throw ModelError("private-shock signals must match the shock grid");
    for (int x = 0; x < X; ++x)
      for (int e = 0; e < E; ++e)
        if (pi(e, x, e, E) != 1.0) throw ModelError("private-shock kernel must reveal each player's own shock");
  }
}

int GameTemplate::key_index(const std::string& key) const {
  for (int k = 0; k < dim(); ++k)
    if (keys[k] == key) return k;
  throw ModelError("template '" + name + "' has no coefficient '" + key + "'");
}

std::vector<double> theta_for(const GameTemplate& tpl, const NamedTheta& theta) {
  if (theta.keys.size() != theta.values.size()) throw ModelError("coefficient names and values differ in length");
  std::vector<double> out(tpl.dim(), 0.0);
  std::vector<char> seen(tpl.dim(), 0);
  for (size_t k = 0; k < theta.keys.size(); ++k) {
    int idx = -1;
    for (int j = 0; j < tpl.dim(); ++j)
      if (tpl.keys[j] == theta.keys[k]) idx = j;
    if (idx < 0) throw ModelError("unknown coefficient '" + theta.keys[k] + "' for template '" + tpl.name + "'");
    out[idx] = theta.values[k];
    seen[idx] = 1;
  }
  for (int j = 0; j < tpl.dim(); ++j)
    if (!seen[j]) throw ModelError("missing coefficient '" + tpl.keys[j] + "'");
  return out;
}

}  // namespace mce
