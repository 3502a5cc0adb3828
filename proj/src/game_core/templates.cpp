#include <cmath>
#include <sstream>

#include "mce/game_core.hpp"

namespace mce {

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

const std::vector<std::string> kExp1Keys = {"RS", "RN", "FC", "EC"};
const std::vector<std::string> kExp2Keys = {"m", "c", "e", "w", "kappa"};

NamedTheta named(const std::vector<std::string>& keys, const std::vector<double>& v) {
  if (v.size() != keys.size()) throw ModelError("coefficient vector has the wrong length");
  return NamedTheta{keys, v};
}

}  // namespace

BasicGame build_experiment1(const NamedTheta& theta, const Exp1Options& opts) {
  GameTemplate probe;
  probe.name = "exp1";
  probe.keys = kExp1Keys;
  const std::vector<double> th = theta_for(probe, theta);
  const double RS = th[0], RN = th[1], FC = th[2], EC = th[3];

  const double sizes[3] = {2.0, 6.0, 10.0};
  const double P[3][3] = {{0.8, 0.2, 0.0}, {0.2, 0.6, 0.2}, {0.0, 0.2, 0.8}};

  BasicGame g;
  g.n_players = 2;
  g.discount = opts.discount;
  g.action_labels = {{"0", "1"}, {"0", "1"}};
  ShockGrid grid = discretize_shock({ShockFamily::logistic, opts.shock_points});
  g.shocks = {grid, grid};
  g.state_factor_names = {"s", "z1", "z2"};
  for (int s = 0; s < 3; ++s)
    for (int z1 = 0; z1 < 2; ++z1)
      for (int z2 = 0; z2 < 2; ++z2) {
        g.state_labels.push_back("s=" + fmt(sizes[s]) + ";z1=" + std::to_string(z1) + ";z2=" + std::to_string(z2));
        g.state_factor_values.push_back({fmt(sizes[s]), std::to_string(z1), std::to_string(z2)});
      }
  const int X = 12, A = 4, E = grid.size();
  auto sidx = [](int s, int z1, int z2) { return s * 4 + z1 * 2 + z2; };

  g.transition.assign(static_cast<size_t>(A) * X * X, 0.0);
  for (int a = 0; a < A; ++a) {
    int a1 = a / 2, a2 = a % 2;
    for (int s = 0; s < 3; ++s)
      for (int z = 0; z < 4; ++z) {
        int x = s * 4 + z;
        for (int s2 = 0; s2 < 3; ++s2) g.transition[(static_cast<size_t>(a) * X + x) * X + sidx(s2, a1, a2)] += P[s][s2];
      }
  }

  g.payoff.assign(2, std::vector<double>(static_cast<size_t>(A) * X * E, 0.0));
  for (int i = 0; i < 2; ++i)
    for (int a = 0; a < A; ++a) {
      int ai = i == 0 ? a / 2 : a % 2;
      int aj = i == 0 ? a % 2 : a / 2;
      if (ai == 0) continue;
      for (int s = 0; s < 3; ++s)
        for (int z1 = 0; z1 < 2; ++z1)
          for (int z2 = 0; z2 < 2; ++z2) {
            int x = sidx(s, z1, z2);
            int zi = i == 0 ? z1 : z2;
            double base = RS * std::log(sizes[s]) - RN * aj - FC - EC * (1 - zi);
            for (int e = 0; e < E; ++e) g.payoff[i][(static_cast<size_t>(a) * X + x) * E + e] = base + grid.points[e];
          }
    }
  g.finalize();
  return g;
}

BasicGame build_experiment1(const std::vector<double>& theta, const Exp1Options& opts) {
  return build_experiment1(named(kExp1Keys, theta), opts);
}

GameTemplate experiment1_template(const Exp1Options& opts) {
  GameTemplate t;
  t.name = "exp1";
  t.keys = kExp1Keys;
  t.build = [opts](const std::vector<double>& th) { return build_experiment1(th, opts); };
  return t;
}

BasicGame build_experiment2(const NamedTheta& theta, double w1, double w2, const Exp2Options& opts) {
  GameTemplate probe;
  probe.name = "exp2";
  probe.keys = kExp2Keys;
  const std::vector<double> th = theta_for(probe, theta);
  const double m = th[0], c = th[1], ee = th[2], ww = th[3], kappa = th[4];
  const double w[2] = {w1, w2};

  BasicGame g;
  g.n_players = 2;
  g.discount = opts.discount;
  g.action_labels = {{"0", "1"}, {"0", "1"}};
  ShockGrid grid = discretize_shock({ShockFamily::standard_normal, opts.shock_points});
  g.shocks = {grid, grid};
  g.state_factor_names = {"z1", "z2"};
  for (int z1 = 0; z1 < 2; ++z1)
    for (int z2 = 0; z2 < 2; ++z2) {
      g.state_labels.push_back("z1=" + std::to_string(z1) + ";z2=" + std::to_string(z2));
      g.state_factor_values.push_back({std::to_string(z1), std::to_string(z2)});
    }
  const int X = 4, A = 4, E = grid.size();
  // Incumbency next period equals this period's action profile.
  g.transition.assign(static_cast<size_t>(A) * X * X, 0.0);
  for (int a = 0; a < A; ++a)
    for (int x = 0; x < X; ++x) g.transition[(static_cast<size_t>(a) * X + x) * X + a] = 1.0;

  g.payoff.assign(2, std::vector<double>(static_cast<size_t>(A) * X * E, 0.0));
  for (int i = 0; i < 2; ++i)
    for (int a = 0; a < A; ++a) {
      int ai = i == 0 ? a / 2 : a % 2;
      int aj = i == 0 ? a % 2 : a / 2;
      for (int x = 0; x < X; ++x) {
        int zi = i == 0 ? x / 2 : x % 2;
        for (int e = 0; e < E; ++e) {
          double v = ai == 1 ? m + c * aj + ee * (1 - zi) + ww * w[i] + grid.points[e] : kappa * zi;
          g.payoff[i][(static_cast<size_t>(a) * X + x) * E + e] = v;
        }
      }
    }
  g.finalize();
  return g;
}

BasicGame build_experiment2(const std::vector<double>& theta, double w1, double w2, const Exp2Options& opts) {
  return build_experiment2(named(kExp2Keys, theta), w1, w2, opts);
}

GameTemplate experiment2_template(double w1, double w2, const Exp2Options& opts) {
  GameTemplate t;
  t.name = "exp2";
  t.keys = kExp2Keys;
  t.build = [=](const std::vector<double>& th) { return build_experiment2(th, w1, w2, opts); };
  return t;
}

GameTemplate experiment2_known_kappa_template(double w1, double w2, double kappa, const Exp2Options& opts) {
  GameTemplate t;
  t.name = "exp2";
  t.keys = {"m", "c", "e", "w"};
  t.build = [=](const std::vector<double>& th) {
    if (th.size() != 4) throw ModelError("coefficient vector has the wrong length");
    return build_experiment2(std::vector<double>{th[0], th[1], th[2], th[3], kappa}, w1, w2, opts);
  };
  return t;
}

}  // namespace mce
