#include <boost/math/distributions/normal.hpp>
#include <cmath>

#include "mce/game_core.hpp"

namespace mce {

ShockGrid discretize_shock(const ShockSpec& spec) {
  if (spec.n_points < 1) throw ModelError("shock discretisation needs at least one point");
  const int n = spec.n_points;
  ShockGrid g;
  g.points.resize(n);
  g.weights.assign(n, 1.0 / n);
  boost::math::normal_distribution<double> normal;
  for (int k = 1; k <= n; ++k) {
    double q = (2.0 * k - 1.0) / (2.0 * n);
    double p;
    if (spec.family == ShockFamily::logistic) {
      p = std::log(q / (1.0 - q));
    } else {
      p = boost::math::quantile(normal, q);
    }
    g.points[k - 1] = p;
  }
  // Enforce exact symmetry; both supported families are symmetric about 0.
  for (int k = 0; k < n / 2; ++k) {
    double h = 0.5 * (g.points[n - 1 - k] - g.points[k]);
    g.points[k] = -h;
    g.points[n - 1 - k] = h;
  }
  if (n % 2 == 1) g.points[n / 2] = 0.0;
  return g;
}

ShockFamily parse_shock_family(const std::string& name) {
  if (name == "logistic") return ShockFamily::logistic;
  if (name == "standard_normal" || name == "normal") return ShockFamily::standard_normal;
  throw ModelError("unknown shock family '" + name + "'");
}

std::string to_string(ShockFamily f) { return f == ShockFamily::logistic ? "logistic" : "standard_normal"; }

}  // namespace mce
