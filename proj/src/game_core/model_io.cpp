#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "mce/model.hpp"

namespace mce {

using nlohmann::json;

namespace {

const std::vector<std::string>& template_keys(const std::string& name) {
  static const std::vector<std::string> exp1 = {"RS", "RN", "FC", "EC"};
  static const std::vector<std::string> exp2 = {"m", "c", "e", "w", "kappa"};
  static const std::vector<std::string> none;
  if (name == "exp1") return exp1;
  if (name == "exp2") return exp2;
  return none;
}

template <class T>
T get_field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ModelError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ModelError(where + ": field '" + key + "' has the wrong type");
  }
}

BasicGame parse_custom(const json& j) {
  const std::string where = "custom model";
  BasicGame g;
  if (!j.contains("players")) throw ModelError(where + ": missing field 'players'");
  if (j["players"].is_number_integer()) {
    g.n_players = j["players"].get<int>();
    for (int i = 0; i < g.n_players; ++i) g.player_labels.push_back("player" + std::to_string(i + 1));
  } else {
    g.player_labels = get_field<std::vector<std::string>>(j, "players", where);
    g.n_players = static_cast<int>(g.player_labels.size());
  }
  if (g.n_players < 1) throw ModelError(where + ": need at least one player");
  g.action_labels = get_field<std::vector<std::vector<std::string>>>(j, "actions", where);
  if (static_cast<int>(g.action_labels.size()) != g.n_players)
    throw ModelError(where + ": 'actions' needs one label list per player");
  g.state_labels = get_field<std::vector<std::string>>(j, "states", where);
  g.discount = get_field<double>(j, "discount", where);

  const json& ss = j.contains("shock_spec") ? j["shock_spec"] : json::object();
  ShockSpec spec;
  if (ss.contains("family")) spec.family = parse_shock_family(ss["family"].get<std::string>());
  if (ss.contains("points")) spec.n_points = ss["points"].get<int>();
  if (ss.contains("values")) {
    // Explicit per-player support with equal weights.
    auto vals = ss["values"].get<std::vector<std::vector<double>>>();
    if (static_cast<int>(vals.size()) != g.n_players) throw ModelError(where + ": 'shock_spec.values' needs one list per player");
    for (auto& v : vals) {
      ShockGrid grid;
      grid.points = v;
      grid.weights.assign(v.size(), v.empty() ? 0.0 : 1.0 / static_cast<double>(v.size()));
      g.shocks.push_back(grid);
    }
  } else {
    ShockGrid grid = discretize_shock(spec);
    g.shocks.assign(g.n_players, grid);
  }

  std::vector<int> asz;
  for (auto& l : g.action_labels) asz.push_back(static_cast<int>(l.size()));
  Radix actions(asz);
  const int A = actions.total(), X = static_cast<int>(g.state_labels.size());

  // transition[a][x][y]
  auto tr = get_field<std::vector<std::vector<std::vector<double>>>>(j, "transition", where);
  if (static_cast<int>(tr.size()) != A) throw ModelError(where + ": 'transition' needs one block per joint action");
  g.transition.assign(static_cast<size_t>(A) * X * X, 0.0);
  for (int a = 0; a < A; ++a) {
    if (static_cast<int>(tr[a].size()) != X) throw ModelError(where + ": 'transition' block has the wrong number of rows");
    for (int x = 0; x < X; ++x) {
      if (static_cast<int>(tr[a][x].size()) != X) throw ModelError(where + ": 'transition' row has the wrong length");
      for (int y = 0; y < X; ++y) g.transition[(static_cast<size_t>(a) * X + x) * X + y] = tr[a][x][y];
    }
  }

  // payoff[i][a][x][e_i]
  auto u = get_field<std::vector<std::vector<std::vector<std::vector<double>>>>>(j, "payoff", where);
  if (static_cast<int>(u.size()) != g.n_players) throw ModelError(where + ": 'payoff' needs one table per player");
  g.payoff.resize(g.n_players);
  for (int i = 0; i < g.n_players; ++i) {
    const int E = g.shocks[i].size();
    if (static_cast<int>(u[i].size()) != A) throw ModelError(where + ": 'payoff' table has the wrong number of actions");
    g.payoff[i].assign(static_cast<size_t>(A) * X * E, 0.0);
    for (int a = 0; a < A; ++a) {
      if (static_cast<int>(u[i][a].size()) != X) throw ModelError(where + ": 'payoff' table has the wrong number of states");
      for (int x = 0; x < X; ++x) {
        if (static_cast<int>(u[i][a][x].size()) != E)
          throw ModelError(where + ": 'payoff' table has the wrong number of shock points");
        for (int e = 0; e < E; ++e) g.payoff[i][(static_cast<size_t>(a) * X + x) * E + e] = u[i][a][x][e];
      }
    }
  }
  g.finalize();
  return g;
}

json custom_to_json(const BasicGame& g) {
  json j;
  j["players"] = g.player_labels.empty() ? json(g.n_players) : json(g.player_labels);
  j["actions"] = g.action_labels;
  j["states"] = g.state_labels;
  json vals = json::array();
  for (const auto& s : g.shocks) vals.push_back(s.points);
  j["shock_spec"] = {{"values", vals}};
  const int A = g.num_joint_actions(), X = g.num_states();
  json tr = json::array();
  for (int a = 0; a < A; ++a) {
    json blk = json::array();
    for (int x = 0; x < X; ++x) {
      json row = json::array();
      for (int y = 0; y < X; ++y) row.push_back(g.f(y, a, x));
      blk.push_back(row);
    }
    tr.push_back(blk);
  }
  j["transition"] = tr;
  json u = json::array();
  for (int i = 0; i < g.n_players; ++i) {
    json pi = json::array();
    for (int a = 0; a < A; ++a) {
      json pa = json::array();
      for (int x = 0; x < X; ++x) {
        json px = json::array();
        for (int e = 0; e < g.num_shocks(i); ++e) px.push_back(g.u(i, a, x, e));
        pa.push_back(px);
      }
      pi.push_back(pa);
    }
    u.push_back(pi);
  }
  j["payoff"] = u;
  j["discount"] = g.discount;
  return j;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ModelError(where + ": not a number: '" + s + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

int Model::num_cells() const {
  if (template_name != "exp2") return 1;
  return static_cast<int>(covariate_support.size() * covariate_support.size());
}

std::vector<double> Model::cell_covariates(int cell) const {
  if (template_name != "exp2") return {};
  const int W = static_cast<int>(covariate_support.size());
  if (cell < 0 || cell >= W * W) throw ModelError("covariate cell out of range");
  return {covariate_support[cell / W], covariate_support[cell % W]};
}

std::vector<std::string> Model::cell_factor_names() const {
  if (template_name != "exp2") return {};
  return {"w1", "w2"};
}

std::vector<std::string> Model::all_keys() const { return template_keys(template_name); }

std::vector<std::string> Model::free_keys() const {
  std::vector<std::string> out;
  for (const auto& k : all_keys())
    if (std::find(fixed_keys.begin(), fixed_keys.end(), k) == fixed_keys.end()) out.push_back(k);
  return out;
}

std::vector<double> Model::free_values(const NamedTheta& point) const {
  const auto keys = free_keys();
  std::vector<double> out;
  for (const auto& k : keys) {
    auto it = std::find(point.keys.begin(), point.keys.end(), k);
    if (it == point.keys.end()) throw ModelError("missing coefficient '" + k + "'");
    out.push_back(point.values[it - point.keys.begin()]);
  }
  return out;
}

BasicGame Model::build(int cell, const std::vector<double>& free_vals) const {
  if (template_name == "custom") {
    if (!free_vals.empty()) throw ModelError("custom models have no coefficients");
    return custom_game;
  }
  const auto keys = free_keys();
  if (free_vals.size() != keys.size()) throw ModelError("coefficient vector has the wrong length");
  NamedTheta full;
  for (const auto& k : all_keys()) {
    full.keys.push_back(k);
    auto fit = std::find(keys.begin(), keys.end(), k);
    if (fit != keys.end()) {
      full.values.push_back(free_vals[fit - keys.begin()]);
    } else {
      auto it = std::find(theta.keys.begin(), theta.keys.end(), k);
      if (it == theta.keys.end()) throw ModelError("fixed coefficient '" + k + "' has no value");
      full.values.push_back(theta.values[it - theta.keys.begin()]);
    }
  }
  if (template_name == "exp1") return build_experiment1(full, Exp1Options{shock.n_points, discount});
  auto w = cell_covariates(cell);
  return build_experiment2(full, w[0], w[1], Exp2Options{shock.n_points, discount});
}

Model parse_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ModelError(std::string("model is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ModelError("model must be a JSON object");
  Model m;
  m.template_name = get_field<std::string>(j, "template", "model");
  if (m.template_name == "custom") {
    m.custom_game = parse_custom(j);
    m.discount = m.custom_game.discount;
    return m;
  }
  if (m.template_name != "exp1" && m.template_name != "exp2")
    throw ModelError("model: unknown template '" + m.template_name + "' (expected exp1, exp2 or custom)");

  const bool e1 = m.template_name == "exp1";
  m.discount = j.contains("discount") ? get_field<double>(j, "discount", "model") : (e1 ? 0.96 : 0.9);
  m.shock.family = e1 ? ShockFamily::logistic : ShockFamily::standard_normal;
  m.shock.n_points = 8;
  if (j.contains("shock_spec")) {
    const json& ss = j["shock_spec"];
    if (ss.contains("points")) m.shock.n_points = ss["points"].get<int>();
    if (ss.contains("family") && parse_shock_family(ss["family"].get<std::string>()) != m.shock.family)
      throw ModelError("model: template '" + m.template_name + "' uses " + to_string(m.shock.family) + " shocks");
  }
  if (m.shock.n_points < 1) throw ModelError("model: shock_spec.points must be positive");
  if (!(m.discount >= 0.0 && m.discount < 1.0)) throw ModelError("model: discount must lie in [0, 1)");

  if (!j.contains("theta") || !j["theta"].is_object()) throw ModelError("model: missing object field 'theta'");
  const auto& keys = template_keys(m.template_name);
  for (const auto& k : keys) {
    if (!j["theta"].contains(k)) throw ModelError("model: theta is missing coefficient '" + k + "'");
    m.theta.keys.push_back(k);
    m.theta.values.push_back(j["theta"][k].get<double>());
  }
  for (auto it = j["theta"].begin(); it != j["theta"].end(); ++it)
    if (std::find(keys.begin(), keys.end(), it.key()) == keys.end())
      throw ModelError("model: theta has unknown coefficient '" + it.key() + "'");

  if (j.contains("fixed_keys")) {
    m.fixed_keys = get_field<std::vector<std::string>>(j, "fixed_keys", "model");
    for (const auto& k : m.fixed_keys)
      if (std::find(keys.begin(), keys.end(), k) == keys.end())
        throw ModelError("model: fixed key '" + k + "' is not a template coefficient");
  }
  if (!e1) {
    m.covariate_support = get_field<std::vector<double>>(j, "covariate_support", "model");
    if (m.covariate_support.empty()) throw ModelError("model: covariate_support must not be empty");
  }

  // Descriptive fields are optional for templates, but must agree when given.
  BasicGame probe = m.build(0, m.free_values());
  if (j.contains("states") && j["states"].get<std::vector<std::string>>() != probe.state_labels)
    throw ModelError("model: 'states' does not match the template");
  return m;
}

Model load_model(const std::string& path) { return parse_model(read_text_file(path)); }

std::string model_to_json(const Model& m) {
  json j;
  if (m.template_name == "custom") {
    j = custom_to_json(m.custom_game);
    j["template"] = "custom";
    return j.dump(2);
  }
  BasicGame probe = m.build(0, m.free_values());
  j["template"] = m.template_name;
  j["players"] = probe.n_players;
  j["actions"] = probe.action_labels;
  j["states"] = probe.state_labels;
  j["shock_spec"] = {{"family", to_string(m.shock.family)}, {"points", m.shock.n_points}};
  j["discount"] = m.discount;
  json th = json::object();
  for (size_t k = 0; k < m.theta.keys.size(); ++k) th[m.theta.keys[k]] = m.theta.values[k];
  j["theta"] = th;
  if (!m.fixed_keys.empty()) j["fixed_keys"] = m.fixed_keys;
  if (!m.covariate_support.empty()) j["covariate_support"] = m.covariate_support;
  return j.dump(2);
}

namespace {

std::vector<std::string> state_columns(const BasicGame& g) {
  if (!g.state_factor_names.empty()) return g.state_factor_names;
  return {"state"};
}

std::vector<std::string> state_values(const BasicGame& g, int x) {
  if (!g.state_factor_names.empty()) return g.state_factor_values[x];
  return {g.state_labels[x]};
}

std::string cell_value(double w) { return format_double(w); }

}  // namespace

std::string ccp_to_csv(const Model& m, const CcpData& data) {
  if (static_cast<int>(data.cells.size()) != m.num_cells()) throw ModelError("CCP data has the wrong number of cells");
  BasicGame g = m.build(0, m.free_values());
  std::ostringstream out;
  std::vector<std::string> header = m.cell_factor_names();
  for (const auto& c : state_columns(g)) header.push_back(c);
  header.push_back("action");
  header.push_back("probability");
  for (size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  out << "\n";
  for (int c = 0; c < m.num_cells(); ++c) {
    const CCPTable& phi = data.cells[c];
    if (phi.n_states != g.num_states() || phi.n_joint_actions != g.num_joint_actions())
      throw ModelError("CCP table does not match the model dimensions");
    std::vector<std::string> prefix;
    for (double w : m.cell_covariates(c)) prefix.push_back(cell_value(w));
    for (int x = 0; x < g.num_states(); ++x) {
      std::vector<std::string> row = prefix;
      for (const auto& v : state_values(g, x)) row.push_back(v);
      for (int a = 0; a < g.num_joint_actions(); ++a) {
        for (const auto& v : row) out << v << ",";
        out << g.joint_action_label(a) << "," << format_double(phi.at(x, a)) << "\n";
      }
    }
  }
  return out.str();
}

CcpData ccp_from_csv(const Model& m, const std::string& text) {
  BasicGame g = m.build(0, m.free_values());
  const int X = g.num_states(), A = g.num_joint_actions(), C = m.num_cells();
  std::vector<std::string> header = m.cell_factor_names();
  for (const auto& c : state_columns(g)) header.push_back(c);
  header.push_back("action");
  header.push_back("probability");

  // Key every row by its label columns so row order in the file is free.
  std::map<std::vector<std::string>, std::pair<int, int>> slot;  // labels -> (cell, x*A+a)
  for (int c = 0; c < C; ++c) {
    std::vector<std::string> prefix;
    for (double w : m.cell_covariates(c)) prefix.push_back(cell_value(w));
    for (int x = 0; x < X; ++x)
      for (int a = 0; a < A; ++a) {
        std::vector<std::string> key = prefix;
        for (const auto& v : state_values(g, x)) key.push_back(v);
        key.push_back(g.joint_action_label(a));
        slot[key] = {c, x * A + a};
      }
  }

  CcpData data;
  data.cells.resize(C);
  std::vector<std::vector<char>> seen(C, std::vector<char>(static_cast<size_t>(X) * A, 0));
  for (auto& t : data.cells) {
    t.n_states = X;
    t.n_joint_actions = A;
    t.p.assign(static_cast<size_t>(X) * A, 0.0);
  }
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line[0] == '#') continue;
    have_header = true;
    break;
  }
  if (!have_header) throw ModelError("CCP file is empty");
  if (split_csv_line(line) != header) {
    std::string want;
    for (size_t k = 0; k < header.size(); ++k) want += (k ? "," : "") + header[k];
    throw ModelError("CCP file header does not match the model; expected '" + want + "'");
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r" || line[0] == '#') continue;
    auto f = split_csv_line(line);
    const std::string where = "CCP file line " + std::to_string(lineno);
    if (f.size() != header.size()) throw ModelError(where + ": wrong number of columns");
    double p = parse_double(f.back(), where);
    f.pop_back();
    auto it = slot.find(f);
    if (it == slot.end()) throw ModelError(where + ": labels do not name a state and action of the model");
    auto [c, k] = it->second;
    if (seen[c][k]) throw ModelError(where + ": duplicate row");
    seen[c][k] = 1;
    data.cells[c].p[k] = p;
  }
  for (int c = 0; c < C; ++c)
    for (size_t k = 0; k < seen[c].size(); ++k)
      if (!seen[c][k]) throw ModelError("CCP file is missing rows for some state and action");
  for (auto& t : data.cells) {
    try {
      t.validate(1e-9);
    } catch (const std::exception& e) {
      throw ModelError(std::string("CCP file: ") + e.what());
    }
  }
  return data;
}

CcpData load_ccp(const Model& m, const std::string& path) { return ccp_from_csv(m, read_text_file(path)); }

std::string transition_to_csv(const BasicGame& g) {
  std::ostringstream out;
  auto cols = state_columns(g);
  for (const auto& c : cols) out << c << ",";
  out << "action";
  for (const auto& c : cols) out << ",next_" << c;
  out << ",probability\n";
  for (int x = 0; x < g.num_states(); ++x)
    for (int a = 0; a < g.num_joint_actions(); ++a)
      for (int y = 0; y < g.num_states(); ++y) {
        double p = g.f(y, a, x);
        if (p == 0.0) continue;
        for (const auto& v : state_values(g, x)) out << v << ",";
        out << g.joint_action_label(a);
        for (const auto& v : state_values(g, y)) out << "," << v;
        out << "," << format_double(p) << "\n";
      }
  return out.str();
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace mce
