#include "c_api/commands.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "mce/mce_identifier.hpp"
#include "mce/set_mapper.hpp"
#include "util/parallel.hpp"

namespace mce::api {

namespace fs = std::filesystem;

std::string sha256_hex(const std::string& text) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned int k = 0; k < len; ++k) {
    s += hex[md[k] >> 4];
    s += hex[md[k] & 15];
  }
  return s;
}

namespace {

void allow_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return it.key() == a; }))
      throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.is_object() || !j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": '" + key + "' has the wrong type");
  }
}

json block(const json& root, const char* key) {
  if (root.contains(key)) return root[key];
  return json::object();
}

std::uint64_t seed_of(const json& o) { return get_or<std::uint64_t>(o, "seed", 0, "options"); }
int jobs_of(const json& o) {
  int j = get_or<int>(o, "jobs", 1, "options");
  if (j < 1) throw ConfigError("options: 'jobs' must be at least 1");
  return j;
}

Baseline baseline_of(const json& o) {
  try {
    return parse_baseline(get_or<std::string>(o, "baseline", "private", "options"));
  } catch (const ModelError& e) {
    throw ConfigError(e.what());
  }
}

CriterionOptions criterion_of(const json& o) {
  const json c = block(o, "criterion");
  const std::string w = "criterion";
  allow_keys(c, {"restarts", "member_tol", "alt_max_iters", "alt_tol", "polish_threshold", "polish_max_iters",
                 "polish_candidates", "polish_window", "polish_min_progress", "early_stop"},
             w);
  CriterionOptions co;
  co.restarts = get_or(c, "restarts", co.restarts, w);
  co.member_tol = get_or(c, "member_tol", co.member_tol, w);
  co.alt_max_iters = get_or(c, "alt_max_iters", co.alt_max_iters, w);
  co.alt_tol = get_or(c, "alt_tol", co.alt_tol, w);
  co.polish_threshold = get_or(c, "polish_threshold", co.polish_threshold, w);
  co.polish_max_iters = get_or(c, "polish_max_iters", co.polish_max_iters, w);
  co.polish_candidates = get_or(c, "polish_candidates", co.polish_candidates, w);
  co.polish_window = get_or(c, "polish_window", co.polish_window, w);
  co.polish_min_progress = get_or(c, "polish_min_progress", co.polish_min_progress, w);
  co.early_stop = get_or(c, "early_stop", co.early_stop, w);
  if (co.restarts < 1) throw ConfigError("criterion: 'restarts' must be at least 1");
  if (!(co.member_tol > 0.0) || !(co.alt_tol > 0.0)) throw ConfigError("criterion: tolerances must be positive");
  co.seed = seed_of(o);
  return co;
}

MembershipOptions membership_of(const json& o, bool prune_default) {
  MembershipOptions mo;
  mo.criterion = criterion_of(o);
  mo.outer_prune = get_or(o, "outer_prune", prune_default, "options");
  return mo;
}

// A coefficient point over the free keys, starting from the model values.
std::vector<double> point_of(const Model& m, const json& j, const std::string& where) {
  NamedTheta nt = m.theta;
  if (!j.is_null()) {
    if (!j.is_object()) throw ConfigError(where + " must map coefficient names to values");
    for (auto it = j.begin(); it != j.end(); ++it) {
      auto k = std::find(nt.keys.begin(), nt.keys.end(), it.key());
      if (k == nt.keys.end()) throw ConfigError(where + ": unknown coefficient '" + it.key() + "'");
      if (!it.value().is_number()) throw ConfigError(where + ": '" + it.key() + "' must be a number");
      const double v = it.value().get<double>();
      const size_t idx = k - nt.keys.begin();
      if (std::find(m.fixed_keys.begin(), m.fixed_keys.end(), it.key()) != m.fixed_keys.end() &&
          v != nt.values[idx])
        throw ConfigError(where + ": '" + it.key() + "' is held fixed by the model");
      nt.values[idx] = v;
    }
  }
  return m.free_values(nt);
}

json point_json(const Model& m, const std::vector<double>& free) {
  json j = json::object();
  const auto keys = m.free_keys();
  for (size_t k = 0; k < keys.size(); ++k) j[keys[k]] = free[k];
  return j;
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json provenance_json(const Provenance& p) {
  return {{"version", p.version}, {"config_hash", p.config_hash}, {"seed", p.seed}};
}

MpeOptions mpe_of(const Model& m, const json& o) {
  const json b = block(o, "mpe");
  const std::string w = "mpe";
  allow_keys(b, {"restarts", "damping", "ccp_tol", "tie_tol", "residual_tol", "max_sweeps", "policy"}, w);
  MpeOptions mo;
  mo.restarts = get_or(b, "restarts", mo.restarts, w);
  mo.damping = get_or(b, "damping", mo.damping, w);
  mo.ccp_tol = get_or(b, "ccp_tol", mo.ccp_tol, w);
  mo.tie_tol = get_or(b, "tie_tol", mo.tie_tol, w);
  mo.residual_tol = get_or(b, "residual_tol", mo.residual_tol, w);
  mo.max_sweeps = get_or(b, "max_sweeps", mo.max_sweeps, w);
  // Experiment 2 picks the most active equilibrium unless told otherwise.
  const std::string def = m.template_name == "exp2" ? "max_joint_activity" : "first";
  try {
    mo.policy = parse_selection_policy(get_or<std::string>(b, "policy", def, w));
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (mo.restarts < 1 || !(mo.damping > 0.0 && mo.damping <= 1.0) || !(mo.ccp_tol > 0.0) || mo.max_sweeps < 1)
    throw ConfigError("mpe: restarts and max_sweeps must be positive, damping in (0, 1], ccp_tol > 0");
  mo.seed = seed_of(o);
  mo.jobs = jobs_of(o);
  return mo;
}

json endpoint_json(const Model& m, const EndpointDiagnostics& d) {
  return {{"value", d.value},
          {"theta", point_json(m, d.theta)},
          {"at_search_limit", d.at_search_limit},
          {"evaluations", d.evaluations},
          {"bisection_steps", d.bisection_steps},
          {"probes_evaluated", d.probes_evaluated},
          {"probe_members", d.probe_members},
          {"q_at_endpoint", number(d.q_at_endpoint)},
          {"q_beyond", number(d.q_beyond)},
          {"certified", d.certified}};
}

}  // namespace

json generate_ccp(const Model& m, const json& opts, CcpData& out, const Provenance& prov) {
  allow_keys(opts, {"seed", "jobs", "mpe"}, "options");
  MpeOptions mo = mpe_of(m, opts);
  json cells = json::array();
  out.cells.clear();
  const auto free = m.free_values();
  for (int c = 0; c < m.num_cells(); ++c) {
    BasicGame g = m.build(c, free);
    MpeResult r = solve_mpe(g, mo);
    const MpeRun& run = r.chosen();
    int converged = 0;
    for (const auto& x : r.runs) converged += x.converged;
    DecisionRule rule = product_rule(g, run.beta);
    double obedience = 0.0;
    for (const auto& row : obedience_residuals(g, rule, ex_ante_value(g, rule)))
      obedience = std::max(obedience, row.value);
    json cj = {{"cell", c},
               {"selected_run", run.index},
               {"runs", static_cast<int>(r.runs.size())},
               {"converged_runs", converged},
               {"sweeps", run.sweeps},
               {"ccp_change", run.ccp_change},
               {"deviation_residual", run.deviation_residual},
               {"product_rule_obedience", obedience},
               {"joint_activity", joint_activity(g, run.phi)}};
    auto w = m.cell_covariates(c);
    if (!w.empty()) cj["covariates"] = {{"w1", w[0]}, {"w2", w[1]}};
    cells.push_back(cj);
    out.cells.push_back(run.phi);
  }
  json j = provenance_json(prov);
  j["command"] = "generate-ccp";
  j["policy"] = to_string(mo.policy);
  j["restarts"] = mo.restarts;
  j["damping"] = mo.damping;
  j["ccp_tol"] = mo.ccp_tol;
  j["cells"] = cells;
  return j;
}

json check(const Model& m, const CcpData& data, const json& opts, const Provenance& prov) {
  allow_keys(opts, {"seed", "jobs", "baseline", "criterion", "outer_prune", "check"}, "options");
  const json cb = block(opts, "check");
  allow_keys(cb, {"theta"}, "check");
  const Baseline base = baseline_of(opts);
  MembershipOptions mo = membership_of(opts, false);
  mo.criterion.jobs = jobs_of(opts);
  const auto theta = point_of(m, cb.contains("theta") ? cb["theta"] : json(), "check.theta");
  IdentificationProblem prob(m, data, base, mo);
  PointEvaluation pe = prob.evaluate(theta, nullptr, false);

  json j = provenance_json(prov);
  j["command"] = "check";
  j["baseline"] = to_string(base);
  j["theta"] = point_json(m, theta);
  j["member"] = pe.member;
  j["status"] = to_string(pe.status);
  j["q_value"] = number(pe.q_value);
  j["restarts"] = mo.criterion.restarts;
  json cells = json::array();
  if (base == Baseline::null_info) {
    j["tolerance"] = prob.outer_tolerance();
    j["restarts_used"] = 0;
  } else {
    j["tolerance"] = mo.criterion.member_tol;
    j["restarts_used"] = pe.restarts_used;
    double e3 = 0.0, e4 = 0.0;
    for (size_t c = 0; c < pe.cell_results.size(); ++c) {
      const FeasibilityResult& r = pe.cell_results[c];
      e3 = std::max(e3, r.e3_residual);
      e4 = std::max(e4, r.e4_residual);
      cells.push_back({{"cell", static_cast<int>(c)},
                       {"q_value", number(r.q_value)},
                       {"status", to_string(r.status)},
                       {"e3_residual", r.e3_residual},
                       {"e4_residual", r.e4_residual},
                       {"restarts_used", r.restarts_used},
                       {"polished", r.polished}});
    }
    j["residuals"] = {{"e3", e3}, {"e4", e4}};
    j["cells"] = cells;
  }
  return j;
}

json project(const Model& m, const CcpData& data, const json& opts, const Provenance& prov) {
  allow_keys(opts, {"seed", "jobs", "baseline", "criterion", "outer_prune", "project"}, "options");
  const json pb = block(opts, "project");
  const std::string w = "project";
  allow_keys(pb, {"coordinates", "directions", "method", "step", "tol", "probes", "search_radius", "anchor",
                  "nlp_max_iters", "nlp_starts", "nlp_penalty"},
             w);
  const Baseline base = baseline_of(opts);
  MembershipOptions mo = membership_of(opts, true);
  const int jobs = jobs_of(opts);

  ProjectionOptions po;
  po.method = get_or(pb, "method", po.method, w);
  po.step = get_or(pb, "step", po.step, w);
  po.tol = get_or(pb, "tol", po.tol, w);
  po.probes = get_or(pb, "probes", po.probes, w);
  po.search_radius = get_or(pb, "search_radius", po.search_radius, w);
  po.nlp_max_iters = get_or(pb, "nlp_max_iters", po.nlp_max_iters, w);
  po.nlp_starts = get_or(pb, "nlp_starts", po.nlp_starts, w);
  po.nlp_penalty = get_or(pb, "nlp_penalty", po.nlp_penalty, w);
  if (po.method != "grid_bisect" && po.method != "joint_nlp")
    throw ConfigError("project: method must be grid_bisect or joint_nlp");
  if (!(po.step > 0.0) || !(po.tol > 0.0) || !(po.search_radius > 0.0) || po.probes < 0)
    throw ConfigError("project: step, tol and search_radius must be positive");

  const auto keys = m.free_keys();
  struct Dir {
    std::string label;
    std::vector<double> p;
  };
  std::vector<Dir> dirs;
  if (pb.contains("directions")) {
    if (!pb["directions"].is_array()) throw ConfigError("project.directions must be an array");
    for (const auto& d : pb["directions"]) {
      allow_keys(d, {"label", "p"}, "project.directions[]");
      Dir dir{get_or<std::string>(d, "label", "direction", w), std::vector<double>(keys.size(), 0.0)};
      if (!d.contains("p") || !d["p"].is_object()) throw ConfigError("project.directions[]: 'p' must be an object");
      for (auto it = d["p"].begin(); it != d["p"].end(); ++it) {
        auto k = std::find(keys.begin(), keys.end(), it.key());
        if (k == keys.end()) throw ConfigError("project.directions[]: '" + it.key() + "' is not a free coefficient");
        dir.p[k - keys.begin()] = it.value().get<double>();
      }
      dirs.push_back(dir);
    }
  } else {
    auto names = get_or<std::vector<std::string>>(pb, "coordinates", keys, w);
    for (const auto& n : names) {
      auto k = std::find(keys.begin(), keys.end(), n);
      if (k == keys.end()) throw ConfigError("project.coordinates: '" + n + "' is not a free coefficient");
      Dir dir{n, std::vector<double>(keys.size(), 0.0)};
      dir.p[k - keys.begin()] = 1.0;
      dirs.push_back(dir);
    }
  }
  if (dirs.empty()) throw ConfigError("project: nothing to project");
  const auto anchor = point_of(m, pb.contains("anchor") ? pb["anchor"] : json(), "project.anchor");

  // Directions run side by side; the remaining workers go to the two sides
  // of each sweep.
  const int n = static_cast<int>(dirs.size());
  po.jobs = std::max(1, jobs / n);
  mo.criterion.jobs = 1;
  IdentificationProblem prob(m, data, base, mo);
  std::vector<ProjectionResult> results(n);
  parallel_for(n, jobs, [&](int k) {
    results[k] = project(prob, dirs[k].p, anchor, po);
    results[k].label = dirs[k].label;
  });

  // Fingerprint of everything but the data, so shrinkage comparisons can
  // insist on identical settings.
  json settings = {{"baseline", to_string(base)},
                   {"criterion", opts.contains("criterion") ? opts["criterion"] : json::object()},
                   {"outer_prune", mo.outer_prune},
                   {"seed", mo.criterion.seed},
                   {"project", pb}};
  settings["project"].erase("anchor");
  json j = provenance_json(prov);
  j["command"] = "project";
  j["baseline"] = to_string(base);
  j["method"] = po.method;
  j["anchor"] = point_json(m, anchor);
  j["settings_fingerprint"] = sha256_hex(settings.dump());
  j["settings"] = {{"step", po.step},
                   {"tol", po.tol},
                   {"probes", po.probes},
                   {"search_radius", po.search_radius},
                   {"member_tol", mo.criterion.member_tol},
                   {"restarts", mo.criterion.restarts}};
  if (base == Baseline::private_shock)
    j["caveat"] =
        "Sharp-set membership comes from a local solver with restarts, so intervals are inner approximations of the "
        "projection; null-baseline intervals come from an exact linear program along the sweep line.";
  json arr = json::array();
  for (int k = 0; k < n; ++k) {
    const auto& r = results[k];
    arr.push_back({{"label", r.label},
                   {"direction", point_json(m, r.direction)},
                   {"anchor_value", r.anchor_value},
                   {"lower", r.lower},
                   {"upper", r.upper},
                   {"width", r.upper - r.lower},
                   {"method", r.method},
                   {"lower_endpoint", endpoint_json(m, r.lo)},
                   {"upper_endpoint", endpoint_json(m, r.hi)}});
  }
  j["projections"] = arr;
  return j;
}

json scan(const Model& m, const CcpData& data, const json& opts, std::string& csv, const Provenance& prov) {
  allow_keys(opts, {"seed", "jobs", "baseline", "criterion", "outer_prune", "scan"}, "options");
  const json sb = block(opts, "scan");
  const std::string w = "scan";
  allow_keys(sb, {"x", "y", "x_range", "y_range", "step", "base"}, w);
  ScanSpec spec;
  spec.x_key = get_or<std::string>(sb, "x", "", w);
  spec.y_key = get_or<std::string>(sb, "y", "", w);
  if (spec.x_key.empty() || spec.y_key.empty()) throw ConfigError("scan: 'x' and 'y' are required");
  auto xr = get_or<std::vector<double>>(sb, "x_range", {}, w);
  auto yr = get_or<std::vector<double>>(sb, "y_range", {}, w);
  if (xr.size() != 2 || yr.size() != 2) throw ConfigError("scan: 'x_range' and 'y_range' need [min, max]");
  spec.x_min = xr[0];
  spec.x_max = xr[1];
  spec.y_min = yr[0];
  spec.y_max = yr[1];
  spec.step = get_or(sb, "step", spec.step, w);
  if (!(spec.step > 0.0) || spec.x_max < spec.x_min || spec.y_max < spec.y_min)
    throw ConfigError("scan: need step > 0 and max >= min on both axes");
  spec.base = point_of(m, sb.contains("base") ? sb["base"] : json(), "scan.base");
  spec.jobs = jobs_of(opts);
  MembershipOptions mo = membership_of(opts, false);
  mo.criterion.jobs = 1;
  ScanGrid g;
  try {
    g = scan_2d(m, data, spec, mo);
  } catch (const ModelError& e) {
    throw ConfigError(e.what());
  }

  std::ostringstream out;
  out << "# mce " << prov.version << " config_hash=" << prov.config_hash << " seed=" << prov.seed << "\n";
  out << g.x_key << "," << g.y_key << ",sharp,outer,q_sharp,t_outer\n";
  int ns = 0, no = 0;
  for (size_t iy = 0; iy < g.ys.size(); ++iy)
    for (size_t ix = 0; ix < g.xs.size(); ++ix) {
      const size_t k = iy * g.xs.size() + ix;
      ns += g.sharp[k];
      no += g.outer[k];
      out << format_double(g.xs[ix]) << "," << format_double(g.ys[iy]) << "," << int(g.sharp[k]) << ","
          << int(g.outer[k]) << "," << (std::isfinite(g.q_sharp[k]) ? format_double(g.q_sharp[k]) : "inf") << ","
          << format_double(g.t_outer[k]) << "\n";
    }
  csv = out.str();
  json j = provenance_json(prov);
  j["command"] = "scan";
  j["x"] = g.x_key;
  j["y"] = g.y_key;
  j["nx"] = g.xs.size();
  j["ny"] = g.ys.size();
  j["step"] = spec.step;
  j["base"] = point_json(m, spec.base);
  j["outer_prune"] = mo.outer_prune;
  j["sharp_members"] = ns;
  j["outer_members"] = no;
  j["violations"] = g.violations();
  return j;
}

json shrinkage(const json& p0, const json& p1, const Provenance& prov) {
  auto results = [](const json& p, const char* which) {
    if (!p.is_object() || !p.contains("projections") || !p.contains("settings_fingerprint"))
      throw ConfigError(std::string(which) + " is not a projection result");
    std::vector<ProjectionResult> v;
    for (const auto& r : p["projections"]) {
      ProjectionResult pr;
      pr.label = r.at("label").get<std::string>();
      pr.lower = r.at("lower").get<double>();
      pr.upper = r.at("upper").get<double>();
      v.push_back(pr);
    }
    return v;
  };
  std::vector<ShrinkageRow> rows;
  try {
    rows = shrinkage_report(results(p0, "design0"), results(p1, "design1"),
                            p0["settings_fingerprint"].get<std::string>(), p1["settings_fingerprint"].get<std::string>());
  } catch (const ModelError& e) {
    throw ConfigError(e.what());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed projection result: ") + e.what());
  }
  json j = provenance_json(prov);
  j["command"] = "shrinkage";
  j["design0_config_hash"] = p0.value("config_hash", "");
  j["design1_config_hash"] = p1.value("config_hash", "");
  json arr = json::array();
  bool all = !rows.empty();
  for (const auto& r : rows) {
    all = all && r.shrinks;
    arr.push_back({{"coordinate", r.coordinate},
                   {"lower0", r.lower0},
                   {"upper0", r.upper0},
                   {"width0", r.width0},
                   {"lower1", r.lower1},
                   {"upper1", r.upper1},
                   {"width1", r.width1},
                   {"shrinks", r.shrinks}});
  }
  j["rows"] = arr;
  j["all_shrink"] = all;
  return j;
}

std::string shrinkage_csv(const json& report) {
  std::ostringstream out;
  out << "# mce " << report["version"].get<std::string>() << " config_hash=" << report["config_hash"].get<std::string>()
      << " seed=" << report["seed"].get<std::uint64_t>() << "\n";
  out << "coordinate,lower0,upper0,width0,lower1,upper1,width1,shrinks\n";
  for (const auto& r : report["rows"])
    out << r["coordinate"].get<std::string>() << "," << format_double(r["lower0"].get<double>()) << ","
        << format_double(r["upper0"].get<double>()) << "," << format_double(r["width0"].get<double>()) << "," << format_double(r["lower1"].get<double>()) << ","
        << format_double(r["upper1"].get<double>()) << "," << format_double(r["width1"].get<double>()) << "," << int(r["shrinks"].get<bool>())
        << "\n";
  return out.str();
}

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path q(p);
  return q.is_absolute() ? q : base / q;
}

Model model_from_config(const json& cfg, const fs::path& base) {
  if (!cfg.contains("model")) throw ConfigError("config: missing 'model'");
  const json& mj = cfg["model"];
  if (mj.is_string()) return load_model(resolve(base, mj.get<std::string>()).string());
  if (mj.is_object()) return parse_model(mj.dump());
  throw ConfigError("config: 'model' must be a path or an object");
}

CcpData ccp_from_config(const Model& m, const json& cfg, const fs::path& base) {
  if (!cfg.contains("ccp") || !cfg["ccp"].is_string()) throw ConfigError("config: missing 'ccp' (path to a CCP file)");
  return load_ccp(m, resolve(base, cfg["ccp"].get<std::string>()).string());
}

// The configuration minus the data sources: what the library calls see.
json options_of(const json& cfg) {
  json o = cfg;
  o.erase("model");
  o.erase("ccp");
  o.erase("description");
  o.erase("shrinkage");
  return o;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string provenance_comment(const Provenance& p) {
  return "# mce " + p.version + " config_hash=" + p.config_hash + " seed=" + std::to_string(p.seed) + "\n";
}

}  // namespace

json run_command(const std::string& command, const std::string& config_path, const json& overrides,
                 const std::string& out_dir) {
  static const char* commands[] = {"generate-ccp", "check", "project", "scan", "shrinkage"};
  if (std::none_of(std::begin(commands), std::end(commands), [&](const char* c) { return command == c; }))
    throw ConfigError("unknown command '" + command + "'");
  json cfg;
  try {
    cfg = json::parse(read_text_file(config_path));
  } catch (const json::exception& e) {
    throw ConfigError("config '" + config_path + "' is not valid JSON: " + e.what());
  } catch (const ModelError& e) {
    throw ConfigError(e.what());
  }
  allow_keys(cfg, {"description", "model", "ccp", "seed", "jobs", "baseline", "criterion", "outer_prune", "mpe",
                   "check", "project", "scan", "shrinkage"},
             "config");
  if (overrides.is_object()) {
    if (overrides.contains("jobs")) cfg["jobs"] = overrides["jobs"];
    if (overrides.contains("seed")) cfg["seed"] = overrides["seed"];
    if (overrides.contains("baseline")) cfg["baseline"] = overrides["baseline"];
    if (overrides.contains("restarts")) {
      const char* b = command == "generate-ccp" ? "mpe" : "criterion";
      if (!cfg.contains(b)) cfg[b] = json::object();
      cfg[b]["restarts"] = overrides["restarts"];
    }
  }
  // Worker count does not change any result, so it stays out of the hash.
  json hashed = cfg;
  hashed.erase("jobs");
  Provenance prov{MCE_VERSION, sha256_hex(hashed.dump()), seed_of(cfg)};
  const fs::path base = fs::path(config_path).parent_path();
  const fs::path out(out_dir.empty() ? "." : out_dir);
  fs::create_directories(out);

  json summary = {{"command", command}, {"config_hash", prov.config_hash}, {"seed", prov.seed}};
  json files = json::array();
  auto write = [&](const std::string& name, const std::string& text) {
    write_text_file((out / name).string(), text);
    files.push_back((out / name).string());
  };

  try {
    if (command == "shrinkage") {
      const json sb = block(cfg, "shrinkage");
      allow_keys(sb, {"design0", "design1"}, "shrinkage");
      auto load = [&](const char* key) {
        if (!sb.contains(key) || !sb[key].is_string()) throw ConfigError(std::string("shrinkage: missing '") + key + "'");
        try {
          return json::parse(read_text_file(resolve(base, sb[key].get<std::string>()).string()));
        } catch (const json::exception& e) {
          throw ConfigError(std::string("shrinkage: ") + key + " is not valid JSON: " + e.what());
        }
      };
      json rep = shrinkage(load("design0"), load("design1"), prov);
      write("shrinkage.json", dump(rep));
      write("shrinkage.csv", shrinkage_csv(rep));
      summary["all_shrink"] = rep["all_shrink"];
    } else {
      const Model m = model_from_config(cfg, base);
      const json opts = options_of(cfg);
      if (command == "generate-ccp") {
        json o = json::object();
        for (const char* k : {"seed", "jobs", "mpe"})
          if (opts.contains(k)) o[k] = opts[k];
        CcpData data;
        json diag = generate_ccp(m, o, data, prov);
        write("ccp.csv", provenance_comment(prov) + ccp_to_csv(m, data));
        write("transition.csv", provenance_comment(prov) + transition_to_csv(m.build(0, m.free_values())));
        write("ccp_diagnostics.json", dump(diag));
      } else {
        const CcpData data = ccp_from_config(m, cfg, base);
        auto pick = [&](std::initializer_list<const char*> keys) {
          json o = json::object();
          for (const char* k : keys)
            if (opts.contains(k)) o[k] = opts[k];
          return o;
        };
        if (command == "check") {
          json r = check(m, data, pick({"seed", "jobs", "baseline", "criterion", "outer_prune", "check"}), prov);
          write("check.json", dump(r));
          summary["q_value"] = r["q_value"];
          summary["member"] = r["member"];
        } else if (command == "project") {
          json r = project(m, data, pick({"seed", "jobs", "baseline", "criterion", "outer_prune", "project"}), prov);
          write("projection.json", dump(r));
          json iv = json::object();
          for (const auto& p : r["projections"]) iv[p["label"].get<std::string>()] = {p["lower"], p["upper"]};
          summary["intervals"] = iv;
        } else {
          std::string csv;
          json r = scan(m, data, pick({"seed", "jobs", "baseline", "criterion", "outer_prune", "scan"}), csv, prov);
          write("scan.csv", csv);
          write("scan_summary.json", dump(r));
          summary["violations"] = r["violations"];
        }
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const ModelError&) {
    throw;
  } catch (const std::exception& e) {
    // Solver failures still leave a diagnostics document behind.
    json err = provenance_json(prov);
    err["command"] = command;
    err["error"] = e.what();
    write_text_file((out / "error.json").string(), dump(err));
    throw;
  }
  summary["outputs"] = files;
  return summary;
}

}  // namespace mce::api
