#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "mce/mce.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// One player, one state, payoff of acting b0 + b1 * e with e = -1 or +1.
const char* kMicroModel = R"({
  "template": "custom",
  "players": 1,
  "actions": [["0", "1"]],
  "states": ["s"],
  "discount": 0.5,
  "shock_spec": {"values": [[-1.0, 1.0]]},
  "transition": [[[1.0]], [[1.0]]],
  "payoff": [[[[0.0, 0.0]], [[-0.5, 1.5]]]]
})";

std::string take(char* s) {
  std::string r = s ? s : "";
  mce_string_free(s);
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

fs::path fresh_dir(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("mce_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MCE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("model errors are configuration errors naming the field") {
  mce_model* m = nullptr;
  CHECK(mce_model_from_json(R"({"template": "exp1", "theta": {"RS": 1, "RN": 1, "FC": 1}})", &m) == MCE_ERR_CONFIG);
  CHECK(m == nullptr);
  CHECK(std::string(mce_last_error()).find("'EC'") != std::string::npos);
  CHECK(mce_model_from_json("not json", &m) == MCE_ERR_CONFIG);
  CHECK(mce_model_from_file("/nonexistent/model.json", &m) == MCE_ERR_CONFIG);
  CHECK(mce_model_from_json(nullptr, &m) == MCE_ERR_CONFIG);
  CHECK(std::string(mce_version()).size() > 0);
}

TEST_CASE("generate, round-trip and check through the C interface") {
  mce_model* m = nullptr;
  REQUIRE(mce_model_from_json(kMicroModel, &m) == MCE_OK);
  mce_ccp* ccp = nullptr;
  char* diag = nullptr;
  REQUIRE(mce_ccp_generate(m, R"({"seed": 3, "mpe": {"restarts": 2}})", &ccp, &diag) == MCE_OK);
  json d = json::parse(take(diag));
  CHECK(d.contains("cells"));

  char* csv = nullptr;
  REQUIRE(mce_ccp_to_csv(m, ccp, &csv) == MCE_OK);
  const std::string text = take(csv);
  mce_ccp* back = nullptr;
  REQUIRE(mce_ccp_from_csv(m, text.c_str(), &back) == MCE_OK);
  REQUIRE(mce_ccp_to_csv(m, back, &csv) == MCE_OK);
  CHECK(take(csv) == text);

  char* res = nullptr;
  REQUIRE(mce_check(m, back, R"({"seed": 1, "criterion": {"restarts": 2}})", &res) == MCE_OK);
  json r = json::parse(take(res));
  for (const char* key : {"q_value", "status", "residuals", "seed", "restarts", "version", "config_hash"})
    CHECK_MESSAGE(r.contains(key), key);
  CHECK(r["member"].get<bool>());
  CHECK(r["seed"].get<int>() == 1);

  CHECK(mce_check(m, back, R"({"bogus": 1})", &res) == MCE_ERR_CONFIG);
  CHECK(std::string(mce_last_error()).find("bogus") != std::string::npos);
  CHECK(mce_ccp_from_csv(m, "state,action,probability\ns,0,0.5\n", &ccp) == MCE_ERR_CONFIG);

  mce_ccp_free(back);
  mce_ccp_free(ccp);
  mce_model_free(m);
}

TEST_CASE("shrinkage through the C interface rejects mismatched settings") {
  json p = {{"settings_fingerprint", "a"},
            {"projections", json::array({{{"label", "m"}, {"lower", 0.0}, {"upper", 1.0}}})}};
  json q = p;
  q["settings_fingerprint"] = "b";
  char* res = nullptr;
  REQUIRE(mce_shrinkage(p.dump().c_str(), p.dump().c_str(), &res) == MCE_OK);
  json r = json::parse(take(res));
  CHECK(r["rows"][0]["width0"] == r["rows"][0]["width1"]);
  CHECK_FALSE(r["all_shrink"].get<bool>());
  CHECK(mce_shrinkage(p.dump().c_str(), q.dump().c_str(), &res) == MCE_ERR_CONFIG);
}

TEST_CASE("run outputs are byte-identical on rerun and carry provenance") {
  const fs::path dir = fresh_dir("rerun");
  json cfg = {{"model", json::parse(kMicroModel)},
              {"ccp", "gen/ccp.csv"},
              {"seed", 7},
              {"mpe", {{"restarts", 2}}},
              {"criterion", {{"restarts", 2}}}};
  spit(dir / "run.json", cfg.dump(2));
  const std::string cfg_path = (dir / "run.json").string();
  char* s = nullptr;
  REQUIRE(mce_run("generate-ccp", cfg_path.c_str(), nullptr, (dir / "gen").string().c_str(), &s) == MCE_OK);
  json summary = json::parse(take(s));
  const std::string hash = summary["config_hash"];
  CHECK(hash.size() == 64);

  REQUIRE(mce_run("check", cfg_path.c_str(), nullptr, (dir / "a").string().c_str(), &s) == MCE_OK);
  mce_string_free(s);
  REQUIRE(mce_run("check", cfg_path.c_str(), R"({"jobs": 2})", (dir / "b").string().c_str(), &s) == MCE_OK);
  mce_string_free(s);
  const std::string a = slurp(dir / "a" / "check.json");
  CHECK(a == slurp(dir / "b" / "check.json"));
  json ja = json::parse(a);
  CHECK(ja["seed"] == 7);
  CHECK(ja["version"] == mce_version());

  const std::string ccp = slurp(dir / "gen" / "ccp.csv");
  CHECK(ccp.rfind("# mce ", 0) == 0);
  CHECK(ccp.find("seed=7") != std::string::npos);
  REQUIRE(mce_run("generate-ccp", cfg_path.c_str(), nullptr, (dir / "gen2").string().c_str(), &s) == MCE_OK);
  mce_string_free(s);
  CHECK(slurp(dir / "gen2" / "ccp.csv") == ccp);
  CHECK(slurp(dir / "gen2" / "ccp_diagnostics.json") == slurp(dir / "gen" / "ccp_diagnostics.json"));

  CHECK(mce_run("frobnicate", cfg_path.c_str(), nullptr, dir.string().c_str(), &s) == MCE_ERR_CONFIG);
  fs::remove_all(dir);
}

TEST_CASE("command-line exit codes") {
  const fs::path dir = fresh_dir("cli");
  // Experiment 1 under the null baseline: quick to solve, and an anchor far
  // outside the set makes the projection fail in the solver stage.
  json cfg = {{"model", {{"template", "exp1"}, {"theta", {{"RS", 1.0}, {"RN", 1.4}, {"FC", 1.0}, {"EC", 1.0}}}}},
              {"ccp", "ccp.csv"},
              {"baseline", "null"},
              {"mpe", {{"restarts", 2}}},
              {"project", {{"coordinates", {"RS"}}, {"anchor", {{"RS", 10.0}, {"RN", 10.0}}}}}};
  spit(dir / "ok.json", cfg.dump(2));
  json bad = cfg;
  bad["unexpected"] = true;
  spit(dir / "bad.json", bad.dump(2));
  spit(dir / "broken.json", "{ not json");

  const std::string d = dir.string();
  CHECK(run_cli("generate-ccp --config " + d + "/ok.json --out " + d) == 0);
  CHECK(run_cli("check --config " + d + "/ok.json --out " + d + "/chk") == 0);
  CHECK(fs::exists(dir / "chk" / "check.json"));
  CHECK(run_cli("check --config " + d + "/bad.json --out " + d) == 2);
  CHECK(run_cli("check --config " + d + "/broken.json --out " + d) == 2);
  CHECK(run_cli("check --config " + d + "/missing.json") == 2);
  CHECK(run_cli("check") == 2);
  CHECK(run_cli("check --config " + d + "/ok.json --baseline public") == 2);
  CHECK(run_cli("project --config " + d + "/ok.json --out " + d + "/proj") == 3);
  CHECK(fs::exists(dir / "proj" / "error.json"));
  CHECK(run_cli("--version") == 0);
  fs::remove_all(dir);
}
