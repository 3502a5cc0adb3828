#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "mce/mce.h"

int main(int argc, char** argv) {
  CLI::App app{"Identification of dynamic games without equilibrium selection assumptions"};
  app.set_version_flag("--version", std::string(mce_version()));
  app.require_subcommand(1);
  app.fallthrough();

  std::string config, out = ".", baseline;
  std::optional<int> jobs, restarts;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Random seed for restarts");
  app.add_option("--out", out, "Output directory");
  app.add_option("--baseline", baseline, "Information baseline")->check(CLI::IsMember({"null", "private"}));
  app.add_option("--restarts", restarts, "Solver restarts")->check(CLI::PositiveNumber);

  app.add_subcommand("generate-ccp", "Solve for an equilibrium and write its choice probabilities");
  app.add_subcommand("check", "Test whether a coefficient point is in the identified set");
  app.add_subcommand("project", "Projection intervals of the identified set");
  app.add_subcommand("scan", "Two-coordinate membership grid for the sharp and outer sets");
  app.add_subcommand("shrinkage", "Compare projection widths of two covariate designs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : MCE_ERR_CONFIG;
  }

  nlohmann::json over = nlohmann::json::object();
  if (jobs) over["jobs"] = *jobs;
  if (seed) over["seed"] = *seed;
  if (!baseline.empty()) over["baseline"] = baseline;
  if (restarts) over["restarts"] = *restarts;

  const std::string command = app.get_subcommands().front()->get_name();
  char* summary = nullptr;
  const int rc = mce_run(command.c_str(), config.c_str(), over.dump().c_str(), out.c_str(), &summary);
  if (rc != MCE_OK) {
    std::fprintf(stderr, "error: %s\n", mce_last_error());
    return rc;
  }
  std::printf("%s\n", summary);
  mce_string_free(summary);
  return 0;
}
