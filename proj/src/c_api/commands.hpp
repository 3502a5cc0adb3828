#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "mce/model.hpp"

namespace mce::api {

using nlohmann::json;

// Malformed configuration or options; maps to exit status 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Stamp written into every output document.
struct Provenance {
  std::string version;
  std::string config_hash;
  std::uint64_t seed = 0;
};

// Option documents use the keys of a run configuration without the data
// sources ("model", "ccp"). Unknown keys are errors.
json generate_ccp(const Model& m, const json& opts, CcpData& out, const Provenance& prov);
json check(const Model& m, const CcpData& data, const json& opts, const Provenance& prov);
json project(const Model& m, const CcpData& data, const json& opts, const Provenance& prov);
// Returns the summary; the grid as CSV goes to `csv`.
json scan(const Model& m, const CcpData& data, const json& opts, std::string& csv, const Provenance& prov);
json shrinkage(const json& projection0, const json& projection1, const Provenance& prov);
std::string shrinkage_csv(const json& report);

// Whole command: reads the configuration, writes the outputs into out_dir.
json run_command(const std::string& command, const std::string& config_path, const json& overrides,
                 const std::string& out_dir);

std::string sha256_hex(const std::string& text);

}  // namespace mce::api
