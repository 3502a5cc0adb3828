#include "mce/mce.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "c_api/commands.hpp"
#include "mce/mpe_solver.hpp"

struct mce_model {
  mce::Model model;
};

struct mce_ccp {
  mce::CcpData data;
};

namespace {

using mce::api::json;

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.data(), s.size() + 1);
  return p;
}

// Runs f, translating exceptions into status codes: malformed input is a
// configuration error, everything else a solver failure.
template <class F>
int guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return MCE_OK;
  } catch (const mce::api::ConfigError& e) {
    g_last_error = e.what();
    return MCE_ERR_CONFIG;
  } catch (const mce::ModelError& e) {
    g_last_error = e.what();
    return MCE_ERR_CONFIG;
  } catch (const json::exception& e) {
    g_last_error = e.what();
    return MCE_ERR_CONFIG;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MCE_ERR_SOLVER;
  } catch (...) {
    g_last_error = "unknown error";
    return MCE_ERR_SOLVER;
  }
}

void need(const void* p, const char* what) {
  if (!p) throw mce::api::ConfigError(std::string(what) + " must not be NULL");
}

json parse_options(const char* text) {
  if (!text || !*text) return json::object();
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw mce::api::ConfigError(std::string("options are not valid JSON: ") + e.what());
  }
}

// Provenance for direct library calls: the hash covers the model and the
// option document.
mce::api::Provenance provenance(const mce::Model& m, const json& opts) {
  json h = opts;
  h.erase("jobs");
  return {MCE_VERSION, mce::api::sha256_hex(mce::model_to_json(m) + "\n" + h.dump()),
          opts.is_object() ? opts.value("seed", std::uint64_t{0}) : 0};
}

}  // namespace

extern "C" {

const char* mce_version(void) { return MCE_VERSION; }

const char* mce_last_error(void) { return g_last_error.c_str(); }

void mce_string_free(char* s) { std::free(s); }

int mce_model_from_json(const char* text, mce_model** out) {
  return guarded([&] {
    need(text, "json");
    need(out, "out");
    *out = new mce_model{mce::parse_model(text)};
  });
}

int mce_model_from_file(const char* path, mce_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new mce_model{mce::load_model(path)};
  });
}

int mce_model_to_json(const mce_model* model, char** json_out) {
  return guarded([&] {
    need(model, "model");
    need(json_out, "json_out");
    *json_out = dup_string(mce::model_to_json(model->model));
  });
}

void mce_model_free(mce_model* model) { delete model; }

int mce_ccp_generate(const mce_model* model, const char* options_json, mce_ccp** out, char** diagnostics_json) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    json opts = parse_options(options_json);
    auto ccp = std::make_unique<mce_ccp>();
    json diag = mce::api::generate_ccp(model->model, opts, ccp->data, provenance(model->model, opts));
    if (diagnostics_json) *diagnostics_json = dup_string(diag.dump(2));
    *out = ccp.release();
  });
}

int mce_ccp_from_csv(const mce_model* model, const char* csv, mce_ccp** out) {
  return guarded([&] {
    need(model, "model");
    need(csv, "csv");
    need(out, "out");
    *out = new mce_ccp{mce::ccp_from_csv(model->model, csv)};
  });
}

int mce_ccp_to_csv(const mce_model* model, const mce_ccp* ccp, char** csv_out) {
  return guarded([&] {
    need(model, "model");
    need(ccp, "ccp");
    need(csv_out, "csv_out");
    *csv_out = dup_string(mce::ccp_to_csv(model->model, ccp->data));
  });
}

void mce_ccp_free(mce_ccp* ccp) { delete ccp; }

int mce_check(const mce_model* model, const mce_ccp* ccp, const char* options_json, char** result_json) {
  return guarded([&] {
    need(model, "model");
    need(ccp, "ccp");
    need(result_json, "result_json");
    json opts = parse_options(options_json);
    json r = mce::api::check(model->model, ccp->data, opts, provenance(model->model, opts));
    *result_json = dup_string(r.dump(2));
  });
}

int mce_project(const mce_model* model, const mce_ccp* ccp, const char* options_json, char** result_json) {
  return guarded([&] {
    need(model, "model");
    need(ccp, "ccp");
    need(result_json, "result_json");
    json opts = parse_options(options_json);
    json r = mce::api::project(model->model, ccp->data, opts, provenance(model->model, opts));
    *result_json = dup_string(r.dump(2));
  });
}

int mce_scan(const mce_model* model, const mce_ccp* ccp, const char* options_json, char** result_csv,
             char** summary_json) {
  return guarded([&] {
    need(model, "model");
    need(ccp, "ccp");
    need(result_csv, "result_csv");
    json opts = parse_options(options_json);
    std::string csv;
    json r = mce::api::scan(model->model, ccp->data, opts, csv, provenance(model->model, opts));
    char* c = dup_string(csv);
    if (summary_json) {
      try {
        *summary_json = dup_string(r.dump(2));
      } catch (...) {
        std::free(c);
        throw;
      }
    }
    *result_csv = c;
  });
}

int mce_shrinkage(const char* projection0_json, const char* projection1_json, char** result_json) {
  return guarded([&] {
    need(projection0_json, "projection0_json");
    need(projection1_json, "projection1_json");
    need(result_json, "result_json");
    json p0 = parse_options(projection0_json), p1 = parse_options(projection1_json);
    json both = {{"design0", p0.value("config_hash", "")}, {"design1", p1.value("config_hash", "")}};
    mce::api::Provenance prov{MCE_VERSION, mce::api::sha256_hex(both.dump()), 0};
    *result_json = dup_string(mce::api::shrinkage(p0, p1, prov).dump(2));
  });
}

int mce_run(const char* command, const char* config_path, const char* overrides_json, const char* out_dir,
            char** summary_json) {
  return guarded([&] {
    need(command, "command");
    need(config_path, "config_path");
    json over = parse_options(overrides_json);
    json s = mce::api::run_command(command, config_path, over, out_dir ? out_dir : ".");
    if (summary_json) *summary_json = dup_string(s.dump(2));
  });
}

}  // extern "C"
