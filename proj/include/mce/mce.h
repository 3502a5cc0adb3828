#ifndef MCE_MCE_H
#define MCE_MCE_H

/*
 * C interface to the identification library.
 *
 * Every function returns a status code. On failure the message is available
 * from mce_last_error() on the calling thread until the next call into the
 * library from that thread. Strings handed out through char** parameters
 * are owned by the caller and released with mce_string_free().
 *
 * Option and result documents are JSON text; tabular results are CSV.
 */

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define MCE_API __declspec(dllexport)
#else
#define MCE_API __attribute__((visibility("default")))
#endif

#define MCE_OK 0
#define MCE_ERR_CONFIG 2 /* malformed input, unknown keys, missing files */
#define MCE_ERR_SOLVER 3 /* solver failure or an identification error */

typedef struct mce_model mce_model;
typedef struct mce_ccp mce_ccp;

MCE_API const char* mce_version(void);
MCE_API const char* mce_last_error(void);
MCE_API void mce_string_free(char* s);

/* Model descriptions (template or custom game). */
MCE_API int mce_model_from_json(const char* json, mce_model** out);
MCE_API int mce_model_from_file(const char* path, mce_model** out);
MCE_API int mce_model_to_json(const mce_model* model, char** json_out);
MCE_API void mce_model_free(mce_model* model);

/* Conditional choice probabilities, one table per covariate cell.
 * mce_ccp_generate solves for a Markov perfect equilibrium at the model's
 * coefficients; options are the "mpe" block of a run configuration. */
MCE_API int mce_ccp_generate(const mce_model* model, const char* options_json, mce_ccp** out,
                             char** diagnostics_json);
MCE_API int mce_ccp_from_csv(const mce_model* model, const char* csv, mce_ccp** out);
MCE_API int mce_ccp_to_csv(const mce_model* model, const mce_ccp* ccp, char** csv_out);
MCE_API void mce_ccp_free(mce_ccp* ccp);

/* Membership of one point. Options: {"theta", "baseline", "seed", "jobs",
 * "criterion", "outer_prune"}; "theta" defaults to the model coefficients. */
MCE_API int mce_check(const mce_model* model, const mce_ccp* ccp, const char* options_json, char** result_json);

/* Projection intervals. Options: the "project" block plus "baseline",
 * "seed", "jobs", "criterion" and "outer_prune". */
MCE_API int mce_project(const mce_model* model, const mce_ccp* ccp, const char* options_json, char** result_json);

/* Two-coordinate membership grid for both regimes. */
MCE_API int mce_scan(const mce_model* model, const mce_ccp* ccp, const char* options_json, char** result_csv,
                     char** summary_json);

/* Width comparison of two projection results produced by mce_project. */
MCE_API int mce_shrinkage(const char* projection0_json, const char* projection1_json, char** result_json);

/* Runs a whole command from a configuration file, as the command-line tool
 * does: "generate-ccp", "check", "project", "scan" or "shrinkage".
 * `overrides_json` holds flag values ({"jobs", "seed", "baseline",
 * "restarts"}) and may be NULL. Output files go to `out_dir`; a short
 * summary document is returned. */
MCE_API int mce_run(const char* command, const char* config_path, const char* overrides_json, const char* out_dir,
                    char** summary_json);

#ifdef __cplusplus
}
#endif

#endif
