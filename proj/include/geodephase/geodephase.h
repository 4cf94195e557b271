// Copyright 2026 The geodephase Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* C interface to the geodephase simulator, analytic model and fitter.
 *
 * Objects are opaque handles owned by the caller and released with the
 * matching *_free function. Every fallible call returns a gd_status; the
 * message of the most recent failure on the calling thread is available
 * from gd_last_error(). */

#ifndef GEODEPHASE_GEODEPHASE_H_
#define GEODEPHASE_GEODEPHASE_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(GD_BUILDING_LIBRARY)
#define GD_API __declspec(dllexport)
#else
#define GD_API __declspec(dllimport)
#endif
#else
#define GD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gd_status {
  GD_OK = 0,
  GD_INVALID_ARGUMENT = 1,
  GD_CONFIG_ERROR = 2,
  GD_NUMERICAL_ERROR = 3,
  GD_IO_ERROR = 4,
  GD_INTERNAL_ERROR = 5
} gd_status;

typedef struct gd_config gd_config;
typedef struct gd_documents gd_documents;

GD_API const char* gd_version(void);
GD_API const char* gd_last_error(void);
GD_API const char* gd_status_name(gd_status status);

/* Configuration. */
GD_API gd_status gd_config_default(gd_config** out);
GD_API gd_status gd_config_from_json(const char* text, gd_config** out);
GD_API gd_status gd_config_from_file(const char* path, gd_config** out);
GD_API void gd_config_free(gd_config* config);
GD_API gd_status gd_config_set_seed(gd_config* config, uint64_t seed);
GD_API gd_status gd_config_set_realizations(gd_config* config, uint64_t n);
GD_API gd_status gd_config_set_workers(gd_config* config, unsigned workers);
GD_API gd_status gd_config_set_out_dir(gd_config* config, const char* dir);
GD_API gd_status gd_config_set_format(gd_config* config, const char* format);
/* Borrowed pointer, valid until the config changes or is freed. */
GD_API const char* gd_config_out_dir(const gd_config* config);
/* Resolved config as JSON; release with gd_string_free. */
GD_API gd_status gd_config_to_json(const gd_config* config, char** out);

/* Commands: "sweep", "table1", "fig2f", "adiab-report". */
GD_API gd_status gd_run_command(const gd_config* config, const char* command,
                                gd_documents** out);
/* Fits a dataset given as CSV text in the sweep schema. */
GD_API gd_status gd_fit_csv(const gd_config* config, const char* csv_text,
                            const char* provenance, gd_documents** out);

GD_API size_t gd_documents_count(const gd_documents* docs);
GD_API const char* gd_documents_name(const gd_documents* docs, size_t index);
GD_API const char* gd_documents_content(const gd_documents* docs,
                                        size_t index, size_t* length);
GD_API const char* gd_documents_summary(const gd_documents* docs);
GD_API gd_status gd_documents_write(const gd_documents* docs,
                                    const char* dir);
GD_API void gd_documents_free(gd_documents* docs);

/* {"status":"error","kind":...,"message":...}; release with gd_string_free. */
GD_API char* gd_error_json(gd_status status, const char* message);
GD_API void gd_string_free(char* text);

/* Primitives. Protocol names are "P", "R" or "DP"; mode names are
 * "correlated", "anticorrelated", "uncorrelated", "first_window". */
GD_API gd_status gd_theta_for_solid_angle(double solid_angle, int n_loops,
                                          double* theta);
GD_API gd_status gd_integrated_correlator(double sigma2, double gamma,
                                          double duration, double* out);
GD_API gd_status gd_protocol_factors(const char* protocol, const char* mode,
                                     double abc[3]);
GD_API gd_status gd_aicc(size_t n, size_t k, double rss, double* out);

/* Analytic coherence and noiseless phase for one curve. A DP curve takes
 * its theory cell from cell_protocol. */
GD_API gd_status gd_predict(const gd_config* config, const char* protocol,
                            const char* cell_protocol, const char* mode,
                            int first_window_sign, double solid_angle,
                            double duration_ns, double* nu, double* phase);

/* Monte-Carlo ensemble for one curve: out = {nu, nu_se, phase, phase_se}. */
GD_API gd_status gd_simulate(const gd_config* config, const char* protocol,
                             const char* mode, int first_window_sign,
                             double solid_angle, double duration_ns,
                             uint64_t seed, uint64_t realizations,
                             double out[4]);

#ifdef __cplusplus
}
#endif

#endif /* GEODEPHASE_GEODEPHASE_H_ */
