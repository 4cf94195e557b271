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

#include "geodephase/geodephase.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <stdexcept>
#include <string>

#include "analytic.hpp"
#include "common.hpp"
#include "engine.hpp"
#include "fit.hpp"
#include "runner.hpp"
#include "textio.hpp"

struct gd_config {
  geodephase::runner::RunConfig config;
};

struct gd_documents {
  geodephase::runner::CommandResult result;
};

namespace {

namespace gd = geodephase;

thread_local std::string g_last_error;

gd_status Fail(gd_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs f and maps exceptions onto status codes.
template <class F>
gd_status Guard(F&& f) {
  try {
    g_last_error.clear();
    f();
    return GD_OK;
  } catch (const gd::ConfigError& e) {
    return Fail(GD_CONFIG_ERROR, e.what());
  } catch (const gd::NumericalError& e) {
    return Fail(GD_NUMERICAL_ERROR, e.what());
  } catch (const std::bad_alloc&) {
    return Fail(GD_INTERNAL_ERROR, "out of memory");
  } catch (const std::invalid_argument& e) {
    return Fail(GD_INVALID_ARGUMENT, e.what());
  } catch (const std::domain_error& e) {
    return Fail(GD_INVALID_ARGUMENT, e.what());
  } catch (const std::out_of_range& e) {
    return Fail(GD_INVALID_ARGUMENT, e.what());
  } catch (const std::runtime_error& e) {
    return Fail(GD_IO_ERROR, e.what());
  } catch (const std::exception& e) {
    return Fail(GD_INTERNAL_ERROR, e.what());
  } catch (...) {
    return Fail(GD_INTERNAL_ERROR, "unknown failure");
  }
}

char* CopyString(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p == nullptr) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void Require(const void* p, const char* what) {
  if (p == nullptr) throw std::invalid_argument(std::string(what) + " is null");
}

gd::model::Protocol ProtocolArg(const char* s) {
  Require(s, "protocol");
  return gd::model::ParseProtocol(s);
}

gd::noise::CorrelationMode ModeArg(const char* s) {
  Require(s, "mode");
  return gd::noise::ParseCorrelationMode(s);
}

gd::model::ProtocolSpec SpecArg(const gd_config* c, const char* protocol,
                                const char* mode, int sign, double A,
                                double t_ns) {
  Require(c, "config");
  if (sign != 1 && sign != -1)
    throw std::invalid_argument("first window sign must be +1 or -1");
  gd::model::ProtocolSpec sp;
  sp.protocol = ProtocolArg(protocol);
  sp.mode = ModeArg(mode);
  sp.first_window_sign = sign;
  sp.geometry = gd::model::Geometry::FromSolidAngle(
      c->config.Delta(), A, c->config.n_loops, t_ns * 1e-9);
  return sp;
}

}  // namespace

extern "C" {

const char* gd_version(void) { return gd::runner::Version().data(); }

const char* gd_last_error(void) { return g_last_error.c_str(); }

const char* gd_status_name(gd_status status) {
  switch (status) {
    case GD_OK: return "ok";
    case GD_INVALID_ARGUMENT: return "invalid_argument";
    case GD_CONFIG_ERROR: return "config_error";
    case GD_NUMERICAL_ERROR: return "numerical_error";
    case GD_IO_ERROR: return "io_error";
    case GD_INTERNAL_ERROR: return "internal_error";
  }
  return "unknown";
}

gd_status gd_config_default(gd_config** out) {
  return Guard([&] {
    Require(out, "out");
    *out = new gd_config{gd::runner::RunConfig::Defaults()};
  });
}

gd_status gd_config_from_json(const char* text, gd_config** out) {
  return Guard([&] {
    Require(text, "text");
    Require(out, "out");
    *out = new gd_config{gd::runner::RunConfig::FromJson(text)};
  });
}

gd_status gd_config_from_file(const char* path, gd_config** out) {
  return Guard([&] {
    Require(path, "path");
    Require(out, "out");
    const std::string text = gd::textio::ReadFile(path);
    *out = new gd_config{gd::runner::RunConfig::FromJson(text)};
  });
}

void gd_config_free(gd_config* config) { delete config; }

gd_status gd_config_set_seed(gd_config* config, uint64_t seed) {
  return Guard([&] {
    Require(config, "config");
    config->config.seed = seed;
  });
}

gd_status gd_config_set_realizations(gd_config* config, uint64_t n) {
  return Guard([&] {
    Require(config, "config");
    gd::runner::RunConfig next = config->config;
    next.realizations = static_cast<std::size_t>(n);
    next.Validate();
    config->config = next;
  });
}

gd_status gd_config_set_workers(gd_config* config, unsigned workers) {
  return Guard([&] {
    Require(config, "config");
    config->config.workers = workers;
  });
}

gd_status gd_config_set_out_dir(gd_config* config, const char* dir) {
  return Guard([&] {
    Require(config, "config");
    Require(dir, "dir");
    if (*dir == '\0') throw gd::ConfigError("output directory must not be empty");
    config->config.out_dir = dir;
  });
}

gd_status gd_config_set_format(gd_config* config, const char* format) {
  return Guard([&] {
    Require(config, "config");
    Require(format, "format");
    gd::runner::RunConfig next = config->config;
    next.format = format;
    next.Validate();
    config->config = next;
  });
}

const char* gd_config_out_dir(const gd_config* config) {
  return config ? config->config.out_dir.c_str() : "";
}

gd_status gd_config_to_json(const gd_config* config, char** out) {
  return Guard([&] {
    Require(config, "config");
    Require(out, "out");
    *out = CopyString(config->config.ToJson());
  });
}

gd_status gd_run_command(const gd_config* config, const char* command,
                         gd_documents** out) {
  return Guard([&] {
    Require(config, "config");
    Require(command, "command");
    Require(out, "out");
    *out = nullptr;
    auto docs = std::make_unique<gd_documents>();
    docs->result = gd::runner::RunCommand(command, config->config);
    *out = docs.release();
  });
}

gd_status gd_fit_csv(const gd_config* config, const char* csv_text,
                     const char* provenance, gd_documents** out) {
  return Guard([&] {
    Require(config, "config");
    Require(csv_text, "csv_text");
    Require(out, "out");
    *out = nullptr;
    auto docs = std::make_unique<gd_documents>();
    docs->result = gd::runner::RunFit(config->config, csv_text,
                                      provenance ? provenance : "");
    *out = docs.release();
  });
}

size_t gd_documents_count(const gd_documents* docs) {
  return docs ? docs->result.files.size() : 0;
}

const char* gd_documents_name(const gd_documents* docs, size_t index) {
  if (!docs || index >= docs->result.files.size()) return nullptr;
  return docs->result.files[index].name.c_str();
}

const char* gd_documents_content(const gd_documents* docs, size_t index,
                                 size_t* length) {
  if (!docs || index >= docs->result.files.size()) return nullptr;
  const std::string& c = docs->result.files[index].content;
  if (length) *length = c.size();
  return c.c_str();
}

const char* gd_documents_summary(const gd_documents* docs) {
  return docs ? docs->result.summary.c_str() : nullptr;
}

gd_status gd_documents_write(const gd_documents* docs, const char* dir) {
  return Guard([&] {
    Require(docs, "docs");
    Require(dir, "dir");
    gd::runner::WriteOutputs(docs->result, dir);
  });
}

void gd_documents_free(gd_documents* docs) { delete docs; }

char* gd_error_json(gd_status status, const char* message) {
  try {
    return CopyString(gd::runner::ErrorJson(gd_status_name(status),
                                            message ? message : ""));
  } catch (...) {
    return nullptr;
  }
}

void gd_string_free(char* text) { std::free(text); }

gd_status gd_theta_for_solid_angle(double solid_angle, int n_loops,
                                   double* theta) {
  return Guard([&] {
    Require(theta, "theta");
    *theta = gd::model::ThetaForSolidAngle(solid_angle, n_loops);
  });
}

gd_status gd_integrated_correlator(double sigma2, double gamma,
                                   double duration, double* out) {
  return Guard([&] {
    Require(out, "out");
    if (!(sigma2 >= 0.0) || !(gamma > 0.0) || !(duration >= 0.0))
      throw std::invalid_argument("need sigma2 >= 0, gamma > 0, duration >= 0");
    *out = gd::noise::IntegratedCorrelatorOu(sigma2, gamma, duration);
  });
}

gd_status gd_protocol_factors(const char* protocol, const char* mode,
                              double abc[3]) {
  return Guard([&] {
    Require(abc, "abc");
    const auto f = gd::analytic::ProtocolFactors(ProtocolArg(protocol), ModeArg(mode));
    abc[0] = f.a;
    abc[1] = f.b;
    abc[2] = f.c;
  });
}

gd_status gd_aicc(size_t n, size_t k, double rss, double* out) {
  return Guard([&] {
    Require(out, "out");
    *out = gd::fit::Aicc(n, k, rss);
  });
}

gd_status gd_predict(const gd_config* config, const char* protocol,
                     const char* cell_protocol, const char* mode,
                     int first_window_sign, double solid_angle,
                     double duration_ns, double* nu, double* phase) {
  return Guard([&] {
    Require(nu, "nu");
    const auto sp = SpecArg(config, protocol, mode, first_window_sign,
                            solid_angle, duration_ns);
    const auto cell = ProtocolArg(cell_protocol ? cell_protocol : protocol);
    const auto st = config->config.Settings();
    const auto p = gd::analytic::Predict(sp, st.OuFor(sp.geometry), cell);
    *nu = p.nu;
    if (phase) *phase = p.gamma_mean;
  });
}

gd_status gd_simulate(const gd_config* config, const char* protocol,
                      const char* mode, int first_window_sign,
                      double solid_angle, double duration_ns, uint64_t seed,
                      uint64_t realizations, double out[4]) {
  return Guard([&] {
    Require(out, "out");
    if (realizations < 2)
      throw std::invalid_argument("realizations must be at least 2");
    const auto sp = SpecArg(config, protocol, mode, first_window_sign,
                            solid_angle, duration_ns);
    const auto e = gd::engine::RunEnsemble(sp, config->config.Settings(),
                                           static_cast<std::size_t>(realizations),
                                           seed);
    out[0] = e.nu;
    out[1] = e.nu_se;
    out[2] = e.phase;
    out[3] = e.phase_se;
  });
}

}  // extern "C"
