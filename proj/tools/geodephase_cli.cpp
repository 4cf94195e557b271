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

// Command-line front end. Talks to the library only through the C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "geodephase/geodephase.h"

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> realizations;
  std::optional<std::string> out_dir;
  std::optional<std::string> format;
  std::optional<unsigned> workers;
  std::string dataset;
  bool quiet = false;
};

int ExitCode(gd_status s) {
  switch (s) {
    case GD_OK: return 0;
    case GD_INVALID_ARGUMENT:
    case GD_CONFIG_ERROR: return 2;
    case GD_NUMERICAL_ERROR: return 3;
    case GD_IO_ERROR: return 4;
    case GD_INTERNAL_ERROR: return 5;
  }
  return 5;
}

int Report(gd_status s, const std::string& message) {
  char* j = gd_error_json(s, message.c_str());
  std::cerr << (j ? j : message) << std::endl;
  gd_string_free(j);
  return ExitCode(s);
}

int ReportLast(gd_status s) { return Report(s, gd_last_error()); }

void AddCommon(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "JSON config or manifest");
  cmd->add_option("--seed", o.seed, "base seed (u64)");
  cmd->add_option("--realizations", o.realizations, "noise realizations per curve");
  cmd->add_option("--out", o.out_dir, "output directory");
  cmd->add_option("--format", o.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--workers", o.workers, "threads per ensemble (0 = all cores)");
  cmd->add_flag("--quiet", o.quiet, "suppress the summary");
}

int Run(const std::string& command, const Options& o) {
  gd_config* cfg = nullptr;
  gd_status s = o.config_path.empty()
                    ? gd_config_default(&cfg)
                    : gd_config_from_file(o.config_path.c_str(), &cfg);
  if (s != GD_OK) {
    // A missing or unreadable config file is a configuration problem.
    return ReportLast(s == GD_IO_ERROR ? GD_CONFIG_ERROR : s);
  }
  struct Free {
    gd_config* c;
    ~Free() { gd_config_free(c); }
  } guard{cfg};
  if (o.seed) s = gd_config_set_seed(cfg, *o.seed);
  if (s == GD_OK && o.realizations) s = gd_config_set_realizations(cfg, *o.realizations);
  if (s == GD_OK && o.out_dir) s = gd_config_set_out_dir(cfg, o.out_dir->c_str());
  if (s == GD_OK && o.format) s = gd_config_set_format(cfg, o.format->c_str());
  if (s == GD_OK && o.workers) s = gd_config_set_workers(cfg, *o.workers);
  if (s != GD_OK) return ReportLast(s);

  gd_documents* docs = nullptr;
  if (command == "fit") {
    std::ifstream in(o.dataset, std::ios::binary);
    if (!in) return Report(GD_CONFIG_ERROR, "cannot read dataset " + o.dataset);
    std::stringstream buf;
    buf << in.rdbuf();
    s = gd_fit_csv(cfg, buf.str().c_str(), o.dataset.c_str(), &docs);
  } else {
    s = gd_run_command(cfg, command.c_str(), &docs);
  }
  if (s != GD_OK) return ReportLast(s);
  const std::string dir = gd_config_out_dir(cfg);
  s = gd_documents_write(docs, dir.c_str());
  if (s != GD_OK) {
    gd_documents_free(docs);
    return ReportLast(s);
  }
  if (!o.quiet) {
    std::cout << gd_documents_summary(docs);
    for (std::size_t i = 0; i < gd_documents_count(docs); ++i)
      std::cout << "wrote " << dir << "/" << gd_documents_name(docs, i) << "\n";
  }
  gd_documents_free(docs);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geodephase: geometric dephasing simulator and fitter"};
  app.set_version_flag("--version", std::string(gd_version()));
  app.require_subcommand(1);
  Options o;
  struct Entry {
    const char* name;
    const char* help;
  };
  const Entry entries[] = {
      {"sweep", "Monte-Carlo coherence sweep plus analytic predictions"},
      {"table1", "recover the decoherence factor table from simulated sweeps"},
      {"fig2f", "dynamic, geometric and non-adiabatic terms versus period"},
      {"fit", "fit an external dataset in the sweep schema"},
      {"adiab-report", "adiabaticity traces for the configured schedules"},
  };
  for (const Entry& e : entries) {
    CLI::App* cmd = app.add_subcommand(e.name, e.help);
    AddCommon(cmd, o);
    if (std::string(e.name) == "fit")
      cmd->add_option("--dataset", o.dataset, "CSV dataset")->required();
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return Report(GD_CONFIG_ERROR, e.what());
  }
  for (const Entry& e : entries)
    if (app.got_subcommand(e.name)) return Run(e.name, o);
  return Report(GD_CONFIG_ERROR, "no command given");
}
