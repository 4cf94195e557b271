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

// Batch commands behind the CLI and the C API. Every command returns its
// files in memory; writing them out is a separate step.

#ifndef GEODEPHASE_CORE_RUNNER_HPP_
#define GEODEPHASE_CORE_RUNNER_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "common.hpp"
#include "engine.hpp"
#include "fit.hpp"
#include "model.hpp"
#include "noise.hpp"
#include "ramp.hpp"

namespace geodephase::runner {

struct Fig2fOptions {
  double t_min_ns = 50.0;
  double t_max_ns = 1000.0;
  int points = 96;  // log-spaced
  double solid_angle_rad = kPi / 2.0;
};

struct RunConfig {
  // geometry
  double delta_mhz = -35.0;
  std::vector<double> t_ns = {100.0, 160.0};
  std::vector<double> solid_angles_rad;  // pi/16 ... 3pi/4 by default
  int n_loops = 1;
  // noise
  double relative_amplitude = engine::SimulationSettings{}.relative_amplitude;
  double gamma_per_s = 1e7;
  std::vector<noise::CorrelationMode> modes;
  bool ramp_noise = false;
  double noise_dt_ns = 1.0;
  // protocols (P and/or R; DP curves come with each)
  std::vector<model::Protocol> protocols = {model::Protocol::kP,
                                            model::Protocol::kR};
  // ensemble
  std::size_t realizations = 400;
  std::uint64_t seed = 20140509;
  std::size_t bootstrap = 200;
  bool common_random_numbers = true;
  unsigned workers = 1;  // not part of the resolved config
  // integration and ramps
  double dt_ns = 0.05;
  double idle_ns = 0.0;
  adiabatic::AdiabaticRampPolicy ramp;
  // fitting
  double nu_floor = 0.1;
  double alpha = 0.05;
  double held_c_scale = 1.0;
  // commands
  Fig2fOptions fig2f;
  std::size_t adiab_stride = 10;
  // output
  std::string out_dir = "out";  // not part of the resolved config
  std::string format = "csv";   // csv | json

  static RunConfig Defaults();
  // Accepts a config document or a manifest (its "config" block). Unknown
  // keys and out-of-range values raise ConfigError.
  static RunConfig FromJson(std::string_view text);
  void Validate() const;

  // Canonical resolved config; feeds the manifest and the config hash.
  std::string ToJson() const;
  std::uint64_t Hash() const;

  double Delta() const;  // rad/s
  engine::SimulationSettings Settings() const;
  fit::FitOptions FitSettings() const;
};

struct OutputFile {
  std::string name;
  std::string content;
};

struct CommandResult {
  std::string command;
  std::vector<OutputFile> files;  // manifest.json comes last
  std::string summary;            // short human-readable report
};

CommandResult RunSweep(const RunConfig& config);
CommandResult RunTable1(const RunConfig& config);
CommandResult RunFig2f(const RunConfig& config);
CommandResult RunFit(const RunConfig& config, std::string_view dataset_csv,
                     const std::string& provenance);
CommandResult RunAdiabReport(const RunConfig& config);

// Dispatches by name: sweep, table1, fig2f, adiab-report.
CommandResult RunCommand(std::string_view command, const RunConfig& config);

// Writes every file under dir (created if missing).
void WriteOutputs(const CommandResult& result, const std::string& dir);

// Machine-readable error document for failed commands.
std::string ErrorJson(std::string_view kind, std::string_view message);

std::string_view Version();

}  // namespace geodephase::runner

#endif  // GEODEPHASE_CORE_RUNNER_HPP_
