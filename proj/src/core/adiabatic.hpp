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

#ifndef GEODEPHASE_CORE_ADIABATIC_HPP_
#define GEODEPHASE_CORE_ADIABATIC_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "model.hpp"
#include "noise.hpp"
#include "ramp.hpp"

namespace geodephase::adiabatic {

// s(t) = |d n/dt| / G for the unit field direction n, by central differences
// of half a schedule step kept inside the segment containing t.
double Adiabaticity(const model::PulseSchedule& schedule,
                    const noise::NoiseTrace& noise, double t);

// Plateau value omega_b sin(theta) / G of a precession segment.
double PlateauAdiabaticity(const model::Geometry& geometry);

struct AdiabaticitySample {
  int segment = 0;
  model::SegmentKind kind = model::SegmentKind::kIdle;
  int window = 0;
  double t = 0.0;  // s
  double s = 0.0;
};

// s at the midpoint of every stride-th step of every timed segment.
std::vector<AdiabaticitySample> AdiabaticityTrace(
    const model::PulseSchedule& schedule, const noise::NoiseTrace& noise,
    std::size_t stride = 1);

struct SegmentStats {
  int segment = 0;
  model::SegmentKind kind = model::SegmentKind::kIdle;
  int window = 0;
  double max_noiseless = 0.0;
  double mean_noiseless = 0.0;
  double max_noisy = 0.0;
  double mean_noisy = 0.0;
  bool exceeds = false;
};

struct ReportOptions {
  double dt = model::kDefaultDt;
  double noise_dt = 1e-9;
  model::ScheduleOptions schedule;
  std::optional<noise::OUParams> ou;  // sample noise; none = noiseless only
  std::uint64_t seed = 1;
  std::size_t stride = 1;
};

struct AdiabaticityReport {
  std::vector<SegmentStats> segments;
  std::vector<AdiabaticitySample> noiseless;
  std::vector<AdiabaticitySample> noisy;
  double max_noiseless = 0.0;
  double max_noisy = 0.0;
  double s_max = 0.28;
  double plateau_formula = 0.0;
  double plateau_measured = 0.0;  // mean noiseless s over precession
  double ramp_level = 0.0;
  bool pass = true;

  std::string SummaryCsv() const;
  // segment, kind, window, t_ns, s_noiseless, s_noisy
  std::string TraceCsv() const;
};

AdiabaticityReport MakeAdiabaticityReport(const model::ProtocolSpec& spec,
                                          const AdiabaticRampPolicy& policy,
                                          const ReportOptions& options = {});

}  // namespace geodephase::adiabatic

#endif  // GEODEPHASE_CORE_ADIABATIC_HPP_
