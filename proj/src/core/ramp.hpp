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

#ifndef GEODEPHASE_CORE_RAMP_HPP_
#define GEODEPHASE_CORE_RAMP_HPP_

#include <string_view>

namespace geodephase::adiabatic {

enum class RampMode {
  // theta rate = s_target * G exactly.
  kConstantS,
  // Largest constant s <= s_target whose ramp accumulates a whole number of
  // gap cycles; this nulls the leading non-adiabatic edge term.
  kPhaseMatched,
};

std::string_view ToString(RampMode mode);
RampMode ParseRampMode(std::string_view text);  // "constant" | "phase_matched"

// Ramps hold the field polar angle rate constant, so s(t) is flat with the
// gap frozen at G = sqrt(omega0^2 + delta^2).
struct AdiabaticRampPolicy {
  double s_target = 0.2;
  double s_max = 0.28;
  RampMode mode = RampMode::kPhaseMatched;
  double max_duration = 2e-6;  // s

  void Validate() const;
};

struct RampShape {
  double theta_target = 0.0;  // rad
  double delta_abs = 0.0;     // rad/s
  double gap = 0.0;           // rad/s, frozen G
  double theta_rate = 0.0;    // rad/s
  double duration = 0.0;      // s
  double s_level = 0.0;       // achieved constant s
  int cycles = 0;             // whole gap cycles (phase-matched only)

  double Theta(double t) const { return theta_rate * t; }
  // |delta| tan(theta_rate t), clamped to the ramp interval.
  double Omega(double t) const;
};

RampShape ShapeRamp(double theta_target, double delta,
                    const AdiabaticRampPolicy& policy);

// Dynamic phase int sqrt(delta^2 + omega(t)^2) dt over a full ramp.
double RampDynamicPhase(const RampShape& ramp);

}  // namespace geodephase::adiabatic

#endif  // GEODEPHASE_CORE_RAMP_HPP_
