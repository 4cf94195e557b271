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

#include "ramp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "common.hpp"

namespace geodephase::adiabatic {

std::string_view ToString(RampMode mode) {
  return mode == RampMode::kConstantS ? "constant" : "phase_matched";
}

RampMode ParseRampMode(std::string_view text) {
  if (text == "constant") return RampMode::kConstantS;
  if (text == "phase_matched") return RampMode::kPhaseMatched;
  throw ConfigError("unknown ramp mode '" + std::string(text) + "'");
}

void AdiabaticRampPolicy::Validate() const {
  if (!(s_target > 0.0) || !(s_target <= s_max) || !(s_max < 1.0))
    throw ConfigError("ramp policy needs 0 < s_target <= s_max < 1");
  if (!(max_duration > 0.0))
    throw ConfigError("ramp duration cap must be positive");
}

double RampShape::Omega(double t) const {
  if (duration <= 0.0) return 0.0;
  const double tc = std::clamp(t, 0.0, duration);
  return delta_abs * std::tan(theta_rate * tc);
}

RampShape ShapeRamp(double theta_target, double delta,
                    const AdiabaticRampPolicy& policy) {
  policy.Validate();
  if (delta == 0.0) throw ConfigError("ramp shaping needs nonzero detuning");
  if (!(theta_target >= 0.0) || !(theta_target < kPi / 2))
    throw ConfigError("ramp target angle must lie in [0, pi/2)");
  RampShape r;
  r.theta_target = theta_target;
  r.delta_abs = std::abs(delta);
  r.gap = r.delta_abs / std::cos(theta_target);
  if (theta_target == 0.0) return r;

  double s = policy.s_target;
  if (policy.mode == RampMode::kPhaseMatched) {
    // Gap phase of a full ramp is cos(theta) asinh(tan(theta)) / s.
    const double q = std::cos(theta_target) * std::asinh(std::tan(theta_target));
    const int k = std::max(1, static_cast<int>(
                                  std::ceil(q / (kTwoPi * s) - 1e-12)));
    s = q / (kTwoPi * k);
    r.cycles = k;
  }
  r.s_level = s;
  r.theta_rate = s * r.gap;
  r.duration = theta_target / r.theta_rate;
  if (r.duration > policy.max_duration)
    throw ConfigError("ramp duration exceeds the configured cap");
  return r;
}

double RampDynamicPhase(const RampShape& ramp) {
  if (ramp.duration <= 0.0) return 0.0;
  return ramp.delta_abs / ramp.theta_rate *
         std::asinh(std::tan(ramp.theta_target));
}

}  // namespace geodephase::adiabatic
