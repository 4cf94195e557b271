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

#include "model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace geodephase::model {

double FieldVector::Magnitude() const {
  return std::sqrt(bx * bx + by * by + bz * bz);
}

std::string_view ToString(Protocol protocol) {
  switch (protocol) {
    case Protocol::kP: return "P";
    case Protocol::kR: return "R";
    case Protocol::kDP: return "DP";
  }
  return "?";
}

Protocol ParseProtocol(std::string_view text) {
  if (text == "P") return Protocol::kP;
  if (text == "R") return Protocol::kR;
  if (text == "DP") return Protocol::kDP;
  throw ConfigError("unknown protocol '" + std::string(text) + "'");
}

double ThetaForSolidAngle(double solid_angle, int n_loops) {
  if (n_loops == 0) throw std::domain_error("loop count must be nonzero");
  const double r = solid_angle / (kTwoPi * n_loops);
  if (!(r >= 0.0) || !(r < 1.0))
    throw std::domain_error("solid angle outside [0, 2 pi n)");
  // 1 - cos(theta) = 2 sin^2(theta / 2) keeps small angles accurate.
  return 2.0 * std::asin(std::sqrt(0.5 * r));
}

double SolidAngle(double theta, int n_loops) {
  const double h = std::sin(0.5 * theta);
  return kTwoPi * n_loops * 2.0 * h * h;
}

Geometry Geometry::FromTheta(double delta, double theta, int n_loops,
                             double duration) {
  Geometry g;
  g.delta = delta;
  g.theta = theta;
  g.n_loops = n_loops;
  g.duration = duration;
  g.Validate();
  g.omega0 = std::abs(delta) * std::tan(theta);
  g.omega_b = kTwoPi * std::abs(n_loops) / duration;
  return g;
}

Geometry Geometry::FromSolidAngle(double delta, double solid_angle,
                                  int n_loops, double duration) {
  if (n_loops == 0) throw ConfigError("loop count must be nonzero");
  double theta = 0.0;
  try {
    theta = ThetaForSolidAngle(solid_angle, n_loops);
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }
  return FromTheta(delta, theta, n_loops, duration);
}

double Geometry::SolidAngle() const { return model::SolidAngle(theta, n_loops); }

double Geometry::Gap() const { return std::hypot(omega0, delta); }

int Geometry::Orientation() const { return Sign(n_loops) * Sign(delta); }

void Geometry::Validate() const {
  if (!(delta != 0.0) || !std::isfinite(delta))
    throw ConfigError("detuning must be finite and nonzero");
  if (n_loops == 0) throw ConfigError("loop count must be nonzero");
  if (!(duration > 0.0) || !std::isfinite(duration))
    throw ConfigError("window duration must be positive");
  if (!(theta >= 0.0) || !(theta < kPi / 2))
    throw ConfigError("cone angle must lie in [0, pi/2)");
}

int ProtocolSpec::WindowLoops(int window) const {
  if (protocol == Protocol::kDP) return 0;
  const int n1 = first_window_sign * geometry.n_loops;
  if (window == 1 || protocol == Protocol::kP) return n1;
  return -n1;
}

void ProtocolSpec::Validate() const {
  if (first_window_sign != 1 && first_window_sign != -1)
    throw ConfigError("first-window sign must be +1 or -1");
  geometry.Validate();
}

std::string_view ToString(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::kIdle: return "idle";
    case SegmentKind::kRampUp: return "ramp_up";
    case SegmentKind::kPrecession: return "precession";
    case SegmentKind::kHold: return "hold";
    case SegmentKind::kRampDown: return "ramp_down";
    case SegmentKind::kEchoPulse: return "echo_pulse";
  }
  return "?";
}

std::string_view ToString(PulseRole role) {
  switch (role) {
    case PulseRole::kPrepare: return "prepare";
    case PulseRole::kRefocus: return "refocus";
    case PulseRole::kReadout: return "readout";
  }
  return "?";
}

double Segment::Omega(double tau) const {
  switch (kind) {
    case SegmentKind::kRampUp: return ramp.Omega(tau);
    case SegmentKind::kRampDown: return ramp.Omega(duration - tau);
    case SegmentKind::kPrecession:
    case SegmentKind::kHold: return omega0;
    default: return 0.0;
  }
}

double PulseSchedule::TotalDuration() const {
  if (segments.empty()) return 0.0;
  const Segment& last = segments.back();
  return last.start + last.duration;
}

int PulseSchedule::SegmentAt(double t) const {
  const double total = TotalDuration();
  if (!(t >= 0.0) || t > total * (1.0 + 1e-12)) return -1;
  int last_timed = -1;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const Segment& s = segments[i];
    if (s.kind == SegmentKind::kEchoPulse) continue;
    last_timed = static_cast<int>(i);
    if (t >= s.start && t < s.start + s.duration) return last_timed;
  }
  return last_timed;
}

namespace {

Segment Timed(SegmentKind kind, int window, double start, double duration,
              double dt) {
  Segment s;
  s.kind = kind;
  s.window = window;
  s.start = start;
  s.duration = duration;
  const double ratio = duration / dt;
  s.steps = static_cast<std::size_t>(std::max(1.0, std::round(ratio)));
  s.step = duration / double(s.steps);
  s.rounded = std::abs(double(s.steps) * dt - duration) > 1e-9 * duration;
  return s;
}

Segment Pulse(double start, double axis_phase, double angle, PulseRole role) {
  Segment s;
  s.kind = SegmentKind::kEchoPulse;
  s.start = start;
  s.pulse = {axis_phase, angle, role};
  return s;
}

}  // namespace

PulseSchedule BuildSchedule(const ProtocolSpec& spec,
                            const adiabatic::AdiabaticRampPolicy& policy,
                            double dt, const ScheduleOptions& options) {
  spec.Validate();
  policy.Validate();
  if (!(dt > 0.0)) throw ConfigError("integration step must be positive");
  if (!(options.idle >= 0.0)) throw ConfigError("idle time must be >= 0");
  const Geometry& g = spec.geometry;
  const adiabatic::RampShape ramp = adiabatic::ShapeRamp(g.theta, g.delta, policy);
  const double gap = g.Gap();
  const bool dp = spec.protocol == Protocol::kDP;
  const double plateau = dp ? 0.0 : g.omega_b * std::sin(g.theta) / gap;
  if (plateau > policy.s_max)
    throw ConfigError("precession plateau exceeds the adiabaticity bound");
  if (dt * gap > kTwoPi / 50.0)
    throw ConfigError("integration step too coarse for the field magnitude");

  PulseSchedule sch;
  sch.delta = g.delta;
  sch.dt = dt;
  sch.protocol = spec.protocol;
  sch.gap = gap;
  sch.noise_window =
      options.ramp_noise ? g.duration + 2.0 * ramp.duration : g.duration;
  double t = 0.0;
  auto push = [&](Segment s) {
    t = s.start + s.duration;
    sch.segments.push_back(std::move(s));
  };

  push(Pulse(t, kPi / 2, kPi / 2, PulseRole::kPrepare));
  for (int w = 1; w <= 2; ++w) {
    if (options.idle > 0.0)
      push(Timed(SegmentKind::kIdle, 0, t, options.idle, dt));
    const double rate = dp ? 0.0 : Sign(spec.WindowLoops(w)) * g.omega_b;
    const double core_offset = options.ramp_noise ? ramp.duration : 0.0;
    if (ramp.duration > 0.0) {
      Segment up = Timed(SegmentKind::kRampUp, w, t, ramp.duration, dt);
      up.ramp = ramp;
      up.omega0 = g.omega0;
      up.noisy = options.ramp_noise;
      push(std::move(up));
    }
    Segment core = Timed(dp ? SegmentKind::kHold : SegmentKind::kPrecession,
                         w, t, g.duration, dt);
    core.omega0 = g.omega0;
    core.phi_rate = rate;
    core.noisy = true;
    core.noise_offset = core_offset;
    push(std::move(core));
    if (ramp.duration > 0.0) {
      Segment down = Timed(SegmentKind::kRampDown, w, t, ramp.duration, dt);
      down.ramp = ramp;
      down.omega0 = g.omega0;
      down.phi0 = rate * g.duration;
      down.noisy = options.ramp_noise;
      down.noise_offset = core_offset + g.duration;
      push(std::move(down));
    }
    if (options.idle > 0.0)
      push(Timed(SegmentKind::kIdle, 0, t, options.idle, dt));
    if (w == 1) push(Pulse(t, 0.0, kPi, PulseRole::kRefocus));
  }
  push(Pulse(t, 0.0, kPi / 2, PulseRole::kReadout));
  return sch;
}

FieldVector FieldAt(const PulseSchedule& schedule,
                    const noise::NoiseTrace& noise, double t) {
  const int idx = schedule.SegmentAt(t);
  if (idx < 0) throw std::out_of_range("time outside the schedule");
  const Segment& s = schedule.segments[static_cast<std::size_t>(idx)];
  const double tau = std::clamp(t - s.start, 0.0, s.duration);
  double omega = s.Omega(tau);
  if (s.noisy) omega += noise.Value(s.window, s.noise_offset + tau);
  const double phi = s.Phi(tau);
  return {omega * std::cos(phi), omega * std::sin(phi), schedule.delta};
}

std::string ScheduleToJson(const PulseSchedule& schedule) {
  using Json = nlohmann::ordered_json;
  Json doc;
  doc["protocol"] = std::string(ToString(schedule.protocol));
  doc["delta_rad_s"] = schedule.delta;
  doc["dt_s"] = schedule.dt;
  doc["total_duration_s"] = schedule.TotalDuration();
  doc["noise_window_s"] = schedule.noise_window;
  doc["gap_rad_s"] = schedule.gap;
  Json segs = Json::array();
  for (const Segment& s : schedule.segments) {
    Json j;
    j["kind"] = std::string(ToString(s.kind));
    j["window"] = s.window;
    j["start_s"] = s.start;
    j["duration_s"] = s.duration;
    if (s.kind == SegmentKind::kEchoPulse) {
      j["role"] = std::string(ToString(s.pulse.role));
      j["axis_phase_rad"] = s.pulse.axis_phase;
      j["angle_rad"] = s.pulse.angle;
    } else {
      j["steps"] = s.steps;
      j["step_s"] = s.step;
      j["rounded"] = s.rounded;
      j["noisy"] = s.noisy;
      Json om = Json::array(), ph = Json::array();
      for (std::size_t k = 0; k <= s.steps; ++k) {
        const double tau = s.step * double(k);
        om.push_back(s.Omega(tau));
        ph.push_back(s.Phi(tau));
      }
      j["omega_rad_s"] = std::move(om);
      j["phi_rad"] = std::move(ph);
    }
    segs.push_back(std::move(j));
  }
  doc["segments"] = std::move(segs);
  return doc.dump(1);
}

}  // namespace geodephase::model
