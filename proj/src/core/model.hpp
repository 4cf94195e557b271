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

#ifndef GEODEPHASE_CORE_MODEL_HPP_
#define GEODEPHASE_CORE_MODEL_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "common.hpp"
#include "noise.hpp"
#include "ramp.hpp"

namespace geodephase::model {

inline constexpr double kDefaultDelta = -kTwoPi * 35e6;  // rad/s

// Effective field in angular-frequency units: (Omega cos phi, Omega sin phi,
// delta).
struct FieldVector {
  double bx = 0.0;
  double by = 0.0;
  double bz = 0.0;

  double Magnitude() const;
};

enum class Protocol {
  kP,   // loop orientation preserved in window 2
  kR,   // loop orientation reversed in window 2
  kDP,  // static hold, dynamic phase only
};

std::string_view ToString(Protocol protocol);
Protocol ParseProtocol(std::string_view text);  // "P" | "R" | "DP"

// theta = arccos(1 - A / (2 pi n)).
double ThetaForSolidAngle(double solid_angle, int n_loops);
// A = 2 pi n (1 - cos theta).
double SolidAngle(double theta, int n_loops);

struct Geometry {
  double delta = kDefaultDelta;  // rad/s
  double theta = 0.0;            // rad
  double omega0 = 0.0;           // rad/s, |delta| tan(theta)
  int n_loops = 1;               // signed
  double omega_b = 0.0;          // rad/s, 2 pi |n| / T
  double duration = 0.0;         // s, one window

  // solid_angle must carry the sign of n_loops (or be zero).
  static Geometry FromSolidAngle(double delta, double solid_angle,
                                 int n_loops, double duration);
  static Geometry FromTheta(double delta, double theta, int n_loops,
                            double duration);

  double SolidAngle() const;
  double Gap() const;       // sqrt(omega0^2 + delta^2)
  int Orientation() const;  // sgn(n) sgn(delta)
  void Validate() const;
};

struct ProtocolSpec {
  Protocol protocol = Protocol::kR;
  int first_window_sign = +1;
  noise::CorrelationMode mode = noise::CorrelationMode::kFirstWindowOnly;
  Geometry geometry;

  // Signed loop count of window 1 or 2 (zero for DP).
  int WindowLoops(int window) const;
  void Validate() const;
};

enum class SegmentKind { kIdle, kRampUp, kPrecession, kHold, kRampDown, kEchoPulse };
std::string_view ToString(SegmentKind kind);

enum class PulseRole { kPrepare, kRefocus, kReadout };
std::string_view ToString(PulseRole role);

// Ideal instantaneous rotation by angle about the transverse axis
// (cos axis_phase, sin axis_phase, 0).
struct EchoPulse {
  double axis_phase = 0.0;
  double angle = 0.0;
  PulseRole role = PulseRole::kPrepare;
};

struct Segment {
  SegmentKind kind = SegmentKind::kIdle;
  int window = 0;           // 1 or 2 inside an echo window, else 0
  double start = 0.0;       // s
  double duration = 0.0;    // s
  std::size_t steps = 0;    // integration steps
  double step = 0.0;        // duration / steps
  bool rounded = false;     // dt did not divide the duration
  double omega0 = 0.0;      // plateau amplitude
  adiabatic::RampShape ramp;
  double phi0 = 0.0;        // phase at segment start
  double phi_rate = 0.0;    // rad/s
  bool noisy = false;
  double noise_offset = 0.0;  // window-local noise time at segment start
  EchoPulse pulse;

  // Envelope at segment-local time tau.
  double Omega(double tau) const;
  double Phi(double tau) const { return phi0 + phi_rate * tau; }
};

struct ScheduleOptions {
  bool ramp_noise = true;  // ramps admit noise as well as precession
  double idle = 0.0;       // s, idle padding around each window
};

struct PulseSchedule {
  double delta = kDefaultDelta;
  double dt = 0.0;
  std::vector<Segment> segments;
  double noise_window = 0.0;  // noisy span of each window, s
  double gap = 0.0;           // frozen G = sqrt(omega0^2 + delta^2)
  Protocol protocol = Protocol::kR;

  double TotalDuration() const;
  // Index of the timed segment containing t, or -1.
  int SegmentAt(double t) const;
};

// Default step and the resolution bound dt <= 2 pi / (50 max|B|).
inline constexpr double kDefaultDt = 0.05e-9;

PulseSchedule BuildSchedule(const ProtocolSpec& spec,
                            const adiabatic::AdiabaticRampPolicy& policy,
                            double dt, const ScheduleOptions& options = {});

FieldVector FieldAt(const PulseSchedule& schedule,
                    const noise::NoiseTrace& noise, double t);

// JSON document: segment list with kind, timing and envelopes sampled at the
// segment step.
std::string ScheduleToJson(const PulseSchedule& schedule);

}  // namespace geodephase::model

#endif  // GEODEPHASE_CORE_MODEL_HPP_
