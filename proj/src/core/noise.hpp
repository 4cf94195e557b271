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

#ifndef GEODEPHASE_CORE_NOISE_HPP_
#define GEODEPHASE_CORE_NOISE_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "philox.hpp"

namespace geodephase::noise {

// Relation imposed between the noise in the two echo windows.
enum class CorrelationMode {
  kCorrelated,       // dW2(t) = dW1(t)
  kAnticorrelated,   // dW2(t) = -dW1(t)
  kUncorrelated,     // independent, same spectrum
  kFirstWindowOnly,  // dW2 = 0
};

std::string_view ToString(CorrelationMode mode);
// Accepts "correlated", "anticorrelated", "uncorrelated", "first_window".
CorrelationMode ParseCorrelationMode(std::string_view text);

// Stream tags inside one realization.
inline constexpr std::uint32_t kStreamWindow1 = 1;
inline constexpr std::uint32_t kStreamWindow2 = 2;
inline constexpr std::uint32_t kStreamBootstrap = 0xB0075u;

// Stationary Ornstein-Uhlenbeck process, covariance sigma2 * exp(-gamma|dt|).
struct OUParams {
  double sigma2 = 0.0;  // (rad/s)^2
  double gamma = 1e7;   // 1/s
  std::optional<double> relative_amplitude;  // sigma2 / omega0^2 when set

  static OUParams FromRelative(double relative_amplitude, double omega0,
                               double gamma);
  void Validate() const;
};

// Grid points needed to cover [0, duration] at spacing dt (endpoints kept).
std::size_t GridSamples(double duration, double dt);

// Exact AR(1) sampling with a stationary first sample.
std::vector<double> SampleOu(const OUParams& params, std::size_t n_samples,
                             double dt, const StreamId& stream);
std::vector<double> SampleOu(const OUParams& params, double duration,
                             double dt, std::uint64_t seed);

// One realization of the paired window noise. Both arrays start at the
// beginning of their window's noisy interval.
struct NoiseTrace {
  double dt = 0.0;
  std::vector<double> samples1;
  std::vector<double> samples2;
  std::uint64_t seed = 0;
  CorrelationMode mode = CorrelationMode::kFirstWindowOnly;

  bool Empty() const { return samples1.empty(); }
  double Covered() const;
  // Linear interpolation of window 1 or 2 at window-local time t. An empty
  // trace reads as zero everywhere.
  double Value(int window, double t) const;
};

NoiseTrace PairedTraces(const OUParams& params, CorrelationMode mode,
                        double window_duration, double dt, std::uint64_t seed,
                        std::uint32_t realization = 0);

// x - 1 + exp(-x), series-evaluated near zero.
double CorrelatorShape(double x);

// D(T) = sigma2 (gamma T - 1 + exp(-gamma T)) / gamma^2.
double IntegratedCorrelatorOu(double sigma2, double gamma, double T);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

enum class WindowCombination {
  kFirstWindow,   // (int_0^T dW1)^2 / 2
  kEchoSigned,    // windows joined over [0, 2T] with the echo sign flip
};

// Realization average of half the squared noise integral.
Estimate EmpiricalCorrelator(std::span<const NoiseTrace> traces, double T,
                             WindowCombination combination =
                                 WindowCombination::kFirstWindow);

// Trapezoid integral of a grid trace over [0, T], T inside the grid.
double TraceIntegral(std::span<const double> samples, double dt, double T);

// Columns t_ns, d_omega1_rad_s, d_omega2_rad_s.
std::string TraceToCsv(const NoiseTrace& trace);

}  // namespace geodephase::noise

#endif  // GEODEPHASE_CORE_NOISE_HPP_
