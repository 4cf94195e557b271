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

#ifndef GEODEPHASE_CORE_ENGINE_HPP_
#define GEODEPHASE_CORE_ENGINE_HPP_

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "model.hpp"
#include "noise.hpp"
#include "ramp.hpp"

namespace geodephase::engine {

using Complex = std::complex<double>;

// 2x2 complex matrix, row-major.
struct Unitary2 {
  std::array<Complex, 4> m{Complex(1.0), Complex(0.0), Complex(0.0),
                           Complex(1.0)};

  static Unitary2 Identity() { return {}; }
  // exp(-i angle (n . sigma) / 2) for a unit axis n.
  static Unitary2 Rotation(double nx, double ny, double nz, double angle);
  // SU(2) element [[a, -conj(b)], [b, conj(a)]].
  static Unitary2 FromCayleyKlein(Complex a, Complex b);

  Unitary2 operator*(const Unitary2& rhs) const;
  Unitary2 Adjoint() const;
  Complex Det() const;
  // max |(U^dagger U - 1)_ij|
  double UnitarityError() const;
};

struct BlochState {
  double sx = 0.0;
  double sy = 0.0;
  double sz = 0.0;

  double Norm() const;
};

// Bloch vector of U|0>.
BlochState BlochOfGroundImage(const Unitary2& u);

struct EnsembleResult {
  BlochState mean_bloch;
  double nu = 0.0;
  double phase = 0.0;  // atan2(<sy>, <sx>)
  std::size_t n_realizations = 0;
  double nu_se = 0.0;
  double phase_se = 0.0;
};

struct SimulationSettings {
  double dt = model::kDefaultDt;  // s
  double noise_dt = 1e-9;         // s, noise sample spacing
  double relative_amplitude = 0.0025;
  double gamma = 1e7;             // 1/s
  bool ramp_noise = false;
  double idle = 0.0;              // s
  adiabatic::AdiabaticRampPolicy ramp;
  std::size_t bootstrap = 200;
  unsigned workers = 1;           // 0 = hardware concurrency

  noise::OUParams OuFor(const model::Geometry& geometry) const;
  model::ScheduleOptions ScheduleFor() const;
  void Validate() const;
};

// A schedule compiled into a flat step table. Immutable and shareable.
class Propagator {
 public:
  Propagator(const model::PulseSchedule& schedule, double noise_dt);

  // Full time-ordered product including every echo pulse.
  Unitary2 Evolve(const noise::NoiseTrace& noise) const;
  // State just before the readout pulse, expressed in the echo frame
  // (sx, -sy, -sz) so that a perfect echo lands on +x.
  BlochState EchoBloch(const noise::NoiseTrace& noise) const;

  const model::PulseSchedule& schedule() const { return schedule_; }
  std::size_t noise_samples() const { return noise_samples_; }
  std::size_t step_count() const { return steps_.size(); }

 private:
  struct Step {
    double omega;  // nominal envelope at the step midpoint
    double cos_phi;
    double sin_phi;
    double h;
    std::uint32_t index;  // noise grid interval
    double frac;          // position inside the interval
    int window;           // 0 = noiseless step
  };
  struct Marker {
    std::size_t before_step;
    Complex a;
    Complex b;
    bool readout;
  };

  void Run(const noise::NoiseTrace& noise, bool stop_at_readout, Complex* a,
           Complex* b) const;

  model::PulseSchedule schedule_;
  double noise_dt_;
  std::size_t noise_samples_ = 0;
  std::vector<Step> steps_;
  std::vector<Marker> markers_;
};

// Noise grid is taken from the trace itself.
Unitary2 Propagate(const model::PulseSchedule& schedule,
                   const noise::NoiseTrace& noise);

// Ensemble runner for one protocol spec.
class Simulator {
 public:
  Simulator(const model::ProtocolSpec& spec, const SimulationSettings& settings);

  noise::NoiseTrace Noise(std::uint64_t seed, std::uint32_t realization) const;
  BlochState Realization(std::uint64_t seed, std::uint32_t realization) const;
  EnsembleResult Ensemble(std::size_t n_realizations,
                          std::uint64_t base_seed) const;

  const model::PulseSchedule& schedule() const { return prop_.schedule(); }
  const noise::OUParams& ou() const { return ou_; }

 private:
  model::ProtocolSpec spec_;
  SimulationSettings settings_;
  noise::OUParams ou_;
  Propagator prop_;
};

// Reduces per-realization Bloch vectors (in index order) to an ensemble
// result with bootstrap standard errors.
EnsembleResult Reduce(std::span<const BlochState> states,
                      std::size_t bootstrap, std::uint64_t seed);

BlochState RunRealization(const model::ProtocolSpec& spec,
                          const SimulationSettings& settings,
                          std::uint64_t seed, std::uint32_t realization = 0);

EnsembleResult RunEnsemble(const model::ProtocolSpec& spec,
                           const SimulationSettings& settings,
                           std::size_t n_realizations, std::uint64_t base_seed);

// With common random numbers every spec reuses base_seed, so curves that
// differ only in orientation see identical noise.
std::vector<EnsembleResult> Sweep(std::span<const model::ProtocolSpec> specs,
                                  const SimulationSettings& settings,
                                  std::size_t n_realizations,
                                  std::uint64_t base_seed,
                                  bool common_random_numbers = true);

std::uint64_t SplitMix64(std::uint64_t x);

}  // namespace geodephase::engine

#endif  // GEODEPHASE_CORE_ENGINE_HPP_
