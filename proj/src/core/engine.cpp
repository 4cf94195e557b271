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

#include "engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "common.hpp"

namespace geodephase::engine {
namespace {

// sin and cos of a small half-angle; the series is exact to roundoff for
// |x| < 0.1, which covers every default step by an order of magnitude.
inline void SinCosHalf(double x, double* s, double* c) {
  if (std::abs(x) < 0.1) {
    const double x2 = x * x;
    *s = x * (1.0 - x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 *
                                                         (1.0 - x2 / 72.0))));
    *c = 1.0 - x2 / 2.0 * (1.0 - x2 / 12.0 * (1.0 - x2 / 30.0 *
                                                     (1.0 - x2 / 56.0)));
  } else {
    *s = std::sin(x);
    *c = std::cos(x);
  }
}

// (a, b) <- R (a, b) for R = [[ar, -conj(br)], [br, conj(ar)]].
inline void LeftMultiply(Complex ar, Complex br, Complex* a, Complex* b) {
  const Complex na = ar * *a - std::conj(br) * *b;
  const Complex nb = br * *a + std::conj(ar) * *b;
  *a = na;
  *b = nb;
}

void PulseCayleyKlein(const model::EchoPulse& p, Complex* a, Complex* b) {
  const double s = std::sin(0.5 * p.angle);
  *a = Complex(std::cos(0.5 * p.angle), 0.0);
  *b = Complex(s * std::sin(p.axis_phase), -s * std::cos(p.axis_phase));
}

}  // namespace

Unitary2 Unitary2::Rotation(double nx, double ny, double nz, double angle) {
  const double s = std::sin(0.5 * angle);
  const double c = std::cos(0.5 * angle);
  return FromCayleyKlein(Complex(c, -s * nz), Complex(s * ny, -s * nx));
}

Unitary2 Unitary2::FromCayleyKlein(Complex a, Complex b) {
  Unitary2 u;
  u.m = {a, -std::conj(b), b, std::conj(a)};
  return u;
}

Unitary2 Unitary2::operator*(const Unitary2& r) const {
  Unitary2 o;
  o.m[0] = m[0] * r.m[0] + m[1] * r.m[2];
  o.m[1] = m[0] * r.m[1] + m[1] * r.m[3];
  o.m[2] = m[2] * r.m[0] + m[3] * r.m[2];
  o.m[3] = m[2] * r.m[1] + m[3] * r.m[3];
  return o;
}

Unitary2 Unitary2::Adjoint() const {
  Unitary2 o;
  o.m = {std::conj(m[0]), std::conj(m[2]), std::conj(m[1]), std::conj(m[3])};
  return o;
}

Complex Unitary2::Det() const { return m[0] * m[3] - m[1] * m[2]; }

double Unitary2::UnitarityError() const {
  const Unitary2 p = Adjoint() * *this;
  return std::max({std::abs(p.m[0] - 1.0), std::abs(p.m[1]), std::abs(p.m[2]),
                   std::abs(p.m[3] - 1.0)});
}

double BlochState::Norm() const { return std::sqrt(sx * sx + sy * sy + sz * sz); }

BlochState BlochOfGroundImage(const Unitary2& u) {
  const Complex a = u.m[0], b = u.m[2];
  const Complex ab = std::conj(a) * b;
  return {2.0 * ab.real(), 2.0 * ab.imag(), std::norm(a) - std::norm(b)};
}

noise::OUParams SimulationSettings::OuFor(const model::Geometry& g) const {
  return noise::OUParams::FromRelative(relative_amplitude, g.omega0, gamma);
}

model::ScheduleOptions SimulationSettings::ScheduleFor() const {
  return {ramp_noise, idle};
}

void SimulationSettings::Validate() const {
  if (!(dt > 0.0)) throw ConfigError("integration step must be positive");
  if (!(noise_dt > 0.0)) throw ConfigError("noise step must be positive");
  if (!(relative_amplitude >= 0.0))
    throw ConfigError("relative noise amplitude must be >= 0");
  if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
  ramp.Validate();
}

Propagator::Propagator(const model::PulseSchedule& schedule, double noise_dt)
    : schedule_(schedule), noise_dt_(noise_dt) {
  if (!(noise_dt > 0.0)) throw ConfigError("noise step must be positive");
  noise_samples_ = noise::GridSamples(schedule.noise_window, noise_dt);
  const double last = double(std::max<std::size_t>(noise_samples_, 2) - 2);
  for (const model::Segment& seg : schedule.segments) {
    if (seg.kind == model::SegmentKind::kEchoPulse) {
      Marker mk;
      mk.before_step = steps_.size();
      PulseCayleyKlein(seg.pulse, &mk.a, &mk.b);
      mk.readout = seg.pulse.role == model::PulseRole::kReadout;
      markers_.push_back(mk);
      continue;
    }
    for (std::size_t k = 0; k < seg.steps; ++k) {
      const double tau = (double(k) + 0.5) * seg.step;
      const double phi = seg.Phi(tau);
      Step st;
      st.omega = seg.Omega(tau);
      st.cos_phi = std::cos(phi);
      st.sin_phi = std::sin(phi);
      st.h = seg.step;
      st.window = seg.noisy ? seg.window : 0;
      const double u = (seg.noise_offset + tau) / noise_dt;
      const double i = std::min(std::floor(u), last);
      st.index = static_cast<std::uint32_t>(std::max(i, 0.0));
      st.frac = std::clamp(u - double(st.index), 0.0, 1.0);
      steps_.push_back(st);
    }
  }
}

void Propagator::Run(const noise::NoiseTrace& noise, bool stop_at_readout,
                     Complex* pa, Complex* pb) const {
  const bool noisy = !noise.Empty();
  if (noisy) {
    if (std::abs(noise.dt - noise_dt_) > 1e-12 * noise_dt_ ||
        noise.samples1.size() < noise_samples_ ||
        noise.samples2.size() < noise_samples_)
      throw std::invalid_argument("noise grid does not match the schedule");
  }
  const double* s1 = noisy ? noise.samples1.data() : nullptr;
  const double* s2 = noisy ? noise.samples2.data() : nullptr;
  const double delta = schedule_.delta;
  const double delta2 = delta * delta;
  Complex a(1.0, 0.0), b(0.0, 0.0);
  std::size_t next_marker = 0;
  std::size_t since_norm = 0;
  auto apply_markers = [&](std::size_t pos) -> bool {
    while (next_marker < markers_.size() &&
           markers_[next_marker].before_step == pos) {
      const Marker& mk = markers_[next_marker++];
      if (mk.readout && stop_at_readout) return true;
      LeftMultiply(mk.a, mk.b, &a, &b);
    }
    return false;
  };
  bool stopped = false;
  for (std::size_t k = 0; k < steps_.size() && !stopped; ++k) {
    if (apply_markers(k)) {
      stopped = true;
      break;
    }
    const Step& st = steps_[k];
    double om = st.omega;
    if (noisy && st.window != 0) {
      const double* s = st.window == 1 ? s1 : s2;
      om += s[st.index] + st.frac * (s[st.index + 1] - s[st.index]);
    }
    const double mag = std::sqrt(om * om + delta2);
    double sn, cs;
    SinCosHalf(0.5 * mag * st.h, &sn, &cs);
    const double k_over = sn / mag;
    const double bx = om * st.cos_phi, by = om * st.sin_phi;
    LeftMultiply(Complex(cs, -k_over * delta), Complex(k_over * by, -k_over * bx),
                 &a, &b);
    if (++since_norm == 1000) {
      since_norm = 0;
      const double inv = 1.0 / std::sqrt(std::norm(a) + std::norm(b));
      a *= inv;
      b *= inv;
    }
  }
  if (!stopped) apply_markers(steps_.size());
  const double inv = 1.0 / std::sqrt(std::norm(a) + std::norm(b));
  a *= inv;
  b *= inv;
  if (!std::isfinite(a.real()) || !std::isfinite(a.imag()) ||
      !std::isfinite(b.real()) || !std::isfinite(b.imag()))
    throw NumericalError("non-finite propagator");
  *pa = a;
  *pb = b;
}

Unitary2 Propagator::Evolve(const noise::NoiseTrace& noise) const {
  Complex a, b;
  Run(noise, false, &a, &b);
  return Unitary2::FromCayleyKlein(a, b);
}

BlochState Propagator::EchoBloch(const noise::NoiseTrace& noise) const {
  Complex a, b;
  Run(noise, true, &a, &b);
  const Complex ab = std::conj(a) * b;
  return {2.0 * ab.real(), -2.0 * ab.imag(), -(std::norm(a) - std::norm(b))};
}

Unitary2 Propagate(const model::PulseSchedule& schedule,
                   const noise::NoiseTrace& noise) {
  const double grid = noise.Empty() ? std::max(schedule.dt, 1e-12) : noise.dt;
  return Propagator(schedule, grid).Evolve(noise);
}

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

Simulator::Simulator(const model::ProtocolSpec& spec,
                     const SimulationSettings& settings)
    : spec_(spec),
      settings_(settings),
      ou_(settings.OuFor(spec.geometry)),
      prop_(model::BuildSchedule(spec, settings.ramp, settings.dt,
                                 settings.ScheduleFor()),
            settings.noise_dt) {
  settings.Validate();
}

noise::NoiseTrace Simulator::Noise(std::uint64_t seed,
                                   std::uint32_t realization) const {
  if (ou_.sigma2 == 0.0) return {};
  return noise::PairedTraces(ou_, spec_.mode, schedule().noise_window,
                             settings_.noise_dt, seed, realization);
}

BlochState Simulator::Realization(std::uint64_t seed,
                                  std::uint32_t realization) const {
  return prop_.EchoBloch(Noise(seed, realization));
}

EnsembleResult Reduce(std::span<const BlochState> states,
                      std::size_t bootstrap, std::uint64_t seed) {
  const std::size_t n = states.size();
  if (n == 0) throw std::invalid_argument("empty ensemble");
  auto mean_of = [&](auto&& index_of) {
    double x = 0, y = 0, z = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const BlochState& s = states[index_of(i)];
      x += s.sx;
      y += s.sy;
      z += s.sz;
    }
    return BlochState{x / double(n), y / double(n), z / double(n)};
  };
  EnsembleResult r;
  r.n_realizations = n;
  r.mean_bloch = mean_of([](std::size_t i) { return i; });
  r.nu = r.mean_bloch.Norm();
  r.phase = std::atan2(r.mean_bloch.sy, r.mean_bloch.sx);
  if (bootstrap < 2 || n < 2) return r;
  std::vector<std::size_t> pick(n);
  double s_nu = 0, s_nu2 = 0, s_ph2 = 0;
  for (std::size_t rep = 0; rep < bootstrap; ++rep) {
    noise::NormalStream u({seed, static_cast<std::uint32_t>(rep),
                           noise::kStreamBootstrap});
    for (std::size_t i = 0; i < n; ++i)
      pick[i] = std::min(n - 1, static_cast<std::size_t>(u.NextUniform() * double(n)));
    const BlochState m = mean_of([&](std::size_t i) { return pick[i]; });
    const double nu = m.Norm();
    const double dph = WrapPhase(std::atan2(m.sy, m.sx) - r.phase);
    s_nu += nu;
    s_nu2 += nu * nu;
    s_ph2 += dph * dph;
  }
  const double B = double(bootstrap);
  const double mean_nu = s_nu / B;
  r.nu_se = std::sqrt(std::max(0.0, (s_nu2 - B * mean_nu * mean_nu) / (B - 1.0)));
  r.phase_se = std::sqrt(s_ph2 / (B - 1.0));
  return r;
}

EnsembleResult Simulator::Ensemble(std::size_t n_realizations,
                                   std::uint64_t base_seed) const {
  if (n_realizations < 2)
    throw ConfigError("an ensemble needs at least 2 realizations");
  if (n_realizations > 0xFFFFFFFFull)
    throw ConfigError("too many realizations for the stream layout");
  std::vector<BlochState> states(n_realizations);
  unsigned workers = settings_.workers == 0
                         ? std::max(1u, std::thread::hardware_concurrency())
                         : settings_.workers;
  workers = static_cast<unsigned>(
      std::min<std::size_t>(workers, n_realizations));
  auto job = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i)
      states[i] = Realization(base_seed, static_cast<std::uint32_t>(i));
  };
  if (workers <= 1) {
    job(0, n_realizations);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    const std::size_t chunk = (n_realizations + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t lo = w * chunk;
      const std::size_t hi = std::min(n_realizations, lo + chunk);
      pool.emplace_back([&, w, lo, hi] {
        try {
          job(lo, hi);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  return Reduce(states, settings_.bootstrap, base_seed);
}

BlochState RunRealization(const model::ProtocolSpec& spec,
                          const SimulationSettings& settings,
                          std::uint64_t seed, std::uint32_t realization) {
  return Simulator(spec, settings).Realization(seed, realization);
}

EnsembleResult RunEnsemble(const model::ProtocolSpec& spec,
                           const SimulationSettings& settings,
                           std::size_t n_realizations,
                           std::uint64_t base_seed) {
  return Simulator(spec, settings).Ensemble(n_realizations, base_seed);
}

std::vector<EnsembleResult> Sweep(std::span<const model::ProtocolSpec> specs,
                                  const SimulationSettings& settings,
                                  std::size_t n_realizations,
                                  std::uint64_t base_seed,
                                  bool common_random_numbers) {
  if (specs.empty()) throw ConfigError("sweep needs at least one spec");
  std::vector<EnsembleResult> out;
  out.reserve(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const std::uint64_t seed =
        common_random_numbers ? base_seed : SplitMix64(base_seed ^ (i + 1));
    out.push_back(RunEnsemble(specs[i], settings, n_realizations, seed));
  }
  return out;
}

}  // namespace geodephase::engine
