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

#include "noise.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "common.hpp"
#include "textio.hpp"

namespace geodephase::noise {

std::string_view ToString(CorrelationMode mode) {
  switch (mode) {
    case CorrelationMode::kCorrelated: return "correlated";
    case CorrelationMode::kAnticorrelated: return "anticorrelated";
    case CorrelationMode::kUncorrelated: return "uncorrelated";
    case CorrelationMode::kFirstWindowOnly: return "first_window";
  }
  return "unknown";
}

CorrelationMode ParseCorrelationMode(std::string_view text) {
  if (text == "correlated") return CorrelationMode::kCorrelated;
  if (text == "anticorrelated") return CorrelationMode::kAnticorrelated;
  if (text == "uncorrelated") return CorrelationMode::kUncorrelated;
  if (text == "first_window") return CorrelationMode::kFirstWindowOnly;
  throw ConfigError("unknown correlation mode '" + std::string(text) + "'");
}

OUParams OUParams::FromRelative(double relative_amplitude, double omega0,
                                double gamma) {
  OUParams p;
  p.sigma2 = relative_amplitude * omega0 * omega0;
  p.gamma = gamma;
  p.relative_amplitude = relative_amplitude;
  p.Validate();
  return p;
}

void OUParams::Validate() const {
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2))
    throw ConfigError("OU variance must be finite and non-negative");
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw ConfigError("OU rate gamma must be finite and positive");
  if (relative_amplitude && !(*relative_amplitude >= 0.0))
    throw ConfigError("relative noise amplitude must be non-negative");
}

std::size_t GridSamples(double duration, double dt) {
  if (!(dt > 0.0)) throw ConfigError("noise grid step must be positive");
  if (!(duration >= 0.0)) throw ConfigError("noise duration must be >= 0");
  // Tolerate representation error in duration/dt before rounding up.
  const double intervals = std::ceil(duration / dt - 1e-9);
  return static_cast<std::size_t>(std::max(intervals, 0.0)) + 1;
}

std::vector<double> SampleOu(const OUParams& params, std::size_t n_samples,
                             double dt, const StreamId& stream) {
  params.Validate();
  if (!(dt > 0.0)) throw ConfigError("noise grid step must be positive");
  std::vector<double> x(n_samples, 0.0);
  if (n_samples == 0 || params.sigma2 == 0.0) return x;
  const double sigma = std::sqrt(params.sigma2);
  const double rho = std::exp(-params.gamma * dt);
  // 1 - rho^2 without cancellation at small gamma*dt.
  const double innov = sigma * std::sqrt(-std::expm1(-2.0 * params.gamma * dt));
  NormalStream normals(stream);
  x[0] = sigma * normals.Next();
  for (std::size_t k = 1; k < n_samples; ++k)
    x[k] = rho * x[k - 1] + innov * normals.Next();
  return x;
}

std::vector<double> SampleOu(const OUParams& params, double duration,
                             double dt, std::uint64_t seed) {
  if (!(duration >= dt)) throw ConfigError("OU duration must be >= dt");
  return SampleOu(params, GridSamples(duration, dt), dt,
                  StreamId{seed, 0, kStreamWindow1});
}

double NoiseTrace::Covered() const {
  return samples1.size() < 2 ? 0.0 : dt * double(samples1.size() - 1);
}

double NoiseTrace::Value(int window, double t) const {
  if (Empty()) return 0.0;
  if (window != 1 && window != 2)
    throw std::out_of_range("noise window must be 1 or 2");
  const std::vector<double>& s = window == 1 ? samples1 : samples2;
  const double span = Covered();
  const double slack = 1e-9 * dt;
  if (t < -slack || t > span + slack)
    throw std::out_of_range("time outside the noise grid");
  if (s.size() == 1) return s[0];
  const double u = std::clamp(t, 0.0, span) / dt;
  std::size_t i = static_cast<std::size_t>(u);
  if (i >= s.size() - 1) i = s.size() - 2;
  const double f = u - double(i);
  return s[i] + f * (s[i + 1] - s[i]);
}

NoiseTrace PairedTraces(const OUParams& params, CorrelationMode mode,
                        double window_duration, double dt, std::uint64_t seed,
                        std::uint32_t realization) {
  NoiseTrace tr;
  tr.dt = dt;
  tr.seed = seed;
  tr.mode = mode;
  const std::size_t n = GridSamples(window_duration, dt);
  tr.samples1 = SampleOu(params, n, dt, {seed, realization, kStreamWindow1});
  switch (mode) {
    case CorrelationMode::kCorrelated:
      tr.samples2 = tr.samples1;
      break;
    case CorrelationMode::kAnticorrelated:
      tr.samples2.resize(n);
      for (std::size_t k = 0; k < n; ++k) tr.samples2[k] = -tr.samples1[k];
      break;
    case CorrelationMode::kUncorrelated:
      tr.samples2 =
          SampleOu(params, n, dt, {seed, realization, kStreamWindow2});
      break;
    case CorrelationMode::kFirstWindowOnly:
      tr.samples2.assign(n, 0.0);
      break;
  }
  return tr;
}

double CorrelatorShape(double x) {
  if (x < 0.0) throw std::domain_error("correlator argument must be >= 0");
  if (x < 1e-3) {
    // x^2/2 - x^3/6 + x^4/24 - x^5/120
    return x * x * (0.5 - x * (1.0 / 6.0 - x * (1.0 / 24.0 - x / 120.0)));
  }
  return x + std::expm1(-x);
}

double IntegratedCorrelatorOu(double sigma2, double gamma, double T) {
  if (!(T >= 0.0)) throw std::domain_error("correlator window must be >= 0");
  if (!(gamma > 0.0)) throw std::domain_error("gamma must be positive");
  return sigma2 * CorrelatorShape(gamma * T) / (gamma * gamma);
}

double TraceIntegral(std::span<const double> s, double dt, double T) {
  if (s.empty() || T <= 0.0) return 0.0;
  const double span = dt * double(s.size() - 1);
  if (T > span * (1.0 + 1e-12) + 1e-9 * dt)
    throw std::out_of_range("integration window exceeds the trace");
  const double u = std::min(T, span) / dt;
  std::size_t full = static_cast<std::size_t>(u);
  if (full >= s.size() - 1) full = s.size() - 1;
  double acc = 0.0;
  for (std::size_t k = 0; k < full; ++k) acc += 0.5 * (s[k] + s[k + 1]);
  acc *= dt;
  const double f = u - double(full);
  if (f > 0.0 && full + 1 < s.size()) {
    const double end = s[full] + f * (s[full + 1] - s[full]);
    acc += 0.5 * (s[full] + end) * f * dt;
  }
  return acc;
}

Estimate EmpiricalCorrelator(std::span<const NoiseTrace> traces, double T,
                             WindowCombination combination) {
  if (traces.size() < 2)
    throw std::invalid_argument("empirical correlator needs >= 2 traces");
  const double dt = traces.front().dt;
  double sum = 0.0, sum2 = 0.0;
  for (const NoiseTrace& tr : traces) {
    if (tr.dt != dt) throw std::invalid_argument("traces on different grids");
    double integral = TraceIntegral(tr.samples1, dt, T);
    if (combination == WindowCombination::kEchoSigned)
      integral -= TraceIntegral(tr.samples2, dt, T);
    const double v = 0.5 * integral * integral;
    sum += v;
    sum2 += v * v;
  }
  const double n = double(traces.size());
  const double mean = sum / n;
  const double var = std::max(0.0, (sum2 - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n)};
}

std::string TraceToCsv(const NoiseTrace& trace) {
  std::ostringstream out;
  out << "t_ns,d_omega1_rad_s,d_omega2_rad_s\n";
  for (std::size_t k = 0; k < trace.samples1.size(); ++k) {
    out << textio::Num(double(k) * trace.dt * 1e9) << ','
        << textio::Num(trace.samples1[k]) << ','
        << textio::Num(k < trace.samples2.size() ? trace.samples2[k] : 0.0)
        << '\n';
  }
  return out.str();
}

}  // namespace geodephase::noise
