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

#include "analytic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

#include "common.hpp"

namespace geodephase::analytic {
namespace {

using model::Geometry;
using model::Protocol;
using noise::CorrelationMode;

// 5-point Gauss-Legendre nodes and weights on [-1, 1].
constexpr std::array<double, 5> kGlX = {-0.9061798459386640, -0.5384693101056831,
                                        0.0, 0.5384693101056831,
                                        0.9061798459386640};
constexpr std::array<double, 5> kGlW = {0.2369268850561891, 0.4786286704993665,
                                        0.5688888888888889, 0.4786286704993665,
                                        0.2369268850561891};

struct GridReader {
  std::span<const double> s;
  double dt;
  double Value(double u) const {
    if (s.size() == 1) return s[0];
    const double span = dt * double(s.size() - 1);
    const double x = std::clamp(u, 0.0, span) / dt;
    std::size_t i = static_cast<std::size_t>(x);
    if (i >= s.size() - 1) i = s.size() - 2;
    const double f = x - double(i);
    return s[i] + f * (s[i + 1] - s[i]);
  }
};

void CheckCoverage(std::span<const double> noise, double noise_dt,
                   double offset, double T) {
  if (!(noise_dt > 0.0)) throw std::invalid_argument("noise step must be > 0");
  const double span = noise_dt * double(noise.size() - 1);
  if (offset < 0.0 || offset + T > span + 1e-9 * noise_dt)
    throw std::out_of_range("noise samples do not cover the window");
}

// Composite 30-point Gauss-Legendre. The OU integrands are smooth
// exponentials, so panels of a few correlation times are exact to rounding;
// a fixed rule also keeps nested integrals free of adaptive jitter.
template <class F>
double Quad(F f, double a, double b, double rate) {
  if (b <= a) return 0.0;
  const int panels = 1 + static_cast<int>(std::min(64.0, rate * (b - a) / 4.0));
  const double h = (b - a) / panels;
  double acc = 0.0;
  for (int i = 0; i < panels; ++i)
    acc += boost::math::quadrature::gauss<double, 30>::integrate(f, a + i * h,
                                                                 a + (i + 1) * h);
  return acc;
}

}  // namespace

double PhaseIntegral(const Geometry& g, std::span<const double> noise,
                     double noise_dt, int n_sign, double offset) {
  g.Validate();
  const double T = g.duration;
  const double dz = g.delta - Sign(n_sign) * g.omega_b;
  if (noise.empty()) return T * std::hypot(dz, g.omega0);
  CheckCoverage(noise, noise_dt, offset, T);
  const GridReader rd{noise, noise_dt};
  // Reject gap closing anywhere on the nodes inside the window.
  const std::size_t first = static_cast<std::size_t>(std::floor(offset / noise_dt));
  const std::size_t last = std::min(
      noise.size() - 1,
      static_cast<std::size_t>(std::ceil((offset + T) / noise_dt)));
  for (std::size_t k = first; k <= last; ++k)
    if (!(g.omega0 + noise[k] > 0.0))
      throw std::domain_error("noise closes the transverse field");
  double acc = 0.0;
  double a = 0.0;
  while (a < T) {
    // Next grid node strictly after a (window-local time).
    const double u = offset + a;
    double node = (std::floor(u / noise_dt + 1e-12) + 1.0) * noise_dt - offset;
    const double b = std::min(T, node);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int q = 0; q < 5; ++q) {
      const double t = mid + half * kGlX[q];
      acc += kGlW[q] * half * std::hypot(dz, g.omega0 + rd.Value(offset + t));
    }
    a = b;
  }
  return acc;
}

double PhaseIntegral(const Geometry& g, int n_sign) {
  return PhaseIntegral(g, std::span<const double>{}, 1.0, n_sign);
}

double PhaseIntegral(const Geometry& g, const noise::NoiseTrace& trace,
                     int window, int n_sign, double offset) {
  if (trace.Empty()) return PhaseIntegral(g, n_sign);
  if (window != 1 && window != 2)
    throw std::invalid_argument("window must be 1 or 2");
  return PhaseIntegral(g, window == 1 ? trace.samples1 : trace.samples2,
                       trace.dt, n_sign, offset);
}

ExpansionTerms ExpandPhase(const Geometry& g, int n_sign) {
  g.Validate();
  ExpansionTerms e;
  e.gap = g.Gap();
  const double c = std::cos(g.theta), s = std::sin(g.theta);
  e.orientation = Sign(n_sign) * Sign(g.delta);
  const double w = n_sign == 0 ? 0.0 : g.omega_b;
  e.geometric = -e.orientation * w * c;
  e.noise_coefficient = s;
  // Mixed derivative d2/(dW domega) of the integrand at the origin.
  e.cross_coefficient = e.orientation * w * c * s / e.gap;
  e.omega_ratio = w / e.gap;
  if (e.omega_ratio > 0.3) {
    e.adiabatic_regime = false;
    e.warnings.push_back("omega_b is not small against the gap");
  }
  if (g.theta == 0.0) e.warnings.push_back("zero cone angle decouples noise");
  return e;
}

double LinearizedPhase(const Geometry& g, std::span<const double> noise,
                       double noise_dt, int n_sign, double offset) {
  const ExpansionTerms e = ExpandPhase(g, n_sign);
  const double T = g.duration;
  double linear = T * (e.gap + e.geometric);
  if (!noise.empty()) {
    CheckCoverage(noise, noise_dt, offset, T);
    const double area = noise::TraceIntegral(noise, noise_dt, offset + T) -
                        noise::TraceIntegral(noise, noise_dt, offset);
    linear += e.Kappa() * area;
  }
  return linear;
}

GeometryFactors AbcGeometryFactors(double theta, double delta, double omega0) {
  if (delta == 0.0) throw std::invalid_argument("detuning must be nonzero");
  if (std::abs(theta - std::atan2(omega0, std::abs(delta))) > 1e-9)
    throw std::invalid_argument("theta inconsistent with omega0 and delta");
  const double g = std::hypot(delta, omega0);
  const double c = std::cos(theta), s = std::sin(theta);
  return {s * s, 2.0 * c * s * s / g, (c * s) * (c * s) / (g * g)};
}

DephasingFactors ProtocolFactors(Protocol protocol, CorrelationMode mode) {
  if (protocol == Protocol::kDP)
    throw std::invalid_argument("decoherence factors are defined for P and R");
  DephasingFactors f;
  f.protocol = protocol;
  f.mode = mode;
  const bool r = protocol == Protocol::kR;
  switch (mode) {
    case CorrelationMode::kCorrelated:
      f.a = 0; f.b = 0; f.c = r ? 4 : 0;
      break;
    case CorrelationMode::kAnticorrelated:
      f.a = 4; f.b = r ? 0 : 4; f.c = r ? 0 : 4;
      break;
    case CorrelationMode::kUncorrelated:
      f.a = 2; f.b = r ? 0 : 2; f.c = 2;
      break;
    case CorrelationMode::kFirstWindowOnly:
      f.a = 1; f.b = 1; f.c = 1;
      break;
  }
  return f;
}

WindowCovariance WindowIntegralCovariance(CorrelationMode mode,
                                          const noise::OUParams& ou, double T,
                                          UncorrelatedModel uncorrelated) {
  ou.Validate();
  if (!(T >= 0.0) || !std::isfinite(T))
    throw std::invalid_argument("window duration must be finite");
  const double s2 = ou.sigma2, g = ou.gamma;
  WindowCovariance cov;
  if (s2 == 0.0 || T == 0.0) return cov;
  // Inner integrals split at the covariance kink t2 = t1.
  auto inner = [&](double t1) {
    return Quad([&](double t2) { return std::exp(-g * (t1 - t2)); }, 0.0, t1, g) +
           Quad([&](double t2) { return std::exp(-g * (t2 - t1)); }, t1, T, g);
  };
  cov.v11 = s2 * Quad(inner, 0.0, T, g);
  double cross = 0.0;
  if (mode == CorrelationMode::kUncorrelated &&
      uncorrelated == UncorrelatedModel::kFreeRunning) {
    // Window 2 sees the same process shifted by T, so |t1 - t2 - T| = T + t2 - t1.
    cross = s2 * Quad([&](double t1) {
              return Quad([&](double t2) { return std::exp(-g * (T + t2 - t1)); },
                          0.0, T, g);
            }, 0.0, T, g);
  }
  switch (mode) {
    case CorrelationMode::kCorrelated:
      cov.v22 = cov.v11; cov.v12 = cov.v11;
      break;
    case CorrelationMode::kAnticorrelated:
      cov.v22 = cov.v11; cov.v12 = -cov.v11;
      break;
    case CorrelationMode::kUncorrelated:
      cov.v22 = cov.v11; cov.v12 = cross;
      break;
    case CorrelationMode::kFirstWindowOnly:
      break;
  }
  return cov;
}

double VarianceOracle(Protocol protocol, CorrelationMode mode,
                      const Geometry& geometry, const noise::OUParams& ou,
                      int first_window_sign, UncorrelatedModel uncorrelated) {
  model::ProtocolSpec spec;
  spec.protocol = protocol;
  spec.first_window_sign = first_window_sign;
  spec.mode = mode;
  spec.geometry = geometry;
  spec.Validate();
  const double k1 = ExpandPhase(geometry, Sign(spec.WindowLoops(1))).Kappa();
  const double k2 = ExpandPhase(geometry, Sign(spec.WindowLoops(2))).Kappa();
  const WindowCovariance c =
      WindowIntegralCovariance(mode, ou, geometry.duration, uncorrelated);
  return k1 * k1 * c.v11 + k2 * k2 * c.v22 - 2.0 * k1 * k2 * c.v12;
}

DephasingPrediction SuppressionFactor(const GeometryFactors& f,
                                      const DephasingFactors& abc, double d_t,
                                      double omega_b, int orientation) {
  if (!(d_t >= 0.0)) throw std::invalid_argument("D(T) must be >= 0");
  DephasingPrediction p;
  p.cal_a = abc.a * f.cal_a;
  p.cal_b = abc.b * f.cal_b;
  p.cal_c = abc.c * f.cal_c;
  p.d_t = d_t;
  p.omega_b = omega_b;
  p.orientation = orientation;
  p.dynamic_term = d_t * p.cal_a;
  p.geometric_term = d_t * orientation * p.cal_b * omega_b;
  p.nonadiabatic_term = d_t * p.cal_c * omega_b * omega_b;
  p.nu = std::exp(-(p.dynamic_term + p.geometric_term + p.nonadiabatic_term));
  return p;
}

double MeanEchoPhase(const model::ProtocolSpec& spec) {
  if (spec.protocol == Protocol::kDP) return 0.0;
  const Geometry& g = spec.geometry;
  const double g1 = PhaseIntegral(g, Sign(spec.WindowLoops(1)));
  const double g2 = PhaseIntegral(g, Sign(spec.WindowLoops(2)));
  return WrapPhase(Sign(g.delta) * (g1 - g2));
}

DephasingPrediction Predict(const model::ProtocolSpec& spec,
                            const noise::OUParams& ou,
                            Protocol cell_protocol) {
  spec.Validate();
  if (spec.protocol != Protocol::kDP && spec.protocol != cell_protocol)
    throw std::invalid_argument("cell protocol differs from the curve protocol");
  const Geometry& g = spec.geometry;
  const GeometryFactors f = AbcGeometryFactors(g.theta, g.delta, g.omega0);
  const DephasingFactors abc = ProtocolFactors(cell_protocol, spec.mode);
  const double d = noise::IntegratedCorrelatorOu(ou.sigma2, ou.gamma, g.duration);
  const bool dp = spec.protocol == Protocol::kDP;
  const int orient = dp ? 1 : Sign(spec.WindowLoops(1)) * Sign(g.delta);
  DephasingPrediction p =
      SuppressionFactor(f, abc, d, dp ? 0.0 : g.omega_b, orient);
  p.gamma_mean = MeanEchoPhase(spec);
  return p;
}

RegimeLimits ComputeRegimeLimits(const noise::OUParams& ou,
                                 const Geometry& geometry, int n_loops,
                                 const DephasingFactors& abc) {
  ou.Validate();
  if (n_loops == 0) throw std::invalid_argument("loop count must be nonzero");
  const Geometry g = Geometry::FromTheta(geometry.delta, geometry.theta,
                                         n_loops, geometry.duration);
  const GeometryFactors f = AbcGeometryFactors(g.theta, g.delta, g.omega0);
  const double A = abc.a * f.cal_a, B = abc.b * f.cal_b, C = abc.c * f.cal_c;
  const double w = g.omega_b;
  const double an = std::abs(n_loops);
  const double sn = Sign(n_loops) * Sign(g.delta) * an;  // oriented |n|
  RegimeLimits r;
  r.gamma_t = ou.gamma * g.duration;
  auto finish = [](RegimeTerms t) {
    t.dynamic *= t.prefactor;
    t.geometric *= t.prefactor;
    t.nonadiabatic *= t.prefactor;
    t.nu = std::exp(-(t.dynamic + t.geometric + t.nonadiabatic));
    return t;
  };
  // D ~ sigma^2 T / gamma with T = 2 pi |n| / omega_b.
  r.short_correlation = finish({kTwoPi * ou.sigma2 / ou.gamma, A * an / w,
                                B * sn, C * w * an, 1.0});
  // D ~ sigma^2 T^2 / 2.
  r.long_correlation = finish({0.5 * kTwoPi * kTwoPi * ou.sigma2,
                               A * an * an / (w * w), B * an * sn / w,
                               C * an * an, 1.0});
  const double d = noise::IntegratedCorrelatorOu(ou.sigma2, ou.gamma, g.duration);
  if (ou.sigma2 > 0.0) {
    r.short_ratio = d / (ou.sigma2 * g.duration / ou.gamma);
    r.long_ratio = d / (0.5 * ou.sigma2 * g.duration * g.duration);
  }
  return r;
}

}  // namespace geodephase::analytic
