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

#ifndef GEODEPHASE_CORE_ANALYTIC_HPP_
#define GEODEPHASE_CORE_ANALYTIC_HPP_

#include <span>
#include <string>
#include <vector>

#include "model.hpp"
#include "noise.hpp"

namespace geodephase::analytic {

// Decoherence multipliers of the dynamic, geometric and non-adiabatic terms.
struct DephasingFactors {
  double a = 1.0;
  double b = 1.0;
  double c = 1.0;
  model::Protocol protocol = model::Protocol::kR;
  noise::CorrelationMode mode = noise::CorrelationMode::kFirstWindowOnly;
};

// Single-window factors at a = b = c = 1:
//   A = sin^2 th,  B = 2 cos th sin^2 th / G,  C = (cos th sin th)^2 / G^2.
struct GeometryFactors {
  double cal_a = 0.0;  // 1
  double cal_b = 0.0;  // s
  double cal_c = 0.0;  // s^2
};

struct DephasingPrediction {
  double cal_a = 0.0;  // scaled by a
  double cal_b = 0.0;  // scaled by b
  double cal_c = 0.0;  // scaled by c
  double d_t = 0.0;    // integrated correlator D(T)
  double omega_b = 0.0;
  int orientation = 1;
  double dynamic_term = 0.0;       // D a A
  double geometric_term = 0.0;     // D sgn b B omega_b
  double nonadiabatic_term = 0.0;  // D c C omega_b^2
  double nu = 1.0;
  double gamma_mean = 0.0;  // noiseless reported phase, rad
};

// Coefficients of the first-order expansion of the window phase in dW and
// omega_b. Signs follow the derivative of the exact integrand, so the
// orientation enters as sgn(n) sgn(delta).
struct ExpansionTerms {
  double gap = 0.0;                // sqrt(delta^2 + omega0^2)
  double geometric = 0.0;          // -sigma omega_b cos th
  double noise_coefficient = 0.0;  // sin th
  double cross_coefficient = 0.0;  // sigma omega_b cos th sin th / G
  int orientation = 1;             // sigma
  double omega_ratio = 0.0;        // omega_b / G
  bool adiabatic_regime = true;
  std::vector<std::string> warnings;

  // Linear-in-dW coefficient kappa = noise + cross.
  double Kappa() const { return noise_coefficient + cross_coefficient; }
};

// int sqrt((delta - sgn(n) omega_b)^2 + (omega0 + dW(t))^2) dt over one
// window [0, T]. Noise samples start at window-local time 'offset' and are
// linearly interpolated; an empty span is the noiseless case.
double PhaseIntegral(const model::Geometry& geometry,
                     std::span<const double> noise, double noise_dt,
                     int n_sign, double offset = 0.0);
double PhaseIntegral(const model::Geometry& geometry, int n_sign);
double PhaseIntegral(const model::Geometry& geometry,
                     const noise::NoiseTrace& trace, int window, int n_sign,
                     double offset = 0.0);

// First-order phase for the same inputs: T (G + geometric) + kappa int dW.
double LinearizedPhase(const model::Geometry& geometry,
                       std::span<const double> noise, double noise_dt,
                       int n_sign, double offset = 0.0);

ExpansionTerms ExpandPhase(const model::Geometry& geometry, int n_sign);

GeometryFactors AbcGeometryFactors(double theta, double delta, double omega0);

// Theory cell for protocol P or R.
DephasingFactors ProtocolFactors(model::Protocol protocol,
                                 noise::CorrelationMode mode);

// How window 2 is correlated with window 1 for the uncorrelated mode.
enum class UncorrelatedModel {
  kIndependent,  // separate stream, zero cross-covariance
  kFreeRunning,  // one process sampled at t and t + T
};

struct WindowCovariance {
  double v11 = 0.0;  // var int dW1
  double v22 = 0.0;
  double v12 = 0.0;  // cov(int dW1, int dW2)
};

// Exact double integrals of the OU covariance for the given mode.
WindowCovariance WindowIntegralCovariance(
    noise::CorrelationMode mode, const noise::OUParams& ou, double T,
    UncorrelatedModel uncorrelated = UncorrelatedModel::kIndependent);

// Var of the echo phase gamma_1 - gamma_2 in the linear model. The first
// window follows spec.first_window_sign and the protocol fixes window 2.
double VarianceOracle(model::Protocol protocol, noise::CorrelationMode mode,
                      const model::Geometry& geometry,
                      const noise::OUParams& ou, int first_window_sign = 1,
                      UncorrelatedModel uncorrelated =
                          UncorrelatedModel::kIndependent);

// nu = exp(-D (aA + sigma bB omega + cC omega^2)) and its decomposition.
DephasingPrediction SuppressionFactor(const GeometryFactors& factors,
                                      const DephasingFactors& abc, double d_t,
                                      double omega_b, int orientation);

// Full prediction for one curve: DP curves keep only the dynamic term.
// cell_protocol selects the theory cell (P or R) that a DP curve belongs to;
// for P and R specs it must equal spec.protocol.
DephasingPrediction Predict(const model::ProtocolSpec& spec,
                            const noise::OUParams& ou,
                            model::Protocol cell_protocol);

// Noiseless reported echo phase sgn(delta) (gamma_1 - gamma_2).
double MeanEchoPhase(const model::ProtocolSpec& spec);

struct RegimeTerms {
  double prefactor = 0.0;  // common factor of the three terms
  double dynamic = 0.0;
  double geometric = 0.0;
  double nonadiabatic = 0.0;
  double nu = 1.0;
};

// Asymptotic exponents for gamma T >> 1 and gamma T << 1. The short form
// uses D ~ sigma^2 T / gamma, the long form D ~ sigma^2 T^2 / 2.
struct RegimeLimits {
  RegimeTerms short_correlation;
  RegimeTerms long_correlation;
  double gamma_t = 0.0;
  double short_ratio = 0.0;  // D / (sigma^2 T / gamma)
  double long_ratio = 0.0;   // D / (sigma^2 T^2 / 2)
};

RegimeLimits ComputeRegimeLimits(const noise::OUParams& ou,
                                 const model::Geometry& geometry, int n_loops,
                                 const DephasingFactors& abc = {});

}  // namespace geodephase::analytic

#endif  // GEODEPHASE_CORE_ANALYTIC_HPP_
