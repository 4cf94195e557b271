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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "analytic.hpp"
#include "catch_amalgamated.hpp"
#include "engine.hpp"
#include "model.hpp"
#include "noise.hpp"

namespace en = geodephase::engine;
namespace md = geodephase::model;
namespace an = geodephase::analytic;
using Catch::Approx;
using std::numbers::pi;

namespace {

constexpr double kDelta = -2.0 * pi * 35e6;

md::ProtocolSpec Spec(md::Protocol p, double A, int sign = 1,
                      geodephase::noise::CorrelationMode mode =
                          geodephase::noise::CorrelationMode::kFirstWindowOnly,
                      double T = 100e-9) {
  md::ProtocolSpec s;
  s.protocol = p;
  s.first_window_sign = sign;
  s.mode = mode;
  s.geometry = md::Geometry::FromSolidAngle(kDelta, A, 1, T);
  return s;
}

en::SimulationSettings Quiet() {
  en::SimulationSettings st;
  st.relative_amplitude = 0.0;
  return st;
}

double MaxDiff(const en::Unitary2& a, const en::Unitary2& b) {
  double m = 0.0;
  for (int i = 0; i < 4; ++i) m = std::max(m, std::abs(a.m[i] - b.m[i]));
  return m;
}

}  // namespace

TEST_CASE("empty schedule propagates to identity", "[engine]") {
  md::PulseSchedule sch;
  sch.dt = 0.05e-9;
  CHECK(MaxDiff(en::Propagate(sch, {}), en::Unitary2::Identity()) == 0.0);
}

TEST_CASE("static field is a closed-form rotation", "[engine]") {
  const double theta = 0.7, omega0 = std::abs(kDelta) * std::tan(theta);
  const double tau = 37.3e-9, gap = std::hypot(omega0, kDelta);
  md::PulseSchedule sch;
  sch.delta = kDelta;
  sch.dt = 0.05e-9;
  sch.gap = gap;
  md::Segment seg;
  seg.kind = md::SegmentKind::kHold;
  seg.duration = tau;
  seg.steps = 746;
  seg.step = tau / 746.0;
  seg.omega0 = omega0;
  sch.segments.push_back(seg);
  const en::Unitary2 u = en::Propagate(sch, {});
  const en::Unitary2 want =
      en::Unitary2::Rotation(omega0 / gap, 0.0, kDelta / gap, tau * gap);
  CHECK(MaxDiff(u, want) < 1e-10);
}

TEST_CASE("rotations compose and stay unitary", "[engine]") {
  const en::Unitary2 a = en::Unitary2::Rotation(0.0, 0.0, 1.0, 0.4);
  const en::Unitary2 b = en::Unitary2::Rotation(0.0, 0.0, 1.0, 1.1);
  CHECK(MaxDiff(a * b, en::Unitary2::Rotation(0.0, 0.0, 1.0, 1.5)) < 1e-14);
  CHECK(MaxDiff(a * a.Adjoint(), en::Unitary2::Identity()) < 1e-14);
  const en::Unitary2 x = en::Unitary2::Rotation(1.0, 0.0, 0.0, pi);
  const en::BlochState s = en::BlochOfGroundImage(x);
  CHECK(s.sz == Approx(-1.0));
}

TEST_CASE("noisy sequence propagator stays unitary", "[engine]") {
  en::SimulationSettings st;
  st.relative_amplitude = 0.01;
  const md::ProtocolSpec spec = Spec(md::Protocol::kR, 3 * pi / 4, 1,
                                     geodephase::noise::CorrelationMode::kUncorrelated);
  const en::Simulator sim(spec, st);
  const en::Unitary2 u = en::Propagate(sim.schedule(), sim.Noise(5, 0));
  CHECK(u.UnitarityError() < 1e-10);
  CHECK(std::abs(std::abs(u.Det()) - 1.0) < 1e-10);
  for (std::uint32_t r = 0; r < 20; ++r)
    CHECK(sim.Realization(5, r).Norm() == Approx(1.0).margin(1e-9));
}

// The midpoint rule is second order in dt; at 0.05 ns the Bloch vector
// moves by a few 1e-6 under halving.
TEST_CASE("step halving leaves noiseless runs unchanged", "[engine]") {
  for (md::Protocol p : {md::Protocol::kP, md::Protocol::kR}) {
    const md::ProtocolSpec spec = Spec(p, pi / 2);
    en::SimulationSettings fine = Quiet();
    fine.dt = 0.025e-9;
    const en::BlochState a = en::RunRealization(spec, Quiet(), 1);
    const en::BlochState b = en::RunRealization(spec, fine, 1);
    CHECK(std::abs(a.sx - b.sx) < 2e-5);
    CHECK(std::abs(a.sy - b.sy) < 2e-5);
    CHECK(std::abs(a.sz - b.sz) < 2e-5);
  }
}

TEST_CASE("noiseless static hold refocuses perfectly", "[engine]") {
  for (int k = 1; k <= 12; ++k) {
    const en::BlochState s = en::RunRealization(Spec(md::Protocol::kDP, k * pi / 16), Quiet(), 1);
    CHECK(s.Norm() == Approx(1.0).margin(1e-9));
    CHECK(std::abs(std::atan2(s.sy, s.sx)) < 1e-2);
  }
}

// The echo phase tends to the closed-form eigenstate phase as the sequence
// becomes adiabatic; at the default presets the residual is the
// non-adiabatic edge term.
TEST_CASE("noiseless echo phase converges to the adiabatic formula", "[engine]") {
  auto worst = [](double T, double s_target) {
    double w = 0.0;
    for (md::Protocol p : {md::Protocol::kP, md::Protocol::kR})
      for (int k = 1; k <= 12; k += 2) {
        const md::ProtocolSpec spec =
            Spec(p, k * pi / 16, 1, geodephase::noise::CorrelationMode::kFirstWindowOnly, T);
        en::SimulationSettings st = Quiet();
        st.ramp.s_target = s_target;
        st.ramp.max_duration = 1e-5;
        const en::BlochState b = en::RunRealization(spec, st, 1);
        w = std::max(w, std::abs(geodephase::WrapPhase(std::atan2(b.sy, b.sx) -
                                                       an::MeanEchoPhase(spec))));
      }
    return w;
  };
  const double coarse = worst(100e-9, 0.2);
  const double fine = worst(1600e-9, 0.05);
  CHECK(coarse < 0.1);
  CHECK(fine < 5e-3);
  CHECK(fine < coarse / 10.0);
}

TEST_CASE("zero noise gives unit coherence", "[engine]") {
  const en::EnsembleResult r = en::RunEnsemble(Spec(md::Protocol::kR, pi / 2), Quiet(), 50, 3);
  CHECK(r.nu == Approx(1.0).margin(1e-6));
  CHECK(r.n_realizations == 50);
}

TEST_CASE("orientation splits the first-window coherence around DP", "[engine]") {
  const en::SimulationSettings st;
  const std::size_t n = 1000;
  const auto plus = en::RunEnsemble(Spec(md::Protocol::kR, pi / 2, +1), st, n, 17);
  const auto minus = en::RunEnsemble(Spec(md::Protocol::kR, pi / 2, -1), st, n, 17);
  const auto dp = en::RunEnsemble(Spec(md::Protocol::kDP, pi / 2), st, n, 17);
  // Delta < 0 puts the n = +1 first window on the more coherent side.
  const auto pred = an::Predict(Spec(md::Protocol::kR, pi / 2, +1), en::Simulator(Spec(md::Protocol::kR, pi / 2, +1), st).ou(), md::Protocol::kR);
  REQUIRE(pred.geometric_term < 0.0);
  CHECK(plus.nu > dp.nu);
  CHECK(dp.nu > minus.nu);
}

TEST_CASE("paired orientations isolate the geometric term", "[engine]") {
  const en::SimulationSettings st;
  const std::size_t n = 1000;
  const md::ProtocolSpec pp = Spec(md::Protocol::kP, pi / 2, +1);
  const md::ProtocolSpec mm = Spec(md::Protocol::kP, pi / 2, -1);
  const en::Simulator sp(pp, st), sm(mm, st);
  std::vector<double> diff;
  std::vector<en::BlochState> a, b;
  for (std::uint32_t r = 0; r < n; ++r) {
    a.push_back(sp.Realization(29, r));
    b.push_back(sm.Realization(29, r));
  }
  const auto ra = en::Reduce(a, 0, 1), rb = en::Reduce(b, 0, 1);
  const double measured = std::log(ra.nu) - std::log(rb.nu);
  // Paired jackknife error of the log-ratio.
  double jk = 0.0, jk2 = 0.0;
  const std::size_t blocks = 20, per = n / blocks;
  for (std::size_t k = 0; k < blocks; ++k) {
    std::vector<en::BlochState> xa, xb;
    for (std::size_t i = 0; i < n; ++i)
      if (i / per != k) {
        xa.push_back(a[i]);
        xb.push_back(b[i]);
      }
    const double v = std::log(en::Reduce(xa, 0, 1).nu) - std::log(en::Reduce(xb, 0, 1).nu);
    jk += v;
    jk2 += v * v;
  }
  const double jm = jk / blocks;
  const double se = std::sqrt((blocks - 1.0) / blocks * (jk2 - blocks * jm * jm));
  const auto pred = an::Predict(pp, sp.ou(), md::Protocol::kP);
  const double want = -2.0 * pred.geometric_term;
  INFO("measured " << measured << " predicted " << want << " se " << se);
  CHECK(measured * want > 0.0);
  // The linear model misses the finite-s corrections, so the gate is the
  // larger of 3 s.e. and 15% of the prediction.
  CHECK(std::abs(measured - want) < std::max(3.0 * se, 0.15 * std::abs(want)));
}

TEST_CASE("ensembles are deterministic and worker independent", "[engine]") {
  en::SimulationSettings one, two;
  two.workers = 2;
  const md::ProtocolSpec spec = Spec(md::Protocol::kR, pi / 2, 1,
                                     geodephase::noise::CorrelationMode::kUncorrelated);
  const auto a = en::RunEnsemble(spec, one, 64, 8);
  const auto b = en::RunEnsemble(spec, two, 64, 8);
  const auto c = en::RunEnsemble(spec, one, 64, 8);
  CHECK(a.nu == b.nu);
  CHECK(a.phase == b.phase);
  CHECK(a.nu_se == b.nu_se);
  CHECK(a.nu == c.nu);
  CHECK(a.nu <= 1.0 + 3.0 * a.nu_se);
  CHECK(a.phase == Approx(std::atan2(a.mean_bloch.sy, a.mean_bloch.sx)));
}

TEST_CASE("sweep returns one result per spec", "[engine]") {
  std::vector<md::ProtocolSpec> specs;
  for (int k = 1; k <= 12; ++k)
    for (auto [p, s] : {std::pair{md::Protocol::kP, 1}, {md::Protocol::kDP, 1}, {md::Protocol::kP, -1}})
      specs.push_back(Spec(p, k * pi / 16, s));
  const auto res = en::Sweep(specs, Quiet(), 4, 1);
  REQUIRE(res.size() == 36);
  for (const auto& r : res) CHECK(r.nu == Approx(1.0).margin(1e-6));
}

TEST_CASE("noise on a mismatched grid is rejected", "[engine]") {
  const md::ProtocolSpec spec = Spec(md::Protocol::kR, pi / 2);
  const en::Simulator sim(spec, en::SimulationSettings{});
  geodephase::noise::NoiseTrace tr = sim.Noise(1, 0);
  tr.samples1.resize(10);
  CHECK_THROWS_AS(en::Propagate(sim.schedule(), tr), std::invalid_argument);
  en::SimulationSettings bad;
  bad.relative_amplitude = -1.0;
  CHECK_THROWS_AS(en::Simulator(spec, bad), geodephase::ConfigError);
}

TEST_CASE("ramp noise adds bounded dynamic dephasing", "[engine]") {
  const md::ProtocolSpec spec = Spec(md::Protocol::kDP, pi / 2);
  en::SimulationSettings off;
  en::SimulationSettings on = off;
  on.ramp_noise = true;
  const en::Simulator s_off(spec, off), s_on(spec, on);
  const double T = spec.geometry.duration;
  const double covered = s_on.schedule().noise_window;
  REQUIRE(s_off.schedule().noise_window == Approx(T));
  REQUIRE(covered > T);
  const double ln_off = -std::log(s_off.Ensemble(2000, 11).nu);
  const double ln_on = -std::log(s_on.Ensemble(2000, 11).nu);
  CHECK(ln_on > ln_off);
  // Ramps see the same noise through a smaller transverse lever arm, so the
  // exponent grows by less than D over the lengthened window.
  const auto ou = off.OuFor(spec.geometry);
  const double bound = geodephase::noise::IntegratedCorrelatorOu(ou.sigma2, ou.gamma, covered) /
                       geodephase::noise::IntegratedCorrelatorOu(ou.sigma2, ou.gamma, T);
  INFO("exponent ratio " << ln_on / ln_off << " bound " << bound);
  CHECK(ln_on / ln_off < bound);
}
