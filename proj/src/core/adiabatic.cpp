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

#include "adiabatic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "textio.hpp"

namespace geodephase::adiabatic {
namespace {

struct Unit {
  double x, y, z;
};

Unit Direction(const model::FieldVector& b) {
  const double m = b.Magnitude();
  if (!(m > 0.0)) throw std::domain_error("field vanishes");
  return {b.bx / m, b.by / m, b.bz / m};
}

// Field at segment-local tau, evaluated directly so that one-sided
// differences never cross into the neighbouring segment.
model::FieldVector LocalField(const model::PulseSchedule& sch,
                              const model::Segment& seg,
                              const noise::NoiseTrace& noise, double tau) {
  double omega = seg.Omega(tau);
  if (seg.noisy) omega += noise.Value(seg.window, seg.noise_offset + tau);
  const double phi = seg.Phi(tau);
  return {omega * std::cos(phi), omega * std::sin(phi), sch.delta};
}

double SegmentS(const model::PulseSchedule& sch, const model::Segment& seg,
                const noise::NoiseTrace& noise, double tau) {
  if (!(sch.gap > 0.0)) throw std::invalid_argument("schedule gap not set");
  const double h = 0.5 * std::min(sch.dt, seg.step);
  double lo = tau - h, hi = tau + h;
  if (lo < 0.0) { lo = 0.0; hi = std::min(seg.duration, 2.0 * h); }
  if (hi > seg.duration) { hi = seg.duration; lo = std::max(0.0, seg.duration - 2.0 * h); }
  if (!(hi > lo)) return 0.0;
  const Unit a = Direction(LocalField(sch, seg, noise, lo));
  const Unit b = Direction(LocalField(sch, seg, noise, hi));
  const double rate =
      std::sqrt((b.x - a.x) * (b.x - a.x) + (b.y - a.y) * (b.y - a.y) +
                (b.z - a.z) * (b.z - a.z)) / (hi - lo);
  return rate / sch.gap;
}

}  // namespace

double Adiabaticity(const model::PulseSchedule& schedule,
                    const noise::NoiseTrace& noise, double t) {
  const int idx = schedule.SegmentAt(t);
  if (idx < 0) throw std::out_of_range("time outside the schedule");
  const model::Segment& seg = schedule.segments[static_cast<std::size_t>(idx)];
  return SegmentS(schedule, seg, noise, std::clamp(t - seg.start, 0.0, seg.duration));
}

double PlateauAdiabaticity(const model::Geometry& g) {
  return g.omega_b * std::sin(g.theta) / g.Gap();
}

std::vector<AdiabaticitySample> AdiabaticityTrace(
    const model::PulseSchedule& schedule, const noise::NoiseTrace& noise,
    std::size_t stride) {
  if (stride == 0) throw std::invalid_argument("stride must be positive");
  std::vector<AdiabaticitySample> out;
  for (std::size_t i = 0; i < schedule.segments.size(); ++i) {
    const model::Segment& seg = schedule.segments[i];
    if (seg.kind == model::SegmentKind::kEchoPulse) continue;
    for (std::size_t k = 0; k < seg.steps; k += stride) {
      const double tau = (double(k) + 0.5) * seg.step;
      out.push_back({static_cast<int>(i), seg.kind, seg.window, seg.start + tau,
                     SegmentS(schedule, seg, noise, tau)});
    }
  }
  return out;
}

AdiabaticityReport MakeAdiabaticityReport(const model::ProtocolSpec& spec,
                                          const AdiabaticRampPolicy& policy,
                                          const ReportOptions& options) {
  const model::PulseSchedule sch =
      model::BuildSchedule(spec, policy, options.dt, options.schedule);
  noise::NoiseTrace sample;
  if (options.ou && options.ou->sigma2 > 0.0)
    sample = noise::PairedTraces(*options.ou, spec.mode, sch.noise_window,
                                 options.noise_dt, options.seed, 0);
  AdiabaticityReport rep;
  rep.s_max = policy.s_max;
  rep.noiseless = AdiabaticityTrace(sch, noise::NoiseTrace{}, options.stride);
  rep.noisy = sample.Empty() ? rep.noiseless
                             : AdiabaticityTrace(sch, sample, options.stride);
  rep.plateau_formula =
      spec.protocol == model::Protocol::kDP ? 0.0 : PlateauAdiabaticity(spec.geometry);
  double plateau_sum = 0.0, ramp_sum = 0.0;
  std::size_t plateau_n = 0, ramp_n = 0;
  for (std::size_t i = 0; i < sch.segments.size(); ++i) {
    const model::Segment& seg = sch.segments[i];
    if (seg.kind == model::SegmentKind::kEchoPulse) continue;
    SegmentStats st;
    st.segment = static_cast<int>(i);
    st.kind = seg.kind;
    st.window = seg.window;
    std::size_t n = 0;
    for (std::size_t k = 0; k < rep.noiseless.size(); ++k) {
      if (rep.noiseless[k].segment != st.segment) continue;
      const double a = rep.noiseless[k].s, b = rep.noisy[k].s;
      st.max_noiseless = std::max(st.max_noiseless, a);
      st.max_noisy = std::max(st.max_noisy, b);
      st.mean_noiseless += a;
      st.mean_noisy += b;
      ++n;
      if (seg.kind == model::SegmentKind::kPrecession) {
        plateau_sum += a;
        ++plateau_n;
      }
      if (seg.kind == model::SegmentKind::kRampUp ||
          seg.kind == model::SegmentKind::kRampDown) {
        ramp_sum += a;
        ++ramp_n;
      }
    }
    if (n > 0) {
      st.mean_noiseless /= double(n);
      st.mean_noisy /= double(n);
    }
    st.exceeds = std::max(st.max_noiseless, st.max_noisy) >= policy.s_max;
    rep.max_noiseless = std::max(rep.max_noiseless, st.max_noiseless);
    rep.max_noisy = std::max(rep.max_noisy, st.max_noisy);
    rep.pass = rep.pass && !st.exceeds;
    rep.segments.push_back(st);
  }
  if (plateau_n > 0) rep.plateau_measured = plateau_sum / double(plateau_n);
  if (ramp_n > 0) rep.ramp_level = ramp_sum / double(ramp_n);
  return rep;
}

std::string AdiabaticityReport::SummaryCsv() const {
  std::ostringstream o;
  o << "segment,kind,window,max_s_noiseless,mean_s_noiseless,max_s_noisy,"
       "mean_s_noisy,exceeds_s_max\n";
  for (const SegmentStats& s : segments) {
    o << s.segment << ',' << model::ToString(s.kind) << ',' << s.window << ','
      << textio::Num(s.max_noiseless) << ',' << textio::Num(s.mean_noiseless)
      << ',' << textio::Num(s.max_noisy) << ',' << textio::Num(s.mean_noisy)
      << ',' << (s.exceeds ? 1 : 0) << '\n';
  }
  return o.str();
}

std::string AdiabaticityReport::TraceCsv() const {
  std::ostringstream o;
  o << "segment,kind,window,t_ns,s_noiseless,s_noisy\n";
  for (std::size_t k = 0; k < noiseless.size(); ++k) {
    const AdiabaticitySample& a = noiseless[k];
    o << a.segment << ',' << model::ToString(a.kind) << ',' << a.window << ','
      << textio::Num(a.t * 1e9) << ',' << textio::Num(a.s) << ','
      << textio::Num(noisy[k].s) << '\n';
  }
  return o.str();
}

}  // namespace geodephase::adiabatic
