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

#include "runner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

#include "adiabatic.hpp"
#include "analytic.hpp"
#include "json.hpp"
#include "textio.hpp"

#ifndef GEODEPHASE_VERSION
#define GEODEPHASE_VERSION "0.0.0"
#endif

namespace geodephase::runner {
namespace {

using Json = nlohmann::ordered_json;
using model::Protocol;
using noise::CorrelationMode;
using textio::Num;

constexpr CorrelationMode kAllModes[] = {
    CorrelationMode::kCorrelated, CorrelationMode::kAnticorrelated,
    CorrelationMode::kUncorrelated, CorrelationMode::kFirstWindowOnly};

// Reads keys out of one JSON object and rejects anything left over.
class Block {
 public:
  Block(const Json& j, std::string path) : path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_ + " must be an object");
    j_ = &j;
  }
  ~Block() = default;

  bool Has(const char* key) const { return j_->contains(key); }

  const Json& Raw(const char* key) {
    seen_.insert(key);
    return j_->at(key);
  }

  void Number(const char* key, double& out) {
    if (!Has(key)) return;
    const Json& v = Raw(key);
    if (!v.is_number()) throw ConfigError(Where(key) + " must be a number");
    out = v.get<double>();
  }
  template <class Int>
  void Integer(const char* key, Int& out) {
    if (!Has(key)) return;
    const Json& v = Raw(key);
    if (!v.is_number_integer())
      throw ConfigError(Where(key) + " must be an integer");
    if (v.is_number_unsigned()) {
      out = static_cast<Int>(v.get<std::uint64_t>());
    } else {
      const auto x = v.get<std::int64_t>();
      if (x < 0 && !std::is_signed_v<Int>)
        throw ConfigError(Where(key) + " must be >= 0");
      out = static_cast<Int>(x);
    }
  }
  void Bool(const char* key, bool& out) {
    if (!Has(key)) return;
    const Json& v = Raw(key);
    if (!v.is_boolean()) throw ConfigError(Where(key) + " must be true/false");
    out = v.get<bool>();
  }
  void String(const char* key, std::string& out) {
    if (!Has(key)) return;
    const Json& v = Raw(key);
    if (!v.is_string()) throw ConfigError(Where(key) + " must be a string");
    out = v.get<std::string>();
  }
  void Numbers(const char* key, std::vector<double>& out) {
    if (!Has(key)) return;
    const Json& v = Raw(key);
    if (!v.is_array()) throw ConfigError(Where(key) + " must be an array");
    out.clear();
    for (const Json& x : v) {
      if (!x.is_number()) throw ConfigError(Where(key) + " holds a non-number");
      out.push_back(x.get<double>());
    }
  }
  template <class T>
  void Names(const char* key, std::vector<T>& out,
             const std::function<T(std::string_view)>& parse) {
    if (!Has(key)) return;
    const Json& v = Raw(key);
    if (!v.is_array()) throw ConfigError(Where(key) + " must be an array");
    out.clear();
    for (const Json& x : v) {
      if (!x.is_string()) throw ConfigError(Where(key) + " holds a non-string");
      try {
        out.push_back(parse(x.get<std::string>()));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(Where(key) + ": " + e.what());
      }
    }
  }
  void Finish() const {
    for (auto it = j_->begin(); it != j_->end(); ++it)
      if (!seen_.count(it.key()))
        throw ConfigError("unknown config key '" + Where(it.key().c_str()) + "'");
  }

 private:
  std::string Where(const char* key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
  const Json* j_ = nullptr;
  std::string path_;
  std::set<std::string> seen_;
};


Json Nullable(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

model::ProtocolSpec SpecFor(const RunConfig& cfg, Protocol family,
                            CorrelationMode mode, fit::Curve curve, double A,
                            double T) {
  model::ProtocolSpec sp;
  sp.protocol = curve == fit::Curve::kDynamicOnly ? Protocol::kDP : family;
  sp.first_window_sign = curve == fit::Curve::kDynamicOnly
                             ? 1
                             : fit::FirstWindowSign(curve);
  sp.mode = mode;
  sp.geometry = model::Geometry::FromSolidAngle(cfg.Delta(), A, cfg.n_loops, T);
  return sp;
}

std::array<fit::Curve, 3> CurvesFor(Protocol family) {
  return {fit::CurveFor(family, 1), fit::Curve::kDynamicOnly,
          fit::CurveFor(family, -1)};
}

std::uint64_t CellSeed(const RunConfig& cfg, std::size_t t_index,
                       std::size_t a_index, int protocol, int mode,
                       int curve) {
  std::uint64_t key = (std::uint64_t(t_index) << 40) ^
                      (std::uint64_t(a_index) << 20);
  if (!cfg.common_random_numbers)
    key ^= (std::uint64_t(protocol + 1) << 12) ^
           (std::uint64_t(mode + 1) << 6) ^ std::uint64_t(curve + 1);
  return engine::SplitMix64(cfg.seed ^ engine::SplitMix64(key + 1));
}

fit::DataRow MakeRow(const RunConfig& cfg, Protocol family,
                     CorrelationMode mode, fit::Curve curve, double A,
                     double T) {
  fit::DataRow r;
  r.family = family;
  r.mode = mode;
  r.curve = curve;
  r.solid_angle = A;
  r.n_loops = curve == fit::Curve::kDynamicOnly
                  ? cfg.n_loops
                  : cfg.n_loops * fit::FirstWindowSign(curve);
  r.duration = T;
  return r;
}

struct SweepTable {
  double t_ns = 0.0;
  std::vector<fit::DataRow> rows;
  std::vector<engine::BlochState> bloch;
  std::vector<fit::DataRow> predicted;
};

SweepTable SimulateTable(const RunConfig& cfg, std::size_t t_index,
                         const std::vector<Protocol>& protocols,
                         const std::vector<CorrelationMode>& modes) {
  SweepTable tab;
  tab.t_ns = cfg.t_ns[t_index];
  const double T = tab.t_ns * 1e-9;
  const engine::SimulationSettings st = cfg.Settings();
  for (Protocol p : protocols) {
    for (CorrelationMode m : modes) {
      for (std::size_t ia = 0; ia < cfg.solid_angles_rad.size(); ++ia) {
        const double A = cfg.solid_angles_rad[ia];
        for (fit::Curve c : CurvesFor(p)) {
          const model::ProtocolSpec sp = SpecFor(cfg, p, m, c, A, T);
          fit::DataRow row = MakeRow(cfg, p, m, c, A, T);
          fit::DataRow pred = row;
          const engine::EnsembleResult e = engine::RunEnsemble(
              sp, st, cfg.realizations,
              CellSeed(cfg, t_index, ia, int(p), int(m), int(c)));
          row.nu = e.nu;
          row.nu_se = e.nu_se;
          row.phase = e.phase;
          row.phase_se = e.phase_se;
          const analytic::DephasingPrediction ap =
              analytic::Predict(sp, st.OuFor(sp.geometry), p);
          pred.nu = ap.nu;
          pred.phase = ap.gamma_mean;
          tab.rows.push_back(row);
          tab.bloch.push_back(e.mean_bloch);
          tab.predicted.push_back(pred);
        }
      }
    }
  }
  return tab;
}

std::string TableJson(const SweepTable& tab) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < tab.rows.size(); ++i) {
    const fit::DataRow& r = tab.rows[i];
    Json j;
    j["protocol"] = std::string(model::ToString(r.family));
    j["mode"] = std::string(noise::ToString(r.mode));
    j["curve"] = std::string(fit::ToString(r.curve));
    j["A_rad"] = r.solid_angle;
    j["n"] = r.n_loops;
    j["T_ns"] = tab.t_ns;
    j["nu"] = r.nu;
    j["nu_se"] = r.nu_se;
    j["phase_rad"] = r.phase;
    j["phase_se_rad"] = r.phase_se;
    j["bloch"] = Json::array({tab.bloch[i].sx, tab.bloch[i].sy, tab.bloch[i].sz});
    rows.push_back(j);
  }
  Json doc;
  doc["T_ns"] = tab.t_ns;
  doc["rows"] = rows;
  return doc.dump(1) + "\n";
}

std::string RowsCsv(const std::vector<fit::DataRow>& rows) {
  fit::CoherenceDataset ds;
  ds.rows = rows;
  return ds.ToCsv();
}

// The cap is stored in seconds; rounding to 12 digits keeps ns -> s -> ns
// conversions idempotent.
double RampCapNs(const adiabatic::AdiabaticRampPolicy& ramp) {
  return std::stod(textio::Num(ramp.max_duration * 1e9));
}

std::string TLabel(double t_ns) {
  std::string s = Num(t_ns);
  std::replace(s.begin(), s.end(), '.', 'p');
  return "t" + s + "ns";
}

void AddManifest(CommandResult& res, const RunConfig& cfg,
                 const std::string& extra_provenance = {}) {
  Json m;
  m["tool"] = "geodephase";
  m["version"] = std::string(Version());
  m["command"] = res.command;
  m["seed"] = cfg.seed;
  m["config_hash"] = textio::Hex64(cfg.Hash());
  if (!extra_provenance.empty()) m["input"] = extra_provenance;
  m["config"] = Json::parse(cfg.ToJson());
  Json files = Json::array();
  for (const OutputFile& f : res.files) {
    Json e;
    e["name"] = f.name;
    e["bytes"] = f.content.size();
    e["fnv1a"] = textio::Hex64(textio::Fnv1a(f.content));
    files.push_back(e);
  }
  m["files"] = files;
  res.files.push_back({"manifest.json", m.dump(1) + "\n"});
}

Json CalibrationJson(const fit::Calibration& c) {
  Json j;
  j["amplitude"] = Nullable(c.amplitude);
  j["std_error"] = Nullable(c.std_error);
  j["n_used"] = c.n_used;
  j["degenerate"] = c.degenerate;
  return j;
}

std::string NormalProbabilityCsv(const std::vector<fit::FitReport>& reports) {
  std::ostringstream o;
  o << "protocol,family,mode,rank,theoretical,observed\n";
  for (const fit::FitReport& r : reports) {
    if (!r.diagnostics) continue;
    const std::string mode =
        r.cell_mode ? std::string(noise::ToString(*r.cell_mode)) : "all";
    for (std::size_t i = 0; i < r.diagnostics->points.size(); ++i) {
      const auto& p = r.diagnostics->points[i];
      o << model::ToString(r.protocol) << ',' << fit::ToString(r.family) << ','
        << mode << ',' << i + 1 << ',' << Num(p.theoretical) << ','
        << Num(p.observed) << '\n';
    }
  }
  return o.str();
}

// AICc comparison of the two simultaneous families for one protocol.
Json CompareJson(const fit::FitReport& con, const fit::FitReport& unc) {
  Json j;
  j["protocol"] = std::string(model::ToString(con.protocol));
  j["aicc_constrained"] = Nullable(con.aicc);
  j["aicc_unconstrained"] = Nullable(unc.aicc);
  j["rss_constrained"] = Nullable(con.rss);
  j["rss_unconstrained"] = Nullable(unc.rss);
  const double d = con.aicc - unc.aicc;
  j["delta_aicc"] = Nullable(d);
  if (std::isfinite(d)) {
    j["preferred"] = d > 0 ? "unconstrained" : "constrained";
    j["support_for_other"] =
        std::string(fit::ToString(fit::SupportForDelta(d)));
  }
  return j;
}

std::string CompareText(const fit::FitReport& con, const fit::FitReport& unc) {
  char buf[200];
  const double d = con.aicc - unc.aicc;
  if (!std::isfinite(d)) {
    std::snprintf(buf, sizeof(buf), "protocol %s: AICc comparison undefined\n",
                  std::string(model::ToString(con.protocol)).c_str());
  } else {
    std::snprintf(buf, sizeof(buf),
                  "protocol %s: AICc constrained %.4f, unconstrained %.4f, "
                  "delta %.4f, %s preferred, other model has %s support\n",
                  std::string(model::ToString(con.protocol)).c_str(), con.aicc,
                  unc.aicc, d, d > 0 ? "unconstrained" : "constrained",
                  std::string(fit::ToString(fit::SupportForDelta(d))).c_str());
  }
  return buf;
}

}  // namespace

// ---------------------------------------------------------------- config

RunConfig RunConfig::Defaults() {
  RunConfig c;
  for (int k = 1; k <= 12; ++k) c.solid_angles_rad.push_back(k * kPi / 16.0);
  c.modes.assign(std::begin(kAllModes), std::end(kAllModes));
  return c;
}

RunConfig RunConfig::FromJson(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (doc.is_object() && doc.contains("config") && doc.contains("tool"))
    doc = Json(doc["config"]);  // a manifest
  RunConfig c = Defaults();
  Block top(doc, "");
  if (top.Has("geometry")) {
    Block b(top.Raw("geometry"), "geometry");
    b.Number("delta_mhz", c.delta_mhz);
    b.Numbers("t_ns", c.t_ns);
    b.Numbers("solid_angles_rad", c.solid_angles_rad);
    b.Integer("n_loops", c.n_loops);
    b.Finish();
  }
  if (top.Has("noise")) {
    Block b(top.Raw("noise"), "noise");
    b.Number("relative_amplitude", c.relative_amplitude);
    b.Number("gamma_per_s", c.gamma_per_s);
    b.Names<CorrelationMode>("modes", c.modes, noise::ParseCorrelationMode);
    b.Bool("ramp_noise", c.ramp_noise);
    b.Number("noise_dt_ns", c.noise_dt_ns);
    b.Finish();
  }
  if (top.Has("protocols")) {
    std::vector<Protocol> ps;
    const Json& v = top.Raw("protocols");
    if (!v.is_array()) throw ConfigError("protocols must be an array");
    for (const Json& x : v) {
      if (!x.is_string()) throw ConfigError("protocols holds a non-string");
      try {
        ps.push_back(model::ParseProtocol(x.get<std::string>()));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("protocols: ") + e.what());
      }
    }
    c.protocols = ps;
  }
  if (top.Has("ensemble")) {
    Block b(top.Raw("ensemble"), "ensemble");
    b.Integer("realizations", c.realizations);
    b.Integer("seed", c.seed);
    b.Integer("bootstrap", c.bootstrap);
    b.Bool("common_random_numbers", c.common_random_numbers);
    b.Integer("workers", c.workers);
    b.Finish();
  }
  if (top.Has("integration")) {
    Block b(top.Raw("integration"), "integration");
    b.Number("dt_ns", c.dt_ns);
    b.Number("idle_ns", c.idle_ns);
    b.Finish();
  }
  if (top.Has("ramp")) {
    Block b(top.Raw("ramp"), "ramp");
    std::string mode(adiabatic::ToString(c.ramp.mode));
    b.String("mode", mode);
    try {
      c.ramp.mode = adiabatic::ParseRampMode(mode);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("ramp.mode: ") + e.what());
    }
    b.Number("s_target", c.ramp.s_target);
    b.Number("s_max", c.ramp.s_max);
    double cap_ns = RampCapNs(c.ramp);
    b.Number("max_duration_ns", cap_ns);
    c.ramp.max_duration = cap_ns * 1e-9;
    b.Finish();
  }
  if (top.Has("fit")) {
    Block b(top.Raw("fit"), "fit");
    b.Number("nu_floor", c.nu_floor);
    b.Number("alpha", c.alpha);
    b.Number("held_c_scale", c.held_c_scale);
    b.Finish();
  }
  if (top.Has("fig2f")) {
    Block b(top.Raw("fig2f"), "fig2f");
    b.Number("t_min_ns", c.fig2f.t_min_ns);
    b.Number("t_max_ns", c.fig2f.t_max_ns);
    b.Integer("points", c.fig2f.points);
    b.Number("solid_angle_rad", c.fig2f.solid_angle_rad);
    b.Finish();
  }
  if (top.Has("adiab_report")) {
    Block b(top.Raw("adiab_report"), "adiab_report");
    b.Integer("stride", c.adiab_stride);
    b.Finish();
  }
  if (top.Has("output")) {
    Block b(top.Raw("output"), "output");
    b.String("dir", c.out_dir);
    b.String("format", c.format);
    b.Finish();
  }
  top.Finish();
  c.Validate();
  return c;
}

void RunConfig::Validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (!std::isfinite(delta_mhz) || delta_mhz == 0.0)
    fail("geometry.delta_mhz must be finite and nonzero");
  if (t_ns.empty()) fail("geometry.t_ns must not be empty");
  for (double t : t_ns)
    if (!(t > 0.0) || !std::isfinite(t)) fail("geometry.t_ns entries must be > 0");
  if (n_loops < 1) fail("geometry.n_loops must be >= 1");
  if (solid_angles_rad.empty()) fail("geometry.solid_angles_rad must not be empty");
  for (double a : solid_angles_rad)
    if (!(a > 0.0) || !(a < kTwoPi * n_loops))
      fail("solid angles must lie in (0, 2 pi n)");
  if (!(relative_amplitude >= 0.0) || !std::isfinite(relative_amplitude))
    fail("noise.relative_amplitude must be >= 0");
  if (!(gamma_per_s > 0.0) || !std::isfinite(gamma_per_s))
    fail("noise.gamma_per_s must be > 0");
  if (modes.empty()) fail("noise.modes must not be empty");
  if (!(noise_dt_ns > 0.0)) fail("noise.noise_dt_ns must be > 0");
  if (protocols.empty()) fail("protocols must not be empty");
  for (Protocol p : protocols)
    if (p == Protocol::kDP)
      fail("protocols take P or R; DP curves are part of each block");
  if (std::set<Protocol>(protocols.begin(), protocols.end()).size() != protocols.size())
    fail("protocols must not repeat");
  if (std::set<CorrelationMode>(modes.begin(), modes.end()).size() != modes.size())
    fail("noise.modes must not repeat");
  if (realizations < 2) fail("ensemble.realizations must be at least 2");
  if (realizations > 0xFFFFFFFFull) fail("ensemble.realizations is too large");
  if (bootstrap == 1) fail("ensemble.bootstrap must be 0 or >= 2");
  if (!(dt_ns > 0.0)) fail("integration.dt_ns must be > 0");
  if (!(idle_ns >= 0.0)) fail("integration.idle_ns must be >= 0");
  ramp.Validate();
  if (!(nu_floor >= 0.0 && nu_floor < 1.0)) fail("fit.nu_floor must be in [0, 1)");
  if (!(alpha > 0.0 && alpha < 1.0)) fail("fit.alpha must be in (0, 1)");
  if (!std::isfinite(held_c_scale)) fail("fit.held_c_scale must be finite");
  if (!(fig2f.t_min_ns > 0.0 && fig2f.t_max_ns > fig2f.t_min_ns))
    fail("fig2f needs 0 < t_min_ns < t_max_ns");
  if (fig2f.points < 2) fail("fig2f.points must be >= 2");
  if (!(fig2f.solid_angle_rad > 0.0 && fig2f.solid_angle_rad < kTwoPi * n_loops))
    fail("fig2f.solid_angle_rad must lie in (0, 2 pi n)");
  if (adiab_stride < 1) fail("adiab_report.stride must be >= 1");
  if (format != "csv" && format != "json") fail("output.format must be csv or json");
  if (out_dir.empty()) fail("output.dir must not be empty");
}

std::string RunConfig::ToJson() const {
  Json j;
  Json& g = j["geometry"];
  g["delta_mhz"] = delta_mhz;
  g["t_ns"] = t_ns;
  g["solid_angles_rad"] = solid_angles_rad;
  g["n_loops"] = n_loops;
  Json& n = j["noise"];
  n["relative_amplitude"] = relative_amplitude;
  n["gamma_per_s"] = gamma_per_s;
  Json modes_j = Json::array();
  for (CorrelationMode m : modes) modes_j.push_back(std::string(noise::ToString(m)));
  n["modes"] = modes_j;
  n["ramp_noise"] = ramp_noise;
  n["noise_dt_ns"] = noise_dt_ns;
  Json ps = Json::array();
  for (Protocol p : protocols) ps.push_back(std::string(model::ToString(p)));
  j["protocols"] = ps;
  Json& e = j["ensemble"];
  e["realizations"] = realizations;
  e["seed"] = seed;
  e["bootstrap"] = bootstrap;
  e["common_random_numbers"] = common_random_numbers;
  Json& in = j["integration"];
  in["dt_ns"] = dt_ns;
  in["idle_ns"] = idle_ns;
  Json& r = j["ramp"];
  r["mode"] = std::string(adiabatic::ToString(ramp.mode));
  r["s_target"] = ramp.s_target;
  r["s_max"] = ramp.s_max;
  r["max_duration_ns"] = RampCapNs(ramp);
  Json& f = j["fit"];
  f["nu_floor"] = nu_floor;
  f["alpha"] = alpha;
  f["held_c_scale"] = held_c_scale;
  Json& fg = j["fig2f"];
  fg["t_min_ns"] = fig2f.t_min_ns;
  fg["t_max_ns"] = fig2f.t_max_ns;
  fg["points"] = fig2f.points;
  fg["solid_angle_rad"] = fig2f.solid_angle_rad;
  j["adiab_report"]["stride"] = adiab_stride;
  j["output"]["format"] = format;
  return j.dump(1);
}

std::uint64_t RunConfig::Hash() const { return textio::Fnv1a(ToJson()); }

double RunConfig::Delta() const { return kTwoPi * delta_mhz * 1e6; }

engine::SimulationSettings RunConfig::Settings() const {
  engine::SimulationSettings s;
  s.dt = dt_ns * 1e-9;
  s.noise_dt = noise_dt_ns * 1e-9;
  s.relative_amplitude = relative_amplitude;
  s.gamma = gamma_per_s;
  s.ramp_noise = ramp_noise;
  s.idle = idle_ns * 1e-9;
  s.ramp = ramp;
  s.bootstrap = bootstrap;
  s.workers = workers;
  return s;
}

fit::FitOptions RunConfig::FitSettings() const {
  fit::FitOptions o;
  o.delta = Delta();
  o.gamma = gamma_per_s;
  o.nu_floor = nu_floor;
  o.alpha = alpha;
  o.held_c_scale = held_c_scale;
  return o;
}

// -------------------------------------------------------------- commands

CommandResult RunSweep(const RunConfig& cfg) {
  cfg.Validate();
  CommandResult res;
  res.command = "sweep";
  std::ostringstream summary;
  for (std::size_t it = 0; it < cfg.t_ns.size(); ++it) {
    const SweepTable tab = SimulateTable(cfg, it, cfg.protocols, cfg.modes);
    const std::string label = TLabel(tab.t_ns);
    if (cfg.format == "json")
      res.files.push_back({"sweep_" + label + ".json", TableJson(tab)});
    else
      res.files.push_back({"sweep_" + label + ".csv", RowsCsv(tab.rows)});
    res.files.push_back({"prediction_" + label + ".csv", RowsCsv(tab.predicted)});
    summary << "T=" << Num(tab.t_ns) << " ns: " << tab.rows.size() << " rows\n";
  }
  AddManifest(res, cfg);
  res.summary = summary.str();
  return res;
}

CommandResult RunTable1(const RunConfig& cfg) {
  cfg.Validate();
  CommandResult res;
  res.command = "table1";
  const std::vector<Protocol> protocols = {Protocol::kR, Protocol::kP};
  const std::vector<CorrelationMode> modes(std::begin(kAllModes), std::end(kAllModes));
  const SweepTable tab = SimulateTable(cfg, 0, protocols, modes);
  fit::CoherenceDataset ds;
  ds.rows = tab.rows;
  ds.provenance = "table1 sweep";

  fit::FitOptions opt = cfg.FitSettings();
  const fit::Calibration cal = fit::CalibrateAmplitude(ds, opt);
  opt.amplitude = cal.amplitude;

  Json cells = Json::array();
  std::ostringstream csv, txt;
  csv << "protocol,mode,a_theory,b_theory,c_theory,a_hat,a_se,b_hat,b_se,"
         "c_hat,c_se,c_fitted,n_used,status\n";
  char line[256];
  std::snprintf(line, sizeof(line),
                "%-3s %-15s %-13s %-18s %-18s %-18s %s\n", "", "mode",
                "theory a/b/c", "a_hat", "b_hat", "c_hat", "status");
  txt << "T = " << Num(tab.t_ns) << " ns, " << cfg.realizations
      << " realizations, amplitude " << Num(cal.amplitude, 6)
      << (cal.degenerate ? " (degenerate)" : "") << "\n"
      << line;
  std::vector<fit::FitReport> reports;
  for (Protocol p : protocols) {
    for (CorrelationMode m : modes) {
      const analytic::DephasingFactors th = analytic::ProtocolFactors(p, m);
      Json cell;
      cell["protocol"] = std::string(model::ToString(p));
      cell["mode"] = std::string(noise::ToString(m));
      cell["theory"] = {{"a", th.a}, {"b", th.b}, {"c", th.c}};
      std::string status = cal.degenerate ? "degenerate" : "ok";
      double v[3] = {NAN, NAN, NAN}, se[3] = {NAN, NAN, NAN};
      bool c_fitted = m == CorrelationMode::kCorrelated;
      std::size_t n_used = 0;
      try {
        fit::FitReport rep = fit::FitCell(ds, p, m, opt);
        n_used = rep.n_used;
        const char* names[3] = {"a", "b", "c"};
        for (int k = 0; k < 3; ++k) {
          if (const fit::ParameterEstimate* e = rep.Find(names[k])) {
            v[k] = e->value;
            se[k] = e->std_error;
          }
        }
        if (!c_fitted) v[2] = cfg.held_c_scale * th.c;
        if (rep.rank_deficient && status == "ok") status = "rank_deficient";
        cell["fit"] = Json::parse(rep.ToJson());
        reports.push_back(std::move(rep));
      } catch (const std::exception& e) {
        status = std::string("error: ") + e.what();
      }
      cell["status"] = status;
      cells.push_back(cell);
      csv << model::ToString(p) << ',' << noise::ToString(m) << ','
          << Num(th.a) << ',' << Num(th.b) << ',' << Num(th.c);
      for (int k = 0; k < 3; ++k) {
        csv << ',' << (std::isfinite(v[k]) ? Num(v[k]) : "");
        csv << ',' << (std::isfinite(se[k]) ? Num(se[k]) : "");
      }
      std::string st_csv = status;
      std::replace(st_csv.begin(), st_csv.end(), ',', ';');
      csv << ',' << (c_fitted ? 1 : 0) << ',' << n_used << ',' << st_csv << '\n';
      auto cellstr = [](double x, double e, bool fitted) {
        char b[64];
        if (!std::isfinite(x)) return std::string("n/a");
        if (!fitted) {
          std::snprintf(b, sizeof(b), "%.3f (held)", x);
        } else {
          std::snprintf(b, sizeof(b), "%.3f +- %.3f", x, e);
        }
        return std::string(b);
      };
      char theory[64];
      std::snprintf(theory, sizeof(theory), "%g/%g/%g", th.a, th.b, th.c);
      std::snprintf(line, sizeof(line), "%-3s %-15s %-13s %-18s %-18s %-18s %s\n",
                    std::string(model::ToString(p)).c_str(),
                    std::string(noise::ToString(m)).c_str(), theory,
                    cellstr(v[0], se[0], true).c_str(),
                    cellstr(v[1], se[1], true).c_str(),
                    cellstr(v[2], se[2], c_fitted).c_str(), status.c_str());
      txt << line;
    }
  }
  Json sim = Json::array(), cmp = Json::array();
  std::string cmp_txt;
  for (Protocol p : protocols) {
    try {
      fit::FitReport con = fit::FitSimultaneous(ds, p, fit::FitFamily::kConstrained, opt);
      fit::FitReport unc = fit::FitSimultaneous(ds, p, fit::FitFamily::kUnconstrained, opt);
      sim.push_back(Json::parse(con.ToJson()));
      sim.push_back(Json::parse(unc.ToJson()));
      cmp.push_back(CompareJson(con, unc));
      cmp_txt += CompareText(con, unc);
      reports.push_back(std::move(con));
      reports.push_back(std::move(unc));
    } catch (const std::exception& e) {
      cmp.push_back({{"protocol", std::string(model::ToString(p))},
                     {"error", e.what()}});
    }
  }
  txt << "\n" << cmp_txt;
  Json doc;
  doc["T_ns"] = tab.t_ns;
  doc["realizations"] = cfg.realizations;
  doc["calibration"] = CalibrationJson(cal);
  doc["degenerate"] = cal.degenerate;
  doc["cells"] = cells;
  doc["simultaneous"] = sim;
  doc["model_comparison"] = cmp;

  res.files.push_back({"table1_dataset.csv", ds.ToCsv()});
  res.files.push_back({"table1.csv", csv.str()});
  res.files.push_back({"table1.json", doc.dump(1) + "\n"});
  res.files.push_back({"table1.txt", txt.str()});
  res.files.push_back({"table1_normal_probability.csv", NormalProbabilityCsv(reports)});
  AddManifest(res, cfg);
  res.summary = txt.str();
  return res;
}

CommandResult RunFig2f(const RunConfig& cfg) {
  cfg.Validate();
  CommandResult res;
  res.command = "fig2f";
  const analytic::DephasingFactors abc =
      analytic::ProtocolFactors(Protocol::kR, CorrelationMode::kFirstWindowOnly);
  std::ostringstream csv;
  csv << "T_ns,gamma_T,omega_b_rad_s,D_rad2,dynamic,geometric,nonadiabatic,"
         "exponent,nu\n";
  Json rows = Json::array();
  const double lo = std::log(cfg.fig2f.t_min_ns), hi = std::log(cfg.fig2f.t_max_ns);
  for (int i = 0; i < cfg.fig2f.points; ++i) {
    const double t_ns = std::exp(lo + (hi - lo) * i / (cfg.fig2f.points - 1));
    const model::Geometry g = model::Geometry::FromSolidAngle(
        cfg.Delta(), cfg.fig2f.solid_angle_rad, cfg.n_loops, t_ns * 1e-9);
    const noise::OUParams ou =
        noise::OUParams::FromRelative(cfg.relative_amplitude, g.omega0, cfg.gamma_per_s);
    const analytic::GeometryFactors f =
        analytic::AbcGeometryFactors(g.theta, g.delta, g.omega0);
    const double d = noise::IntegratedCorrelatorOu(ou.sigma2, ou.gamma, g.duration);
    const int orient = Sign(cfg.n_loops) * Sign(g.delta);
    const analytic::DephasingPrediction p =
        analytic::SuppressionFactor(f, abc, d, g.omega_b, orient);
    const double expo = p.dynamic_term + p.geometric_term + p.nonadiabatic_term;
    csv << Num(t_ns) << ',' << Num(ou.gamma * g.duration) << ',' << Num(g.omega_b)
        << ',' << Num(d) << ',' << Num(p.dynamic_term) << ','
        << Num(p.geometric_term) << ',' << Num(p.nonadiabatic_term) << ','
        << Num(expo) << ',' << Num(p.nu) << '\n';
    rows.push_back({{"T_ns", t_ns},
                    {"gamma_T", ou.gamma * g.duration},
                    {"omega_b_rad_s", g.omega_b},
                    {"D_rad2", d},
                    {"dynamic", p.dynamic_term},
                    {"geometric", p.geometric_term},
                    {"nonadiabatic", p.nonadiabatic_term},
                    {"exponent", expo},
                    {"nu", p.nu}});
  }
  if (cfg.format == "json") {
    Json doc;
    doc["solid_angle_rad"] = cfg.fig2f.solid_angle_rad;
    doc["rows"] = rows;
    res.files.push_back({"fig2f.json", doc.dump(1) + "\n"});
  } else {
    res.files.push_back({"fig2f.csv", csv.str()});
  }
  AddManifest(res, cfg);
  res.summary = std::to_string(cfg.fig2f.points) + " periods from " +
                Num(cfg.fig2f.t_min_ns) + " to " + Num(cfg.fig2f.t_max_ns) + " ns\n";
  return res;
}

CommandResult RunFit(const RunConfig& cfg, std::string_view dataset_csv,
                     const std::string& provenance) {
  cfg.Validate();
  CommandResult res;
  res.command = "fit";
  const fit::CoherenceDataset ds =
      fit::CoherenceDataset::FromCsv(dataset_csv, provenance);
  if (ds.rows.empty()) throw ConfigError("dataset has no rows");
  fit::FitOptions opt = cfg.FitSettings();
  fit::Calibration cal;
  try {
    cal = fit::CalibrateAmplitude(ds, opt);
  } catch (const std::invalid_argument&) {
    throw ConfigError(
        "dataset needs R first_window DP rows to calibrate the noise amplitude");
  }
  opt.amplitude = cal.amplitude;
  std::vector<fit::FitReport> reports;
  Json cells = Json::array(), sim = Json::array(), cmp = Json::array();
  std::string cmp_txt;
  for (Protocol p : {Protocol::kR, Protocol::kP}) {
    if (ds.Filter(p, std::nullopt, std::nullopt).rows.empty()) continue;
    for (CorrelationMode m : kAllModes) {
      if (ds.Filter(p, m, std::nullopt).rows.empty()) continue;
      fit::FitReport rep = fit::FitCell(ds, p, m, opt);
      cells.push_back(Json::parse(rep.ToJson()));
      reports.push_back(std::move(rep));
    }
    fit::FitReport con = fit::FitSimultaneous(ds, p, fit::FitFamily::kConstrained, opt);
    fit::FitReport unc = fit::FitSimultaneous(ds, p, fit::FitFamily::kUnconstrained, opt);
    sim.push_back(Json::parse(con.ToJson()));
    sim.push_back(Json::parse(unc.ToJson()));
    cmp.push_back(CompareJson(con, unc));
    cmp_txt += CompareText(con, unc);
    reports.push_back(std::move(con));
    reports.push_back(std::move(unc));
  }
  Json doc;
  doc["dataset"] = provenance;
  doc["rows"] = ds.rows.size();
  doc["calibration"] = CalibrationJson(cal);
  doc["cells"] = cells;
  doc["simultaneous"] = sim;
  doc["model_comparison"] = cmp;
  const std::string txt = fit::FormatReports(reports) + "\n" + cmp_txt;
  res.files.push_back({"fit.json", doc.dump(1) + "\n"});
  res.files.push_back({"fit.txt", txt});
  res.files.push_back({"fit_normal_probability.csv", NormalProbabilityCsv(reports)});
  AddManifest(res, cfg, textio::Hex64(textio::Fnv1a(dataset_csv)));
  res.summary = txt;
  return res;
}

CommandResult RunAdiabReport(const RunConfig& cfg) {
  cfg.Validate();
  CommandResult res;
  res.command = "adiab-report";
  const engine::SimulationSettings st = cfg.Settings();
  std::ostringstream summary;
  summary << "protocol,T_ns,A_rad,ramp_ns,max_s_noiseless,max_s_noisy,"
             "plateau_formula,plateau_measured,ramp_level,pass\n";
  bool all_pass = true;
  double worst = 0.0;
  for (std::size_t it = 0; it < cfg.t_ns.size(); ++it) {
    const double T = cfg.t_ns[it] * 1e-9;
    std::ostringstream trace;
    trace << "protocol,A_rad,segment,kind,window,t_ns,s_noiseless,s_noisy\n";
    for (Protocol p : cfg.protocols) {
      for (std::size_t ia = 0; ia < cfg.solid_angles_rad.size(); ++ia) {
        const double A = cfg.solid_angles_rad[ia];
        model::ProtocolSpec sp = SpecFor(cfg, p, CorrelationMode::kUncorrelated,
                                         fit::CurveFor(p, 1), A, T);
        adiabatic::ReportOptions ro;
        ro.dt = st.dt;
        ro.noise_dt = st.noise_dt;
        ro.schedule = st.ScheduleFor();
        ro.ou = st.OuFor(sp.geometry);
        ro.seed = CellSeed(cfg, it, ia, int(p), 0, 0);
        ro.stride = cfg.adiab_stride;
        const adiabatic::AdiabaticityReport rep =
            adiabatic::MakeAdiabaticityReport(sp, cfg.ramp, ro);
        const adiabatic::RampShape shape =
            adiabatic::ShapeRamp(sp.geometry.theta, sp.geometry.delta, cfg.ramp);
        summary << model::ToString(p) << ',' << Num(cfg.t_ns[it]) << ','
                << Num(A) << ',' << Num(shape.duration * 1e9) << ','
                << Num(rep.max_noiseless) << ',' << Num(rep.max_noisy) << ','
                << Num(rep.plateau_formula) << ',' << Num(rep.plateau_measured)
                << ',' << Num(rep.ramp_level) << ',' << (rep.pass ? 1 : 0) << '\n';
        all_pass = all_pass && rep.pass;
        worst = std::max({worst, rep.max_noiseless, rep.max_noisy});
        for (std::size_t k = 0; k < rep.noiseless.size(); ++k) {
          const adiabatic::AdiabaticitySample& a = rep.noiseless[k];
          trace << model::ToString(p) << ',' << Num(A) << ',' << a.segment << ','
                << model::ToString(a.kind) << ',' << a.window << ','
                << Num(a.t * 1e9) << ',' << Num(a.s) << ','
                << Num(rep.noisy[k].s) << '\n';
        }
      }
    }
    res.files.push_back({"adiab_trace_" + TLabel(cfg.t_ns[it]) + ".csv", trace.str()});
  }
  res.files.insert(res.files.begin(), {"adiab_summary.csv", summary.str()});
  AddManifest(res, cfg);
  res.summary = std::string("max s = ") + Num(worst, 6) + " (limit " +
                Num(cfg.ramp.s_max) + "), " + (all_pass ? "all schedules pass" : "some schedules exceed the limit") + "\n";
  return res;
}

CommandResult RunCommand(std::string_view command, const RunConfig& config) {
  if (command == "sweep") return RunSweep(config);
  if (command == "table1") return RunTable1(config);
  if (command == "fig2f") return RunFig2f(config);
  if (command == "adiab-report") return RunAdiabReport(config);
  throw ConfigError("unknown command '" + std::string(command) + "'");
}

void WriteOutputs(const CommandResult& result, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir + ": " + ec.message());
  for (const OutputFile& f : result.files)
    textio::WriteFile((std::filesystem::path(dir) / f.name).string(), f.content);
}

std::string ErrorJson(std::string_view kind, std::string_view message) {
  Json j;
  j["status"] = "error";
  j["kind"] = std::string(kind);
  j["message"] = std::string(message);
  return j.dump();
}

std::string_view Version() { return GEODEPHASE_VERSION; }

}  // namespace geodephase::runner
