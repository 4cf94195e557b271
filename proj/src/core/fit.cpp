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

#include "fit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "analytic.hpp"
#include "common.hpp"
#include "json.hpp"
#include "textio.hpp"

namespace geodephase::fit {
namespace {

using model::Protocol;
using noise::CorrelationMode;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// One coefficient of the (A, B, C) triple: mult * beta[param] + fixed.
struct Term {
  int param = -1;
  double mult = 0.0;
  double fixed = 0.0;
};
using Triple = std::array<Term, 3>;

Term P(int param, double mult) { return {param, mult, 0.0}; }
Term Zero() { return {}; }
Term Fixed(double v) { return {-1, 0.0, v}; }

struct ModelSpec {
  std::vector<std::string> names;
  // Maps (mode, curve) to a coefficient triple.
  std::function<Triple(CorrelationMode, Curve)> map;
};

int CurveIndex(Curve c) {
  // 0 = first-window +, 1 = DP, 2 = first-window -
  if (c == Curve::kDynamicOnly) return 1;
  return FirstWindowSign(c) > 0 ? 0 : 2;
}

// Verbatim fitting-function table, written for delta < 0. For delta > 0 the
// orientation-carrying b entries of the C curves flip sign.
ModelSpec TableModel(Protocol protocol, FitFamily family, double delta) {
  const bool unc = family == FitFamily::kUnconstrained;
  const double f = -Sign(delta);
  ModelSpec m;
  if (protocol == Protocol::kR) {
    m.names = {"a", "b", "c"};
    if (unc) {
      m.names.push_back("b'");
      m.names.push_back("b''");
    }
    m.map = [unc, f](CorrelationMode mode, Curve curve) -> Triple {
      const int ci = CurveIndex(curve);
      const double sg = ci == 0 ? -f : f;  // C+- carries -b
      auto bprime = [&](bool dp) {
        if (!unc) return Zero();
        return dp ? P(4, 1.0) : P(3, sg);
      };
      switch (mode) {
        case CorrelationMode::kCorrelated:
          return {Zero(), bprime(ci == 1), ci == 1 ? Zero() : P(2, 4.0)};
        case CorrelationMode::kAnticorrelated:
          return {P(0, 4.0), bprime(ci == 1), Zero()};
        case CorrelationMode::kUncorrelated:
          return {P(0, 2.0), bprime(ci == 1), Zero()};
        case CorrelationMode::kFirstWindowOnly:
          if (ci == 1) return {P(0, 1.0), unc ? P(3, 1.0) : Zero(), Zero()};
          return {P(0, 1.0), P(1, sg), Zero()};
      }
      return {};
    };
  } else {
    m.names = {"a", "b", "c'"};
    if (unc) m.names.push_back("b'");
    m.map = [unc, f](CorrelationMode mode, Curve curve) -> Triple {
      const int ci = CurveIndex(curve);
      const double sg = ci == 0 ? -f : f;  // C++ carries -b
      const Term bp = unc ? P(3, 1.0) : Zero();
      switch (mode) {
        case CorrelationMode::kCorrelated:
          return {Zero(), bp, P(2, 1.0)};
        case CorrelationMode::kAnticorrelated:
          if (ci == 1) return {P(0, 4.0), bp, Zero()};
          return {P(0, 4.0), P(1, 4.0 * sg), Zero()};
        case CorrelationMode::kUncorrelated:
          if (ci == 1) return {P(0, 2.0), bp, Zero()};
          return {P(0, 2.0), P(1, 2.0 * sg), Zero()};
        case CorrelationMode::kFirstWindowOnly:
          if (ci == 1) return {P(0, 1.0), bp, Zero()};
          return {P(0, 1.0), P(1, sg), Zero()};
      }
      return {};
    };
  }
  return m;
}

// A single cell fits its own (a, b[, c]); orientation enters as
// sgn(n1) sgn(delta) and DP rows keep only the dynamic term.
ModelSpec CellModel(Protocol protocol, CorrelationMode mode, double delta,
                    double held_c_scale) {
  ModelSpec m;
  const bool free_c = mode == CorrelationMode::kCorrelated;
  m.names = {"a", "b"};
  if (free_c) m.names.push_back("c");
  const double held =
      held_c_scale * analytic::ProtocolFactors(protocol, mode).c;
  const int sd = Sign(delta);
  m.map = [free_c, held, sd](CorrelationMode, Curve curve) -> Triple {
    if (curve == Curve::kDynamicOnly) return {P(0, 1.0), Zero(), Zero()};
    const double orient = double(FirstWindowSign(curve) * sd);
    return {P(0, 1.0), P(1, orient), free_c ? P(2, 1.0) : Fixed(held)};
  };
  return m;
}

struct Basis {
  double a = 0.0, b = 0.0, c = 0.0;
};

Basis RowBasis(const DataRow& row, const FitOptions& opt, double amplitude) {
  const int n = std::abs(row.n_loops);
  if (n == 0) throw std::invalid_argument("dataset row with zero loops");
  const double theta = model::ThetaForSolidAngle(std::abs(row.solid_angle), n);
  const model::Geometry g =
      model::Geometry::FromTheta(opt.delta, theta, n, row.duration);
  const double d = amplitude * g.omega0 * g.omega0 *
                   noise::CorrelatorShape(opt.gamma * g.duration) /
                   (opt.gamma * opt.gamma);
  const analytic::GeometryFactors f =
      analytic::AbcGeometryFactors(g.theta, g.delta, g.omega0);
  // DP rows use the nominal loop rate of their block, as the fitting
  // functions do.
  const double w = g.omega_b;
  return {d * f.cal_a, d * f.cal_b * w, d * f.cal_c * w * w};
}

bool Usable(const DataRow& r, double floor) {
  return std::isfinite(r.nu) && r.nu > 0.0 && r.nu >= floor;
}

// Log-space standard deviations; zero errors fall back to the smallest
// positive one (or unity when every error is zero).
std::vector<double> LogSigmas(const std::vector<const DataRow*>& rows) {
  std::vector<double> s(rows.size(), 1.0);
  double min_pos = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double v = rows[i]->nu_se / rows[i]->nu;
    s[i] = v;
    if (v > 0.0 && std::isfinite(v)) min_pos = std::min(min_pos, v);
  }
  for (double& v : s) {
    if (!std::isfinite(min_pos)) v = 1.0;
    else if (!(v > 0.0) || !std::isfinite(v)) v = min_pos;
  }
  return s;
}

FitReport Solve(const std::vector<const DataRow*>& all_rows,
                const ModelSpec& ms, Protocol protocol, FitFamily family,
                const FitOptions& opt) {
  FitReport rep;
  rep.protocol = protocol;
  rep.family = family;
  rep.amplitude = opt.amplitude;
  rep.n_rows = all_rows.size();
  const std::size_t p = ms.names.size();
  std::vector<const DataRow*> rows;
  for (std::size_t i = 0; i < all_rows.size(); ++i) {
    if (Usable(*all_rows[i], opt.nu_floor)) {
      rows.push_back(all_rows[i]);
      rep.used_rows.push_back(i);
    }
  }
  const std::size_t n = rows.size();
  rep.n_used = n;
  rep.parameters.resize(p);
  for (std::size_t j = 0; j < p; ++j) {
    rep.parameters[j].name = ms.names[j];
    rep.parameters[j].value = kNaN;
    rep.parameters[j].std_error = kNaN;
    rep.parameters[j].t_value = kNaN;
  }
  rep.covariance.assign(p, std::vector<double>(p, kNaN));

  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(p));
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  const std::vector<double> sig = LogSigmas(rows);
  for (std::size_t i = 0; i < n; ++i) {
    const DataRow& r = *rows[i];
    const Basis bs = RowBasis(r, opt, opt.amplitude);
    const Triple tr = ms.map(r.mode, r.curve);
    const std::array<double, 3> bv = {bs.a, bs.b, bs.c};
    double offset = 0.0;
    for (int t = 0; t < 3; ++t) {
      if (tr[t].param >= 0) X(Eigen::Index(i), tr[t].param) += tr[t].mult * bv[t];
      offset += tr[t].fixed * bv[t];
    }
    y(Eigen::Index(i)) = -std::log(r.nu) - offset;
    const double w = 1.0 / sig[i];
    X.row(Eigen::Index(i)) *= w;
    y(Eigen::Index(i)) *= w;
  }

  // Drop all-zero columns, then anything QR finds dependent.
  std::vector<int> keep;
  for (std::size_t j = 0; j < p; ++j)
    if (n > 0 && X.col(Eigen::Index(j)).norm() > 0.0) keep.push_back(int(j));
  if (!keep.empty()) {
    Eigen::MatrixXd Xk(X.rows(), Eigen::Index(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) Xk.col(Eigen::Index(j)) = X.col(keep[j]);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xk);
    qr.setThreshold(1e-10);
    if (qr.rank() < Eigen::Index(keep.size())) {
      std::vector<int> kept;
      const auto& perm = qr.colsPermutation().indices();
      std::vector<bool> good(keep.size(), false);
      for (Eigen::Index j = 0; j < qr.rank(); ++j) good[std::size_t(perm(j))] = true;
      for (std::size_t j = 0; j < keep.size(); ++j)
        if (good[j]) kept.push_back(keep[j]);
      keep = kept;
    }
  }
  if (keep.size() < p) rep.rank_deficient = true;
  for (std::size_t j = 0; j < p; ++j)
    if (std::find(keep.begin(), keep.end(), int(j)) == keep.end()) {
      rep.parameters[j].identifiable = false;
      rep.unidentifiable.push_back(ms.names[j]);
    }
  const std::size_t q = keep.size();
  rep.k = q + 1;
  Eigen::VectorXd beta_full = Eigen::VectorXd::Zero(Eigen::Index(p));
  if (q > 0) {
    Eigen::MatrixXd Xk(X.rows(), Eigen::Index(q));
    for (std::size_t j = 0; j < q; ++j) Xk.col(Eigen::Index(j)) = X.col(keep[j]);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xk);
    const Eigen::VectorXd beta = qr.solve(y);
    const Eigen::VectorXd res = y - Xk * beta;
    rep.rss = res.squaredNorm();
    const double dof = double(n) - double(q);
    const double s2 = dof > 0 ? rep.rss / dof : kNaN;
    const Eigen::MatrixXd cov =
        (Xk.transpose() * Xk).ldlt().solve(Eigen::MatrixXd::Identity(Eigen::Index(q), Eigen::Index(q))) * s2;
    rep.t_threshold = dof > 0 ? TThreshold(dof, opt.alpha) : kNaN;
    for (std::size_t j = 0; j < q; ++j) {
      ParameterEstimate& pe = rep.parameters[std::size_t(keep[j])];
      pe.value = beta(Eigen::Index(j));
      beta_full(keep[j]) = pe.value;
      pe.std_error = std::sqrt(std::max(0.0, cov(Eigen::Index(j), Eigen::Index(j))));
      if (pe.std_error > 0.0) {
        pe.t_value = pe.value / pe.std_error;
        pe.significant = std::abs(pe.t_value) > rep.t_threshold;
      }
      for (std::size_t l = 0; l < q; ++l)
        rep.covariance[std::size_t(keep[j])][std::size_t(keep[l])] =
            cov(Eigen::Index(j), Eigen::Index(l));
    }
  } else {
    rep.rss = y.squaredNorm();
  }
  // Coherence-space residuals.
  rep.residuals.resize(n);
  rep.rss_nu = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const DataRow& r = *rows[i];
    const Basis bs = RowBasis(r, opt, opt.amplitude);
    const Triple tr = ms.map(r.mode, r.curve);
    const std::array<double, 3> bv = {bs.a, bs.b, bs.c};
    double expo = 0.0;
    for (int t = 0; t < 3; ++t) {
      const double coef =
          (tr[t].param >= 0 ? tr[t].mult * beta_full(tr[t].param) : 0.0) +
          tr[t].fixed;
      expo += coef * bv[t];
    }
    rep.residuals[i] = r.nu - std::exp(-expo);
    rep.rss_nu += rep.residuals[i] * rep.residuals[i];
  }
  rep.aicc = (n > rep.k + 1 && rep.rss > 0.0) ? Aicc(n, rep.k, rep.rss) : kNaN;
  if (n >= 10) rep.diagnostics = DiagnoseResiduals(rep.residuals);
  return rep;
}

}  // namespace

std::string_view ToString(Curve curve) {
  switch (curve) {
    case Curve::kPlusPlus: return "C++";
    case Curve::kMinusMinus: return "C--";
    case Curve::kPlusMinus: return "C+-";
    case Curve::kMinusPlus: return "C-+";
    case Curve::kDynamicOnly: return "DP";
  }
  return "?";
}

Curve ParseCurve(std::string_view t) {
  if (t == "C++") return Curve::kPlusPlus;
  if (t == "C--") return Curve::kMinusMinus;
  if (t == "C+-") return Curve::kPlusMinus;
  if (t == "C-+") return Curve::kMinusPlus;
  if (t == "DP") return Curve::kDynamicOnly;
  throw ConfigError("unknown curve '" + std::string(t) + "'");
}

Curve CurveFor(Protocol protocol, int first_window_sign) {
  switch (protocol) {
    case Protocol::kDP: return Curve::kDynamicOnly;
    case Protocol::kP:
      return first_window_sign > 0 ? Curve::kPlusPlus : Curve::kMinusMinus;
    case Protocol::kR:
      return first_window_sign > 0 ? Curve::kPlusMinus : Curve::kMinusPlus;
  }
  return Curve::kDynamicOnly;
}

int FirstWindowSign(Curve c) {
  switch (c) {
    case Curve::kPlusPlus:
    case Curve::kPlusMinus: return 1;
    case Curve::kMinusMinus:
    case Curve::kMinusPlus: return -1;
    case Curve::kDynamicOnly: return 0;
  }
  return 0;
}

std::string DatasetHeader() {
  return "protocol,mode,curve,A_rad,n,T_ns,nu,nu_se,phase_rad,phase_se_rad";
}

std::string DatasetRow(const DataRow& r) {
  std::ostringstream o;
  o << model::ToString(r.family) << ',' << noise::ToString(r.mode) << ','
    << ToString(r.curve) << ',' << textio::Num(r.solid_angle) << ','
    << r.n_loops << ',' << textio::Num(r.duration * 1e9) << ','
    << textio::Num(r.nu) << ',' << textio::Num(r.nu_se) << ','
    << textio::Num(r.phase) << ',' << textio::Num(r.phase_se);
  return o.str();
}

std::string CoherenceDataset::ToCsv() const {
  std::string out = DatasetHeader() + "\n";
  for (const DataRow& r : rows) out += DatasetRow(r) + "\n";
  return out;
}

CoherenceDataset CoherenceDataset::FromCsv(std::string_view text,
                                           std::string provenance) {
  textio::CsvTable t;
  try {
    t = textio::ParseCsv(text);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("dataset: ") + e.what());
  }
  const char* required[] = {"protocol", "mode", "curve", "A_rad", "n",
                            "T_ns", "nu", "nu_se"};
  for (const char* c : required)
    if (t.Column(c) < 0)
      throw ConfigError(std::string("dataset is missing column '") + c + "'");
  const int ph = t.Column("phase_rad"), phs = t.Column("phase_se_rad");
  auto num = [](const std::string& s, const char* what) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError(std::string("dataset: bad ") + what + " '" + s + "'");
    }
  };
  CoherenceDataset ds;
  ds.provenance = std::move(provenance);
  for (const auto& row : t.rows) {
    DataRow r;
    r.family = model::ParseProtocol(row[std::size_t(t.Column("protocol"))]);
    if (r.family == Protocol::kDP)
      throw ConfigError("dataset rows must name the P or R block");
    r.mode = noise::ParseCorrelationMode(row[std::size_t(t.Column("mode"))]);
    r.curve = ParseCurve(row[std::size_t(t.Column("curve"))]);
    r.solid_angle = num(row[std::size_t(t.Column("A_rad"))], "A_rad");
    r.n_loops = static_cast<int>(num(row[std::size_t(t.Column("n"))], "n"));
    r.duration = num(row[std::size_t(t.Column("T_ns"))], "T_ns") * 1e-9;
    r.nu = num(row[std::size_t(t.Column("nu"))], "nu");
    r.nu_se = num(row[std::size_t(t.Column("nu_se"))], "nu_se");
    if (ph >= 0) r.phase = num(row[std::size_t(ph)], "phase_rad");
    if (phs >= 0) r.phase_se = num(row[std::size_t(phs)], "phase_se_rad");
    if (r.n_loops == 0 || !(r.duration > 0.0) || !(r.nu_se >= 0.0))
      throw ConfigError("dataset row has invalid n, T or nu_se");
    ds.rows.push_back(r);
  }
  return ds;
}

CoherenceDataset CoherenceDataset::Filter(std::optional<Protocol> family,
                                          std::optional<CorrelationMode> mode,
                                          std::optional<Curve> curve) const {
  CoherenceDataset out;
  out.provenance = provenance;
  for (const DataRow& r : rows) {
    if (family && r.family != *family) continue;
    if (mode && r.mode != *mode) continue;
    if (curve && r.curve != *curve) continue;
    out.rows.push_back(r);
  }
  return out;
}

std::string_view ToString(FitFamily family) {
  switch (family) {
    case FitFamily::kConstrained: return "constrained";
    case FitFamily::kUnconstrained: return "unconstrained";
    case FitFamily::kPerCell: return "per_cell";
  }
  return "?";
}

Calibration CalibrateAmplitude(const CoherenceDataset& dataset,
                               const FitOptions& opt) {
  std::vector<const DataRow*> rows;
  for (const DataRow& r : dataset.rows)
    if (r.family == Protocol::kR && r.mode == CorrelationMode::kFirstWindowOnly &&
        r.curve == Curve::kDynamicOnly)
      rows.push_back(&r);
  if (rows.empty())
    throw std::invalid_argument("calibration needs R first-window DP rows");
  std::vector<const DataRow*> used;
  for (const DataRow* r : rows)
    if (Usable(*r, opt.nu_floor)) used.push_back(r);
  Calibration cal;
  cal.n_used = used.size();
  if (used.empty()) {
    cal.degenerate = true;
    cal.std_error = kNaN;
    return cal;
  }
  const std::vector<double> sig = LogSigmas(used);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < used.size(); ++i) {
    const double x = RowBasis(*used[i], opt, 1.0).a / sig[i];
    const double y = -std::log(used[i]->nu) / sig[i];
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  if (!(sxx > 0.0)) {
    cal.degenerate = true;
    cal.std_error = kNaN;
    return cal;
  }
  cal.amplitude = sxy / sxx;
  const double rss = std::max(0.0, syy - sxy * sxy / sxx);
  const double dof = double(used.size()) - 1.0;
  cal.std_error = dof > 0 ? std::sqrt(rss / dof / sxx) : kNaN;
  bool all_unity = true;
  for (const DataRow* r : used)
    if (std::abs(std::log(r->nu)) > 1e-12) all_unity = false;
  if (all_unity) {
    cal.amplitude = 0.0;
    cal.degenerate = true;
    cal.std_error = kNaN;
  }
  return cal;
}

FitReport FitSimultaneous(const CoherenceDataset& dataset, Protocol protocol,
                          FitFamily family, const FitOptions& options) {
  if (protocol == Protocol::kDP)
    throw std::invalid_argument("simultaneous fits cover the P or R block");
  if (family == FitFamily::kPerCell)
    throw std::invalid_argument("use FitCell for per-cell fits");
  std::vector<const DataRow*> rows;
  for (const DataRow& r : dataset.rows)
    if (r.family == protocol) rows.push_back(&r);
  if (rows.empty()) throw std::invalid_argument("no rows for this protocol");
  return Solve(rows, TableModel(protocol, family, options.delta), protocol,
               family, options);
}

FitReport FitCell(const CoherenceDataset& dataset, Protocol protocol,
                  CorrelationMode mode, const FitOptions& options) {
  if (protocol == Protocol::kDP)
    throw std::invalid_argument("cells belong to the P or R block");
  std::vector<const DataRow*> rows;
  for (const DataRow& r : dataset.rows)
    if (r.family == protocol && r.mode == mode) rows.push_back(&r);
  if (rows.empty()) throw std::invalid_argument("no rows for this cell");
  FitReport rep = Solve(
      rows, CellModel(protocol, mode, options.delta, options.held_c_scale),
      protocol, FitFamily::kPerCell, options);
  rep.cell_mode = mode;
  return rep;
}

const ParameterEstimate* FitReport::Find(std::string_view name) const {
  for (const ParameterEstimate& p : parameters)
    if (p.name == name) return &p;
  return nullptr;
}

double Aicc(std::size_t n, std::size_t k, double rss) {
  if (!(n > k + 1)) throw std::invalid_argument("AICc needs N > k + 1");
  if (!(rss > 0.0)) throw std::invalid_argument("AICc needs RSS > 0");
  const double N = double(n), K = double(k);
  return N * std::log(rss / N) + 2.0 * K + 2.0 * K * (K + 1.0) / (N - K - 1.0);
}

std::string_view ToString(AiccSupport s) {
  switch (s) {
    case AiccSupport::kSubstantial: return "substantial";
    case AiccSupport::kIntermediate: return "intermediate";
    case AiccSupport::kLess: return "less";
    case AiccSupport::kWeak: return "weak";
    case AiccSupport::kNone: return "none";
  }
  return "?";
}

AiccSupport SupportForDelta(double d) {
  d = std::abs(d);
  if (d <= 2.0) return AiccSupport::kSubstantial;
  if (d < 4.0) return AiccSupport::kIntermediate;
  if (d <= 7.0) return AiccSupport::kLess;
  if (d <= 10.0) return AiccSupport::kWeak;
  return AiccSupport::kNone;
}

double TThreshold(double dof, double alpha) {
  if (!(dof > 0.0)) throw std::invalid_argument("t threshold needs dof > 0");
  const boost::math::students_t dist(dof);
  return boost::math::quantile(boost::math::complement(dist, alpha / 2.0));
}

std::vector<ParameterEstimate> TValues(const FitReport& report, double alpha) {
  const double dof = double(report.n_used) - double(report.k - 1);
  const double thr = TThreshold(dof, alpha);
  std::vector<ParameterEstimate> out;
  for (ParameterEstimate p : report.parameters) {
    if (!p.identifiable) continue;
    if (!(p.std_error > 0.0))
      throw NumericalError("zero standard error for parameter " + p.name);
    p.t_value = p.value / p.std_error;
    p.significant = std::abs(p.t_value) > thr;
    out.push_back(p);
  }
  return out;
}

ResidualDiagnostics DiagnoseResiduals(std::span<const double> residuals) {
  const std::size_t n = residuals.size();
  if (n < 10) throw std::invalid_argument("diagnostics need >= 10 residuals");
  std::vector<double> r(residuals.begin(), residuals.end());
  std::sort(r.begin(), r.end());
  ResidualDiagnostics d;
  double ss = 0.0;
  for (double v : r) ss += v * v;
  d.sigma = std::sqrt(ss / double(n));
  const boost::math::normal unit(0.0, 1.0);
  d.ks_critical = 1.628 / std::sqrt(double(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double q = boost::math::quantile(unit, (double(i) + 0.5) / double(n));
    d.points.push_back({d.sigma * q, r[i]});
    if (d.sigma > 0.0) {
      const double F = boost::math::cdf(unit, r[i] / d.sigma);
      d.ks_statistic = std::max({d.ks_statistic, std::abs(F - double(i) / double(n)),
                                 std::abs(F - double(i + 1) / double(n))});
    }
  }
  if (!(d.sigma > 0.0)) d.ks_statistic = 0.0;
  d.flagged = d.ks_statistic > d.ks_critical;
  return d;
}

std::string FitReport::ToJson() const {
  using Json = nlohmann::ordered_json;
  auto num = [](double v) -> Json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  Json j;
  j["protocol"] = std::string(model::ToString(protocol));
  j["family"] = std::string(ToString(family));
  if (cell_mode) j["mode"] = std::string(noise::ToString(*cell_mode));
  j["amplitude"] = num(amplitude);
  j["n_rows"] = n_rows;
  j["n_used"] = n_used;
  j["k"] = k;
  j["rss"] = num(rss);
  j["rss_nu"] = num(rss_nu);
  j["aicc"] = num(aicc);
  j["t_threshold"] = num(t_threshold);
  j["rank_deficient"] = rank_deficient;
  j["unidentifiable"] = unidentifiable;
  Json ps = Json::array();
  for (const ParameterEstimate& p : parameters) {
    Json q;
    q["name"] = p.name;
    q["value"] = num(p.value);
    q["std_error"] = num(p.std_error);
    q["t_value"] = num(p.t_value);
    q["significant"] = p.significant;
    q["identifiable"] = p.identifiable;
    ps.push_back(q);
  }
  j["parameters"] = ps;
  Json cov = Json::array();
  for (const auto& row : covariance) {
    Json r = Json::array();
    for (double v : row) r.push_back(num(v));
    cov.push_back(r);
  }
  j["covariance"] = cov;
  Json res = Json::array();
  for (double v : residuals) res.push_back(num(v));
  j["residuals"] = res;
  if (diagnostics) {
    Json d;
    d["sigma"] = num(diagnostics->sigma);
    d["ks_statistic"] = num(diagnostics->ks_statistic);
    d["ks_critical_99"] = num(diagnostics->ks_critical);
    d["flagged"] = diagnostics->flagged;
    Json pts = Json::array();
    for (const auto& p : diagnostics->points)
      pts.push_back(Json::array({num(p.theoretical), num(p.observed)}));
    d["normal_probability"] = pts;
    j["diagnostics"] = d;
  }
  return j.dump(1);
}

std::string FormatReports(std::span<const FitReport> reports) {
  std::ostringstream o;
  char line[160];
  for (const FitReport& r : reports) {
    o << "protocol " << model::ToString(r.protocol) << ", "
      << ToString(r.family);
    if (r.cell_mode) o << ", " << noise::ToString(*r.cell_mode);
    o << "  (N=" << r.n_used << "/" << r.n_rows << ", k=" << r.k << ")\n";
    for (const ParameterEstimate& p : r.parameters) {
      std::snprintf(line, sizeof(line), "  %-4s %12.5g +- %-11.4g t=%-9.3g %s\n",
                    p.name.c_str(), p.value, p.std_error, p.t_value,
                    !p.identifiable ? "unidentifiable"
                                    : (p.significant ? "significant" : ""));
      o << line;
    }
    std::snprintf(line, sizeof(line), "  RSS %.6g  RSS(nu) %.6g  AICc %.6g\n",
                  r.rss, r.rss_nu, r.aicc);
    o << line;
    if (r.diagnostics) {
      std::snprintf(line, sizeof(line),
                    "  residual sigma %.4g  KS %.4g (99%% band %.4g)%s\n",
                    r.diagnostics->sigma, r.diagnostics->ks_statistic,
                    r.diagnostics->ks_critical,
                    r.diagnostics->flagged ? "  flagged" : "");
      o << line;
    }
  }
  return o.str();
}

}  // namespace geodephase::fit
