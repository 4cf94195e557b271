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

#ifndef GEODEPHASE_CORE_FIT_HPP_
#define GEODEPHASE_CORE_FIT_HPP_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "model.hpp"
#include "noise.hpp"

namespace geodephase::fit {

// Curve labels carry sgn(n) of window 1 and window 2.
enum class Curve { kPlusPlus, kMinusMinus, kPlusMinus, kMinusPlus, kDynamicOnly };

std::string_view ToString(Curve curve);  // "C++", "C--", "C+-", "C-+", "DP"
Curve ParseCurve(std::string_view text);
Curve CurveFor(model::Protocol protocol, int first_window_sign);
int FirstWindowSign(Curve curve);  // 0 for DP

struct DataRow {
  model::Protocol family = model::Protocol::kR;  // P or R block
  noise::CorrelationMode mode = noise::CorrelationMode::kFirstWindowOnly;
  Curve curve = Curve::kDynamicOnly;
  double solid_angle = 0.0;  // |A|, rad
  int n_loops = 1;           // signed window-1 loops (|n| for DP)
  double duration = 0.0;     // s
  double nu = 1.0;
  double nu_se = 0.0;
  double phase = 0.0;
  double phase_se = 0.0;
};

// Columns: protocol, mode, curve, A_rad, n, T_ns, nu, nu_se, phase_rad,
// phase_se_rad. Extra columns are ignored on input.
struct CoherenceDataset {
  std::vector<DataRow> rows;
  std::string provenance;

  static CoherenceDataset FromCsv(std::string_view text,
                                  std::string provenance = "csv");
  std::string ToCsv() const;
  CoherenceDataset Filter(std::optional<model::Protocol> family,
                          std::optional<noise::CorrelationMode> mode,
                          std::optional<Curve> curve = std::nullopt) const;
};

std::string DatasetHeader();
std::string DatasetRow(const DataRow& row);

enum class FitFamily {
  kConstrained,    // primed parameters held at zero
  kUnconstrained,  // b', b'' (R) or b' (P) free
  kPerCell,        // one (protocol, mode) cell on its own
};
std::string_view ToString(FitFamily family);

struct FitOptions {
  double delta = model::kDefaultDelta;  // rad/s
  double gamma = 1e7;                   // 1/s
  double nu_floor = 0.1;                // rows below are dropped
  double amplitude = 0.0;               // sigma^2 / omega0^2
  double alpha = 0.05;                  // two-sided t-test level
  // Per-cell fits leave c free only in correlated cells; elsewhere c is held
  // at this multiple of the theory value (0 reproduces the verbatim
  // fitting-function table).
  double held_c_scale = 1.0;
};

struct Calibration {
  double amplitude = 0.0;
  double std_error = 0.0;
  std::size_t n_used = 0;
  bool degenerate = false;
};

// One-parameter fit of the R first-window DP rows with (a, b, c) = (1, 0, 0).
Calibration CalibrateAmplitude(const CoherenceDataset& dataset,
                               const FitOptions& options);

struct ParameterEstimate {
  std::string name;
  double value = 0.0;
  double std_error = 0.0;
  double t_value = 0.0;
  bool significant = false;
  bool identifiable = true;
};

struct NormalProbabilityPoint {
  double theoretical = 0.0;  // sigma * Phi^-1((i - 1/2) / n)
  double observed = 0.0;     // i-th sorted residual
};

struct ResidualDiagnostics {
  std::vector<NormalProbabilityPoint> points;
  double sigma = 0.0;         // RMS about zero
  double ks_statistic = 0.0;  // vs N(0, sigma^2)
  double ks_critical = 0.0;   // 99% band, 1.628 / sqrt(n)
  bool flagged = false;
};

struct FitReport {
  model::Protocol protocol = model::Protocol::kR;
  FitFamily family = FitFamily::kConstrained;
  std::optional<noise::CorrelationMode> cell_mode;  // per-cell fits only
  std::vector<ParameterEstimate> parameters;
  std::vector<std::vector<double>> covariance;
  double rss = 0.0;     // weighted log-space objective
  double rss_nu = 0.0;  // unweighted, coherence space
  double aicc = 0.0;
  std::size_t n_rows = 0;
  std::size_t n_used = 0;
  std::size_t k = 0;  // parameters + 1 (residual variance)
  double t_threshold = 0.0;
  double amplitude = 0.0;
  bool rank_deficient = false;
  std::vector<std::string> unidentifiable;
  std::vector<double> residuals;  // nu - nu_hat, used rows, input order
  std::vector<std::size_t> used_rows;
  std::optional<ResidualDiagnostics> diagnostics;

  const ParameterEstimate* Find(std::string_view name) const;
  std::string ToJson() const;
};

FitReport FitSimultaneous(const CoherenceDataset& dataset,
                          model::Protocol protocol, FitFamily family,
                          const FitOptions& options);

FitReport FitCell(const CoherenceDataset& dataset, model::Protocol protocol,
                  noise::CorrelationMode mode, const FitOptions& options);

// AICc = N ln(RSS/N) + 2k + 2k(k+1)/(N-k-1).
double Aicc(std::size_t n, std::size_t k, double rss);

enum class AiccSupport { kSubstantial, kIntermediate, kLess, kWeak, kNone };
std::string_view ToString(AiccSupport support);
// Rule of thumb on the AICc gap to the better model.
AiccSupport SupportForDelta(double delta_aicc);

// Two-sided Student-t critical value at dof.
double TThreshold(double dof, double alpha = 0.05);
// t = estimate / se with significance flags; throws on a zero error.
std::vector<ParameterEstimate> TValues(const FitReport& report,
                                       double alpha = 0.05);

ResidualDiagnostics DiagnoseResiduals(std::span<const double> residuals);

// Fixed-width text rendering of one or more reports.
std::string FormatReports(std::span<const FitReport> reports);

}  // namespace geodephase::fit

#endif  // GEODEPHASE_CORE_FIT_HPP_
