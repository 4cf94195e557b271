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

#ifndef GEODEPHASE_CORE_COMMON_HPP_
#define GEODEPHASE_CORE_COMMON_HPP_

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace geodephase {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Error taxonomy shared by the C API and the CLI exit codes.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline int Sign(double x) { return (x > 0.0) - (x < 0.0); }
inline int Sign(int x) { return (x > 0) - (x < 0); }

// Wraps an angle into (-pi, pi].
inline double WrapPhase(double x) {
  double y = std::remainder(x, kTwoPi);
  if (y <= -kPi) y += kTwoPi;
  return y;
}

}  // namespace geodephase

#endif  // GEODEPHASE_CORE_COMMON_HPP_
