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

#ifndef GEODEPHASE_CORE_TEXTIO_HPP_
#define GEODEPHASE_CORE_TEXTIO_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace geodephase::textio {

// Locale-independent shortest-round-trip-ish formatting (%.12g) so that text
// outputs are byte-stable across runs.
std::string Num(double value);
std::string Num(double value, int precision);

// 64-bit FNV-1a.
std::uint64_t Fnv1a(std::string_view bytes);
std::string Hex64(std::uint64_t value);

// Minimal CSV reader: comma separated, no quoting, first row is the header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index by name, or -1.
  int Column(std::string_view name) const;
};
CsvTable ParseCsv(std::string_view text);

std::string ReadFile(const std::string& path);
void WriteFile(const std::string& path, std::string_view content);

}  // namespace geodephase::textio

#endif  // GEODEPHASE_CORE_TEXTIO_HPP_
