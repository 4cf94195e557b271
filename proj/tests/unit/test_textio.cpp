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

#include <cmath>
#include <numbers>

#include "catch_amalgamated.hpp"
#include "textio.hpp"

namespace tx = geodephase::textio;

TEST_CASE("numbers format without locale noise", "[textio]") {
  CHECK(tx::Num(0.0) == "0");
  CHECK(tx::Num(100.0) == "100");
  CHECK(tx::Num(0.1) == "0.1");
  CHECK(tx::Num(-2.5e-9) == "-2.5e-09");
  CHECK(std::stod(tx::Num(std::numbers::pi)) == Catch::Approx(std::numbers::pi).epsilon(1e-12));
}

TEST_CASE("fnv1a matches reference values", "[textio]") {
  CHECK(tx::Fnv1a("") == 0xcbf29ce484222325ull);
  CHECK(tx::Fnv1a("a") == 0xaf63dc4c8601ec8cull);
  CHECK(tx::Hex64(0xabcull) == "0000000000000abc");
}

TEST_CASE("csv parsing resolves columns", "[textio]") {
  const tx::CsvTable t = tx::ParseCsv("x,y\n1,2\n3,4\n");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.Column("y") == 1);
  CHECK(t.Column("z") == -1);
  CHECK(t.rows[1][0] == "3");
}

TEST_CASE("csv tolerates crlf and trailing blank lines", "[textio]") {
  const tx::CsvTable t = tx::ParseCsv("a,b\r\n5,6\r\n\r\n");
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0][1] == "6");
}
