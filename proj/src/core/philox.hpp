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

#ifndef GEODEPHASE_CORE_PHILOX_HPP_
#define GEODEPHASE_CORE_PHILOX_HPP_

#include <array>
#include <cstdint>

namespace geodephase::noise {

// Philox4x32-10 (Salmon et al., SC'11). Counter-based: every output block is
// a pure function of (key, counter), so streams never need to be advanced
// serially and any realization can be regenerated in isolation.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Block Generate(Block counter, Key key);
};

// Names a stream of standard normals: the RNG key is the seed, the counter
// carries (block index, realization, stream tag). Two distinct StreamIds
// never share a Philox block.
struct StreamId {
  std::uint64_t seed = 0;
  std::uint32_t realization = 0;
  std::uint32_t stream = 0;
};

// Sequential reader of N(0,1) deviates over one StreamId. Each Philox block
// yields two deviates through Box-Muller.
class NormalStream {
 public:
  explicit NormalStream(const StreamId& id);

  double Next();
  // Uniform on (0, 1]; consumes half a block.
  double NextUniform();

 private:
  void Refill();

  StreamId id_;
  std::uint64_t block_ = 0;
  std::array<double, 2> cache_{};
  int cached_ = 0;
};

}  // namespace geodephase::noise

#endif  // GEODEPHASE_CORE_PHILOX_HPP_
