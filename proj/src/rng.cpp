// Copyright 2026 The oais Authors
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

#include "oais/rng.hpp"

namespace oais {

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

SeededStream::SeededStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

double SeededStream::normal() { return normal_(engine_); }

double SeededStream::uniform() { return uniform_(engine_); }

Eigen::VectorXd SeededStream::normal_vector(Eigen::Index n) {
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out[i] = normal_(engine_);
  }
  return out;
}

SeededStream SeededStream::substream(std::uint64_t tag) const {
  return SeededStream(mix_seed(mix_seed(seed_) ^ mix_seed(tag + 1)));
}

}  // namespace oais
