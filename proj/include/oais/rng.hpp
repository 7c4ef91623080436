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

#ifndef OAIS_RNG_HPP
#define OAIS_RNG_HPP

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace oais {

/// Mixes a 64-bit word (splitmix64 finalizer). Used to derive substream seeds.
std::uint64_t mix_seed(std::uint64_t x);

/// Deterministic seeded random stream with cheap substream derivation.
///
/// A stream is owned by exactly one logical execution at a time. Replicates
/// and the gradient/integration halves of a run each get their own substream,
/// so results do not depend on scheduling or on how many draws other parts
/// of the program consume.
class SeededStream {
 public:
  explicit SeededStream(std::uint64_t seed);

  /// One standard normal draw.
  double normal();

  /// One uniform draw on [0, 1).
  double uniform();

  /// n independent standard normal draws.
  Eigen::VectorXd normal_vector(Eigen::Index n);

  /// Independent child stream identified by `tag`.
  SeededStream substream(std::uint64_t tag) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace oais

#endif  // OAIS_RNG_HPP
