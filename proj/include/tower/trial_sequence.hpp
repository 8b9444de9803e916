// Copyright 2026 The tower-conventions Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Trial sequences matching the repeated-pairs design: three tower pairs per
// repetition block, four blocks, positions balanced across the sequence.

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "tower/blockworld.hpp"
#include "tower/common.hpp"

namespace tower {

inline constexpr int kRepetitionBlocks = 4;
inline constexpr int kTrialsPerBlock = 3;
inline constexpr int kTrialsPerSequence = kRepetitionBlocks * kTrialsPerBlock;

struct TrialSpec {
  int repetition_block = 1;  // 1..4
  TowerId left = TowerId::A;
  TowerId right = TowerId::B;

  /// The unordered pair, smaller id first.
  std::pair<TowerId, TowerId> pair() const {
    return left < right ? std::pair{left, right} : std::pair{right, left};
  }

  bool operator==(const TrialSpec&) const = default;
};

struct TrialSequence {
  std::vector<TrialSpec> trials;
  std::uint64_t seed = 0;

  bool operator==(const TrialSequence&) const = default;
};

/// Empty string when the sequence satisfies the design, otherwise the first
/// violated constraint.
inline std::string check_trial_sequence(const TrialSequence& seq) {
  if (seq.trials.size() != static_cast<std::size_t>(kTrialsPerSequence))
    return "expected " + std::to_string(kTrialsPerSequence) + " trials";
  std::array<int, 3> left{}, right{};
  for (int block = 1; block <= kRepetitionBlocks; ++block) {
    std::array<int, 3> pair_seen{};
    for (int k = 0; k < kTrialsPerBlock; ++k) {
      const auto& t = seq.trials[static_cast<std::size_t>((block - 1) * kTrialsPerBlock + k)];
      if (t.repetition_block != block) return "trial in wrong repetition block";
      if (t.left == t.right) return "left and right tower must differ";
      // Pair index: the id missing from the pair.
      const int missing = 3 - static_cast<int>(t.left) - static_cast<int>(t.right);
      if (pair_seen[static_cast<std::size_t>(missing)]++) return "pair repeated within a block";
      ++left[static_cast<std::size_t>(t.left)];
      ++right[static_cast<std::size_t>(t.right)];
    }
  }
  for (int i = 0; i < 3; ++i)
    if (left[static_cast<std::size_t>(i)] != 4 || right[static_cast<std::size_t>(i)] != 4)
      return "each tower must appear 4 times on each side";
  return {};
}

/// Shuffles the three pairs within each block and draws orientations,
/// resampling orientations until every tower sits on each side 4 times.
inline TrialSequence generate_trial_sequence(std::uint64_t seed) {
  Rng rng(seed);
  TrialSequence seq;
  seq.seed = seed;
  constexpr std::array<std::pair<TowerId, TowerId>, 3> kPairs{{
      {TowerId::A, TowerId::B},
      {TowerId::A, TowerId::C},
      {TowerId::B, TowerId::C},
  }};
  for (int block = 1; block <= kRepetitionBlocks; ++block) {
    auto order = kPairs;
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.below(i)]);
    for (const auto& [a, b] : order) seq.trials.push_back({block, a, b});
  }
  for (;;) {
    std::array<int, 3> left{};
    for (auto& t : seq.trials) {
      const auto [a, b] = t.pair();
      const bool flip = rng.below(2) == 1;
      t.left = flip ? b : a;
      t.right = flip ? a : b;
      ++left[static_cast<std::size_t>(t.left)];
    }
    if (left == std::array<int, 3>{4, 4, 4}) break;
  }
  return seq;
}

}  // namespace tower
