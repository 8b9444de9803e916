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

// Aggregate metrics over dyad traces and Jensen-Shannon divergence.

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "tower/common.hpp"
#include "tower/simulation.hpp"
#include "tower/trial_sequence.hpp"

namespace tower {

inline constexpr std::array<StepLevel, 5> kAbstractionColumns = {
    StepLevel::block, StepLevel::sub_tower, StepLevel::tower, StepLevel::scene, StepLevel::other};

inline constexpr std::array<FragmentLevel, 4> kFragmentColumns = {
    FragmentLevel::sub_tower, FragmentLevel::tower, FragmentLevel::scene, FragmentLevel::other};

/// Row t (0..12): mean over traces of the fraction of library fragments at
/// each level after trial t. Row 0 is the empty starting library.
struct FragmentTrajectory {
  std::vector<std::array<double, 4>> proportion;
  std::vector<double> mean_fragments;
};

inline FragmentTrajectory fragment_trajectory(const std::vector<DyadTrace>& traces) {
  FragmentTrajectory out;
  out.proportion.assign(kTrialsPerSequence + 1, {0, 0, 0, 0});
  out.mean_fragments.assign(kTrialsPerSequence + 1, 0.0);
  if (traces.empty()) return out;
  for (const auto& tr : traces) {
    for (std::size_t t = 0; t < tr.records.size() && t < kTrialsPerSequence; ++t) {
      const auto& ids = tr.records[t].library_after;
      out.mean_fragments[t + 1] += static_cast<double>(ids.size());
      if (ids.empty()) continue;
      for (const auto id : ids) {
        const auto it = tr.levels.find(id.value);
        const auto level = it == tr.levels.end() ? FragmentLevel::other : it->second;
        for (std::size_t c = 0; c < kFragmentColumns.size(); ++c)
          if (kFragmentColumns[c] == level) out.proportion[t + 1][c] += 1.0 / static_cast<double>(ids.size());
      }
    }
  }
  const double n = static_cast<double>(traces.size());
  for (auto& row : out.proportion)
    for (auto& v : row) v /= n;
  for (auto& v : out.mean_fragments) v /= n;
  return out;
}

/// Trial index (1-based) at which a fragment of `level` first enters the
/// library, or 0 if it never does.
inline int first_adoption_trial(const DyadTrace& tr, FragmentLevel level) {
  for (const auto& r : tr.records)
    for (const auto& a : r.adopted)
      if (a.level == level) return r.index;
  return 0;
}

/// Row b (repetition block 1..4): mean over dyads of the share of
/// block-placing instruction steps at each abstraction level. Pure move steps
/// carry no block and are left out. Dyads with no placing step in a block are
/// skipped for that row.
using AbstractionTable = std::array<std::array<double, 5>, kRepetitionBlocks>;

inline AbstractionTable abstraction_proportions(const std::vector<DyadTrace>& traces) {
  AbstractionTable out{};
  std::array<int, kRepetitionBlocks> dyads{};
  for (const auto& tr : traces) {
    std::array<std::array<double, 5>, kRepetitionBlocks> counts{};
    std::array<double, kRepetitionBlocks> totals{};
    for (const auto& r : tr.records) {
      const int b = r.spec.repetition_block - 1;
      if (b < 0 || b >= kRepetitionBlocks) continue;
      for (const auto& s : r.steps) {
        if (s.level == StepLevel::move) continue;
        for (std::size_t c = 0; c < kAbstractionColumns.size(); ++c)
          if (kAbstractionColumns[c] == s.level) counts[b][c] += 1.0;
        totals[b] += 1.0;
      }
    }
    for (int b = 0; b < kRepetitionBlocks; ++b) {
      if (totals[b] == 0.0) continue;
      ++dyads[b];
      for (std::size_t c = 0; c < 5; ++c) out[b][c] += counts[b][c] / totals[b];
    }
  }
  for (int b = 0; b < kRepetitionBlocks; ++b)
    if (dyads[b] > 0)
      for (auto& v : out[b]) v /= dyads[b];
  return out;
}

struct BlockPerformance {
  double accuracy = 0.0;  // mean F1
  double tokens = 0.0;    // mean tokens sent per trial
  int trials = 0;
};

inline std::array<BlockPerformance, kRepetitionBlocks> accuracy_and_efficiency(
    const std::vector<DyadTrace>& traces) {
  std::array<BlockPerformance, kRepetitionBlocks> out{};
  for (const auto& tr : traces)
    for (const auto& r : tr.records) {
      const int b = r.spec.repetition_block - 1;
      if (b < 0 || b >= kRepetitionBlocks) continue;
      out[b].accuracy += r.f1;
      out[b].tokens += r.tokens_sent;
      ++out[b].trials;
    }
  for (auto& p : out)
    if (p.trials > 0) {
      p.accuracy /= p.trials;
      p.tokens /= p.trials;
    }
  return out;
}

namespace detail {

inline std::vector<double> normalized(const std::vector<double>& p) {
  double sum = 0.0;
  for (const double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("jsd: weights must be finite and nonnegative");
    sum += v;
  }
  if (!(sum > 0.0)) throw ConfigError("jsd: distribution has zero mass");
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] / sum;
  return out;
}

inline double kl_to_mixture(const std::vector<double>& p, const std::vector<double>& m) {
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) d += p[i] * std::log2(p[i] / m[i]);
  return d;
}

}  // namespace detail

/// Jensen-Shannon divergence in bits; inputs are normalized first.
inline double jsd(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw ConfigError("jsd: support sizes differ");
  const auto a = detail::normalized(p);
  const auto b = detail::normalized(q);
  std::vector<double> m(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) m[i] = 0.5 * (a[i] + b[i]);
  const double d = 0.5 * detail::kl_to_mixture(a, m) + 0.5 * detail::kl_to_mixture(b, m);
  return std::clamp(d, 0.0, 1.0);
}

inline double jsd(const std::map<std::string, double>& p, const std::map<std::string, double>& q) {
  std::map<std::string, std::size_t> index;
  for (const auto& [k, v] : p) index.emplace(k, index.size());
  for (const auto& [k, v] : q) index.emplace(k, index.size());
  std::vector<double> a(index.size(), 0.0), b(index.size(), 0.0);
  for (const auto& [k, v] : p) a[index[k]] = v;
  for (const auto& [k, v] : q) b[index[k]] = v;
  return jsd(a, b);
}

/// Word frequencies of one dyad within a repetition block (1-based).
inline std::map<std::string, double> word_distribution(const DyadTrace& tr, int block) {
  std::map<std::string, double> out;
  for (const auto& r : tr.records)
    if (r.spec.repetition_block == block)
      for (const auto& w : r.utterance.words) out[w.surface] += 1.0;
  return out;
}

/// Mean JSD between word distributions of all dyad pairs, per block.
inline std::array<double, kRepetitionBlocks> mean_pairwise_jsd(const std::vector<DyadTrace>& traces) {
  std::array<double, kRepetitionBlocks> out{};
  for (int b = 1; b <= kRepetitionBlocks; ++b) {
    std::vector<std::map<std::string, double>> dists;
    for (const auto& tr : traces) {
      auto d = word_distribution(tr, b);
      if (!d.empty()) dists.push_back(std::move(d));
    }
    double sum = 0.0;
    int pairs = 0;
    for (std::size_t i = 0; i < dists.size(); ++i)
      for (std::size_t j = i + 1; j < dists.size(); ++j) {
        sum += jsd(dists[i], dists[j]);
        ++pairs;
      }
    out[b - 1] = pairs > 0 ? sum / pairs : 0.0;
  }
  return out;
}

}  // namespace tower
