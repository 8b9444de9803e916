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

// The Architect-Builder interaction loop over a trial sequence, the
// experiment runner, and aggregate metrics over dyad traces.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "tower/blockworld.hpp"
#include "tower/common.hpp"
#include "tower/dsl.hpp"
#include "tower/library_learning.hpp"
#include "tower/pragmatics.hpp"
#include "tower/trial_sequence.hpp"

namespace tower {

/// Stimuli and scene layout shared by every dyad of an experiment.
struct TaskSetup {
  std::vector<TowerStimulus> stimuli = stimulus_towers();
  SceneConfig scene;

  Scene target(const TrialSpec& t) const {
    return compose_scene(find_tower(stimuli, t.left), find_tower(stimuli, t.right), scene);
  }

  void validate() const {
    if (stimuli.size() != 3) throw ConfigError("stimuli: expected exactly 3 towers");
    for (const auto id : kTowerIds) check_tower_shape(find_tower(stimuli, id));
    for (const auto& a : stimuli) {
      if (!validate_constructible(tower_scene(a, 0, {scene.width, scene.height, 0, 0})))
        throw ConfigError("stimuli: tower " + a.name + " is not constructible");
      for (const auto& b : stimuli) {
        if (a.id == b.id) continue;
        const auto s = compose_scene(a, b, scene);
        if (!validate_constructible(s))
          throw ConfigError("stimuli: scene " + a.name + b.name + " is not constructible");
      }
    }
  }
};

/// Abstraction level of one instruction step.
enum class StepLevel : std::uint8_t { block, move, sub_tower, tower, scene, other };

inline std::string to_string(StepLevel l) {
  switch (l) {
    case StepLevel::block: return "block";
    case StepLevel::move: return "move";
    case StepLevel::sub_tower: return "sub_tower";
    case StepLevel::tower: return "tower";
    case StepLevel::scene: return "scene";
    case StepLevel::other: return "other";
  }
  return "other";
}

inline StepLevel step_level(FragmentLevel l) {
  switch (l) {
    case FragmentLevel::sub_tower: return StepLevel::sub_tower;
    case FragmentLevel::tower: return StepLevel::tower;
    case FragmentLevel::scene: return StepLevel::scene;
    case FragmentLevel::other: return StepLevel::other;
  }
  return StepLevel::other;
}

struct AdoptedFragment {
  FragmentId id;
  FragmentLevel level = FragmentLevel::other;
  double score_delta = 0.0;
};

/// Library learning depends only on the scenes seen, so a trajectory can be
/// computed once per sequence and shared by every dyad that runs it.
struct LibraryTrajectory {
  std::vector<std::vector<AdoptedFragment>> adopted;  // per trial
  std::vector<Library> after;                          // library after each trial
  std::map<int, FragmentLevel> levels;                 // fragment id -> level

  FragmentLevel level_of(FragmentId id) const {
    const auto it = levels.find(id.value);
    return it == levels.end() ? FragmentLevel::other : it->second;
  }
};

inline LibraryTrajectory learn_library_trajectory(const TrialSequence& seq, const LearningConfig& lcfg,
                                                  const TaskSetup& setup) {
  LibraryTrajectory out;
  std::vector<Program> observed;
  Library lib;
  for (const auto& t : seq.trials) {
    observed.push_back(canonical_program(setup.target(t)));
    auto update = update_library(std::move(lib), observed, lcfg);
    lib = std::move(update.library);
    std::vector<AdoptedFragment> added;
    for (const auto& a : update.adopted) {
      const auto level = classify_fragment(lib.at(a.id), setup.stimuli, setup.scene);
      out.levels[a.id.value] = level;
      added.push_back({a.id, level, a.score_delta});
    }
    out.adopted.push_back(std::move(added));
    out.after.push_back(lib);
  }
  return out;
}

struct StepRecord {
  Token intended;
  Word word;
  Token interpreted;
  std::vector<BlockPlacement> placements;
  StepLevel level = StepLevel::block;
  double entropy_after = 0.0;
};

struct TrialRecord {
  int index = 0;  // 1-based
  TrialSpec spec;
  Program chosen;
  Utterance utterance;
  std::vector<ArchitectCandidate> candidates;
  std::vector<StepRecord> steps;
  std::vector<BlockPlacement> builder_placements;
  double f1 = 0.0;
  int tokens_sent = 0;
  double entropy_before = 0.0;
  std::vector<AdoptedFragment> adopted;
  std::vector<FragmentId> library_after;

  std::vector<StepLevel> step_levels() const {
    std::vector<StepLevel> out;
    for (const auto& s : steps) out.push_back(s.level);
    return out;
  }
};

struct DyadConfig {
  PragmaticsConfig pragmatics;
  LearningConfig learning;
};

struct DyadTrace {
  DyadConfig config;
  std::uint64_t seed = 0;
  int sequence_index = 0;
  int iteration = 0;
  TrialSequence sequence;
  std::vector<TrialRecord> records;
  Library final_library;
  BeliefState final_belief;
  BuilderState builder;
  std::map<int, FragmentLevel> levels;
};

/// One dyad: per trial the Architect picks a program and utterance, the
/// Builder interprets word by word while the Architect watches each step,
/// then both share the library update for the scenes seen so far.
inline DyadTrace run_dyad(const TrialSequence& sequence, const DyadConfig& cfg, const TaskSetup& setup,
                          Rng& rng, const LibraryTrajectory* cached = nullptr) {
  cfg.pragmatics.validate();
  cfg.learning.validate();
  std::optional<LibraryTrajectory> own;
  if (!cached) {
    own = learn_library_trajectory(sequence, cfg.learning, setup);
    cached = &*own;
  }
  DyadTrace trace;
  trace.config = cfg;
  trace.sequence = sequence;
  Library library;
  BeliefState belief;
  BuilderState builder;

  for (std::size_t i = 0; i < sequence.trials.size(); ++i) {
    const auto& spec = sequence.trials[i];
    const Scene target = setup.target(spec);
    TrialRecord rec;
    rec.index = static_cast<int>(i) + 1;
    rec.spec = spec;
    rec.entropy_before = belief.entropy_bits();

    auto choice = architect_choose(target, library, belief, cfg.pragmatics, rng);
    rec.chosen = choice.program();
    rec.utterance = choice.utterance();
    rec.tokens_sent = token_length(rec.chosen);
    rec.candidates = std::move(choice.candidates);

    BuilderView view{GridState::empty(target.width(), target.height()), canonical_start(target)};
    for (std::size_t k = 0; k < rec.chosen.tokens.size(); ++k) {
      const Token& intended = rec.chosen.tokens[k];
      const Word& word = rec.utterance.words[k];
      const Token meant = builder_interpret(word, builder, library, rng);
      Program step;
      step.tokens.push_back(meant);
      auto result = execute(step, library, view.hand, view.grid, ExecutionPolicy::lenient);
      belief = update_belief(std::move(belief), word, result.placements, view, library);
      StepRecord s;
      s.intended = intended;
      s.word = word;
      s.interpreted = meant;
      s.placements = result.placements;
      s.level = intended.is_chunk()  ? step_level(cached->level_of(intended.fragment()))
                : intended.is_move() ? StepLevel::move
                                     : StepLevel::block;
      s.entropy_after = belief.entropy_bits();
      rec.builder_placements.insert(rec.builder_placements.end(), result.placements.begin(),
                                    result.placements.end());
      rec.steps.push_back(std::move(s));
      view.grid = std::move(result.grid);
      view.hand = result.hand;
    }
    rec.f1 = f1_score(target, Scene::from_grid(view.grid));

    library = cached->after[i];
    rec.adopted = cached->adopted[i];
    std::vector<FragmentId> fresh;
    for (const auto& a : rec.adopted) fresh.push_back(a.id);
    belief.extend(fresh);
    for (const auto& f : library.fragments()) rec.library_after.push_back(f.id);
    trace.records.push_back(std::move(rec));
  }
  trace.final_library = std::move(library);
  trace.final_belief = std::move(belief);
  trace.builder = std::move(builder);
  trace.levels = cached->levels;
  return trace;
}

struct ExperimentConfig {
  int n_sequences = 49;
  int iterations = 2;
  std::uint64_t master_seed = 0;
  std::vector<DyadConfig> configs;
  int jobs = 1;

  void validate() const {
    if (n_sequences < 0) throw ConfigError("n_sequences: must be nonnegative");
    if (iterations < 0) throw ConfigError("iterations: must be nonnegative");
    if (jobs < 1) throw ConfigError("jobs: must be at least 1");
    for (const auto& c : configs) {
      c.pragmatics.validate();
      c.learning.validate();
    }
  }
};

struct ConfigResult {
  DyadConfig config;
  std::vector<DyadTrace> traces;  // sequence-major, then iteration
};

struct ExperimentResult {
  std::vector<TrialSequence> sequences;
  std::vector<ConfigResult> results;
};

inline std::uint64_t sequence_seed(std::uint64_t master, int index) {
  return derive_seed(master, 0x5E0ULL, static_cast<std::uint64_t>(index));
}

/// Dyads share their random stream across configs so configs are compared
/// on common random numbers.
inline std::uint64_t dyad_seed(std::uint64_t master, int sequence_index, int iteration) {
  return derive_seed(master, 0xD7ADULL, static_cast<std::uint64_t>(sequence_index),
                     static_cast<std::uint64_t>(iteration));
}

namespace detail {

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Each index writes only
/// its own slot, so output does not depend on scheduling.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const auto workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const TaskSetup& setup = {}) {
  cfg.validate();
  setup.validate();
  ExperimentResult out;
  for (int i = 0; i < cfg.n_sequences; ++i)
    out.sequences.push_back(generate_trial_sequence(sequence_seed(cfg.master_seed, i)));

  // Distinct learning configs need distinct trajectories.
  std::vector<LearningConfig> learning_keys;
  std::vector<std::size_t> learning_of(cfg.configs.size());
  for (std::size_t c = 0; c < cfg.configs.size(); ++c) {
    const auto& l = cfg.configs[c].learning;
    auto it = std::find_if(learning_keys.begin(), learning_keys.end(), [&](const LearningConfig& k) {
      return k.w == l.w && k.size_rule == l.size_rule &&
             k.max_fragments_per_trial == l.max_fragments_per_trial;
    });
    learning_of[c] = static_cast<std::size_t>(it - learning_keys.begin());
    if (it == learning_keys.end()) learning_keys.push_back(l);
  }
  const std::size_t n_seq = out.sequences.size();
  std::vector<LibraryTrajectory> trajectories(learning_keys.size() * n_seq);
  detail::parallel_for(trajectories.size(), cfg.jobs, [&](std::size_t k) {
    trajectories[k] = learn_library_trajectory(out.sequences[k % n_seq], learning_keys[k / n_seq], setup);
  });

  const auto iterations = static_cast<std::size_t>(cfg.iterations);
  const std::size_t per_config = n_seq * iterations;
  out.results.resize(cfg.configs.size());
  for (std::size_t c = 0; c < cfg.configs.size(); ++c) {
    out.results[c].config = cfg.configs[c];
    out.results[c].traces.resize(per_config);
  }
  detail::parallel_for(cfg.configs.size() * per_config, cfg.jobs, [&](std::size_t k) {
    const std::size_t c = k / per_config;
    const std::size_t d = k % per_config;
    const int s = static_cast<int>(d / iterations);
    const int it = static_cast<int>(d % iterations);
    const auto seed = dyad_seed(cfg.master_seed, s, it);
    Rng rng(seed);
    const auto& traj = trajectories[learning_of[c] * n_seq + static_cast<std::size_t>(s)];
    auto trace = run_dyad(out.sequences[static_cast<std::size_t>(s)], cfg.configs[c], setup, rng, &traj);
    trace.seed = seed;
    trace.sequence_index = s;
    trace.iteration = it;
    out.results[c].traces[d] = std::move(trace);
  });
  return out;
}

}  // namespace tower
