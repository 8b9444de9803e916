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

// Subcommands behind the towersim tool. Each validates its whole
// configuration before touching the filesystem.

#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tower/io.hpp"
#include "tower/simulation.hpp"

namespace tower::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kIoError = 3 };

/// Maps an exception thrown by a command to its exit code.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kConfigError;
  if (dynamic_cast<const IoError*>(&e)) return kIoError;
  if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return kIoError;
  return kFailure;
}

inline TaskSetup load_setup(const std::string& stimuli_path) {
  if (stimuli_path.empty()) {
    TaskSetup s;
    s.validate();
    return s;
  }
  return io::read_setup_file(stimuli_path);
}

// ---- gen-seq ----

inline std::vector<TrialSequence> generate_sequences(std::uint64_t seed, int count) {
  if (count < 0) throw ConfigError("count: must be nonnegative");
  std::vector<TrialSequence> out;
  for (int i = 0; i < count; ++i) out.push_back(generate_trial_sequence(sequence_seed(seed, i)));
  return out;
}

/// Writes `count` sequences; "-" means standard output.
inline void cmd_gen_seq(std::uint64_t seed, int count, const std::string& out_path, std::ostream& stdout_) {
  const auto text = io::dump(io::sequences_to_json(generate_sequences(seed, count)));
  if (out_path == "-")
    stdout_ << text;
  else
    io::write_text(out_path, text);
}

// ---- learn ----

struct LearnOptions {
  std::string sequences_path;
  double w = 1.5;
  std::string size_rule = "body_token_sum";
  std::string stimuli_path;
  std::string out_path = "-";
};

inline io::json learn_document(const std::vector<TrialSequence>& seqs, const LearningConfig& lcfg,
                               const TaskSetup& setup) {
  io::json arr = io::json::array();
  for (const auto& s : seqs) arr.push_back(io::trajectory_to_json(s, learn_library_trajectory(s, lcfg, setup)));
  return io::json{{"format", "tower-library-trajectory"}, {"version", io::kFormatVersion},
                  {"learning", io::to_json(lcfg)}, {"sequences", arr}};
}

inline void cmd_learn(const LearnOptions& o, std::ostream& stdout_) {
  LearningConfig lcfg;
  lcfg.w = o.w;
  lcfg.size_rule = size_rule_from_string(o.size_rule);
  lcfg.validate();
  const auto setup = load_setup(o.stimuli_path);
  const auto seqs = io::sequences_from_json(io::parse_json(io::read_text(o.sequences_path), o.sequences_path));
  const auto text = io::dump(learn_document(seqs, lcfg, setup));
  if (o.out_path == "-")
    stdout_ << text;
  else
    io::write_text(o.out_path, text);
}

// ---- simulate ----

struct RunConfig {
  std::vector<double> w = {1.5, 3.2, 9.6};
  double alpha = 5.0;
  std::vector<double> beta = {0.0, 0.3, 0.8};
  int n_sequences = 49;
  int iterations = 2;
  std::uint64_t master_seed = 0;
  std::string out = "out";
  std::string stimuli;
  std::string size_rule = "body_token_sum";
  int max_candidates = 4;
  int jobs = 1;

  /// Full grid, w-major.
  ExperimentConfig experiment() const {
    if (w.empty()) throw ConfigError("w: at least one value required");
    if (beta.empty()) throw ConfigError("beta: at least one value required");
    if (out.empty()) throw ConfigError("out: output directory required");
    ExperimentConfig e;
    e.n_sequences = n_sequences;
    e.iterations = iterations;
    e.master_seed = master_seed;
    e.jobs = jobs;
    const auto rule = size_rule_from_string(size_rule);
    for (const double wv : w)
      for (const double bv : beta) {
        DyadConfig d;
        d.learning.w = wv;
        d.learning.size_rule = rule;
        d.pragmatics.alpha = alpha;
        d.pragmatics.beta = bv;
        d.pragmatics.max_candidates = max_candidates;
        e.configs.push_back(d);
      }
    e.validate();
    return e;
  }
};

struct SimulateOutputs {
  std::filesystem::path trace, abstraction, fragments, performance;
};

inline SimulateOutputs simulate_paths(const std::filesystem::path& dir) {
  return {dir / "trace.json", dir / "abstraction.csv", dir / "fragments.csv", dir / "performance.csv"};
}

inline SimulateOutputs cmd_simulate(const RunConfig& rc) {
  const auto ecfg = rc.experiment();
  const auto setup = load_setup(rc.stimuli);
  const auto res = run_experiment(ecfg, setup);
  const auto paths = simulate_paths(rc.out);
  io::write_text(paths.trace, io::dump_compact(io::experiment_to_json(ecfg, setup, res)));
  io::write_text(paths.abstraction, io::abstraction_csv(res));
  io::write_text(paths.fragments, io::fragment_csv(res));
  io::write_text(paths.performance, io::performance_csv(res));
  return paths;
}

// ---- render ----

/// Target and built scenes side by side, F1 on the header line.
inline std::string render_pair(const Scene& target, const Scene& built) {
  const auto split = [](const std::string& s) {
    std::vector<std::string> rows;
    std::istringstream in(s);
    for (std::string line; std::getline(in, line);) rows.push_back(line);
    return rows;
  };
  const auto left = split(render_ascii(target));
  const auto right = split(render_ascii(built));
  std::size_t width = std::string("target").size();
  for (const auto& r : left) width = std::max(width, r.size());
  std::ostringstream out;
  out << "F1 = " << std::fixed << std::setprecision(3) << f1_score(target, built) << "\n";
  out << std::left << std::setw(static_cast<int>(width)) << "target" << "   built\n";
  const std::size_t rows = std::max(left.size(), right.size());
  for (std::size_t i = 0; i < rows; ++i) {
    // Bottom-align scenes of different heights.
    const auto pick = [&](const std::vector<std::string>& v) -> std::string {
      const std::size_t off = rows - v.size();
      return i >= off ? v[i - off] : std::string();
    };
    out << std::left << std::setw(static_cast<int>(width)) << pick(left) << "   " << pick(right) << "\n";
  }
  return out.str();
}

inline std::string render_scene_files(const std::string& target_path, const std::string& built_path) {
  const auto target = io::read_scene_file(target_path);
  const auto built = built_path.empty() ? target : io::read_scene_file(built_path);
  return render_pair(target, built);
}

inline std::string render_stimuli(const TaskSetup& setup) {
  std::ostringstream out;
  for (const auto& t : setup.stimuli) {
    const auto s = tower_scene(t, 0, {t.width(), t.height(), 0, 0});
    out << tower_letter(t.id) << " (" << t.name << ")\n" << render_ascii(s) << "\n";
  }
  return out.str();
}

/// Renders one trial from a trace file; `config` and `dyad` are 0-based,
/// `trial` is 1-based.
inline std::string render_trace_trial(const std::string& trace_path, int config, int dyad, std::optional<int> trial) {
  if (!trial) throw ConfigError("trial: a trial index is required to render a trace");
  const auto doc = io::parse_json(io::read_text(trace_path), trace_path);
  const auto setup = io::setup_from_json(doc.contains("setup") ? doc.at("setup") : io::json::object());
  const auto& configs = io::detail::array_field(doc, "configs", "trace");
  if (config < 0 || config >= static_cast<int>(configs.size())) throw ConfigError("config: index out of range");
  const auto& dyads = io::detail::array_field(configs[config], "dyads", "trace.config");
  if (dyad < 0 || dyad >= static_cast<int>(dyads.size())) throw ConfigError("dyad: index out of range");
  const auto& trials = io::detail::array_field(dyads[dyad], "trials", "trace.dyad");
  if (*trial < 1 || *trial > static_cast<int>(trials.size())) throw ConfigError("trial: index out of range");
  const auto& t = trials[*trial - 1];
  TrialSpec spec;
  spec.left = tower_from_letter(io::detail::field<std::string>(t, "left", "trace.trial"));
  spec.right = tower_from_letter(io::detail::field<std::string>(t, "right", "trace.trial"));
  const Scene target = setup.target(spec);
  Scene built(target.width(), target.height(),
              io::blocks_from_json(io::detail::array_field(t, "placements", "trace.trial")));
  std::ostringstream out;
  out << "trial " << *trial << "  " << io::detail::field<std::string>(t, "program", "trace.trial") << "\n";
  out << render_pair(target, built);
  return out.str();
}

}  // namespace tower::cli
