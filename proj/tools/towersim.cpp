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


// towersim: sequence generation, library learning, dyad simulation and
// scene rendering.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tower/cli.hpp"

namespace {

using namespace tower;

int run(int argc, char** argv) {
  CLI::App app{"Simulate Architect-Builder dyads on the tower-building task"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  int count = 49;
  std::string seq_out = "-";
  auto* gen = app.add_subcommand("gen-seq", "Generate trial sequences");
  gen->add_option("--seed", seed, "Seed");
  gen->add_option("--count", count, "Number of sequences");
  gen->add_option("--out", seq_out, "Output file, '-' for stdout");

  cli::LearnOptions lo;
  auto* learn = app.add_subcommand("learn", "Run library learning alone over sequences");
  learn->add_option("--sequences", lo.sequences_path, "Sequence file from gen-seq")->required();
  learn->add_option("--w", lo.w, "Library size penalty");
  learn->add_option("--size-rule", lo.size_rule, "body_token_sum or primitive_count");
  learn->add_option("--stimuli", lo.stimuli_path, "Stimulus file");
  learn->add_option("--out", lo.out_path, "Output file, '-' for stdout");

  cli::RunConfig rc;
  auto* sim = app.add_subcommand("simulate", "Run the experiment grid and write traces and metrics");
  sim->add_option("--w", rc.w, "Library size penalties")->expected(1, -1);
  sim->add_option("--alpha", rc.alpha, "Architect rationality");
  sim->add_option("--beta", rc.beta, "Cost weights in [0, 1]")->expected(1, -1);
  sim->add_option("--n-sequences", rc.n_sequences, "Number of trial sequences");
  sim->add_option("--iterations", rc.iterations, "Dyads per sequence");
  sim->add_option("--master-seed", rc.master_seed, "Master seed");
  sim->add_option("--out", rc.out, "Output directory");
  sim->add_option("--stimuli", rc.stimuli, "Stimulus file");
  sim->add_option("--size-rule", rc.size_rule, "body_token_sum or primitive_count");
  sim->add_option("--max-candidates", rc.max_candidates, "Candidate programs per trial");
  sim->add_option("--jobs", rc.jobs, "Worker threads");

  std::string scene_path, built_path, trace_path, stimuli_path;
  bool all_stimuli = false;
  int config = 0, dyad = 0;
  std::optional<int> trial;
  auto* render = app.add_subcommand("render", "Render scenes or a trace trial as ASCII");
  render->add_option("--scene", scene_path, "Target scene file");
  render->add_option("--built", built_path, "Built scene file (defaults to the target)");
  render->add_option("--trace", trace_path, "Trace file from simulate");
  render->add_option("--config", config, "Config index in the trace (0-based)");
  render->add_option("--dyad", dyad, "Dyad index within the config (0-based)");
  render->add_option("--trial", trial, "Trial index (1-based)");
  render->add_flag("--stimuli", all_stimuli, "Render every stimulus tower");
  render->add_option("--stimulus-file", stimuli_path, "Stimulus file for --stimuli");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc_parse = app.exit(e);
    return rc_parse == 0 ? cli::kOk : cli::kConfigError;
  }

  try {
    if (*gen) {
      cli::cmd_gen_seq(seed, count, seq_out, std::cout);
    } else if (*learn) {
      cli::cmd_learn(lo, std::cout);
    } else if (*sim) {
      const auto paths = cli::cmd_simulate(rc);
      std::cout << "wrote " << paths.trace.string() << "\n";
    } else if (*render) {
      const int modes = (!scene_path.empty()) + (!trace_path.empty()) + all_stimuli;
      if (modes != 1) throw ConfigError("render: give exactly one of --scene, --trace, --stimuli");
      if (all_stimuli)
        std::cout << cli::render_stimuli(cli::load_setup(stimuli_path));
      else if (!scene_path.empty())
        std::cout << cli::render_scene_files(scene_path, built_path);
      else
        std::cout << cli::render_trace_trial(trace_path, config, dyad, trial);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::exit_code_for(e);
  }
  return cli::kOk;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
