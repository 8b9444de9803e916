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

// JSON documents for scenes, stimuli, libraries, sequences, learning
// trajectories and dyad traces, plus CSV metric tables.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tower/blockworld.hpp"
#include "tower/common.hpp"
#include "tower/dsl.hpp"
#include "tower/library_learning.hpp"
#include "tower/metrics.hpp"
#include "tower/pragmatics.hpp"
#include "tower/simulation.hpp"
#include "tower/trial_sequence.hpp"

namespace tower::io {

using json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

// ---- files ----

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
  return ss.str();
}

/// Writes via a sibling temporary and a rename so readers never see a
/// truncated file.
inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write failed for '" + path.string() + "'");
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move output into place at '" + path.string() + "'");
  }
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(what + ": malformed JSON (" + e.what() + ")");
  }
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

/// One line; used for traces, which are large.
inline std::string dump_compact(const json& j) { return j.dump() + "\n"; }

namespace detail {

template <class T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": field '" + key + "' has the wrong type");
  }
}

inline const json& array_field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_array())
    throw ConfigError(where + ": field '" + key + "' must be a list");
  return j.at(key);
}

}  // namespace detail

// ---- blocks and scenes ----

inline std::string orientation_name(Orientation o) {
  return o == Orientation::horizontal ? "horizontal" : "vertical";
}

inline Orientation orientation_from_name(const std::string& s) {
  if (s == "horizontal" || s == "H" || s == "h") return Orientation::horizontal;
  if (s == "vertical" || s == "V" || s == "v") return Orientation::vertical;
  throw ConfigError("orientation: unknown value '" + s + "'");
}

inline json to_json(const BlockPlacement& b) {
  return json{{"x", b.x}, {"y", b.y}, {"orientation", orientation_name(b.orientation)}};
}

inline BlockPlacement block_from_json(const json& j) {
  const std::string where = "block";
  return {detail::field<int>(j, "x", where), detail::field<int>(j, "y", where),
          orientation_from_name(detail::field<std::string>(j, "orientation", where))};
}

inline json to_json(const std::vector<BlockPlacement>& blocks) {
  json out = json::array();
  for (const auto& b : blocks) out.push_back(to_json(b));
  return out;
}

inline std::vector<BlockPlacement> blocks_from_json(const json& arr) {
  std::vector<BlockPlacement> out;
  for (const auto& b : arr) out.push_back(block_from_json(b));
  return out;
}

inline json to_json(const Scene& s) {
  return json{{"width", s.width()}, {"height", s.height()}, {"blocks", to_json(s.blocks())}};
}

inline Scene scene_from_json(const json& j) {
  const std::string where = "scene";
  const int w = detail::field<int>(j, "width", where);
  const int h = detail::field<int>(j, "height", where);
  try {
    return Scene(w, h, blocks_from_json(detail::array_field(j, "blocks", where)));
  } catch (const GeometryError& e) {
    throw ConfigError(std::string("scene: ") + e.what());
  }
}

inline Scene read_scene_file(const std::filesystem::path& p) {
  return scene_from_json(parse_json(read_text(p), p.string()));
}

inline void write_scene_file(const std::filesystem::path& p, const Scene& s) { write_text(p, dump(to_json(s))); }

// ---- stimuli ----

inline json to_json(const SceneConfig& c) {
  return json{{"width", c.width}, {"height", c.height}, {"left_origin", c.left_origin},
              {"right_origin", c.right_origin}};
}

inline json to_json(const TaskSetup& setup) {
  json towers = json::array();
  for (const auto& t : setup.stimuli)
    towers.push_back({{"id", std::string(1, tower_letter(t.id))}, {"name", t.name}, {"blocks", to_json(t.blocks)}});
  return json{{"scene", to_json(setup.scene)}, {"towers", towers}};
}

/// Stimulus file: {"scene": {...}, "towers": [{"id": "A", "name", "blocks"}]}.
/// Either key may be omitted to keep the default.
inline TaskSetup setup_from_json(const json& j) {
  TaskSetup s;
  if (!j.is_object()) throw ConfigError("stimuli: expected an object");
  if (j.contains("scene")) {
    const auto& c = j.at("scene");
    const std::string where = "stimuli.scene";
    s.scene = {detail::field<int>(c, "width", where), detail::field<int>(c, "height", where),
               detail::field<int>(c, "left_origin", where), detail::field<int>(c, "right_origin", where)};
  }
  if (j.contains("towers")) {
    s.stimuli.clear();
    for (const auto& t : detail::array_field(j, "towers", "stimuli")) {
      TowerStimulus ts;
      ts.id = tower_from_letter(detail::field<std::string>(t, "id", "stimuli.tower"));
      ts.name = t.value("name", std::string(1, tower_letter(ts.id)));
      ts.blocks = blocks_from_json(detail::array_field(t, "blocks", "stimuli.tower"));
      s.stimuli.push_back(std::move(ts));
    }
  }
  try {
    s.validate();
  } catch (const GeometryError& e) {
    throw ConfigError(std::string("stimuli: ") + e.what());
  }
  return s;
}

inline TaskSetup read_setup_file(const std::filesystem::path& p) {
  return setup_from_json(parse_json(read_text(p), p.string()));
}

// ---- library ----

inline json to_json(const Fragment& f) {
  return json{{"id", to_string(f.id)}, {"body", print_program(f.body)},
              {"base_expansion", print_program(f.base_expansion)}};
}

inline json to_json(const Library& lib) {
  json out = json::array();
  for (const auto& f : lib.fragments()) out.push_back(to_json(f));
  return out;
}

/// Rebuilds a library from its dump; ids and bodies are re-validated.
inline Library library_from_json(const json& arr) {
  if (!arr.is_array()) throw ConfigError("library: expected a list");
  Library lib;
  for (const auto& f : arr) {
    const auto id_text = detail::field<std::string>(f, "id", "library");
    try {
      const auto id = parse_program(id_text);
      if (id.tokens.size() != 1 || !id.tokens[0].is_chunk()) throw ConfigError("library: bad id '" + id_text + "'");
      lib.add_with_id(id.tokens[0].fragment(), parse_program(detail::field<std::string>(f, "body", "library")));
    } catch (const ProgramError& e) {
      throw ConfigError(std::string("library: ") + e.what());
    }
  }
  return lib;
}

// ---- sequences ----

inline json to_json(const TrialSequence& seq) {
  json trials = json::array();
  for (const auto& t : seq.trials)
    trials.push_back({{"block", t.repetition_block},
                      {"left", std::string(1, tower_letter(t.left))},
                      {"right", std::string(1, tower_letter(t.right))}});
  return json{{"seed", seq.seed}, {"trials", trials}};
}

inline TrialSequence sequence_from_json(const json& j) {
  TrialSequence seq;
  seq.seed = detail::field<std::uint64_t>(j, "seed", "sequence");
  for (const auto& t : detail::array_field(j, "trials", "sequence")) {
    TrialSpec spec;
    spec.repetition_block = detail::field<int>(t, "block", "sequence.trial");
    spec.left = tower_from_letter(detail::field<std::string>(t, "left", "sequence.trial"));
    spec.right = tower_from_letter(detail::field<std::string>(t, "right", "sequence.trial"));
    seq.trials.push_back(spec);
  }
  if (const auto why = check_trial_sequence(seq); !why.empty()) throw ConfigError("sequence: " + why);
  return seq;
}

inline json sequences_to_json(const std::vector<TrialSequence>& seqs) {
  json arr = json::array();
  for (const auto& s : seqs) arr.push_back(to_json(s));
  return json{{"format", "tower-sequences"}, {"version", kFormatVersion}, {"sequences", arr}};
}

inline std::vector<TrialSequence> sequences_from_json(const json& j) {
  std::vector<TrialSequence> out;
  for (const auto& s : detail::array_field(j, "sequences", "sequence file")) out.push_back(sequence_from_json(s));
  return out;
}

// ---- learning ----

inline json to_json(const LearningConfig& c) {
  return json{{"w", c.w}, {"max_fragments_per_trial", c.max_fragments_per_trial},
              {"size_rule", to_string(c.size_rule)}};
}

inline json to_json(const PragmaticsConfig& c) {
  return json{{"alpha", c.alpha}, {"beta", c.beta}, {"max_candidates", c.max_candidates}};
}

inline json adopted_to_json(const std::vector<AdoptedFragment>& adopted, const Library& lib) {
  json out = json::array();
  for (const auto& a : adopted) {
    const auto& f = lib.at(a.id);
    out.push_back({{"id", to_string(a.id)}, {"body", print_program(f.body)},
                   {"base_expansion", print_program(f.base_expansion)}, {"level", to_string(a.level)},
                   {"score_delta", a.score_delta}});
  }
  return out;
}

inline json level_proportions(const Library& lib, const std::map<int, FragmentLevel>& levels) {
  json out = json::object();
  for (const auto l : kFragmentColumns) {
    int n = 0;
    for (const auto& f : lib.fragments()) {
      const auto it = levels.find(f.id.value);
      if ((it == levels.end() ? FragmentLevel::other : it->second) == l) ++n;
    }
    out[to_string(l)] = lib.fragments().empty() ? 0.0 : static_cast<double>(n) / lib.fragments().size();
  }
  return out;
}

inline json trajectory_to_json(const TrialSequence& seq, const LibraryTrajectory& traj) {
  json trials = json::array();
  for (std::size_t t = 0; t < traj.after.size(); ++t) {
    json ids = json::array();
    for (const auto& f : traj.after[t].fragments()) ids.push_back(to_string(f.id));
    trials.push_back({{"trial", t + 1},
                      {"adopted", adopted_to_json(traj.adopted[t], traj.after[t])},
                      {"library", ids},
                      {"level_proportions", level_proportions(traj.after[t], traj.levels)}});
  }
  const Library empty;
  return json{{"seed", seq.seed}, {"trials", trials},
              {"final_library", to_json(traj.after.empty() ? empty : traj.after.back())}};
}

// ---- traces ----

inline json utterance_to_json(const Utterance& u) {
  json out = json::array();
  for (const auto& w : u.words) out.push_back(w.surface);
  return out;
}

inline json to_json(const TrialRecord& r, const Library& lib_after) {
  json steps = json::array();
  for (const auto& s : r.steps)
    steps.push_back({{"intended", print_token(s.intended)}, {"word", s.word.surface},
                     {"interpreted", print_token(s.interpreted)}, {"level", to_string(s.level)},
                     {"placed", s.placements.size()}, {"entropy_after", s.entropy_after}});
  json candidates = json::array();
  for (const auto& c : r.candidates)
    candidates.push_back({{"program", print_program(c.program)}, {"utility", std::isfinite(c.utility) ? json(c.utility) : json(nullptr)},
                          {"probability", c.probability}});
  json ids = json::array();
  for (const auto& id : r.library_after) ids.push_back(to_string(id));
  return json{{"trial", r.index},
              {"block", r.spec.repetition_block},
              {"left", std::string(1, tower_letter(r.spec.left))},
              {"right", std::string(1, tower_letter(r.spec.right))},
              {"program", print_program(r.chosen)},
              {"utterance", utterance_to_json(r.utterance)},
              {"tokens_sent", r.tokens_sent},
              {"f1", r.f1},
              {"entropy_before", r.entropy_before},
              {"candidates", candidates},
              {"steps", steps},
              {"placements", to_json(r.builder_placements)},
              {"adopted", adopted_to_json(r.adopted, lib_after)},
              {"library", ids}};
}

inline json belief_to_json(const BeliefState& b) {
  json words = json::array();
  for (std::size_t i = 0; i < b.words().size(); ++i)
    words.push_back({{"word", b.words()[i]}, {"minted_for", to_string(b.fragments()[i])}});
  // Most probable binding of the heard words.
  json map = json::object();
  if (!b.probs().empty()) {
    std::size_t best = 0;
    for (std::size_t h = 1; h < b.probs().size(); ++h)
      if (b.probs()[h] > b.probs()[best]) best = h;
    for (std::size_t i = 0; i < b.heard().size(); ++i) map[b.heard()[i]] = to_string(b.support()[best][i]);
  }
  return json{{"words", words}, {"entropy_bits", b.entropy_bits()}, {"hypotheses", b.support().size()},
              {"anomalies", b.anomalies()}, {"map_bindings", map}};
}

inline json to_json(const DyadTrace& tr) {
  json trials = json::array();
  Library lib = tr.final_library;
  for (const auto& r : tr.records) trials.push_back(to_json(r, lib));
  json builder = json::object();
  for (const auto& [w, f] : tr.builder.bindings) builder[w] = to_string(f);
  return json{{"sequence_index", tr.sequence_index}, {"iteration", tr.iteration}, {"seed", tr.seed},
              {"trials", trials}, {"final_library", to_json(tr.final_library)},
              {"final_belief", belief_to_json(tr.final_belief)}, {"builder_bindings", builder}};
}

inline json config_key(const DyadConfig& c) {
  return json{{"w", c.learning.w}, {"alpha", c.pragmatics.alpha}, {"beta", c.pragmatics.beta},
              {"learning", to_json(c.learning)}, {"pragmatics", to_json(c.pragmatics)}};
}

inline json experiment_to_json(const ExperimentConfig& cfg, const TaskSetup& setup, const ExperimentResult& res) {
  json configs = json::array();
  for (const auto& r : res.results) {
    json dyads = json::array();
    for (const auto& tr : r.traces) dyads.push_back(to_json(tr));
    configs.push_back({{"config", config_key(r.config)}, {"dyads", dyads}});
  }
  json seqs = json::array();
  for (const auto& s : res.sequences) seqs.push_back(to_json(s));
  return json{{"format", "tower-trace"},
              {"version", kFormatVersion},
              {"master_seed", cfg.master_seed},
              {"n_sequences", cfg.n_sequences},
              {"iterations", cfg.iterations},
              {"setup", to_json(setup)},
              {"sequences", seqs},
              {"configs", configs}};
}

// ---- CSV ----

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string config_prefix(const DyadConfig& c) {
  return fmt(c.learning.w) + "," + fmt(c.pragmatics.alpha) + "," + fmt(c.pragmatics.beta);
}

/// Keyed by (config, repetition block).
inline std::string abstraction_csv(const ExperimentResult& res) {
  std::string out = "w,alpha,beta,repetition_block";
  for (const auto l : kAbstractionColumns) out += "," + to_string(l);
  out += "\n";
  for (const auto& r : res.results) {
    const auto table = abstraction_proportions(r.traces);
    for (int b = 0; b < kRepetitionBlocks; ++b) {
      out += config_prefix(r.config) + "," + std::to_string(b + 1);
      for (const double v : table[b]) out += "," + fmt(v);
      out += "\n";
    }
  }
  return out;
}

/// Keyed by (config, trial index, level).
inline std::string fragment_csv(const ExperimentResult& res) {
  std::string out = "w,alpha,beta,trial,level,proportion\n";
  for (const auto& r : res.results) {
    const auto traj = fragment_trajectory(r.traces);
    for (std::size_t t = 0; t < traj.proportion.size(); ++t)
      for (std::size_t c = 0; c < kFragmentColumns.size(); ++c)
        out += config_prefix(r.config) + "," + std::to_string(t) + "," + to_string(kFragmentColumns[c]) + "," +
               fmt(traj.proportion[t][c]) + "\n";
  }
  return out;
}

/// Keyed by (config, repetition block).
inline std::string performance_csv(const ExperimentResult& res) {
  std::string out = "w,alpha,beta,repetition_block,mean_f1,mean_tokens,trials,mean_pairwise_jsd\n";
  for (const auto& r : res.results) {
    const auto perf = accuracy_and_efficiency(r.traces);
    const auto div = mean_pairwise_jsd(r.traces);
    for (int b = 0; b < kRepetitionBlocks; ++b)
      out += config_prefix(r.config) + "," + std::to_string(b + 1) + "," + fmt(perf[b].accuracy) + "," +
             fmt(perf[b].tokens) + "," + std::to_string(perf[b].trials) + "," + fmt(div[b]) + "\n";
  }
  return out;
}

}  // namespace tower::io
