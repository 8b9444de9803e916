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

// Library learning: fragment proposal, minimum description length, the
// size-penalized posterior score and greedy library growth.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tower/blockworld.hpp"
#include "tower/dsl.hpp"

namespace tower {

enum class SizeRule : std::uint8_t {
  primitive_count,  // 13 + number of fragments
  body_token_sum,   // 13 + total token length of fragment bodies
};

inline std::string to_string(SizeRule r) {
  return r == SizeRule::primitive_count ? "primitive_count" : "body_token_sum";
}

inline SizeRule size_rule_from_string(const std::string& s) {
  if (s == "primitive_count") return SizeRule::primitive_count;
  if (s == "body_token_sum") return SizeRule::body_token_sum;
  throw ConfigError("size_rule: expected primitive_count or body_token_sum, got '" + s + "'");
}

struct LearningConfig {
  double w = 1.5;
  int max_fragments_per_trial = 3;
  SizeRule size_rule = SizeRule::body_token_sum;

  void validate() const {
    if (!(w >= 0.0) || std::isnan(w)) throw ConfigError("w: must be a nonnegative number");
    if (max_fragments_per_trial < 0)
      throw ConfigError("max_fragments_per_trial: must be nonnegative");
  }
};

enum class FragmentLevel : std::uint8_t { sub_tower, tower, scene, other };

inline std::string to_string(FragmentLevel l) {
  switch (l) {
    case FragmentLevel::sub_tower: return "sub_tower";
    case FragmentLevel::tower: return "tower";
    case FragmentLevel::scene: return "scene";
    case FragmentLevel::other: return "other";
  }
  return "other";
}

inline int fragment_size(const Fragment& f, SizeRule rule) {
  return rule == SizeRule::primitive_count ? 1 : token_length(f.body);
}

inline int library_size(const Library& lib, SizeRule rule) {
  int size = kBasePrimitiveCount;
  for (const auto& f : lib.fragments()) size += fragment_size(f, rule);
  return size;
}

using Codes = std::vector<std::uint8_t>;

inline Codes encode_base(const Program& base) {
  Codes out;
  out.reserve(base.tokens.size());
  for (const auto& t : base.tokens) out.push_back(base_code(t));
  return out;
}

inline int code_cost(std::uint8_t c) { return c >= 2 ? 2 : 1; }

namespace detail {

struct Pattern {
  const Codes* codes = nullptr;
  FragmentId id;
};

inline bool matches_at(const Codes& seq, std::size_t i, const Codes& pat) {
  if (i + pat.size() > seq.size()) return false;
  return std::equal(pat.begin(), pat.end(), seq.begin() + static_cast<std::ptrdiff_t>(i));
}

inline bool occurs_in(const Codes& seq, const Codes& pat) {
  if (pat.size() > seq.size()) return false;
  return std::search(seq.begin(), seq.end(), pat.begin(), pat.end()) != seq.end();
}

struct DpCell {
  int cost = 0;
  int chunks = 0;
  int take = 1;        // base tokens consumed by the choice at this position
  int pattern = -1;    // index into patterns, -1 for a base token
};

/// Suffix DP: best[i] encodes seq[i..]. Minimizes (cost, chunk count) and
/// breaks remaining ties toward the longest match, so reconstruction from
/// the left is leftmost-longest.
inline std::vector<DpCell> tokenize_dp(const Codes& seq, std::span<const Pattern> patterns) {
  const std::size_t n = seq.size();
  std::vector<DpCell> best(n + 1);
  for (std::size_t k = n; k-- > 0;) {
    DpCell cell;
    cell.cost = code_cost(seq[k]) + best[k + 1].cost;
    cell.chunks = best[k + 1].chunks;
    cell.take = 1;
    cell.pattern = -1;
    for (std::size_t p = 0; p < patterns.size(); ++p) {
      const auto& pat = *patterns[p].codes;
      if (!matches_at(seq, k, pat)) continue;
      const auto& next = best[k + pat.size()];
      const int cost = 1 + next.cost;
      const int chunks = 1 + next.chunks;
      const int take = static_cast<int>(pat.size());
      if (cost < cell.cost || (cost == cell.cost && chunks < cell.chunks) ||
          (cost == cell.cost && chunks == cell.chunks && take > cell.take)) {
        cell = {cost, chunks, take, static_cast<int>(p)};
      }
    }
    best[k] = cell;
  }
  return best;
}

inline Token decode(std::uint8_t c) {
  if (c == 0) return Token::h();
  if (c == 1) return Token::v();
  if (c <= 10) return Token::left(c - 1);
  return Token::right(c - 10);
}

}  // namespace detail

/// Fragments in a fixed order together with their encoded expansions.
class MdlEngine {
 public:
  explicit MdlEngine(const Library& lib) {
    codes_.reserve(lib.fragment_count() + 1);
    for (const auto& f : lib.fragments()) {
      codes_.push_back(encode_base(f.base_expansion));
      ids_.push_back(f.id);
    }
    rebuild();
  }

  /// MDL with one extra candidate pattern (not part of the library).
  int mdl_with(const Codes& seq, const Codes& extra) const {
    auto patterns = patterns_;
    patterns.push_back({&extra, FragmentId{0}});
    return detail::tokenize_dp(seq, patterns)[0].cost;
  }

  int mdl(const Codes& seq) const { return detail::tokenize_dp(seq, patterns_)[0].cost; }

  Program tokenize(const Codes& seq) const {
    const auto best = detail::tokenize_dp(seq, patterns_);
    Program out;
    std::size_t i = 0;
    while (i < seq.size()) {
      const auto& cell = best[i];
      if (cell.pattern < 0) {
        out.tokens.push_back(detail::decode(seq[i]));
      } else {
        out.tokens.push_back(Token::chunk(patterns_[static_cast<std::size_t>(cell.pattern)].id));
      }
      i += static_cast<std::size_t>(cell.take);
    }
    return out;
  }

 private:
  void rebuild() {
    patterns_.clear();
    for (std::size_t i = 0; i < codes_.size(); ++i) patterns_.push_back({&codes_[i], ids_[i]});
  }

  std::vector<Codes> codes_;
  std::vector<FragmentId> ids_;
  std::vector<detail::Pattern> patterns_;
};

inline void require_base(const Program& p) {
  if (!p.is_base()) throw ProgramError("expected a base-level program without chunk references");
}

/// Cost in token units of the cheapest program over `lib` that inlines to
/// `base_sequence`.
inline int mdl(const Program& base_sequence, const Library& lib) {
  require_base(base_sequence);
  return MdlEngine(lib).mdl(encode_base(base_sequence));
}

/// The witness program for mdl(). Ties prefer fewer chunk references, then
/// the leftmost-longest match.
inline Program shortest_tokenization(const Program& base_sequence, const Library& lib) {
  require_base(base_sequence);
  return MdlEngine(lib).tokenize(encode_base(base_sequence));
}

/// Unnormalized log posterior: -w * size(L) - sum_n MDL(T_n | L).
inline double library_score(const Library& lib, const std::vector<Program>& scenes,
                            const LearningConfig& cfg) {
  const MdlEngine engine(lib);
  double total = 0.0;
  for (const auto& s : scenes) {
    require_base(s);
    total += engine.mdl(encode_base(s));
  }
  return -cfg.w * static_cast<double>(library_size(lib, cfg.size_rule)) - total;
}

/// Candidate chunk bodies: contiguous windows of the given programs (which
/// may already use library chunks) of at least 2 units that place a block.
/// Deduplicated by expansion, keeping the shortest body; windows whose
/// expansion is already a library fragment are dropped. Returned fragments
/// carry id 0.
inline std::vector<Fragment> propose_fragments(const std::vector<Program>& programs,
                                               const Library& lib) {
  std::map<Codes, std::size_t> by_expansion;
  std::vector<Fragment> out;
  for (const auto& prog : programs) {
    const auto& toks = prog.tokens;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (toks[i].is_move()) continue;
      Program body;
      int units = 0;
      for (std::size_t j = i; j < toks.size(); ++j) {
        body.tokens.push_back(toks[j]);
        units += token_cost(toks[j]);
        if (units < 2 || toks[j].is_move()) continue;
        auto expansion = inline_program(body, lib);
        if (expansion.placement_tokens() == 0) continue;
        if (lib.find_by_expansion(expansion)) continue;
        auto key = encode_base(expansion);
        auto it = by_expansion.find(key);
        if (it == by_expansion.end()) {
          by_expansion.emplace(std::move(key), out.size());
          out.push_back({FragmentId{0}, body, std::move(expansion)});
        } else if (token_length(body) < token_length(out[it->second].body)) {
          out[it->second].body = body;
        }
      }
    }
  }
  return out;
}

struct Adoption {
  FragmentId id;
  double score_delta = 0.0;
};

struct LibraryUpdate {
  Library library;
  std::vector<Adoption> adopted;
};

/// Greedy posterior maximization: each round adopts the single fragment that
/// most improves library_score, if any strictly improves it, then re-proposes
/// over the rewritten programs so later chunks can nest earlier ones.
inline LibraryUpdate update_library(Library lib, const std::vector<Program>& observed,
                                    const LearningConfig& cfg) {
  cfg.validate();
  // Identical scenes contribute identically; score each distinct one once.
  std::vector<Codes> distinct;
  std::vector<int> multiplicity;
  std::vector<Program> distinct_programs;
  {
    std::map<Codes, std::size_t> seen;
    for (const auto& p : observed) {
      require_base(p);
      auto codes = encode_base(p);
      auto it = seen.find(codes);
      if (it != seen.end()) {
        ++multiplicity[it->second];
        continue;
      }
      seen.emplace(codes, distinct.size());
      distinct.push_back(std::move(codes));
      multiplicity.push_back(1);
      distinct_programs.push_back(p);
    }
  }

  LibraryUpdate result{std::move(lib), {}};
  for (int round = 0; round < cfg.max_fragments_per_trial; ++round) {
    const MdlEngine engine(result.library);
    std::vector<Program> rewritten;
    std::vector<int> current;
    for (const auto& codes : distinct) {
      rewritten.push_back(engine.tokenize(codes));
      current.push_back(token_length(rewritten.back()));
    }
    const auto proposals = propose_fragments(rewritten, result.library);

    const Fragment* best = nullptr;
    double best_delta = 0.0;
    int best_size = 0;
    std::string best_text;
    for (const auto& cand : proposals) {
      const auto pattern = encode_base(cand.base_expansion);
      long saving = 0;
      for (std::size_t s = 0; s < distinct.size(); ++s) {
        if (!detail::occurs_in(distinct[s], pattern)) continue;
        saving += static_cast<long>(multiplicity[s]) *
                  (current[s] - engine.mdl_with(distinct[s], pattern));
      }
      const int dsize = fragment_size(cand, cfg.size_rule);
      const double delta = static_cast<double>(saving) - cfg.w * static_cast<double>(dsize);
      if (!(delta > 0.0)) continue;
      bool better = best == nullptr || delta > best_delta;
      if (!better && delta == best_delta) {
        if (dsize != best_size) {
          better = dsize < best_size;
        } else {
          const auto text = print_program(cand.base_expansion);
          better = text < best_text;
        }
      }
      if (better) {
        best = &cand;
        best_delta = delta;
        best_size = dsize;
        best_text = print_program(cand.base_expansion);
      }
    }
    if (!best) break;
    const auto& added = result.library.add(best->body);
    result.adopted.push_back({added.id, best_delta});
  }
  return result;
}

/// Runs a fragment's expansion on an empty ground and names the structure it
/// builds: 2-3 blocks are sub-tower, 4 blocks matching a stimulus are a
/// tower, 8 blocks matching an ordered pair of distinct stimuli are a scene.
inline FragmentLevel classify_fragment(const Fragment& f, const std::vector<TowerStimulus>& stimuli,
                                       const SceneConfig& scene_cfg = {}) {
  constexpr int kWidth = 96;
  constexpr int kHeight = 32;
  std::vector<BlockPlacement> placed;
  try {
    placed = execute(f.base_expansion, Library{}, kWidth / 2, GridState::empty(kWidth, kHeight))
                 .placements;
  } catch (const Error&) {
    return FragmentLevel::other;
  }
  const auto n = placed.size();
  if (n == 2 || n == 3) return FragmentLevel::sub_tower;
  if (n != 4 && n != 8) return FragmentLevel::other;

  auto normalize = [](std::vector<BlockPlacement> blocks) {
    int min_x = blocks.front().x;
    for (const auto& b : blocks) min_x = std::min(min_x, b.x);
    for (auto& b : blocks) b.x -= min_x;
    std::sort(blocks.begin(), blocks.end());
    return blocks;
  };
  const auto shape = normalize(placed);
  if (n == 4) {
    for (const auto& t : stimuli)
      if (normalize(t.blocks) == shape) return FragmentLevel::tower;
    return FragmentLevel::other;
  }
  for (const auto& left : stimuli) {
    for (const auto& right : stimuli) {
      if (left.id == right.id) continue;
      std::vector<BlockPlacement> blocks;
      for (const auto& b : left.blocks) blocks.push_back(b.translated(scene_cfg.left_origin));
      for (const auto& b : right.blocks) blocks.push_back(b.translated(scene_cfg.right_origin));
      if (normalize(blocks) == shape) return FragmentLevel::scene;
    }
  }
  return FragmentLevel::other;
}

}  // namespace tower
