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

// Independent reference implementations and random generators shared by the
// unit and acceptance tests. Nothing here reuses the library's DP, window
// scan or inliner.

#include <algorithm>
#include <climits>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "tower/blockworld.hpp"
#include "tower/common.hpp"
#include "tower/dsl.hpp"
#include "tower/library_learning.hpp"

namespace tower::testing {

// ---- oracles ----

/// Plain recursive expansion of fragment bodies; no cached expansions.
inline std::vector<Token> reference_inline(const std::vector<Token>& toks, const Library& lib, int depth = 0) {
  if (depth > 64) throw ProgramError("reference_inline: too deep");
  std::vector<Token> out;
  for (const auto& t : toks) {
    if (!t.is_chunk()) {
      out.push_back(t);
      continue;
    }
    const auto* f = lib.find(t.fragment());
    if (!f) throw ProgramError("reference_inline: unresolved chunk");
    const auto sub = reference_inline(f->body.tokens, lib, depth + 1);
    out.insert(out.end(), sub.begin(), sub.end());
  }
  return out;
}

/// Exhaustive search over every tokenization: at each position try every
/// base token and every fragment whose (reference) expansion is a prefix of
/// the rest. No memoization.
inline int brute_force_mdl(const std::vector<Token>& seq, const Library& lib) {
  std::vector<std::vector<Token>> expansions;
  for (const auto& f : lib.fragments()) expansions.push_back(reference_inline(f.body.tokens, lib));
  std::function<int(std::size_t)> go = [&](std::size_t i) -> int {
    if (i == seq.size()) return 0;
    int best = token_cost(seq[i]) + go(i + 1);
    for (const auto& e : expansions) {
      if (e.empty() || i + e.size() > seq.size()) continue;
      if (!std::equal(e.begin(), e.end(), seq.begin() + static_cast<std::ptrdiff_t>(i))) continue;
      best = std::min(best, 1 + go(i + e.size()));
    }
    return best;
  };
  return go(0);
}

/// Every window of every program that a proposal may return, as printed
/// base expansions: starts and ends on a non-move, at least 2 units, places
/// a block, not already in the library.
inline std::set<std::string> reference_windows(const std::vector<Program>& programs, const Library& lib) {
  std::set<std::string> out;
  for (const auto& p : programs) {
    const auto& t = p.tokens;
    for (std::size_t i = 0; i < t.size(); ++i)
      for (std::size_t j = i; j < t.size(); ++j) {
        if (t[i].is_move() || t[j].is_move()) continue;
        std::vector<Token> window(t.begin() + static_cast<std::ptrdiff_t>(i),
                                  t.begin() + static_cast<std::ptrdiff_t>(j) + 1);
        int units = 0;
        for (const auto& x : window) units += x.is_move() ? 2 : 1;
        if (units < 2) continue;
        const auto expanded = reference_inline(window, lib);
        if (std::none_of(expanded.begin(), expanded.end(), [](const Token& x) { return x.is_place(); })) continue;
        bool known = false;
        for (const auto& f : lib.fragments())
          if (reference_inline(f.body.tokens, lib) == expanded) known = true;
        if (known) continue;
        out.insert(print_program(Program{expanded}));
      }
  }
  return out;
}

/// Gravity oracle: drops each block of an ordered list onto a height map.
inline std::vector<BlockPlacement> reference_drop(int width, const std::vector<std::pair<Orientation, int>>& drops) {
  std::vector<int> heights(static_cast<std::size_t>(width), 0);
  std::vector<BlockPlacement> out;
  for (const auto& [o, x] : drops) {
    if (o == Orientation::vertical) {
      out.push_back({x, heights[x], o});
      heights[x] += 2;
    } else {
      const int y = std::max(heights[x], heights[x + 1]);
      out.push_back({x, y, o});
      heights[x] = heights[x + 1] = y + 1;
    }
  }
  return out;
}

// ---- generators ----

inline Token random_base_token(Rng& rng) {
  switch (rng.below(4)) {
    case 0: return Token::h();
    case 1: return Token::v();
    case 2: return Token::left(1 + static_cast<int>(rng.below(9)));
    default: return Token::right(1 + static_cast<int>(rng.below(9)));
  }
}

/// Base program of at most `max_units` cost units, biased toward small moves
/// so that repeats (and hence compression) are common.
inline Program random_base_program(Rng& rng, int max_units, int min_units = 1) {
  const int target = min_units + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_units - min_units + 1)));
  Program p;
  int units = 0;
  while (units < target) {
    Token t;
    const auto r = rng.below(6);
    if (r < 2) t = Token::h();
    else if (r < 4) t = Token::v();
    else t = r == 4 ? Token::left(1 + static_cast<int>(rng.below(2))) : Token::right(1 + static_cast<int>(rng.below(2)));
    if (units + token_cost(t) > max_units) t = Token::v();
    p.tokens.push_back(t);
    units += token_cost(t);
  }
  return p;
}

/// Up to `max_fragments` fragments; most are windows of `seq` (so they
/// match), the rest random, and later ones may nest earlier chunks.
inline Library random_library(Rng& rng, const Program& seq, int max_fragments) {
  Library lib;
  const int want = static_cast<int>(rng.below(static_cast<std::uint64_t>(max_fragments + 1)));
  for (int attempt = 0; attempt < 50 && static_cast<int>(lib.fragment_count()) < want; ++attempt) {
    Program body;
    if (!seq.tokens.empty() && rng.below(4) != 0) {
      const auto i = rng.below(seq.tokens.size());
      const auto len = 1 + rng.below(seq.tokens.size() - i);
      body.tokens.assign(seq.tokens.begin() + static_cast<std::ptrdiff_t>(i),
                         seq.tokens.begin() + static_cast<std::ptrdiff_t>(i + len));
    } else {
      body = random_base_program(rng, 6, 2);
    }
    if (!lib.fragments().empty() && rng.below(3) == 0) {
      const auto& prev = lib.fragments()[rng.below(lib.fragment_count())];
      body.tokens.insert(body.tokens.begin() + static_cast<std::ptrdiff_t>(rng.below(body.tokens.size() + 1)),
                         Token::chunk(prev.id));
    }
    try {
      lib.add(body);
    } catch (const ProgramError&) {
    }
  }
  return lib;
}

/// Library of `depth` fragments, each nesting the previous one, and a
/// program mixing base tokens with references to all of them.
inline std::pair<Library, Program> random_nested_program(Rng& rng, int max_fragments = 4, int max_steps = 8) {
  Library lib;
  const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_fragments)));
  for (int attempt = 0; attempt < 50 && static_cast<int>(lib.fragment_count()) < n; ++attempt) {
    Program body = random_base_program(rng, 5, 2);
    const auto k = rng.below(3);
    for (std::uint64_t c = 0; c < k && !lib.fragments().empty(); ++c) {
      const auto& prev = lib.fragments()[rng.below(lib.fragment_count())];
      body.tokens.insert(body.tokens.begin() + static_cast<std::ptrdiff_t>(rng.below(body.tokens.size() + 1)),
                         Token::chunk(prev.id));
    }
    try {
      lib.add(body);
    } catch (const ProgramError&) {
    }
  }
  Program p;
  const auto steps = 1 + rng.below(static_cast<std::uint64_t>(max_steps));
  for (std::uint64_t i = 0; i < steps; ++i) {
    if (!lib.fragments().empty() && rng.below(2) == 0)
      p.tokens.push_back(Token::chunk(lib.fragments()[rng.below(lib.fragment_count())].id));
    else
      p.tokens.push_back(random_base_token(rng));
  }
  return {std::move(lib), std::move(p)};
}

/// Random scene built by dropping blocks, so it is physically reachable.
inline Scene random_dropped_scene(Rng& rng, int width, int height, int blocks) {
  GridState g = GridState::empty(width, height);
  for (int i = 0; i < blocks; ++i) {
    const auto o = rng.below(2) ? Orientation::horizontal : Orientation::vertical;
    const int x = static_cast<int>(rng.below(static_cast<std::uint64_t>(width)));
    if (drop_fits(g, o, x)) drop_block_inplace(g, o, x);
  }
  return Scene::from_grid(g);
}

}  // namespace tower::testing
