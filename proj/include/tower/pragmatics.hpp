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

// Architect (speaker) and Builder (listener) agents. The Architect chooses a
// program and utterance by trading expected listener success against program
// length, while tracking uncertainty about how the Builder binds synthetic
// words to learned chunks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tower/blockworld.hpp"
#include "tower/common.hpp"
#include "tower/dsl.hpp"
#include "tower/library_learning.hpp"

namespace tower {

enum class WordKind : std::uint8_t { fixed, synthetic };

struct Word {
  std::string surface;
  WordKind kind = WordKind::fixed;

  bool operator==(const Word&) const = default;
};

/// The fixed word for a base token: "h", "v", "l3", "r2".
inline Word fixed_word(const Token& t) {
  switch (t.kind) {
    case TokenKind::place_h: return {"h", WordKind::fixed};
    case TokenKind::place_v: return {"v", WordKind::fixed};
    case TokenKind::move_left: return {"l" + std::to_string(t.arg), WordKind::fixed};
    case TokenKind::move_right: return {"r" + std::to_string(t.arg), WordKind::fixed};
    case TokenKind::chunk: break;
  }
  throw ProgramError("chunks have no fixed word");
}

inline std::optional<Token> fixed_meaning(const std::string& surface) {
  if (surface == "h") return Token::h();
  if (surface == "v") return Token::v();
  if (surface.size() == 2 && (surface[0] == 'l' || surface[0] == 'r') && surface[1] >= '1' &&
      surface[1] <= '9') {
    const int n = surface[1] - '0';
    return surface[0] == 'l' ? Token::left(n) : Token::right(n);
  }
  return std::nullopt;
}

/// "chunkA", "chunkB", ..., "chunkZ", "chunkAA", ...
inline std::string synthetic_word_name(std::size_t index) {
  std::string letters;
  std::size_t n = index + 1;
  while (n > 0) {
    --n;
    letters.insert(letters.begin(), static_cast<char>('A' + n % 26));
    n /= 26;
  }
  return "chunk" + letters;
}

inline Word synthetic_word(std::size_t index) {
  return {synthetic_word_name(index), WordKind::synthetic};
}

inline Word make_word(const std::string& surface) {
  return {surface, fixed_meaning(surface) ? WordKind::fixed : WordKind::synthetic};
}

struct Utterance {
  std::vector<Word> words;
};

/// One hypothesized bijection from synthetic words to fragments. Fixed words
/// are implicit and deterministic.
struct Lexicon {
  std::map<std::string, FragmentId> mapping;

  bool operator==(const Lexicon&) const = default;
};

/// Delta semantics: 1 if u means t under lex, else 0.
inline double literal_listener(const Token& t, const Word& u, const Lexicon& lex) {
  if (u.kind == WordKind::fixed) {
    const auto meaning = fixed_meaning(u.surface);
    if (!meaning) throw ProgramError("unknown fixed word '" + u.surface + "'");
    return *meaning == t ? 1.0 : 0.0;
  }
  const auto it = lex.mapping.find(u.surface);
  if (it == lex.mapping.end()) throw ProgramError("word '" + u.surface + "' not in lexicon");
  return t.is_chunk() && t.fragment() == it->second ? 1.0 : 0.0;
}

struct PragmaticsConfig {
  double alpha = 5.0;
  double beta = 0.3;
  int max_candidates = 4;

  void validate() const {
    if (!(alpha >= 0.0)) throw ConfigError("alpha: must be nonnegative");
    if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta: must lie in [0, 1]");
    if (max_candidates < 1) throw ConfigError("max_candidates: must be at least 1");
  }
};

/// The Architect's distribution over Builder lexicons.
///
/// The Builder binds each synthetic word the first time it hears it, uniformly
/// among fragments not yet bound. The exact posterior over bijections is then
/// a distribution over bindings of the words heard so far (`support`, aligned
/// with `heard`) times a uniform completion of the unheard words over the
/// remaining fragments. This keeps the state small however many chunks the
/// library holds; `lexicons()` expands it when the full support is needed.
class BeliefState {
 public:
  using Binding = std::vector<FragmentId>;  // aligned with heard()

  BeliefState() : support_{Binding{}}, probs_{1.0} {}

  const std::vector<std::string>& words() const { return words_; }
  const std::vector<FragmentId>& fragments() const { return fragments_; }
  const std::vector<std::string>& heard() const { return heard_; }
  const std::vector<Binding>& support() const { return support_; }
  const std::vector<double>& probs() const { return probs_; }
  int anomalies() const { return anomalies_; }

  std::size_t size() const { return words_.size(); }
  std::size_t unheard_count() const { return words_.size() - heard_.size(); }

  bool is_word(const std::string& surface) const {
    return std::find(words_.begin(), words_.end(), surface) != words_.end();
  }

  std::optional<std::size_t> heard_index(const std::string& surface) const {
    const auto it = std::find(heard_.begin(), heard_.end(), surface);
    if (it == heard_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - heard_.begin());
  }

  /// Mints a word for each new fragment. Existing bindings stay valid since a
  /// new fragment cannot have been bound yet.
  void extend(std::span<const FragmentId> new_fragments) {
    for (const auto& f : new_fragments) {
      if (std::find(fragments_.begin(), fragments_.end(), f) != fragments_.end())
        throw ProgramError("fragment " + to_string(f) + " already has a word");
      words_.push_back(synthetic_word_name(words_.size()));
      fragments_.push_back(f);
    }
  }

  /// P(word means t), marginalized over lexicons.
  double marginal(const Token& t, const Word& u) const {
    if (u.kind == WordKind::fixed) return literal_listener(t, u, Lexicon{});
    if (!is_word(u.surface)) throw ProgramError("unknown synthetic word '" + u.surface + "'");
    if (!t.is_chunk()) return 0.0;
    const FragmentId f = t.fragment();
    if (std::find(fragments_.begin(), fragments_.end(), f) == fragments_.end()) return 0.0;
    if (const auto k = heard_index(u.surface)) {
      double p = 0.0;
      for (std::size_t h = 0; h < support_.size(); ++h)
        if (support_[h][*k] == f) p += probs_[h];
      return p;
    }
    // Unheard word: uniform over fragments left unbound by each hypothesis.
    const double free = static_cast<double>(unheard_count());
    double p = 0.0;
    for (std::size_t h = 0; h < support_.size(); ++h)
      if (std::find(support_[h].begin(), support_[h].end(), f) == support_[h].end())
        p += probs_[h] / free;
    return p;
  }

  /// Filters by an observed Builder outcome for word u. `consistent(f)` says
  /// whether executing fragment f would have produced what was observed.
  template <class Pred>
  void observe(const std::string& u, Pred&& consistent) {
    std::vector<Binding> next_support;
    std::vector<double> next_probs;
    const auto k = heard_index(u);
    if (k) {
      for (std::size_t h = 0; h < support_.size(); ++h) {
        if (!consistent(support_[h][*k])) continue;
        next_support.push_back(support_[h]);
        next_probs.push_back(probs_[h]);
      }
    } else {
      const double free = static_cast<double>(unheard_count());
      for (std::size_t h = 0; h < support_.size(); ++h) {
        for (const auto& f : fragments_) {
          if (std::find(support_[h].begin(), support_[h].end(), f) != support_[h].end()) continue;
          if (!consistent(f)) continue;
          auto b = support_[h];
          b.push_back(f);
          next_support.push_back(std::move(b));
          next_probs.push_back(probs_[h] / free);
        }
      }
    }
    double total = 0.0;
    for (double p : next_probs) total += p;
    if (!(total > 0.0)) {
      // Nothing is consistent; forget the evidence.
      ++anomalies_;
      heard_.clear();
      support_ = {Binding{}};
      probs_ = {1.0};
      return;
    }
    if (!k) heard_.push_back(u);
    for (double& p : next_probs) p /= total;
    support_ = std::move(next_support);
    probs_ = std::move(next_probs);
  }

  /// Shannon entropy, in bits, of the full distribution over bijections.
  double entropy_bits() const {
    double h = 0.0;
    for (double p : probs_)
      if (p > 0.0) h -= p * std::log2(p);
    return h + std::lgamma(static_cast<double>(unheard_count()) + 1.0) / std::log(2.0);
  }

  /// Full support as explicit lexicons. Exponential in the number of unheard
  /// words; intended for small belief states.
  std::vector<std::pair<Lexicon, double>> lexicons() const {
    std::vector<std::pair<Lexicon, double>> out;
    std::vector<std::string> unheard;
    for (const auto& w : words_)
      if (!heard_index(w)) unheard.push_back(w);
    for (std::size_t h = 0; h < support_.size(); ++h) {
      std::vector<FragmentId> free;
      for (const auto& f : fragments_)
        if (std::find(support_[h].begin(), support_[h].end(), f) == support_[h].end())
          free.push_back(f);
      std::sort(free.begin(), free.end());
      std::vector<std::pair<Lexicon, double>> completions;
      do {
        Lexicon lex;
        for (std::size_t i = 0; i < heard_.size(); ++i) lex.mapping[heard_[i]] = support_[h][i];
        for (std::size_t i = 0; i < unheard.size(); ++i) lex.mapping[unheard[i]] = free[i];
        completions.emplace_back(std::move(lex), 0.0);
      } while (std::next_permutation(free.begin(), free.end()));
      for (auto& c : completions) {
        c.second = probs_[h] / static_cast<double>(completions.size());
        out.push_back(std::move(c));
      }
    }
    return out;
  }

 private:
  std::vector<std::string> words_;
  std::vector<FragmentId> fragments_;
  std::vector<std::string> heard_;
  std::vector<Binding> support_;
  std::vector<double> probs_;
  int anomalies_ = 0;
};

inline double marginal_listener(const Token& t, const Word& u, const BeliefState& b) {
  return b.marginal(t, u);
}

inline BeliefState extend_hypotheses(BeliefState b, FragmentId new_fragment) {
  b.extend(std::span<const FragmentId>(&new_fragment, 1));
  return b;
}

inline BeliefState extend_hypotheses(BeliefState b, std::span<const FragmentId> new_fragments) {
  b.extend(new_fragments);
  return b;
}

/// What the Architect sees of the Builder just before a step.
struct BuilderView {
  GridState grid;
  int hand = 0;
};

inline std::vector<BlockPlacement> predict_placements(const Token& primitive, const BuilderView& view,
                                                      const Library& library) {
  Program p;
  p.tokens.push_back(primitive);
  return execute(p, library, view.hand, view.grid, ExecutionPolicy::lenient).placements;
}

/// Bayes with 0/1 likelihood: keep lexicons under which u, executed from the
/// same Builder state, yields exactly the observed placements.
inline BeliefState update_belief(BeliefState b, const Word& u,
                                 const std::vector<BlockPlacement>& observed,
                                 const BuilderView& before, const Library& library) {
  if (u.kind == WordKind::fixed) return b;
  b.observe(u.surface, [&](FragmentId f) {
    return predict_placements(Token::chunk(f), before, library) == observed;
  });
  return b;
}

/// Distinct programs for the scene: base-only, shortest under the full
/// library, and shortest under each single-fragment sublibrary. Sorted by
/// length; the base program is always kept.
inline std::vector<Program> candidate_programs(const Scene& scene, const Library& library,
                                               int max_candidates) {
  const Program base = canonical_program(scene);
  std::vector<Program> others;
  auto consider = [&](Program p) {
    if (p == base) return;
    if (std::find(others.begin(), others.end(), p) == others.end()) others.push_back(std::move(p));
  };
  consider(shortest_tokenization(base, library));
  for (const auto& f : library.fragments()) consider(shortest_tokenization(base, library.subset({f.id})));
  std::stable_sort(others.begin(), others.end(), [](const Program& a, const Program& b) {
    const int la = token_length(a), lb = token_length(b);
    if (la != lb) return la < lb;
    return print_program(a) < print_program(b);
  });
  const auto keep = static_cast<std::size_t>(std::max(0, max_candidates - 1));
  if (others.size() > keep) others.resize(keep);
  others.push_back(base);
  return others;
}

/// The word per step that maximizes the chance the Builder recovers it. For
/// chunks, ties go to the word minted alongside the chunk.
inline Utterance choose_words(const Program& program, const BeliefState& b) {
  Utterance u;
  for (const auto& t : program.tokens) {
    if (!t.is_chunk()) {
      u.words.push_back(fixed_word(t));
      continue;
    }
    const auto& frags = b.fragments();
    const auto own = std::find(frags.begin(), frags.end(), t.fragment());
    if (own == frags.end()) throw ProgramError("no word for " + to_string(t.fragment()));
    std::size_t best = static_cast<std::size_t>(own - frags.begin());
    double best_p = b.marginal(t, synthetic_word(best));
    for (std::size_t i = 0; i < b.size(); ++i) {
      const double p = b.marginal(t, synthetic_word(i));
      if (p > best_p) {
        best = i;
        best_p = p;
      }
    }
    u.words.push_back(synthetic_word(best));
  }
  return u;
}

/// (1 - beta) * sum_i ln P_L(t_i | u_i) - beta * |program|.
inline double joint_utility(const Program& program, const Utterance& utterance, const BeliefState& b,
                            const PragmaticsConfig& cfg) {
  if (program.tokens.size() != utterance.words.size())
    throw ProgramError("utterance has " + std::to_string(utterance.words.size()) +
                       " words for a program of " + std::to_string(program.tokens.size()) + " steps");
  double informativity = 0.0;
  if (cfg.beta < 1.0) {
    for (std::size_t i = 0; i < program.tokens.size(); ++i) {
      const double p = b.marginal(program.tokens[i], utterance.words[i]);
      if (p <= 0.0) return -std::numeric_limits<double>::infinity();
      informativity += std::log(p);
    }
  }
  return (1.0 - cfg.beta) * informativity - cfg.beta * token_length(program);
}

/// Softmax choice probabilities with inverse temperature alpha. Entries at
/// -inf get probability 0; alpha = +inf is argmax with ties to the first.
inline std::vector<double> softmax_choice(const std::vector<double>& utilities, double alpha) {
  std::vector<double> probs(utilities.size(), 0.0);
  double best = -std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t i = 0; i < utilities.size(); ++i)
    if (utilities[i] > best) {
      best = utilities[i];
      arg = i;
    }
  if (!std::isfinite(best)) return probs;
  if (std::isinf(alpha)) {
    probs[arg] = 1.0;
    return probs;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < utilities.size(); ++i) {
    if (!std::isfinite(utilities[i])) continue;
    probs[i] = std::exp(alpha * (utilities[i] - best));
    total += probs[i];
  }
  for (double& p : probs) p /= total;
  return probs;
}

inline std::size_t sample_index(const std::vector<double>& probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last = i;
    acc += probs[i];
    if (u < acc) return i;
  }
  return last;
}

struct ArchitectCandidate {
  Program program;
  Utterance utterance;
  double utility = 0.0;
  double probability = 0.0;
};

struct ArchitectChoice {
  std::vector<ArchitectCandidate> candidates;
  std::size_t chosen = 0;

  const Program& program() const { return candidates[chosen].program; }
  const Utterance& utterance() const { return candidates[chosen].utterance; }
};

inline ArchitectChoice architect_choose(const Scene& scene, const Library& library,
                                        const BeliefState& b, const PragmaticsConfig& cfg, Rng& rng) {
  ArchitectChoice out;
  std::vector<double> utilities;
  for (auto& p : candidate_programs(scene, library, cfg.max_candidates)) {
    auto words = choose_words(p, b);
    const double u = joint_utility(p, words, b, cfg);
    utilities.push_back(u);
    out.candidates.push_back({std::move(p), std::move(words), u, 0.0});
  }
  const auto probs = softmax_choice(utilities, cfg.alpha);
  for (std::size_t i = 0; i < probs.size(); ++i) out.candidates[i].probability = probs[i];
  out.chosen = sample_index(probs, rng);
  return out;
}

/// Builder's persistent word bindings for one dyad.
struct BuilderState {
  std::map<std::string, FragmentId> bindings;
};

/// Fixed words map deterministically. A synthetic word heard for the first
/// time binds uniformly at random to a fragment no other word is bound to.
inline Token builder_interpret(const Word& u, BuilderState& state, const Library& library, Rng& rng) {
  if (u.kind == WordKind::fixed) {
    const auto meaning = fixed_meaning(u.surface);
    if (!meaning) throw ProgramError("unknown fixed word '" + u.surface + "'");
    return *meaning;
  }
  if (const auto it = state.bindings.find(u.surface); it != state.bindings.end())
    return Token::chunk(it->second);
  std::vector<FragmentId> unbound;
  for (const auto& f : library.fragments()) {
    const bool taken = std::any_of(state.bindings.begin(), state.bindings.end(),
                                   [&](const auto& kv) { return kv.second == f.id; });
    if (!taken) unbound.push_back(f.id);
  }
  if (unbound.empty())
    throw Error("builder has no unbound fragment for '" + u.surface + "' (library desynchronized)");
  const auto pick = unbound[rng.below(unbound.size())];
  state.bindings[u.surface] = pick;
  return Token::chunk(pick);
}

}  // namespace tower
