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


#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "support.hpp"
#include "tower/pragmatics.hpp"

namespace tower {
namespace {

Program P(const char* text) { return parse_program(text); }
const Word kA = synthetic_word(0);
const Word kB = synthetic_word(1);
const Token c1 = Token::chunk({1});
const Token c2 = Token::chunk({2});

/// chunk1 stacks two verticals, chunk2 lays two horizontals: distinguishable.
Library two_chunks() {
  Library lib;
  lib.add(P("(v v)"));
  lib.add(P("(h h)"));
  return lib;
}

BeliefState belief_over(const Library& lib) {
  BeliefState b;
  std::vector<FragmentId> ids;
  for (const auto& f : lib.fragments()) ids.push_back(f.id);
  b.extend(ids);
  return b;
}

BuilderView empty_view(int hand = 2) { return {GridState::empty(12, 8), hand}; }

std::vector<BlockPlacement> run(const Token& t, const BuilderView& view, const Library& lib) {
  return predict_placements(t, view, lib);
}

TEST(Words, Surfaces) {
  EXPECT_EQ(fixed_word(Token::h()).surface, "h");
  EXPECT_EQ(fixed_word(Token::left(3)).surface, "l3");
  EXPECT_EQ(synthetic_word_name(0), "chunkA");
  EXPECT_EQ(synthetic_word_name(25), "chunkZ");
  EXPECT_EQ(synthetic_word_name(26), "chunkAA");
  EXPECT_EQ(make_word("r9").kind, WordKind::fixed);
  EXPECT_EQ(make_word("chunkC").kind, WordKind::synthetic);
  EXPECT_THROW(fixed_word(c1), ProgramError);
}

TEST(LiteralListener, Examples) {
  const Lexicon lex{{{"chunkA", FragmentId{1}}, {"chunkB", FragmentId{2}}}};
  EXPECT_EQ(literal_listener(Token::h(), fixed_word(Token::h()), lex), 1.0);
  EXPECT_EQ(literal_listener(Token::v(), fixed_word(Token::h()), lex), 0.0);
  EXPECT_EQ(literal_listener(c1, kA, lex), 1.0);
  EXPECT_EQ(literal_listener(c2, kA, lex), 0.0);
  EXPECT_THROW(literal_listener(c1, synthetic_word(5), lex), ProgramError);
}

TEST(MarginalListener, Examples) {
  const auto lib = two_chunks();
  auto b = belief_over(lib);
  EXPECT_DOUBLE_EQ(marginal_listener(c1, kA, b), 0.5);
  EXPECT_DOUBLE_EQ(marginal_listener(c2, kA, b), 0.5);
  EXPECT_EQ(marginal_listener(Token::v(), fixed_word(Token::v()), b), 1.0);
  EXPECT_EQ(marginal_listener(Token::h(), fixed_word(Token::v()), b), 0.0);
  EXPECT_EQ(marginal_listener(Token::h(), kA, b), 0.0);
  const auto view = empty_view();
  b = update_belief(b, kA, run(c1, view, lib), view, lib);
  EXPECT_DOUBLE_EQ(marginal_listener(c1, kA, b), 1.0);
  EXPECT_DOUBLE_EQ(marginal_listener(c2, kA, b), 0.0);
  EXPECT_DOUBLE_EQ(marginal_listener(c2, kB, b), 1.0);
  EXPECT_THROW(marginal_listener(c1, synthetic_word(7), b), ProgramError);
}

TEST(Belief, UniformOverAllBijections) {
  Library lib;
  lib.add(P("(v v)"));
  lib.add(P("(h h)"));
  lib.add(P("(v h)"));
  const auto b = belief_over(lib);
  const auto lex = b.lexicons();
  ASSERT_EQ(lex.size(), 6u);
  double total = 0.0;
  for (const auto& [l, p] : lex) {
    EXPECT_NEAR(p, 1.0 / 6.0, 1e-12);
    total += p;
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_NEAR(b.entropy_bits(), std::log2(6.0), 1e-12);
}

TEST(ExtendHypotheses, Examples) {
  BeliefState empty;
  EXPECT_EQ(empty.lexicons().size(), 1u);
  auto one = extend_hypotheses(empty, FragmentId{1});
  ASSERT_EQ(one.lexicons().size(), 1u);
  EXPECT_DOUBLE_EQ(one.lexicons()[0].second, 1.0);

  // A bound word plus a new chunk: the new word must take the new chunk.
  Library lib;
  lib.add(P("(v v)"));
  auto b = belief_over(lib);
  const auto view = empty_view();
  b = update_belief(b, kA, run(c1, view, lib), view, lib);
  lib.add(P("(h h)"));
  b = extend_hypotheses(b, FragmentId{2});
  EXPECT_DOUBLE_EQ(marginal_listener(c2, kB, b), 1.0);

  // Two at once: two lexicons at one half each.
  const std::vector<FragmentId> both = {FragmentId{1}, FragmentId{2}};
  const auto two = extend_hypotheses(BeliefState{}, both);
  const auto lex = two.lexicons();
  ASSERT_EQ(lex.size(), 2u);
  EXPECT_DOUBLE_EQ(lex[0].second, 0.5);
  EXPECT_DOUBLE_EQ(lex[1].second, 0.5);
  EXPECT_THROW(extend_hypotheses(two, FragmentId{1}), ProgramError);
}

TEST(UpdateBelief, Examples) {
  const auto lib = two_chunks();
  const auto b0 = belief_over(lib);
  const auto view = empty_view();

  const auto collapsed = update_belief(b0, kA, run(c1, view, lib), view, lib);
  const auto lex = collapsed.lexicons();
  ASSERT_EQ(lex.size(), 1u);
  EXPECT_EQ(lex[0].first.mapping.at("chunkA"), FragmentId{1});
  EXPECT_EQ(lex[0].first.mapping.at("chunkB"), FragmentId{2});
  EXPECT_DOUBLE_EQ(lex[0].second, 1.0);
  EXPECT_DOUBLE_EQ(collapsed.entropy_bits(), 0.0);

  // Fixed words leave the belief alone.
  const auto same = update_belief(b0, fixed_word(Token::v()), {V(2, 0)}, view, lib);
  EXPECT_EQ(same.probs(), b0.probs());
  EXPECT_EQ(same.support(), b0.support());

  // An observation every hypothesis predicts is uninformative.
  Library twins;
  twins.add(P("(v v)"));
  twins.add(P("(v (l 1) (r 1) v)"));
  auto bt = belief_over(twins);
  const auto obs = run(Token::chunk({1}), view, twins);
  bt = update_belief(bt, kA, obs, view, twins);
  EXPECT_DOUBLE_EQ(marginal_listener(Token::chunk({1}), kA, bt), 0.5);
  EXPECT_NEAR(bt.entropy_bits(), 1.0, 1e-12);
}

TEST(UpdateBelief, AnomalyResets) {
  const auto lib = two_chunks();
  auto b = belief_over(lib);
  const auto view = empty_view();
  b = update_belief(b, kA, run(c1, view, lib), view, lib);
  // chunkA is now known to mean chunk1; seeing it build something else is impossible.
  b = update_belief(b, kA, {H(5, 0)}, view, lib);
  EXPECT_EQ(b.anomalies(), 1);
  EXPECT_DOUBLE_EQ(marginal_listener(c1, kA, b), 0.5);
  EXPECT_NEAR(b.entropy_bits(), 1.0, 1e-12);
}

TEST(UpdateBelief, SoundAndEntropyNonIncreasing) {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    Library lib;
    for (const char* body : {"(v v)", "(h h)", "(v h)", "(h (r 1) v)", "(v (r 2) v)"})
      if (lib.fragment_count() < 2 + rng.below(4)) lib.add(P(body));
    auto b = belief_over(lib);
    BuilderState builder;
    BuilderView view = empty_view(1);
    std::vector<std::tuple<Word, std::vector<BlockPlacement>, BuilderView>> history;
    double entropy = b.entropy_bits();
    for (int step = 0; step < 6; ++step) {
      const Word w = synthetic_word(rng.below(lib.fragment_count()));
      const Token meant = builder_interpret(w, builder, lib, rng);
      const auto r = execute(Program{{meant}}, lib, view.hand, view.grid, ExecutionPolicy::lenient);
      b = update_belief(b, w, r.placements, view, lib);
      history.emplace_back(w, r.placements, view);
      ASSERT_EQ(b.anomalies(), 0);
      ASSERT_LE(b.entropy_bits(), entropy + 1e-12);
      entropy = b.entropy_bits();
      view.grid = r.grid;
      view.hand = r.hand;
    }
    double total = 0.0;
    for (const auto& [lex, p] : b.lexicons()) {
      total += p;
      if (p <= 0.0) continue;
      for (const auto& [w, obs, before] : history)
        ASSERT_EQ(run(Token::chunk(lex.mapping.at(w.surface)), before, lib), obs);
    }
    ASSERT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(Convergence, ScriptedDyadPointMassOnBuilderBindings) {
  const auto lib = two_chunks();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    auto b = belief_over(lib);
    BuilderState builder;
    BuilderView view = empty_view(1);
    double entropy = b.entropy_bits();
    for (const auto& w : {kA, kB}) {
      const Token meant = builder_interpret(w, builder, lib, rng);
      const auto r = execute(Program{{meant}}, lib, view.hand, view.grid, ExecutionPolicy::lenient);
      b = update_belief(b, w, r.placements, view, lib);
      ASSERT_LE(b.entropy_bits(), entropy + 1e-12);
      entropy = b.entropy_bits();
      view = {r.grid, r.hand + 3};
    }
    const auto lex = b.lexicons();
    ASSERT_EQ(lex.size(), 1u);
    ASSERT_DOUBLE_EQ(lex[0].second, 1.0);
    ASSERT_EQ(lex[0].first.mapping, builder.bindings);
  }
}

TEST(CandidatePrograms, Examples) {
  const auto stim = stimulus_towers();
  const auto scene = compose_scene(stim[0], stim[1]);
  const auto base = canonical_program(scene);
  const auto only = candidate_programs(scene, Library{}, 4);
  ASSERT_EQ(only.size(), 1u);
  EXPECT_EQ(only[0], base);

  Library lib;
  lib.add(canonical_program(tower_scene(stim[0], 0, {})));
  lib.add(canonical_program(tower_scene(stim[1], 0, {})));
  lib.add(P("(v (r 1) h)"));
  const auto c = candidate_programs(scene, lib, 4);
  EXPECT_LE(c.size(), 4u);
  EXPECT_EQ(c.back(), base);
  EXPECT_EQ(print_program(c.front()), "(chunk1 (r 8) chunk2)");
  for (const auto& p : c) EXPECT_EQ(inline_program(p, lib), base);
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = i + 1; j < c.size(); ++j) EXPECT_NE(c[i], c[j]);
  EXPECT_EQ(candidate_programs(scene, lib, 1).size(), 1u);
}

TEST(CandidatePrograms, BoundedAndIncludeBase) {
  Rng rng(29);
  const auto stim = stimulus_towers();
  for (int i = 0; i < 200; ++i) {
    const auto& l = stim[rng.below(3)];
    const auto& r = stim[rng.below(3)];
    const auto scene = compose_scene(l, r);
    const auto base = canonical_program(scene);
    const auto lib = testing::random_library(rng, base, 5);
    const auto c = candidate_programs(scene, lib, 4);
    ASSERT_GE(c.size(), 1u);
    ASSERT_LE(c.size(), 4u);
    ASSERT_EQ(c.back(), base);
    for (const auto& p : c) ASSERT_EQ(inline_program(p, lib), base);
  }
}

TEST(JointUtility, Limits) {
  const auto lib = two_chunks();
  const auto b = belief_over(lib);
  const auto base = P("(v v (r 2) h h)");
  const auto base_words = choose_words(base, b);
  PragmaticsConfig cfg;
  cfg.beta = 0.3;
  EXPECT_DOUBLE_EQ(joint_utility(base, base_words, b, cfg), -0.3 * token_length(base));
  cfg.beta = 0.0;
  EXPECT_DOUBLE_EQ(joint_utility(base, base_words, b, cfg), 0.0);
  const auto chunky = P("(chunk1 (r 2) chunk2)");
  const auto chunk_words = choose_words(chunky, b);
  EXPECT_LT(joint_utility(chunky, chunk_words, b, cfg), 0.0);
  cfg.beta = 1.0;
  EXPECT_DOUBLE_EQ(joint_utility(chunky, chunk_words, b, cfg), -4.0);
  EXPECT_DOUBLE_EQ(joint_utility(base, base_words, b, cfg), -6.0);

  cfg.beta = 0.5;
  Utterance wrong{{fixed_word(Token::h())}};
  EXPECT_THROW(joint_utility(chunky, wrong, b, cfg), ProgramError);
  Utterance lie{{fixed_word(Token::h()), fixed_word(Token::right(2)), kA}};
  EXPECT_EQ(joint_utility(P("(v (r 2) chunk1)"), lie, b, cfg), -std::numeric_limits<double>::infinity());
}

TEST(ChooseWords, PrefersKnownWord) {
  const auto lib = two_chunks();
  auto b = belief_over(lib);
  const auto view = empty_view();
  // Builder took chunkA for chunk2.
  b = update_belief(b, kA, run(c2, view, lib), view, lib);
  const auto u = choose_words(P("(chunk2 chunk1)"), b);
  EXPECT_EQ(u.words[0].surface, "chunkA");
  EXPECT_EQ(u.words[1].surface, "chunkB");
}

TEST(Softmax, LimitsAndInvariance) {
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<double> u = {-1.0, -3.0, -1.0, -inf};
  const auto argmax = softmax_choice(u, inf);
  EXPECT_EQ(argmax, (std::vector<double>{1.0, 0.0, 0.0, 0.0}));
  const auto flat = softmax_choice(u, 0.0);
  EXPECT_NEAR(flat[0], 1.0 / 3, 1e-12);
  EXPECT_NEAR(flat[1], 1.0 / 3, 1e-12);
  EXPECT_EQ(flat[3], 0.0);
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> x;
    for (int k = 0; k < 4; ++k) x.push_back(-10.0 * rng.uniform());
    const double alpha = 10.0 * rng.uniform();
    const auto p = softmax_choice(x, alpha);
    double total = 0.0;
    for (double v : p) total += v;
    ASSERT_NEAR(total, 1.0, 1e-12);
    auto shifted = x;
    for (double& v : shifted) v += 123.0;
    const auto q = softmax_choice(shifted, alpha);
    for (std::size_t k = 0; k < p.size(); ++k) ASSERT_NEAR(p[k], q[k], 1e-12);
  }
}

TEST(ArchitectChoose, ArgmaxAndUniform) {
  const auto stim = stimulus_towers();
  const auto scene = compose_scene(stim[0], stim[1]);
  Library lib;
  lib.add(canonical_program(tower_scene(stim[0], 0, {})));
  lib.add(canonical_program(tower_scene(stim[1], 0, {})));
  const auto b = belief_over(lib);
  PragmaticsConfig cfg;
  cfg.alpha = std::numeric_limits<double>::infinity();
  cfg.beta = 1.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng(s);
    const auto c = architect_choose(scene, lib, b, cfg, rng);
    EXPECT_EQ(print_program(c.program()), "(chunk1 (r 8) chunk2)");
  }
  cfg.beta = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng(s);
    const auto c = architect_choose(scene, lib, b, cfg, rng);
    EXPECT_EQ(c.program(), canonical_program(scene));
  }
  cfg.alpha = 0.0;
  Rng rng(3);
  const auto c = architect_choose(scene, lib, b, cfg, rng);
  for (const auto& cand : c.candidates) EXPECT_NEAR(cand.probability, 1.0 / c.candidates.size(), 1e-12);
}

TEST(BuilderInterpret, Examples) {
  const auto lib = two_chunks();
  BuilderState s;
  Rng rng(0);
  EXPECT_EQ(builder_interpret(fixed_word(Token::v()), s, lib, rng), Token::v());
  int first = 0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    BuilderState fresh;
    if (builder_interpret(kA, fresh, lib, rng) == c1) ++first;
  }
  EXPECT_NEAR(static_cast<double>(first) / n, 0.5, 0.03);
  const auto t = builder_interpret(kA, s, lib, rng);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(builder_interpret(kA, s, lib, rng), t);
  EXPECT_NE(builder_interpret(kB, s, lib, rng), t);
  EXPECT_THROW(builder_interpret(synthetic_word(2), s, lib, rng), Error);
}

TEST(PragmaticsConfig, Validation) {
  PragmaticsConfig c;
  EXPECT_NO_THROW(c.validate());
  c.beta = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c.beta = 0.5;
  c.alpha = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.alpha = 1.0;
  c.max_candidates = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

}  // namespace
}  // namespace tower
