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

// The tower-building DSL: tokens h, v, (l n), (r n) and learned zero-arity
// chunks; interpreter, inliner, canonical encoder and surface syntax.

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tower/blockworld.hpp"
#include "tower/common.hpp"

namespace tower {

struct FragmentId {
  int value = 0;
  auto operator<=>(const FragmentId&) const = default;
};

inline std::string to_string(FragmentId id) { return "chunk" + std::to_string(id.value); }

enum class TokenKind : std::uint8_t { place_h, place_v, move_left, move_right, chunk };

struct Token {
  TokenKind kind = TokenKind::place_h;
  int arg = 0;  // move magnitude or fragment id

  static Token h() { return {TokenKind::place_h, 0}; }
  static Token v() { return {TokenKind::place_v, 0}; }
  static Token left(int n) { return {TokenKind::move_left, n}; }
  static Token right(int n) { return {TokenKind::move_right, n}; }
  static Token chunk(FragmentId id) { return {TokenKind::chunk, id.value}; }

  bool is_place() const { return kind == TokenKind::place_h || kind == TokenKind::place_v; }
  bool is_move() const { return kind == TokenKind::move_left || kind == TokenKind::move_right; }
  bool is_chunk() const { return kind == TokenKind::chunk; }
  FragmentId fragment() const { return {arg}; }
  int displacement() const {
    return kind == TokenKind::move_left ? -arg : kind == TokenKind::move_right ? arg : 0;
  }

  auto operator<=>(const Token&) const = default;
};

/// Description-length units: a move is written as direction plus digit.
inline int token_cost(const Token& t) { return t.is_move() ? 2 : 1; }

/// Number of base primitives (h, v, l, r and the digits 1-9).
inline constexpr int kBasePrimitiveCount = 13;

struct Program {
  std::vector<Token> tokens;

  std::size_t steps() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  bool is_base() const {
    return std::none_of(tokens.begin(), tokens.end(), [](const Token& t) { return t.is_chunk(); });
  }
  std::size_t chunk_count() const {
    return static_cast<std::size_t>(
        std::count_if(tokens.begin(), tokens.end(), [](const Token& t) { return t.is_chunk(); }));
  }
  std::size_t placement_tokens() const {
    return static_cast<std::size_t>(
        std::count_if(tokens.begin(), tokens.end(), [](const Token& t) { return t.is_place(); }));
  }

  auto operator<=>(const Program&) const = default;
};

inline int token_length(const Program& p) {
  int n = 0;
  for (const auto& t : p.tokens) n += token_cost(t);
  return n;
}

inline std::string print_token(const Token& t) {
  switch (t.kind) {
    case TokenKind::place_h: return "h";
    case TokenKind::place_v: return "v";
    case TokenKind::move_left: return "(l " + std::to_string(t.arg) + ")";
    case TokenKind::move_right: return "(r " + std::to_string(t.arg) + ")";
    case TokenKind::chunk: return to_string(t.fragment());
  }
  return "?";
}

/// "(h (l 1) v)"; the empty program prints as "".
inline std::string print_program(const Program& p) {
  if (p.empty()) return "";
  std::string out = "(";
  for (std::size_t i = 0; i < p.tokens.size(); ++i) {
    if (i) out += ' ';
    out += print_token(p.tokens[i]);
  }
  return out + ")";
}

namespace detail {

class ProgramParser {
 public:
  explicit ProgramParser(std::string_view text) : text_(text) {}

  Program parse() {
    Program p;
    skip_space();
    while (pos_ < text_.size()) {
      parse_item(p);
      skip_space();
    }
    return p;
  }

 private:
  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string_view atom() {
    const auto start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
           text_[pos_] != '(' && text_[pos_] != ')')
      ++pos_;
    return text_.substr(start, pos_ - start);
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ProgramError("parse error at offset " + std::to_string(pos_) + ": " + what);
  }

  void parse_item(Program& p) {
    if (text_[pos_] == ')') fail("unbalanced ')'");
    if (text_[pos_] != '(') {
      p.tokens.push_back(parse_atom(atom()));
      return;
    }
    ++pos_;
    skip_space();
    // A group is either a move "(l n)" or a nested list that splices in place.
    const auto save = pos_;
    const auto head = atom();
    if (head == "l" || head == "r") {
      skip_space();
      const auto digits = atom();
      int n = 0;
      if (digits.size() != 1 || !std::isdigit(static_cast<unsigned char>(digits[0])))
        fail("move magnitude must be a single digit, got '" + std::string(digits) + "'");
      n = digits[0] - '0';
      if (n < 1 || n > 9) fail("move magnitude must be in 1..9");
      skip_space();
      if (pos_ >= text_.size() || text_[pos_] != ')') fail("expected ')' after move");
      ++pos_;
      p.tokens.push_back(head == "l" ? Token::left(n) : Token::right(n));
      return;
    }
    pos_ = save;
    skip_space();
    while (pos_ < text_.size() && text_[pos_] != ')') {
      parse_item(p);
      skip_space();
    }
    if (pos_ >= text_.size()) fail("missing ')'");
    ++pos_;
  }

  Token parse_atom(std::string_view a) {
    if (a == "h") return Token::h();
    if (a == "v") return Token::v();
    constexpr std::string_view prefix = "chunk";
    if (a.size() > prefix.size() && a.substr(0, prefix.size()) == prefix) {
      int id = 0;
      for (char c : a.substr(prefix.size())) {
        if (!std::isdigit(static_cast<unsigned char>(c))) fail("malformed chunk id '" + std::string(a) + "'");
        id = id * 10 + (c - '0');
        if (id > 1000000) fail("chunk id too large");
      }
      if (id < 1) fail("chunk ids start at 1");
      return Token::chunk({id});
    }
    fail("unknown token '" + std::string(a) + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Program parse_program(std::string_view text) { return detail::ProgramParser(text).parse(); }

struct Fragment {
  FragmentId id;
  Program body;
  Program base_expansion;
};

/// The 13 fixed base primitives plus learned fragments, in adoption order.
class Library {
 public:
  const std::vector<Fragment>& fragments() const { return fragments_; }
  std::size_t fragment_count() const { return fragments_.size(); }

  const Fragment* find(FragmentId id) const {
    auto it = index_.find(id.value);
    return it == index_.end() ? nullptr : &fragments_[it->second];
  }

  const Fragment& at(FragmentId id) const {
    const auto* f = find(id);
    if (!f) throw ProgramError("unresolved chunk reference " + to_string(id));
    return *f;
  }

  const Fragment* find_by_expansion(const Program& expansion) const {
    for (const auto& f : fragments_)
      if (f.base_expansion == expansion) return &f;
    return nullptr;
  }

  FragmentId next_id() const { return {next_id_}; }

  /// Adds a fragment under a fresh id. The body may only refer to fragments
  /// already in the library.
  const Fragment& add(Program body) { return add_with_id(next_id(), std::move(body)); }

  const Fragment& add_with_id(FragmentId id, Program body);

  /// Shares expansions with this library but only exposes the listed fragments.
  Library subset(const std::vector<FragmentId>& ids) const {
    Library out;
    for (const auto& id : ids) {
      const auto& f = at(id);
      out.index_[f.id.value] = out.fragments_.size();
      out.fragments_.push_back(f);
      out.next_id_ = std::max(out.next_id_, f.id.value + 1);
    }
    return out;
  }

 private:
  std::vector<Fragment> fragments_;
  std::unordered_map<int, std::size_t> index_;
  int next_id_ = 1;
};

namespace detail {

inline void inline_into(const Program& p, const Library& lib, std::vector<int>& stack,
                        std::vector<Token>& out) {
  for (const auto& t : p.tokens) {
    if (!t.is_chunk()) {
      out.push_back(t);
      continue;
    }
    if (std::find(stack.begin(), stack.end(), t.arg) != stack.end())
      throw ProgramError("chunk reference cycle through " + to_string(t.fragment()));
    const auto& f = lib.at(t.fragment());
    if (!f.base_expansion.empty() || f.body.empty()) {
      out.insert(out.end(), f.base_expansion.tokens.begin(), f.base_expansion.tokens.end());
      continue;
    }
    stack.push_back(t.arg);
    inline_into(f.body, lib, stack, out);
    stack.pop_back();
  }
}

}  // namespace detail

/// Replaces every chunk reference by its body, recursively.
inline Program inline_program(const Program& p, const Library& lib) {
  Program out;
  std::vector<int> stack;
  detail::inline_into(p, lib, stack, out.tokens);
  return out;
}

inline const Fragment& Library::add_with_id(FragmentId id, Program body) {
  if (id.value < 1) throw ProgramError("fragment ids start at 1");
  if (find(id)) throw ProgramError("duplicate fragment id " + to_string(id));
  if (token_length(body) < 2) throw ProgramError("fragment body must be at least 2 units long");
  for (const auto& t : body.tokens)
    if (t.is_chunk() && !find(t.fragment()))
      throw ProgramError("fragment body refers to unknown " + to_string(t.fragment()));
  Fragment f{id, std::move(body), {}};
  f.base_expansion = inline_program(f.body, *this);
  if (f.base_expansion.placement_tokens() == 0)
    throw ProgramError("fragment body must place at least one block");
  if (find_by_expansion(f.base_expansion))
    throw ProgramError("fragment expansion duplicates an existing fragment");
  index_[id.value] = fragments_.size();
  fragments_.push_back(std::move(f));
  next_id_ = std::max(next_id_, id.value + 1);
  return fragments_.back();
}

/// How the interpreter treats moves or drops that leave the grid.
enum class ExecutionPolicy : std::uint8_t {
  strict,   // throw GeometryError
  lenient,  // clamp the hand, skip blocks that do not fit
};

struct ExecutionResult {
  GridState grid;
  std::vector<BlockPlacement> placements;
  int hand = 0;
};

namespace detail {

inline void run_base(const Token& t, ExecutionResult& r, ExecutionPolicy policy) {
  if (t.is_move()) {
    int next = r.hand + t.displacement();
    if (next < 0 || next >= r.grid.width) {
      if (policy == ExecutionPolicy::strict)
        throw GeometryError("hand moved out of bounds to column " + std::to_string(next));
      next = std::clamp(next, 0, r.grid.width - 1);
    }
    r.hand = next;
    return;
  }
  const auto o = t.kind == TokenKind::place_h ? Orientation::horizontal : Orientation::vertical;
  if (policy == ExecutionPolicy::lenient && !drop_fits(r.grid, o, r.hand)) return;
  r.placements.push_back(drop_block_inplace(r.grid, o, r.hand));
}

}  // namespace detail

/// Interprets tokens left to right from hand column start_x. Chunks run
/// their body relative to the current hand.
inline ExecutionResult execute(const Program& program, const Library& library, int start_x,
                               GridState grid, ExecutionPolicy policy = ExecutionPolicy::strict) {
  if (start_x < 0 || start_x >= grid.width)
    throw GeometryError("start column " + std::to_string(start_x) + " out of bounds");
  ExecutionResult r{std::move(grid), {}, start_x};
  for (const auto& t : program.tokens) {
    if (!t.is_chunk()) {
      detail::run_base(t, r, policy);
      continue;
    }
    for (const auto& bt : library.at(t.fragment()).base_expansion.tokens)
      detail::run_base(bt, r, policy);
  }
  return r;
}

/// Leftmost occupied column; the hand starts here for canonical programs.
inline int canonical_start(const Scene& scene) {
  int x = 0;
  bool first = true;
  for (const auto& b : scene.blocks()) {
    if (first || b.x < x) x = b.x;
    first = false;
  }
  return x;
}

/// Blocks in canonical build order: column-separated groups left to right,
/// and within a group bottom-up then left to right.
inline std::vector<BlockPlacement> canonical_order(const Scene& scene) {
  std::vector<bool> used(static_cast<std::size_t>(scene.width()), false);
  for (const auto& b : scene.blocks())
    for (const auto& c : b.cells()) used[static_cast<std::size_t>(c.x)] = true;
  std::vector<int> group(static_cast<std::size_t>(scene.width()), -1);
  int g = -1;
  for (int x = 0; x < scene.width(); ++x) {
    if (!used[static_cast<std::size_t>(x)]) continue;
    if (x == 0 || !used[static_cast<std::size_t>(x - 1)]) ++g;
    group[static_cast<std::size_t>(x)] = g;
  }
  auto blocks = scene.blocks();
  std::stable_sort(blocks.begin(), blocks.end(), [&](const auto& a, const auto& b) {
    const int ga = group[static_cast<std::size_t>(a.x)];
    const int gb = group[static_cast<std::size_t>(b.x)];
    if (ga != gb) return ga < gb;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });
  return blocks;
}

/// Appends the move tokens taking the hand from `from` to `to`, splitting
/// distances above 9 greedily.
inline void append_moves(std::vector<Token>& out, int from, int to) {
  int delta = to - from;
  while (delta != 0) {
    const int step = std::min(std::abs(delta), 9);
    out.push_back(delta > 0 ? Token::right(step) : Token::left(step));
    delta += delta > 0 ? -step : step;
  }
}

inline Program canonical_program(const Scene& scene, int start_x) {
  Program p;
  int hand = start_x;
  for (const auto& b : canonical_order(scene)) {
    append_moves(p.tokens, hand, b.x);
    hand = b.x;
    p.tokens.push_back(b.orientation == Orientation::horizontal ? Token::h() : Token::v());
  }
  return p;
}

inline Program canonical_program(const Scene& scene) {
  return canonical_program(scene, canonical_start(scene));
}

/// True iff executing the canonical program rebuilds exactly this scene.
inline bool validate_constructible(const Scene& scene) {
  if (scene.empty()) return true;
  try {
    const int start = canonical_start(scene);
    const auto r = execute(canonical_program(scene, start), Library{}, start,
                           GridState::empty(scene.width(), scene.height()));
    return Scene::from_grid(r.grid) == scene;
  } catch (const Error&) {
    return false;
  }
}

/// Dense code for a base token (h=0, v=1, l1..l9=2..10, r1..r9=11..19).
inline std::uint8_t base_code(const Token& t) {
  switch (t.kind) {
    case TokenKind::place_h: return 0;
    case TokenKind::place_v: return 1;
    case TokenKind::move_left: return static_cast<std::uint8_t>(1 + t.arg);
    case TokenKind::move_right: return static_cast<std::uint8_t>(10 + t.arg);
    case TokenKind::chunk: break;
  }
  throw ProgramError("base_code called on a chunk reference");
}

}  // namespace tower
