#pragma once

#include <string>
#include <vector>

#include "repot/env/types.hpp"

namespace repot::checker {

// Left tokens ('L') may only move rightward, right tokens ('R') leftward.
// Jumped tokens stay on the board.

inline std::string action_text(const CheckerSlide& a) {
  return "slide(" + std::to_string(a.from) + "," + std::to_string(a.to) + ")";
}

inline std::string action_text(const CheckerJump& a) {
  return "jump(" + std::to_string(a.from) + "," + std::to_string(a.over) + "," +
         std::to_string(a.to) + ")";
}

inline char cell_char(Cell c) {
  switch (c) {
    case Cell::left_token: return 'L';
    case Cell::right_token: return 'R';
    default: return '_';
  }
}

inline std::string render(const CheckerState& s) {
  std::string out;
  out.reserve(s.board.size());
  for (Cell c : s.board) out += cell_char(c);
  return out;
}

inline bool in_range(const CheckerState& s, int i) {
  return i >= 0 && i < static_cast<int>(s.board.size());
}

namespace detail {

inline bool check_source(const CheckerState& s, int from, std::string& err, int& dir) {
  if (!in_range(s, from)) {
    err = "cell " + std::to_string(from) + " is out of range";
    return false;
  }
  Cell c = s.board[static_cast<size_t>(from)];
  if (c == Cell::empty) {
    err = "no token at cell " + std::to_string(from);
    return false;
  }
  dir = c == Cell::left_token ? 1 : -1;
  return true;
}

}  // namespace detail

inline StepResult step(const CheckerState& s, const CheckerSlide& a) {
  StepResult r{false, s, ""};
  int dir = 0;
  if (!detail::check_source(s, a.from, r.error, dir)) return r;
  if (!in_range(s, a.to)) {
    r.error = "cell " + std::to_string(a.to) + " is out of range";
    return r;
  }
  if (a.to != a.from + dir) {
    r.error = "token at cell " + std::to_string(a.from) + " can only slide one cell to the " +
              (dir == 1 ? "right" : "left");
    return r;
  }
  if (s.board[static_cast<size_t>(a.to)] != Cell::empty) {
    r.error = "cell " + std::to_string(a.to) + " is not empty";
    return r;
  }
  CheckerState next = s;
  next.board[static_cast<size_t>(a.to)] = next.board[static_cast<size_t>(a.from)];
  next.board[static_cast<size_t>(a.from)] = Cell::empty;
  r.valid = true;
  r.next_state = std::move(next);
  return r;
}

inline StepResult step(const CheckerState& s, const CheckerJump& a) {
  StepResult r{false, s, ""};
  int dir = 0;
  if (!detail::check_source(s, a.from, r.error, dir)) return r;
  if (!in_range(s, a.to)) {
    r.error = "cell " + std::to_string(a.to) + " is out of range";
    return r;
  }
  if (a.over != a.from + dir || a.to != a.from + 2 * dir) {
    r.error = "token at cell " + std::to_string(a.from) +
              " can only jump two cells to the " + (dir == 1 ? "right" : "left") +
              " over an adjacent token";
    return r;
  }
  Cell mover = s.board[static_cast<size_t>(a.from)];
  Cell over = s.board[static_cast<size_t>(a.over)];
  Cell opposing = mover == Cell::left_token ? Cell::right_token : Cell::left_token;
  if (over != opposing) {
    r.error = "cell " + std::to_string(a.over) + " does not hold an opposing token";
    return r;
  }
  if (s.board[static_cast<size_t>(a.to)] != Cell::empty) {
    r.error = "cell " + std::to_string(a.to) + " is not empty";
    return r;
  }
  CheckerState next = s;
  next.board[static_cast<size_t>(a.to)] = mover;
  next.board[static_cast<size_t>(a.from)] = Cell::empty;
  r.valid = true;
  r.next_state = std::move(next);
  return r;
}

inline std::vector<Action> legal_actions(const CheckerState& s) {
  std::vector<Action> out;
  std::vector<std::pair<std::string, Action>> keyed;
  int n = static_cast<int>(s.board.size());
  for (int i = 0; i < n; ++i) {
    Cell c = s.board[static_cast<size_t>(i)];
    if (c == Cell::empty) continue;
    int dir = c == Cell::left_token ? 1 : -1;
    CheckerSlide sl{i, i + dir};
    if (step(s, sl).valid) keyed.emplace_back(action_text(sl), Action(sl));
    CheckerJump jp{i, i + dir, i + 2 * dir};
    if (step(s, jp).valid) keyed.emplace_back(action_text(jp), Action(jp));
  }
  std::sort(keyed.begin(), keyed.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& kv : keyed) out.push_back(std::move(kv.second));
  return out;
}

inline std::vector<Action> candidate_actions(const CheckerState& s) {
  std::vector<Action> out;
  int n = static_cast<int>(s.board.size());
  for (int i = 0; i < n; ++i) {
    for (int dir : {1, -1}) {
      if (i + dir >= 0 && i + dir < n) out.emplace_back(CheckerSlide{i, i + dir});
      if (i + 2 * dir >= 0 && i + 2 * dir < n)
        out.emplace_back(CheckerJump{i, i + dir, i + 2 * dir});
    }
  }
  return out;
}

// Classic layout: C left tokens, gap, C right tokens. Mirrored swaps the sides.
inline CheckerState classic_state(int per_side, bool mirrored = false) {
  CheckerState s;
  s.board.assign(static_cast<size_t>(2 * per_side + 1), Cell::empty);
  for (int i = 0; i < per_side; ++i) {
    s.board[static_cast<size_t>(i)] = mirrored ? Cell::right_token : Cell::left_token;
    s.board[static_cast<size_t>(per_side + 1 + i)] =
        mirrored ? Cell::left_token : Cell::right_token;
  }
  return s;
}

// The goal configuration: each side's tokens end up where the other side's
// started, so every cell swaps its token type.
inline CheckerState mirror_goal(const CheckerState& s) {
  CheckerState g = s;
  for (auto& c : g.board) {
    if (c == Cell::left_token) c = Cell::right_token;
    else if (c == Cell::right_token) c = Cell::left_token;
  }
  return g;
}

}  // namespace repot::checker
