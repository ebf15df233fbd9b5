#pragma once

#include <string>
#include <variant>
#include <vector>

#include "repot/env/blocksworld.hpp"
#include "repot/env/checker.hpp"
#include "repot/env/hanoi.hpp"
#include "repot/env/river.hpp"
#include "repot/env/types.hpp"
#include "repot/util.hpp"

namespace repot {

inline std::string action_text(const Action& a) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, HanoiMove>) return hanoi::action_text(x);
        else if constexpr (std::is_same_v<T, CheckerSlide>) return checker::action_text(x);
        else if constexpr (std::is_same_v<T, CheckerJump>) return checker::action_text(x);
        else if constexpr (std::is_same_v<T, RiverCross>) return river::action_text(x);
        else return blocks::action_text(x);
      },
      a);
}

inline std::string op_of(const Action& a) {
  std::string t = action_text(a);
  return t.substr(0, t.find('('));
}

inline std::string render_state(const EnvState& s) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, HanoiState>) return hanoi::render(x);
        else if constexpr (std::is_same_v<T, CheckerState>) return checker::render(x);
        else if constexpr (std::is_same_v<T, RiverState>) return river::render(x);
        else return blocks::render(x);
      },
      s);
}

// States are kept in a canonical structural form, so normalization is a
// validated copy; equal logical states always compare equal.
inline EnvState normalize(const EnvState& s) { return s; }

inline StepResult step(const EnvState& s, const Action& a) {
  require_env(state_env(s), action_env(a), "action");
  switch (s.index()) {
    case 0:
      return hanoi::step(std::get<HanoiState>(s), std::get<HanoiMove>(a));
    case 1: {
      const auto& cs = std::get<CheckerState>(s);
      if (std::holds_alternative<CheckerSlide>(a)) return checker::step(cs, std::get<CheckerSlide>(a));
      return checker::step(cs, std::get<CheckerJump>(a));
    }
    case 2:
      return river::step(std::get<RiverState>(s), std::get<RiverCross>(a));
    default:
      return blocks::step(std::get<BlocksState>(s), std::get<BlocksAction>(a));
  }
}

inline std::vector<Action> legal_actions(const EnvState& s) {
  std::vector<Action> out;
  switch (s.index()) {
    case 0:
      for (const auto& m : hanoi::legal_actions(std::get<HanoiState>(s))) out.emplace_back(m);
      break;
    case 1:
      return checker::legal_actions(std::get<CheckerState>(s));
    case 2:
      for (const auto& m : river::legal_actions(std::get<RiverState>(s))) out.emplace_back(m);
      break;
    default:
      for (const auto& m : blocks::legal_actions(std::get<BlocksState>(s))) out.emplace_back(m);
      break;
  }
  return out;
}

inline std::vector<Action> candidate_actions(const EnvState& s) {
  std::vector<Action> out;
  switch (s.index()) {
    case 0:
      for (const auto& m : hanoi::candidate_actions(std::get<HanoiState>(s))) out.emplace_back(m);
      break;
    case 1:
      return checker::candidate_actions(std::get<CheckerState>(s));
    case 2:
      for (const auto& m : river::candidate_actions(std::get<RiverState>(s))) out.emplace_back(m);
      break;
    default:
      for (const auto& m : blocks::candidate_actions(std::get<BlocksState>(s))) out.emplace_back(m);
      break;
  }
  return out;
}

inline bool is_goal(const EnvState& s, const Goal& g) {
  if (std::holds_alternative<GoalState>(g)) {
    const auto& gs = std::get<GoalState>(g).state;
    require_env(state_env(s), state_env(gs), "goal state");
    return normalize(s) == normalize(gs);
  }
  if (state_env(s) != EnvId::blocksworld)
    throw EnvMismatch("environment mismatch: predicate goals apply only to blocksworld");
  const auto& want = std::get<GoalPredicates>(g).predicates;
  auto have = blocks::predicates(std::get<BlocksState>(s));
  for (const auto& p : want)
    if (!have.count(p)) return false;
  return true;
}

inline std::string goal_text(const Goal& g) {
  if (std::holds_alternative<GoalState>(g)) return render_state(std::get<GoalState>(g).state);
  std::string out;
  for (const auto& p : std::get<GoalPredicates>(g).predicates) {
    if (!out.empty()) out += ", ";
    out += p;
  }
  return out;
}

// ---- Tolerant action parsing ------------------------------------------------
// Accepts case-insensitive operator names and flexible whitespace; any other
// deviation from the canonical grammar is a parse error.

namespace detail {

struct Scanner {
  std::string_view s;
  size_t i = 0;

  void ws() {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  }
  bool eat(char c) {
    ws();
    if (i < s.size() && s[i] == c) {
      ++i;
      return true;
    }
    return false;
  }
  std::string ident() {
    ws();
    size_t b = i;
    while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '-' ||
                            s[i] == '_'))
      ++i;
    return to_lower(s.substr(b, i - b));
  }
  bool integer(int& out, ParseError& err) {
    ws();
    size_t b = i;
    if (i < s.size() && (s[i] == '-' || s[i] == '+')) ++i;
    size_t digits = i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    if (i == digits) {
      err = {b, "expected an integer"};
      return false;
    }
    try {
      out = std::stoi(std::string(s.substr(b, i - b)));
    } catch (...) {
      err = {b, "integer out of range"};
      return false;
    }
    return true;
  }
  bool done() {
    ws();
    return i >= s.size();
  }
};

inline std::variant<Action, ParseError> parse_fail(size_t pos, std::string msg) {
  return ParseError{pos, std::move(msg)};
}

}  // namespace detail

inline std::variant<Action, ParseError> parse_action(EnvId env, std::string_view text) {
  using detail::parse_fail;
  detail::Scanner sc{text};
  std::string op = sc.ident();
  if (op.empty()) return parse_fail(sc.i, "expected an operator name");
  size_t op_pos = sc.i - op.size();

  auto arity_error = [&](const char* name, int want) {
    return parse_fail(sc.i, std::string("expected ") + std::to_string(want) +
                                " arguments to " + name);
  };
  auto finish = [&](Action a) -> std::variant<Action, ParseError> {
    if (!sc.eat(')')) return parse_fail(sc.i, "expected ')'");
    if (!sc.done()) return parse_fail(sc.i, "unexpected trailing text");
    return a;
  };
  auto read_ints = [&](const char* name, int n, int* out) -> std::optional<ParseError> {
    if (!sc.eat('(')) return ParseError{sc.i, "expected '(' after operator name"};
    ParseError err;
    for (int j = 0; j < n; ++j) {
      if (j && !sc.eat(',')) {
        sc.ws();
        if (sc.i < sc.s.size() && sc.s[sc.i] == ')')
          return ParseError{sc.i, std::string("expected ") + std::to_string(n) +
                                      " arguments to " + name};
        return ParseError{sc.i, "expected ','"};
      }
      if (!sc.integer(out[j], err)) return err;
    }
    return std::nullopt;
  };

  switch (env) {
    case EnvId::hanoi: {
      if (op != "move") return parse_fail(op_pos, "unknown operator '" + op + "' (expected move)");
      int v[3];
      if (auto e = read_ints("move", 3, v)) return *e;
      return finish(HanoiMove{v[0], v[1], v[2]});
    }
    case EnvId::checker: {
      if (op == "slide") {
        int v[2];
        if (auto e = read_ints("slide", 2, v)) return *e;
        return finish(CheckerSlide{v[0], v[1]});
      }
      if (op == "jump") {
        int v[3];
        if (auto e = read_ints("jump", 3, v)) return *e;
        return finish(CheckerJump{v[0], v[1], v[2]});
      }
      return parse_fail(op_pos, "unknown operator '" + op + "' (expected slide or jump)");
    }
    case EnvId::river: {
      if (op != "cross")
        return parse_fail(op_pos, "unknown operator '" + op + "' (expected cross)");
      if (!sc.eat('(')) return parse_fail(sc.i, "expected '(' after operator name");
      std::string bank = sc.ident();
      if (bank != "left" && bank != "right")
        return parse_fail(sc.i, "expected a bank (left or right)");
      if (!sc.eat(',')) return parse_fail(sc.i, "expected ','");
      if (!sc.eat('[')) return parse_fail(sc.i, "expected '[' before the passenger list");
      std::vector<std::string> ps;
      while (true) {
        std::string name = sc.ident();
        if (name.empty()) return parse_fail(sc.i, "expected a passenger name");
        ps.push_back(name);
        if (sc.eat(']')) break;
        if (!sc.eat(',')) return parse_fail(sc.i, "expected ',' or ']'");
        if (ps.size() >= 3) return parse_fail(sc.i, "at most two passengers");
      }
      if (ps.size() > 2) return parse_fail(sc.i, "at most two passengers");
      std::sort(ps.begin(), ps.end());
      return finish(RiverCross{bank == "left" ? BankSide::left : BankSide::right, ps});
    }
    case EnvId::blocksworld: {
      BlockOp bop;
      int args;
      if (op == "pick-up") { bop = BlockOp::pick_up; args = 1; }
      else if (op == "put-down") { bop = BlockOp::put_down; args = 1; }
      else if (op == "stack") { bop = BlockOp::stack; args = 2; }
      else if (op == "unstack") { bop = BlockOp::unstack; args = 2; }
      else
        return parse_fail(op_pos, "unknown operator '" + op +
                                      "' (expected pick-up, put-down, stack, or unstack)");
      if (!sc.eat('(')) return parse_fail(sc.i, "expected '(' after operator name");
      std::string a = sc.ident();
      if (a.empty()) return parse_fail(sc.i, "expected a block name");
      std::string b;
      if (args == 2) {
        if (!sc.eat(',')) return arity_error(op.c_str(), 2);
        b = sc.ident();
        if (b.empty()) return parse_fail(sc.i, "expected a block name");
      }
      return finish(BlocksAction{bop, a, b});
    }
  }
  return parse_fail(0, "unknown environment");
}

// ---- State text parsing ------------------------------------------------------
// Inverse of render_state for the canonical single-line form.

struct StateParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::string> bracket_list(detail::Scanner& sc, const char* what) {
  if (!sc.eat('[')) throw StateParseError(std::string("expected '[' in ") + what);
  std::vector<std::string> out;
  if (sc.eat(']')) return out;
  while (true) {
    std::string name = sc.ident();
    if (name.empty()) throw StateParseError(std::string("expected a name in ") + what);
    out.push_back(name);
    if (sc.eat(']')) break;
    if (!sc.eat(',')) throw StateParseError(std::string("expected ',' or ']' in ") + what);
  }
  return out;
}

}  // namespace detail

inline EnvState parse_state(EnvId env, const std::string& text) {
  detail::Scanner sc{text};
  switch (env) {
    case EnvId::hanoi: {
      HanoiState s;
      int total = 0;
      for (int p = 0; p < 3; ++p) {
        std::string label = sc.ident();
        if (label != "peg" + std::to_string(p))
          throw StateParseError("expected 'peg" + std::to_string(p) + "' in hanoi state");
        if (!sc.eat(':')) throw StateParseError("expected ':' in hanoi state");
        for (const auto& d : detail::bracket_list(sc, "hanoi state")) {
          try {
            s.pegs[static_cast<size_t>(p)].push_back(std::stoi(d));
          } catch (...) {
            throw StateParseError("bad disk id '" + d + "' in hanoi state");
          }
          ++total;
        }
      }
      if (!sc.done()) throw StateParseError("unexpected trailing text in hanoi state");
      s.n_disks = total;
      if (!hanoi::well_formed(s)) throw StateParseError("hanoi state violates stacking rules");
      return s;
    }
    case EnvId::checker: {
      CheckerState s;
      for (char c : text) {
        if (c == 'L') s.board.push_back(Cell::left_token);
        else if (c == 'R') s.board.push_back(Cell::right_token);
        else if (c == '_') s.board.push_back(Cell::empty);
        else if (!std::isspace(static_cast<unsigned char>(c)))
          throw StateParseError(std::string("bad cell character '") + c + "' in checker state");
      }
      if (s.board.empty()) throw StateParseError("empty checker board");
      return s;
    }
    case EnvId::river: {
      std::map<std::string, BankSide> where;
      for (BankSide bank : {BankSide::left, BankSide::right}) {
        std::string label = sc.ident();
        if (label != bank_name(bank))
          throw StateParseError(std::string("expected '") + bank_name(bank) + "' in river state");
        if (!sc.eat(':')) throw StateParseError("expected ':' in river state");
        for (const auto& name : detail::bracket_list(sc, "river state")) {
          if (!where.emplace(name, bank).second)
            throw StateParseError("entity " + name + " listed twice in river state");
        }
      }
      if (sc.ident() != "boat" || !sc.eat(':'))
        throw StateParseError("expected 'boat:' in river state");
      std::string side = sc.ident();
      if (side != "left" && side != "right")
        throw StateParseError("bad boat side in river state");
      if (!sc.done()) throw StateParseError("unexpected trailing text in river state");
      RiverState s;
      s.pairs = static_cast<int>(where.size() / 2);
      s.boat = side == "left" ? BankSide::left : BankSide::right;
      s.actor_bank.assign(static_cast<size_t>(s.pairs), BankSide::left);
      s.agent_bank.assign(static_cast<size_t>(s.pairs), BankSide::left);
      std::set<std::string> expected;
      for (int i = 0; i < s.pairs; ++i) {
        expected.insert(river::actor_name(i));
        expected.insert(river::agent_name(i));
      }
      for (const auto& [name, bank] : where) {
        if (!expected.count(name))
          throw StateParseError("unexpected entity " + name + " in river state");
        int id = *river::entity_id(s, name);
        if (id < s.pairs) s.actor_bank[static_cast<size_t>(id)] = bank;
        else s.agent_bank[static_cast<size_t>(id - s.pairs)] = bank;
      }
      if (where.size() != expected.size())
        throw StateParseError("river state must contain matched actor/agent pairs");
      return s;
    }
    case EnvId::blocksworld: {
      BlocksState s;
      std::set<std::string> claimed_clear;
      bool claimed_arm_empty = false;
      std::optional<std::string> claimed_holding;
      for (const auto& raw : split_top_level(text)) {
        detail::Scanner ps{raw};
        std::string head = ps.ident();
        if (head == "arm_empty") {
          claimed_arm_empty = true;
          continue;
        }
        if (!ps.eat('(')) throw StateParseError("bad predicate '" + raw + "'");
        std::string a = ps.ident();
        if (head == "on") {
          if (!ps.eat(',')) throw StateParseError("bad predicate '" + raw + "'");
          std::string b = ps.ident();
          if (!ps.eat(')')) throw StateParseError("bad predicate '" + raw + "'");
          if (s.on.count(a)) throw StateParseError("block " + a + " has two supports");
          s.on[a] = b;
          s.blocks.insert(a);
          s.blocks.insert(b);
        } else if (head == "on_table") {
          if (!ps.eat(')')) throw StateParseError("bad predicate '" + raw + "'");
          s.on_table.insert(a);
          s.blocks.insert(a);
        } else if (head == "clear") {
          if (!ps.eat(')')) throw StateParseError("bad predicate '" + raw + "'");
          claimed_clear.insert(a);
          s.blocks.insert(a);
        } else if (head == "holding") {
          if (!ps.eat(')')) throw StateParseError("bad predicate '" + raw + "'");
          claimed_holding = a;
          s.blocks.insert(a);
        } else {
          throw StateParseError("unknown predicate '" + raw + "'");
        }
      }
      s.holding = claimed_holding;
      if (claimed_arm_empty && claimed_holding)
        throw StateParseError("state claims both arm_empty and holding");
      if (!claimed_arm_empty && !claimed_holding)
        throw StateParseError("state must claim arm_empty or holding");
      if (!blocks::well_formed(s)) throw StateParseError("blocksworld state is inconsistent");
      for (const auto& b : s.blocks) {
        bool derived = blocks::is_clear(s, b);
        if (derived != (claimed_clear.count(b) != 0))
          throw StateParseError("clear predicates do not match block positions");
      }
      return s;
    }
  }
  throw StateParseError("unknown environment");
}

}  // namespace repot
