#pragma once

#include <cstdint>
#include <cstdlib>
#include <deque>
#include <functional>
#include <unordered_map>
#include <vector>

#include "repot/replay.hpp"

namespace repot {

inline constexpr std::size_t kSolveBudget = 5'000'000;  // visited-state cap

enum class SolveStatus { ok, unsolvable, budget_exceeded };

struct SolveResult {
  SolveStatus status = SolveStatus::unsolvable;
  Plan plan;            // empty unless status == ok (a goal start yields an empty plan)
  std::string message;  // diagnostic for the two failure statuses
};

namespace detail {

// Breadth-first search over packed state codes. Expansion follows the
// canonical legal-action order, so shortest plans tie-break lexicographically.
template <class Encode, class Decode>
SolveResult bfs_solve(const EnvState& start, const Goal& goal, Encode encode, Decode decode,
                      std::size_t budget) {
  SolveResult res;
  const std::uint64_t root = encode(start);
  // visited code -> parent code * 256 + action index (root maps to itself)
  std::unordered_map<std::uint64_t, std::uint64_t> parent;
  parent.reserve(1 << 12);
  std::deque<std::uint64_t> frontier;
  parent.emplace(root, root * 256);
  frontier.push_back(root);
  std::uint64_t goal_code = 0;
  bool found = false;
  if (is_goal(start, goal)) {
    res.status = SolveStatus::ok;
    return res;
  }
  while (!frontier.empty() && !found) {
    std::uint64_t code = frontier.front();
    frontier.pop_front();
    EnvState s = decode(code);
    auto acts = legal_actions(s);
    for (std::size_t i = 0; i < acts.size(); ++i) {
      StepResult r = step(s, acts[i]);
      std::uint64_t nc = encode(r.next_state);
      if (!parent.emplace(nc, code * 256 + i).second) continue;
      if (parent.size() > budget) {
        res.status = SolveStatus::budget_exceeded;
        res.message = "search budget of " + std::to_string(budget) + " states exceeded";
        return res;
      }
      if (is_goal(r.next_state, goal)) {
        goal_code = nc;
        found = true;
        break;
      }
      frontier.push_back(nc);
    }
  }
  if (!found) {
    res.status = SolveStatus::unsolvable;
    res.message = "the goal is unreachable from the initial state";
    return res;
  }
  std::vector<Action> actions;
  std::uint64_t cur = goal_code;
  while (cur != root) {
    std::uint64_t packed = parent.at(cur);
    std::uint64_t pcode = packed / 256;
    std::size_t idx = static_cast<std::size_t>(packed % 256);
    actions.push_back(legal_actions(decode(pcode))[idx]);
    cur = pcode;
  }
  std::reverse(actions.begin(), actions.end());
  res.status = SolveStatus::ok;
  res.plan = make_plan(actions);
  return res;
}

inline std::uint64_t hanoi_pow3(int n) {
  std::uint64_t p = 1;
  while (n--) p *= 3;
  return p;
}

inline std::uint64_t hanoi_encode(const HanoiState& s) {
  std::uint64_t code = 0;
  for (int p = 0; p < 3; ++p)
    for (int d : s.pegs[static_cast<size_t>(p)])
      code += static_cast<std::uint64_t>(p) * hanoi_pow3(d - 1);
  return code;
}

inline HanoiState hanoi_decode(int n_disks, std::uint64_t code) {
  HanoiState s;
  s.n_disks = n_disks;
  for (int d = n_disks; d >= 1; --d) {  // big disks first, so stacks come out ordered
    int p = static_cast<int>(code / hanoi_pow3(d - 1) % 3);
    s.pegs[static_cast<size_t>(p)].push_back(d);
  }
  return s;
}

inline std::uint64_t checker_encode(const CheckerState& s) {
  std::uint64_t code = 0;
  for (size_t i = 0; i < s.board.size(); ++i)
    code |= static_cast<std::uint64_t>(s.board[i]) << (2 * i);
  return code;
}

inline CheckerState checker_decode(size_t cells, std::uint64_t code) {
  CheckerState s;
  s.board.resize(cells);
  for (size_t i = 0; i < cells; ++i)
    s.board[i] = static_cast<Cell>((code >> (2 * i)) & 3);
  return s;
}

inline std::uint64_t river_encode(const RiverState& s) {
  std::uint64_t code = s.boat == BankSide::right ? 1 : 0;
  for (int i = 0; i < s.pairs; ++i) {
    if (s.actor_bank[static_cast<size_t>(i)] == BankSide::right) code |= 1ull << (1 + i);
    if (s.agent_bank[static_cast<size_t>(i)] == BankSide::right)
      code |= 1ull << (1 + s.pairs + i);
  }
  return code;
}

inline RiverState river_decode(int pairs, std::uint64_t code) {
  RiverState s = river::classic_state(pairs);
  s.boat = (code & 1) ? BankSide::right : BankSide::left;
  for (int i = 0; i < pairs; ++i) {
    if (code & (1ull << (1 + i))) s.actor_bank[static_cast<size_t>(i)] = BankSide::right;
    if (code & (1ull << (1 + pairs + i))) s.agent_bank[static_cast<size_t>(i)] = BankSide::right;
  }
  return s;
}

inline SolveResult solve_blocks(const BlocksState& start, const Goal& goal);

}  // namespace detail

inline SolveResult solve(const EnvState& start, const Goal& goal,
                         std::size_t budget = kSolveBudget) {
  switch (state_env(start)) {
    case EnvId::hanoi: {
      int n = std::get<HanoiState>(start).n_disks;
      if (n > 14) {
        return {SolveStatus::budget_exceeded, {},
                "hanoi instances above 14 disks exceed the search budget"};
      }
      return detail::bfs_solve(
          start, goal, [](const EnvState& s) { return detail::hanoi_encode(std::get<HanoiState>(s)); },
          [n](std::uint64_t c) { return EnvState(detail::hanoi_decode(n, c)); }, budget);
    }
    case EnvId::checker: {
      size_t cells = std::get<CheckerState>(start).board.size();
      if (cells > 31)
        return {SolveStatus::budget_exceeded, {}, "checker boards above 31 cells are unsupported"};
      return detail::bfs_solve(
          start, goal,
          [](const EnvState& s) { return detail::checker_encode(std::get<CheckerState>(s)); },
          [cells](std::uint64_t c) { return EnvState(detail::checker_decode(cells, c)); }, budget);
    }
    case EnvId::river: {
      int pairs = std::get<RiverState>(start).pairs;
      return detail::bfs_solve(
          start, goal,
          [](const EnvState& s) { return detail::river_encode(std::get<RiverState>(s)); },
          [pairs](std::uint64_t c) { return EnvState(detail::river_decode(pairs, c)); }, budget);
    }
    case EnvId::blocksworld:
      return detail::solve_blocks(std::get<BlocksState>(start), goal);
  }
  return {SolveStatus::unsolvable, {}, "unknown environment"};
}

namespace detail {

// Constructive blocksworld solver: demolish every block that is not already in
// its goal position (bottom-up correct), then rebuild goal stacks from the
// table. Valid but not length-optimal. The produced plan is replay-checked
// before it is returned.
inline SolveResult solve_blocks(const BlocksState& start, const Goal& goal) {
  SolveResult res;
  if (!blocks::well_formed(start)) {
    res.message = "initial blocksworld state is inconsistent";
    return res;
  }
  std::map<std::string, std::string> want_on;    // x -> y
  std::set<std::string> want_table;
  std::set<std::string> want_other;              // clear/arm predicates, verified at the end
  auto add_goal_pred = [&](const std::string& p) -> bool {
    Scanner sc{p};
    std::string head = sc.ident();
    if (head == "on") {
      if (!sc.eat('(')) return false;
      std::string a = sc.ident();
      if (!sc.eat(',')) return false;
      std::string b = sc.ident();
      if (!sc.eat(')')) return false;
      if (a == b || want_on.count(a)) return false;
      want_on[a] = b;
      return true;
    }
    if (head == "on_table") {
      if (!sc.eat('(')) return false;
      std::string a = sc.ident();
      if (!sc.eat(')')) return false;
      want_table.insert(a);
      return true;
    }
    want_other.insert(p);
    return true;
  };
  if (std::holds_alternative<GoalPredicates>(goal)) {
    for (const auto& p : std::get<GoalPredicates>(goal).predicates) {
      if (!add_goal_pred(p)) {
        res.message = "goal predicates are contradictory at '" + p + "'";
        return res;
      }
    }
  } else {
    const auto& gs = std::get<GoalState>(goal).state;
    require_env(EnvId::blocksworld, state_env(gs), "goal state");
    for (const auto& p : blocks::predicates(std::get<BlocksState>(gs)))
      if (!add_goal_pred(p)) {
        res.message = "goal predicates are contradictory at '" + p + "'";
        return res;
      }
  }
  for (const auto& [x, y] : want_on) {
    if (!start.blocks.count(x) || !start.blocks.count(y)) {
      res.message = "goal references a block that does not exist";
      return res;
    }
    if (want_table.count(x)) {
      res.message = "goal places " + x + " both on the table and on " + y;
      return res;
    }
  }
  for (const auto& x : want_table)
    if (!start.blocks.count(x)) {
      res.message = "goal references a block that does not exist";
      return res;
    }
  {  // two blocks on the same support, or a support cycle
    std::set<std::string> supports;
    for (const auto& [x, y] : want_on)
      if (!supports.insert(y).second) {
        res.message = "goal stacks two blocks on " + y;
        return res;
      }
    for (const auto& [x, y] : want_on) {
      std::string cur = x;
      size_t hops = 0;
      while (want_on.count(cur)) {
        cur = want_on.at(cur);
        if (++hops > want_on.size()) {
          res.message = "goal on() predicates form a cycle";
          return res;
        }
      }
    }
  }

  std::vector<Action> actions;
  BlocksState s = start;
  auto apply = [&](const BlocksAction& a) {
    StepResult r = blocks::step(s, a);
    if (!r.valid) throw std::logic_error("oracle produced invalid blocksworld action: " + r.error);
    s = std::get<BlocksState>(r.next_state);
    actions.emplace_back(a);
  };

  if (s.holding) apply({BlockOp::put_down, *s.holding, ""});

  // correct(x): x sits exactly where the goal wants it, all the way down.
  std::map<std::string, bool> correct_memo;
  std::function<bool(const std::string&)> correct = [&](const std::string& x) -> bool {
    auto it = correct_memo.find(x);
    if (it != correct_memo.end()) return it->second;
    bool ok;
    if (want_on.count(x)) ok = s.on.count(x) && s.on.at(x) == want_on.at(x) && correct(want_on.at(x));
    else ok = s.on_table.count(x) != 0;  // table or unconstrained blocks belong on the table
    correct_memo[x] = ok;
    return ok;
  };

  // Demolition: repeatedly unstack some clear, incorrectly placed stacked block.
  while (true) {
    std::string pick;
    for (const auto& [x, y] : s.on) {
      correct_memo.clear();
      if (blocks::is_clear(s, x) && !correct(x)) {
        pick = x;
        break;
      }
    }
    if (pick.empty()) break;
    apply({BlockOp::unstack, pick, s.on.at(pick)});
    apply({BlockOp::put_down, pick, ""});
  }

  // Rebuild: stack goal towers bottom-up until nothing is left to fix.
  while (true) {
    std::string pick;
    for (const auto& [x, y] : want_on) {
      correct_memo.clear();
      if (!correct(x) && correct(y) && blocks::is_clear(s, y) && s.on_table.count(x) &&
          blocks::is_clear(s, x)) {
        pick = x;
        break;
      }
    }
    if (pick.empty()) break;
    apply({BlockOp::pick_up, pick, ""});
    apply({BlockOp::stack, pick, want_on.at(pick)});
  }

  Plan plan = make_plan(actions);
  ReplayOutcome check = replay(start, plan, goal);
  if (!check.goal_reached) {
    res.message = "no constructive plan reaches this goal";
    return res;
  }
  res.status = SolveStatus::ok;
  res.plan = std::move(plan);
  return res;
}

}  // namespace detail

// ---- Greedy probe -------------------------------------------------------------
// Hand-coded heuristic descent used by the suite generator's triviality filter:
// take the first legal action (canonical order) that strictly lowers the
// heuristic, otherwise the first legal action; stop at the step budget.

inline int heuristic(const EnvState& s, const Goal& goal) {
  switch (state_env(s)) {
    case EnvId::hanoi: {
      const auto& cur = std::get<HanoiState>(s);
      const auto& tgt = std::get<HanoiState>(std::get<GoalState>(goal).state);
      auto peg_of = [](const HanoiState& st, int d) {
        for (int p = 0; p < 3; ++p)
          for (int x : st.pegs[static_cast<size_t>(p)])
            if (x == d) return p;
        return -1;
      };
      int h = 0;
      for (int d = 1; d <= cur.n_disks; ++d)
        if (peg_of(cur, d) != peg_of(tgt, d)) ++h;
      return h;
    }
    case EnvId::checker: {
      const auto& cur = std::get<CheckerState>(s);
      const auto& tgt = std::get<CheckerState>(std::get<GoalState>(goal).state);
      auto positions = [](const CheckerState& st, Cell kind) {
        std::vector<int> out;
        for (size_t i = 0; i < st.board.size(); ++i)
          if (st.board[i] == kind) out.push_back(static_cast<int>(i));
        return out;
      };
      int h = 0;
      for (Cell kind : {Cell::left_token, Cell::right_token}) {
        auto a = positions(cur, kind);
        auto b = positions(tgt, kind);
        for (size_t i = 0; i < a.size() && i < b.size(); ++i) h += std::abs(a[i] - b[i]);
      }
      return h;
    }
    case EnvId::river: {
      const auto& cur = std::get<RiverState>(s);
      const auto& tgt = std::get<RiverState>(std::get<GoalState>(goal).state);
      int h = 0;
      for (int i = 0; i < cur.pairs; ++i) {
        if (cur.actor_bank[static_cast<size_t>(i)] != tgt.actor_bank[static_cast<size_t>(i)]) ++h;
        if (cur.agent_bank[static_cast<size_t>(i)] != tgt.agent_bank[static_cast<size_t>(i)]) ++h;
      }
      return h;
    }
    case EnvId::blocksworld: {
      const auto& cur = std::get<BlocksState>(s);
      auto have = blocks::predicates(cur);
      int h = 0;
      if (std::holds_alternative<GoalPredicates>(goal)) {
        for (const auto& p : std::get<GoalPredicates>(goal).predicates)
          if (!have.count(p)) ++h;
      } else {
        for (const auto& p :
             blocks::predicates(std::get<BlocksState>(std::get<GoalState>(goal).state)))
          if (!have.count(p)) ++h;
      }
      return h;
    }
  }
  return 0;
}

struct ProbeResult {
  bool solved = false;
  int steps = 0;
};

inline ProbeResult greedy_probe(const EnvState& start, const Goal& goal, int step_budget) {
  ProbeResult out;
  EnvState s = start;
  for (int i = 0; i < step_budget; ++i) {
    if (is_goal(s, goal)) {
      out.solved = true;
      return out;
    }
    auto acts = legal_actions(s);
    if (acts.empty()) return out;
    int h0 = heuristic(s, goal);
    EnvState next = step(s, acts[0]).next_state;
    for (const auto& a : acts) {
      EnvState cand = step(s, a).next_state;
      if (heuristic(cand, goal) < h0) {
        next = std::move(cand);
        break;
      }
    }
    s = std::move(next);
    ++out.steps;
  }
  out.solved = is_goal(s, goal);
  return out;
}

}  // namespace repot
