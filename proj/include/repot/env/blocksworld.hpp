#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "repot/env/types.hpp"

namespace repot::blocks {

inline const char* op_name(BlockOp op) {
  switch (op) {
    case BlockOp::pick_up: return "pick-up";
    case BlockOp::put_down: return "put-down";
    case BlockOp::stack: return "stack";
    default: return "unstack";
  }
}

inline std::string action_text(const BlocksAction& a) {
  std::string out = op_name(a.op);
  out += '(';
  out += a.a;
  if (a.op == BlockOp::stack || a.op == BlockOp::unstack) {
    out += ',';
    out += a.b;
  }
  out += ')';
  return out;
}

inline bool is_clear(const BlocksState& s, const std::string& x) {
  if (s.holding == x) return false;
  for (const auto& [top, below] : s.on)
    if (below == x) return false;
  return true;
}

inline std::set<std::string> predicates(const BlocksState& s) {
  std::set<std::string> out;
  for (const auto& [top, below] : s.on) out.insert("on(" + top + "," + below + ")");
  for (const auto& b : s.on_table) out.insert("on_table(" + b + ")");
  for (const auto& b : s.blocks)
    if (is_clear(s, b)) out.insert("clear(" + b + ")");
  if (s.holding) out.insert("holding(" + *s.holding + ")");
  else out.insert("arm_empty");
  return out;
}

inline std::string render(const BlocksState& s) {
  std::string out;
  for (const auto& p : predicates(s)) {
    if (!out.empty()) out += ", ";
    out += p;
  }
  return out;
}

inline bool well_formed(const BlocksState& s) {
  std::map<std::string, int> placements;
  for (const auto& b : s.blocks) placements[b] = 0;
  auto known = [&](const std::string& b) { return s.blocks.count(b) != 0; };
  for (const auto& [top, below] : s.on) {
    if (!known(top) || !known(below) || top == below) return false;
    ++placements[top];
  }
  for (const auto& b : s.on_table) {
    if (!known(b)) return false;
    ++placements[b];
  }
  if (s.holding) {
    if (!known(*s.holding)) return false;
    ++placements[*s.holding];
  }
  for (const auto& [b, n] : placements)
    if (n != 1) return false;
  std::set<std::string> supports;
  for (const auto& [top, below] : s.on)
    if (!supports.insert(below).second) return false;  // two blocks on one support
  // no cycles: follow support chains to the table
  for (const auto& b : s.blocks) {
    std::string cur = b;
    size_t hops = 0;
    while (s.on.count(cur)) {
      cur = s.on.at(cur);
      if (++hops > s.blocks.size()) return false;
    }
  }
  return true;
}

inline StepResult step(const BlocksState& s, const BlocksAction& act) {
  StepResult r{false, s, ""};
  auto known = [&](const std::string& b) { return s.blocks.count(b) != 0; };
  switch (act.op) {
    case BlockOp::pick_up: {
      if (!known(act.a)) {
        r.error = "block " + act.a + " does not exist";
        return r;
      }
      if (s.holding) {
        r.error = "cannot pick-up " + act.a + ": the arm is not empty";
        return r;
      }
      if (!s.on_table.count(act.a)) {
        r.error = "cannot pick-up " + act.a + ": it is not on the table";
        return r;
      }
      if (!is_clear(s, act.a)) {
        r.error = "cannot pick-up " + act.a + ": it is not clear";
        return r;
      }
      BlocksState next = s;
      next.on_table.erase(act.a);
      next.holding = act.a;
      r.valid = true;
      r.next_state = std::move(next);
      return r;
    }
    case BlockOp::put_down: {
      if (s.holding != act.a) {
        r.error = "cannot put-down " + act.a + ": the arm is not holding it";
        return r;
      }
      BlocksState next = s;
      next.holding.reset();
      next.on_table.insert(act.a);
      r.valid = true;
      r.next_state = std::move(next);
      return r;
    }
    case BlockOp::stack: {
      if (s.holding != act.a) {
        r.error = "cannot stack " + act.a + ": the arm is not holding it";
        return r;
      }
      if (!known(act.b)) {
        r.error = "block " + act.b + " does not exist";
        return r;
      }
      if (act.a == act.b) {
        r.error = "cannot stack " + act.a + " on itself";
        return r;
      }
      if (!is_clear(s, act.b)) {
        r.error = "cannot stack " + act.a + " on " + act.b + ": " + act.b + " is not clear";
        return r;
      }
      BlocksState next = s;
      next.holding.reset();
      next.on[act.a] = act.b;
      r.valid = true;
      r.next_state = std::move(next);
      return r;
    }
    case BlockOp::unstack: {
      if (!known(act.a)) {
        r.error = "block " + act.a + " does not exist";
        return r;
      }
      if (s.holding) {
        r.error = "cannot unstack " + act.a + ": the arm is not empty";
        return r;
      }
      auto it = s.on.find(act.a);
      if (it == s.on.end() || it->second != act.b) {
        r.error = "cannot unstack " + act.a + " from " + act.b + ": " + act.a + " is not on " +
                  act.b;
        return r;
      }
      if (!is_clear(s, act.a)) {
        r.error = "cannot unstack " + act.a + ": it is not clear";
        return r;
      }
      BlocksState next = s;
      next.on.erase(act.a);
      next.holding = act.a;
      r.valid = true;
      r.next_state = std::move(next);
      return r;
    }
  }
  r.error = "unknown operator";
  return r;
}

inline std::vector<BlocksAction> legal_actions(const BlocksState& s) {
  std::vector<BlocksAction> out;
  if (s.holding) {
    out.push_back({BlockOp::put_down, *s.holding, ""});
    for (const auto& b : s.blocks)
      if (b != *s.holding && is_clear(s, b)) out.push_back({BlockOp::stack, *s.holding, b});
  } else {
    for (const auto& b : s.blocks) {
      if (!is_clear(s, b)) continue;
      if (s.on_table.count(b)) out.push_back({BlockOp::pick_up, b, ""});
      else if (s.on.count(b)) out.push_back({BlockOp::unstack, b, s.on.at(b)});
    }
  }
  std::sort(out.begin(), out.end(), [](const BlocksAction& a, const BlocksAction& b) {
    return action_text(a) < action_text(b);
  });
  return out;
}

inline std::vector<BlocksAction> candidate_actions(const BlocksState& s) {
  std::vector<BlocksAction> out;
  for (const auto& a : s.blocks) {
    out.push_back({BlockOp::pick_up, a, ""});
    out.push_back({BlockOp::put_down, a, ""});
    for (const auto& b : s.blocks) {
      if (a == b) continue;
      out.push_back({BlockOp::stack, a, b});
      out.push_back({BlockOp::unstack, a, b});
    }
  }
  return out;
}

}  // namespace repot::blocks
