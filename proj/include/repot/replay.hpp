#pragma once

#include <string>
#include <vector>

#include "repot/env/env.hpp"

namespace repot {

// A plan element keeps the raw text it came from; `action` is absent when the
// text did not parse under the environment grammar.
struct PlanItem {
  std::string text;
  std::optional<Action> action;
};

using Plan = std::vector<PlanItem>;

inline PlanItem plan_item(const Action& a) { return {action_text(a), a}; }

inline Plan make_plan(const std::vector<Action>& actions) {
  Plan p;
  p.reserve(actions.size());
  for (const auto& a : actions) p.push_back(plan_item(a));
  return p;
}

inline Plan parse_plan(EnvId env, const std::vector<std::string>& texts) {
  Plan p;
  for (const auto& t : texts) {
    auto r = parse_action(env, t);
    if (std::holds_alternative<Action>(r)) p.push_back(plan_item(std::get<Action>(r)));
    else p.push_back({t, std::nullopt});
  }
  return p;
}

inline std::string plan_text(const Plan& p) {
  std::string out;
  for (size_t i = 0; i < p.size(); ++i) {
    if (i) out += ',';
    out += p[i].text;
  }
  return out;
}

// Result of executing a plan against the simulator: the maximal verified
// prefix, the state reached by it, and the first failure if any.
// failure_index is 1-based; a fully valid plan of length n reports n+1.
struct ReplayOutcome {
  Plan prefix;
  EnvState boundary_state;
  int failure_index = 0;
  std::string error;           // empty when the whole plan verified
  bool goal_reached = false;
  std::optional<Action> failed_action;  // absent when plan fully valid or item unparseable
};

inline ReplayOutcome replay(const EnvState& start, const Plan& plan, const Goal& goal) {
  ReplayOutcome out;
  out.boundary_state = start;
  out.failure_index = static_cast<int>(plan.size()) + 1;
  for (size_t i = 0; i < plan.size(); ++i) {
    const PlanItem& item = plan[i];
    if (!item.action) {
      out.failure_index = static_cast<int>(i) + 1;
      out.error = "unparseable action: " + item.text;
      break;
    }
    StepResult r = step(out.boundary_state, *item.action);
    if (!r.valid) {
      out.failure_index = static_cast<int>(i) + 1;
      out.error = r.error;
      out.failed_action = *item.action;
      break;
    }
    out.boundary_state = std::move(r.next_state);
    out.prefix.push_back(item);
  }
  out.goal_reached = is_goal(out.boundary_state, goal);
  return out;
}

}  // namespace repot
