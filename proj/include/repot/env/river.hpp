#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "repot/env/types.hpp"

namespace repot::river {

// k actor/agent pairs (actors a1..ak, agents b1..bk), one boat of capacity 2.
// Safety: an actor may never be with a foreign agent (on a bank or in the
// boat group) unless its own agent is also present.

inline std::string actor_name(int i) { return "a" + std::to_string(i + 1); }
inline std::string agent_name(int i) { return "b" + std::to_string(i + 1); }

// Entity id: actors 0..k-1, agents k..2k-1.
inline std::optional<int> entity_id(const RiverState& s, const std::string& name) {
  if (name.size() < 2 || (name[0] != 'a' && name[0] != 'b')) return std::nullopt;
  for (size_t i = 1; i < name.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(name[i]))) return std::nullopt;
  int num = 0;
  try {
    num = std::stoi(name.substr(1));
  } catch (...) {
    return std::nullopt;
  }
  if (num < 1 || num > s.pairs) return std::nullopt;
  return name[0] == 'a' ? num - 1 : s.pairs + num - 1;
}

inline std::string entity_name(const RiverState& s, int id) {
  return id < s.pairs ? actor_name(id) : agent_name(id - s.pairs);
}

inline BankSide entity_bank(const RiverState& s, int id) {
  return id < static_cast<int>(s.actor_bank.size()) ? s.actor_bank[static_cast<size_t>(id)]
                                                    : s.agent_bank[static_cast<size_t>(id - s.pairs)];
}

inline std::string action_text(const RiverCross& a) {
  std::string out = "cross(";
  out += bank_name(a.to);
  out += ",[";
  auto names = a.passengers;
  std::sort(names.begin(), names.end());
  for (size_t i = 0; i < names.size(); ++i) {
    if (i) out += ',';
    out += names[i];
  }
  out += "])";
  return out;
}

inline std::string render(const RiverState& s) {
  auto list_bank = [&](BankSide b) {
    std::vector<std::string> names;
    for (int i = 0; i < s.pairs; ++i)
      if (s.actor_bank[static_cast<size_t>(i)] == b) names.push_back(actor_name(i));
    for (int i = 0; i < s.pairs; ++i)
      if (s.agent_bank[static_cast<size_t>(i)] == b) names.push_back(agent_name(i));
    std::sort(names.begin(), names.end());
    std::string out = "[";
    for (size_t i = 0; i < names.size(); ++i) {
      if (i) out += ',';
      out += names[i];
    }
    out += ']';
    return out;
  };
  return "left: " + list_bank(BankSide::left) + " right: " + list_bank(BankSide::right) +
         " boat: " + bank_name(s.boat);
}

// Is actor i safe given per-actor and per-agent location predicates?
template <class ActorAt, class AgentAt>
inline std::optional<int> unsafe_actor(int pairs, ActorAt actor_here, AgentAt agent_here) {
  for (int i = 0; i < pairs; ++i) {
    if (!actor_here(i)) continue;
    if (agent_here(i)) continue;  // own agent present, protected
    for (int j = 0; j < pairs; ++j)
      if (j != i && agent_here(j)) return i;
  }
  return std::nullopt;
}

inline StepResult step(const RiverState& s, const RiverCross& a) {
  StepResult r{false, s, ""};
  if (s.boat == a.to) {
    r.error = std::string("the boat is already on the ") + bank_name(a.to) + " bank";
    return r;
  }
  if (a.passengers.empty()) {
    r.error = "the boat needs at least one passenger";
    return r;
  }
  if (a.passengers.size() > 2) {
    r.error = "the boat holds at most two passengers";
    return r;
  }
  std::vector<int> ids;
  for (const auto& name : a.passengers) {
    auto id = entity_id(s, name);
    if (!id) {
      r.error = "unknown passenger " + name;
      return r;
    }
    ids.push_back(*id);
  }
  if (ids.size() == 2 && ids[0] == ids[1]) {
    r.error = "passenger " + a.passengers[0] + " is listed twice";
    return r;
  }
  for (int id : ids) {
    if (entity_bank(s, id) != s.boat) {
      r.error = entity_name(s, id) + " is not on the " + bank_name(s.boat) + " bank";
      return r;
    }
  }
  auto aboard = [&](int entity) {
    return std::find(ids.begin(), ids.end(), entity) != ids.end();
  };
  if (auto bad = unsafe_actor(
          s.pairs, [&](int i) { return aboard(i); },
          [&](int j) { return aboard(s.pairs + j); })) {
    for (int j = 0; j < s.pairs; ++j) {
      if (j != *bad && aboard(s.pairs + j)) {
        r.error = "actor " + actor_name(*bad) + " cannot travel with agent " + agent_name(j) +
                  " without agent " + agent_name(*bad);
        return r;
      }
    }
  }
  RiverState next = s;
  for (int id : ids) {
    if (id < s.pairs) next.actor_bank[static_cast<size_t>(id)] = a.to;
    else next.agent_bank[static_cast<size_t>(id - s.pairs)] = a.to;
  }
  next.boat = a.to;
  for (BankSide bank : {BankSide::left, BankSide::right}) {
    auto bad = unsafe_actor(
        s.pairs,
        [&](int i) { return next.actor_bank[static_cast<size_t>(i)] == bank; },
        [&](int j) { return next.agent_bank[static_cast<size_t>(j)] == bank; });
    if (bad) {
      for (int j = 0; j < s.pairs; ++j) {
        if (j != *bad && next.agent_bank[static_cast<size_t>(j)] == bank) {
          r.error = "actor " + actor_name(*bad) + " cannot be left with agent " +
                    agent_name(j) + " without agent " + agent_name(*bad);
          return r;
        }
      }
    }
  }
  r.valid = true;
  r.next_state = std::move(next);
  return r;
}

inline std::vector<RiverCross> legal_actions(const RiverState& s) {
  std::vector<std::string> here;
  for (int i = 0; i < 2 * s.pairs; ++i)
    if (entity_bank(s, i) == s.boat) here.push_back(entity_name(s, i));
  std::sort(here.begin(), here.end());
  BankSide dest = other_bank(s.boat);
  std::vector<std::pair<std::string, RiverCross>> keyed;
  auto consider = [&](std::vector<std::string> ps) {
    RiverCross c{dest, std::move(ps)};
    if (step(s, c).valid) keyed.emplace_back(action_text(c), c);
  };
  for (size_t i = 0; i < here.size(); ++i) {
    consider({here[i]});
    for (size_t j = i + 1; j < here.size(); ++j) consider({here[i], here[j]});
  }
  std::sort(keyed.begin(), keyed.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<RiverCross> out;
  for (auto& kv : keyed) out.push_back(std::move(kv.second));
  return out;
}

inline std::vector<RiverCross> candidate_actions(const RiverState& s) {
  std::vector<std::string> all;
  for (int i = 0; i < 2 * s.pairs; ++i) all.push_back(entity_name(s, i));
  std::sort(all.begin(), all.end());
  std::vector<RiverCross> out;
  for (BankSide dest : {BankSide::left, BankSide::right}) {
    for (size_t i = 0; i < all.size(); ++i) {
      out.push_back({dest, {all[i]}});
      for (size_t j = i + 1; j < all.size(); ++j) out.push_back({dest, {all[i], all[j]}});
    }
  }
  return out;
}

inline RiverState classic_state(int pairs) {
  RiverState s;
  s.pairs = pairs;
  s.actor_bank.assign(static_cast<size_t>(pairs), BankSide::left);
  s.agent_bank.assign(static_cast<size_t>(pairs), BankSide::left);
  s.boat = BankSide::left;
  return s;
}

inline RiverState goal_state(int pairs) {
  RiverState s = classic_state(pairs);
  s.actor_bank.assign(static_cast<size_t>(pairs), BankSide::right);
  s.agent_bank.assign(static_cast<size_t>(pairs), BankSide::right);
  s.boat = BankSide::right;
  return s;
}

inline bool safe_state(const RiverState& s) {
  for (BankSide bank : {BankSide::left, BankSide::right}) {
    if (unsafe_actor(
            s.pairs,
            [&](int i) { return s.actor_bank[static_cast<size_t>(i)] == bank; },
            [&](int j) { return s.agent_bank[static_cast<size_t>(j)] == bank; }))
      return false;
  }
  return true;
}

}  // namespace repot::river
