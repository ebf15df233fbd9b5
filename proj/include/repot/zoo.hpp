#pragma once

#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "repot/oracle.hpp"
#include "repot/replay.hpp"

namespace repot {

struct ProblemInstance {
  std::string problem_id;
  EnvId environment = EnvId::hanoi;
  int complexity = 0;
  EnvState initial_state;
  Goal goal;
  Plan oracle_plan;
  int oracle_plan_length = 0;
  std::string natural_language_prompt;
  std::uint64_t seed = 0;
  nlohmann::json extra = nlohmann::json::object();  // unknown JSONL fields, preserved
};

inline bool operator==(const PlanItem& a, const PlanItem& b) {
  return a.text == b.text && a.action == b.action;
}

inline bool operator==(const GoalState& a, const GoalState& b) { return a.state == b.state; }
inline bool operator==(const GoalPredicates& a, const GoalPredicates& b) {
  return a.predicates == b.predicates;
}

inline bool operator==(const ProblemInstance& a, const ProblemInstance& b) {
  return a.problem_id == b.problem_id && a.environment == b.environment &&
         a.complexity == b.complexity && a.initial_state == b.initial_state && a.goal == b.goal &&
         a.oracle_plan == b.oracle_plan && a.oracle_plan_length == b.oracle_plan_length &&
         a.natural_language_prompt == b.natural_language_prompt && a.seed == b.seed &&
         a.extra == b.extra;
}

// ---- Prompt rendering -----------------------------------------------------

enum class PromptMode { cot, pot };

namespace prompts {

inline const char* title(EnvId e) {
  switch (e) {
    case EnvId::hanoi: return "Tower of Hanoi";
    case EnvId::checker: return "Checker Jumping";
    case EnvId::river: return "River Crossing";
    case EnvId::blocksworld: return "Blocksworld";
  }
  return "?";
}

inline const char* rules(EnvId e) {
  switch (e) {
    case EnvId::hanoi:
      return "- Three pegs are numbered 0, 1, and 2; disks are numbered from 1 (smallest) upward.\n"
             "- A state lists each peg's disks from bottom to top.\n"
             "- move(d,f,t) lifts disk d off peg f and drops it on peg t.\n"
             "- Only the top disk of a peg may move, and a disk may never rest on a smaller disk.";
    case EnvId::checker:
      return "- The board is a row of cells, numbered from 0 on the left: 'L' tokens move only "
             "rightward, 'R' tokens only leftward, '_' is empty.\n"
             "- slide(f,t) moves the token at cell f to the adjacent empty cell t in its "
             "direction.\n"
             "- jump(f,o,t) moves the token at cell f over an opposing token at adjacent cell o "
             "onto the empty cell t two cells away in its direction.\n"
             "- Jumped tokens stay on the board; no captures.";
    case EnvId::river:
      return "- Actors a1..aK and their personal agents b1..bK must cross a river using one "
             "boat.\n"
             "- cross(side,[p1,p2]) sails the boat to that side carrying one or two passengers "
             "from the boat's current bank.\n"
             "- An actor may never be in the boat or on a bank with another actor's agent unless "
             "its own agent is also present.";
    case EnvId::blocksworld:
      return "- Blocks stack on a table and are moved one at a time by a robot arm.\n"
             "- pick-up(x) lifts clear block x from the table; put-down(x) places the held block "
             "on the table.\n"
             "- stack(x,y) places the held block x onto clear block y; unstack(x,y) lifts clear "
             "block x off y.\n"
             "- The arm holds at most one block; the goal is a set of predicates that must all "
             "hold.";
  }
  return "";
}

inline const char* syntax(EnvId e) {
  switch (e) {
    case EnvId::hanoi: return "move(disk,from_peg,to_peg), e.g. move(1,0,2)";
    case EnvId::checker: return "slide(from,to) or jump(from,over,to), e.g. slide(3,2)";
    case EnvId::river:
      return "cross(side,[passengers]) with side left or right and one or two passengers, e.g. "
             "cross(right,[a1,b1])";
    case EnvId::blocksworld:
      return "pick-up(x), put-down(x), stack(x,y), or unstack(x,y), e.g. stack(a,b)";
  }
  return "";
}

inline const char* contract(PromptMode mode) {
  if (mode == PromptMode::pot)
    return "Write a Python program that prints exactly one line of the form:\n"
           "  moves = [...]\n"
           "where the list holds your complete move sequence in the exact action syntax above. "
           "The printed moves line is your answer.";
  return "Reason it through, then reply with exactly one line of the form:\n"
         "  moves = [...]\n"
         "where the list holds your complete move sequence in the exact action syntax above.";
}

}  // namespace prompts

// The mode-independent problem statement stored on the instance.
inline std::string describe_problem(EnvId env, const EnvState& initial, const Goal& goal) {
  std::string out = "You are solving a ";
  out += prompts::title(env);
  out += " puzzle.\nRules:\n";
  out += prompts::rules(env);
  out += "\nInitial state: ";
  out += render_state(normalize(initial));
  out += "\nGoal state: ";
  out += goal_text(goal);
  out += "\nActions (exact syntax): ";
  out += prompts::syntax(env);
  out += "\n";
  return out;
}

inline std::string render_prompt(const ProblemInstance& inst, PromptMode mode) {
  return inst.natural_language_prompt + prompts::contract(mode);
}

// ---- JSONL persistence ------------------------------------------------------

inline nlohmann::json goal_to_json(const Goal& g) {
  nlohmann::json j;
  if (std::holds_alternative<GoalState>(g)) {
    j["kind"] = "state";
    j["text"] = render_state(std::get<GoalState>(g).state);
  } else {
    j["kind"] = "predicates";
    j["predicates"] = std::vector<std::string>(std::get<GoalPredicates>(g).predicates.begin(),
                                               std::get<GoalPredicates>(g).predicates.end());
  }
  return j;
}

inline Goal goal_from_json(EnvId env, const nlohmann::json& j) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "state") return GoalState{parse_state(env, j.at("text").get<std::string>())};
  if (kind == "predicates") {
    GoalPredicates g;
    for (const auto& p : j.at("predicates")) g.predicates.insert(p.get<std::string>());
    return g;
  }
  throw std::runtime_error("unknown goal kind '" + kind + "'");
}

inline nlohmann::json instance_to_json(const ProblemInstance& inst) {
  nlohmann::json j = inst.extra;
  j["problem_id"] = inst.problem_id;
  j["environment"] = env_name(inst.environment);
  j["complexity"] = inst.complexity;
  j["initial_state"] = render_state(inst.initial_state);
  j["goal"] = goal_to_json(inst.goal);
  std::vector<std::string> plan_texts;
  for (const auto& item : inst.oracle_plan) plan_texts.push_back(item.text);
  j["oracle_plan"] = plan_texts;
  j["oracle_plan_length"] = inst.oracle_plan_length;
  j["natural_language_prompt"] = inst.natural_language_prompt;
  j["seed"] = inst.seed;
  return j;
}

inline ProblemInstance instance_from_json(const nlohmann::json& j) {
  ProblemInstance inst;
  inst.problem_id = j.at("problem_id").get<std::string>();
  auto env = env_from_name(j.at("environment").get<std::string>());
  if (!env) throw std::runtime_error("unknown environment '" +
                                     j.at("environment").get<std::string>() + "'");
  inst.environment = *env;
  inst.complexity = j.at("complexity").get<int>();
  inst.initial_state = parse_state(inst.environment, j.at("initial_state").get<std::string>());
  inst.goal = goal_from_json(inst.environment, j.at("goal"));
  for (const auto& t : j.at("oracle_plan")) {
    auto r = parse_action(inst.environment, t.get<std::string>());
    if (std::holds_alternative<ParseError>(r))
      throw std::runtime_error("bad oracle action '" + t.get<std::string>() + "': " +
                               std::get<ParseError>(r).message);
    inst.oracle_plan.push_back(plan_item(std::get<Action>(r)));
  }
  inst.oracle_plan_length = j.at("oracle_plan_length").get<int>();
  inst.natural_language_prompt = j.at("natural_language_prompt").get<std::string>();
  inst.seed = j.at("seed").get<std::uint64_t>();
  if (inst.oracle_plan_length != static_cast<int>(inst.oracle_plan.size()))
    throw std::runtime_error("oracle_plan_length does not match the plan");
  if (!replay(inst.initial_state, inst.oracle_plan, inst.goal).goal_reached)
    throw std::runtime_error("oracle plan does not replay to the goal");
  static const std::set<std::string> known = {
      "problem_id",  "environment",       "complexity",
      "initial_state", "goal",            "oracle_plan",
      "oracle_plan_length", "natural_language_prompt", "seed"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) inst.extra[it.key()] = it.value();
  return inst;
}

inline void write_suite(const std::vector<ProblemInstance>& instances, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  for (const auto& inst : instances) {
    out << instance_to_json(inst).dump() << '\n';
    if (!out) throw std::runtime_error("write failed on '" + path + "'");
  }
}

inline std::vector<ProblemInstance> read_suite(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open suite file '" + path + "'");
  std::vector<ProblemInstance> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_view(line).empty()) continue;
    try {
      out.push_back(instance_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

// ---- Stratified generation -----------------------------------------------

struct Stratum {
  EnvId env = EnvId::hanoi;
  int complexity = 0;
  int count = 0;
};

using StratificationPlan = std::vector<Stratum>;

inline StratificationPlan default_stratification() {
  StratificationPlan plan;
  for (int n = 2; n <= 9; ++n) plan.push_back({EnvId::hanoi, n, 25});
  for (int c = 2; c <= 10; ++c) plan.push_back({EnvId::checker, c, 25});
  for (int k = 2; k <= 5; ++k) plan.push_back({EnvId::river, k, 25});
  for (int n = 3; n <= 12; ++n) plan.push_back({EnvId::blocksworld, n, 25});
  return plan;
}

inline std::pair<int, int> complexity_limits(EnvId e) {
  switch (e) {
    case EnvId::hanoi: return {2, 14};
    case EnvId::checker: return {1, 10};
    case EnvId::river: return {1, 8};
    case EnvId::blocksworld: return {3, 16};
  }
  return {0, 0};
}

namespace detail {

inline constexpr int kGreedyProbeBudget = 100;
inline constexpr int kStratumAttempts = 200;

struct Candidate {
  EnvState initial;
  Goal goal;
};

inline Candidate sample_hanoi(int n, Rng& rng) {
  static const std::pair<int, int> kPairs[6] = {{0, 1}, {0, 2}, {1, 0}, {1, 2}, {2, 0}, {2, 1}};
  auto [src, dst] = kPairs[rng.below(6)];
  return {hanoi::classic_state(n, src), GoalState{hanoi::classic_state(n, dst)}};
}

inline Candidate sample_checker(int c, Rng& rng) {
  CheckerState s = checker::classic_state(c, rng.coin());
  return {s, GoalState{checker::mirror_goal(s)}};
}

// States at BFS distance >= 2 from the all-right goal. River moves are
// invertible, so distance from the goal equals distance to it.
inline const std::vector<std::uint64_t>& river_pool(int pairs) {
  static std::map<int, std::vector<std::uint64_t>> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(pairs);
  if (it != cache.end()) return it->second;
  RiverState goal = river::goal_state(pairs);
  std::map<std::uint64_t, int> dist;
  std::deque<std::uint64_t> frontier;
  dist[river_encode(goal)] = 0;
  frontier.push_back(river_encode(goal));
  while (!frontier.empty()) {
    std::uint64_t code = frontier.front();
    frontier.pop_front();
    EnvState s = river_decode(pairs, code);
    for (const auto& a : legal_actions(s)) {
      std::uint64_t nc = river_encode(std::get<RiverState>(step(s, a).next_state));
      if (dist.emplace(nc, dist[code] + 1).second) frontier.push_back(nc);
    }
  }
  std::vector<std::uint64_t> pool;
  for (const auto& [code, d] : dist)
    if (d >= 2) pool.push_back(code);
  return cache.emplace(pairs, std::move(pool)).first->second;
}

inline Candidate sample_river(int pairs, Rng& rng) {
  const auto& pool = river_pool(pairs);
  std::uint64_t code = pool[rng.below(pool.size())];
  return {river_decode(pairs, code), GoalState{river::goal_state(pairs)}};
}

inline std::vector<std::vector<std::string>> random_stacks(int n, Rng& rng) {
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back(std::string(1, static_cast<char>('a' + i)));
  for (int i = n - 1; i > 0; --i) std::swap(names[static_cast<size_t>(i)],
                                            names[rng.below(static_cast<std::uint64_t>(i) + 1)]);
  std::vector<std::vector<std::string>> stacks;
  size_t at = 0;
  while (at < names.size()) {
    size_t len = 1 + rng.below(names.size() - at);
    stacks.emplace_back(names.begin() + static_cast<long>(at),
                        names.begin() + static_cast<long>(at + len));
    at += len;
  }
  return stacks;
}

inline Candidate sample_blocks(int n, Rng& rng) {
  auto build = [](const std::vector<std::vector<std::string>>& stacks) {
    BlocksState s;
    for (const auto& st : stacks) {
      s.on_table.insert(st[0]);  // stacks listed bottom to top
      for (size_t i = 0; i < st.size(); ++i) {
        s.blocks.insert(st[i]);
        if (i) s.on[st[i]] = st[i - 1];
      }
    }
    return s;
  };
  BlocksState initial = build(random_stacks(n, rng));
  auto goal_stacks = random_stacks(n, rng);
  GoalPredicates goal;
  for (const auto& st : goal_stacks) {
    if (rng.coin()) goal.predicates.insert("on_table(" + st[0] + ")");
    for (size_t i = 1; i < st.size(); ++i)
      goal.predicates.insert("on(" + st[i] + "," + st[i - 1] + ")");
  }
  if (goal.predicates.empty())
    goal.predicates.insert("on_table(" + goal_stacks[0][0] + ")");
  return {initial, goal};
}

inline Candidate sample_candidate(EnvId env, int complexity, Rng& rng) {
  switch (env) {
    case EnvId::hanoi: return sample_hanoi(complexity, rng);
    case EnvId::checker: return sample_checker(complexity, rng);
    case EnvId::river: return sample_river(complexity, rng);
    case EnvId::blocksworld: return sample_blocks(complexity, rng);
  }
  throw std::logic_error("unknown environment");
}

class SolveMemo {
 public:
  SolveResult solve(const EnvState& initial, const Goal& goal) {
    std::string key = render_state(initial) + "|" + goal_text(goal);
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = memo_.find(key);
      if (it != memo_.end()) return it->second;
    }
    SolveResult r = repot::solve(initial, goal);
    std::lock_guard<std::mutex> lock(mu_);
    return memo_.emplace(std::move(key), std::move(r)).first->second;
  }

 private:
  std::mutex mu_;
  std::map<std::string, SolveResult> memo_;
};

}  // namespace detail

inline std::string stratum_name(const Stratum& st) {
  return std::string(env_name(st.env)) + "/" + std::to_string(st.complexity);
}

inline std::vector<ProblemInstance> generate_suite(const StratificationPlan& plan,
                                                   std::uint64_t seed, int parallelism = 1) {
  for (const auto& st : plan) {
    auto [lo, hi] = complexity_limits(st.env);
    if (st.complexity < lo || st.complexity > hi)
      throw std::runtime_error("stratum " + stratum_name(st) + ": complexity out of range [" +
                               std::to_string(lo) + "," + std::to_string(hi) + "]");
    if (st.count < 0) throw std::runtime_error("stratum " + stratum_name(st) + ": negative count");
  }
  // The triviality floor: the two lowest complexities present per environment.
  std::map<EnvId, std::set<int>> levels;
  for (const auto& st : plan) levels[st.env].insert(st.complexity);
  auto floor_applies = [&](EnvId env, int complexity) {
    const auto& ls = levels[env];
    int rank = 0;
    for (int c : ls) {
      if (c == complexity) return rank < 2;
      ++rank;
    }
    return false;
  };

  detail::SolveMemo memo;
  std::vector<std::vector<ProblemInstance>> per_stratum(plan.size());
  std::mutex err_mu;
  std::string first_error;

  auto run_stratum = [&](size_t si) {
    const Stratum& st = plan[si];
    bool filtered = floor_applies(st.env, st.complexity);
    for (int slot = 0; slot < st.count; ++slot) {
      std::uint64_t slot_seed = seed_combine(
          seed_combine(seed_combine(seed, static_cast<std::uint64_t>(st.env)),
                       static_cast<std::uint64_t>(st.complexity)),
          static_cast<std::uint64_t>(slot));
      bool placed = false;
      for (int attempt = 0; attempt < detail::kStratumAttempts && !placed; ++attempt) {
        Rng rng(seed_combine(slot_seed, static_cast<std::uint64_t>(attempt)));
        detail::Candidate cand = detail::sample_candidate(st.env, st.complexity, rng);
        if (is_goal(cand.initial, cand.goal)) continue;
        SolveResult sr = memo.solve(cand.initial, cand.goal);
        if (sr.status != SolveStatus::ok) continue;
        if (filtered &&
            greedy_probe(cand.initial, cand.goal, detail::kGreedyProbeBudget).solved)
          continue;
        ProblemInstance inst;
        char id[64];
        std::snprintf(id, sizeof id, "%s-c%02d-%03d", env_name(st.env), st.complexity, slot);
        inst.problem_id = id;
        inst.environment = st.env;
        inst.complexity = st.complexity;
        inst.initial_state = cand.initial;
        inst.goal = cand.goal;
        inst.oracle_plan = sr.plan;
        inst.oracle_plan_length = static_cast<int>(sr.plan.size());
        inst.natural_language_prompt = describe_problem(st.env, cand.initial, cand.goal);
        inst.seed = slot_seed;
        per_stratum[si].push_back(std::move(inst));
        placed = true;
      }
      if (!placed) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (first_error.empty())
          first_error = "stratum " + stratum_name(st) + ": no viable instance after " +
                        std::to_string(detail::kStratumAttempts) + " attempts (slot " +
                        std::to_string(slot) + ")";
        return;
      }
    }
  };

  if (parallelism <= 1) {
    for (size_t si = 0; si < plan.size(); ++si) {
      run_stratum(si);
      if (!first_error.empty()) break;
    }
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < parallelism; ++t)
      pool.emplace_back([&] {
        while (true) {
          size_t si = next.fetch_add(1);
          if (si >= plan.size()) return;
          run_stratum(si);
        }
      });
    for (auto& th : pool) th.join();
  }
  if (!first_error.empty()) throw std::runtime_error(first_error);

  std::vector<ProblemInstance> out;
  for (auto& chunk : per_stratum)
    for (auto& inst : chunk) out.push_back(std::move(inst));
  return out;
}

}  // namespace repot
