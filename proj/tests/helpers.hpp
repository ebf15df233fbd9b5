#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "repot/env/env.hpp"
#include "repot/gateway.hpp"
#include "repot/oracle.hpp"
#include "repot/util.hpp"
#include "repot/zoo.hpp"

namespace repot::testutil {

// Deterministic random walk from a start state; returns the states visited.
inline std::vector<EnvState> sample_states(const EnvState& start, int walk_len,
                                           std::uint64_t seed) {
  std::vector<EnvState> out;
  EnvState s = start;
  Rng rng(seed);
  out.push_back(s);
  for (int i = 0; i < walk_len; ++i) {
    auto acts = legal_actions(s);
    if (acts.empty()) break;
    s = step(s, acts[rng.below(acts.size())]).next_state;
    out.push_back(s);
  }
  return out;
}

inline std::filesystem::path test_tmp_dir() {
#ifdef REPOT_TEST_TMP
  std::filesystem::path p(REPOT_TEST_TMP);
#else
  std::filesystem::path p = std::filesystem::temp_directory_path() / "repot-tests";
#endif
  std::filesystem::create_directories(p);
  return p;
}

inline std::filesystem::path write_file(const std::filesystem::path& p, const std::string& body) {
  std::ofstream out(p);
  out << body;
  out.close();
  return p;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Random well-formed blocksworld state over up to n blocks; sometimes holding.
inline BlocksState random_blocks(int n, Rng& rng) {
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back(std::string(1, static_cast<char>('a' + i)));
  for (int i = n - 1; i > 0; --i)
    std::swap(names[static_cast<size_t>(i)], names[rng.below(static_cast<std::uint64_t>(i) + 1)]);
  BlocksState s;
  size_t at = 0;
  std::vector<std::string> tops;
  while (at < names.size()) {
    size_t len = 1 + rng.below(names.size() - at);
    s.on_table.insert(names[at]);
    for (size_t i = 0; i < len; ++i) {
      s.blocks.insert(names[at + i]);
      if (i) s.on[names[at + i]] = names[at + i - 1];
    }
    tops.push_back(names[at + len - 1]);
    at += len;
  }
  if (rng.below(4) == 0) {
    const std::string& top = tops[rng.below(tops.size())];
    if (s.on.count(top)) s.on.erase(top);
    else s.on_table.erase(top);
    s.holding = top;
  }
  return s;
}

// Ready-made solvable instance: n-disk hanoi from peg 0 to peg 2.
inline ProblemInstance hanoi_instance(int n, std::string id = "hanoi-test") {
  ProblemInstance inst;
  inst.problem_id = std::move(id);
  inst.environment = EnvId::hanoi;
  inst.complexity = n;
  inst.initial_state = hanoi::classic_state(n, 0);
  inst.goal = GoalState{hanoi::classic_state(n, 2)};
  auto solved = solve(inst.initial_state, inst.goal);
  inst.oracle_plan = solved.plan;
  inst.oracle_plan_length = static_cast<int>(solved.plan.size());
  inst.natural_language_prompt = describe_problem(inst.environment, inst.initial_state, inst.goal);
  inst.seed = 42;
  return inst;
}

inline std::string moves_line(const std::string& inner) { return "moves = [" + inner + "]"; }

// For runner tests whose scripted completions carry no code fences, so the
// sandbox must never be invoked.
inline ProgramExecutor no_exec() {
  return [](const std::string&) -> SandboxResult {
    throw std::logic_error("unexpected sandbox execution");
  };
}

}  // namespace repot::testutil
