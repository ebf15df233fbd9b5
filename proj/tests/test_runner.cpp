#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "repot/runner.hpp"

using namespace repot;
using testutil::hanoi_instance;
using testutil::moves_line;
using testutil::no_exec;

namespace {

std::string oracle_text(const ProblemInstance& inst) { return plan_text(inst.oracle_plan); }

// Splits the oracle plan: first `good` moves, one move that is illegal at the
// resulting boundary, then `filler` parseable junk; returns the plan text.
std::string corrupt_after(const ProblemInstance& inst, int good, int filler = 0) {
  std::vector<std::string> parts;
  for (int i = 0; i < good; ++i) parts.push_back(inst.oracle_plan[i].text);
  parts.push_back("move(9,0,1)");  // disk 9 never exists in these fixtures
  for (int i = 0; i < filler; ++i) parts.push_back(inst.oracle_plan[0].text);
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ',';
    out += parts[i];
  }
  return out;
}

std::string oracle_suffix(const ProblemInstance& inst, int from) {
  std::string out;
  for (size_t i = static_cast<size_t>(from); i < inst.oracle_plan.size(); ++i) {
    if (out.size()) out += ',';
    out += inst.oracle_plan[i].text;
  }
  return out;
}

MethodConfig config_of(Method m) {
  MethodConfig cfg;
  cfg.method = m;
  return cfg;
}

}  // namespace

TEST_CASE("runner: pot succeeds on a scripted oracle plan") {
  auto inst = hanoi_instance(2);
  ScriptedBackend b;
  b.add_response(moves_line(oracle_text(inst)));
  auto t = run_one(inst, b, config_of(Method::pot), no_exec());
  CHECK(t.success);
  CHECK(t.llm_calls.size() == 1);
  CHECK(t.llm_calls[0].prompt == render_prompt(inst, PromptMode::pot));
  CHECK(t.plan_len == 3);
  CHECK(t.verified_prefix_len == 3);
  CHECK_FALSE(t.first_failure_index);
  CHECK_FALSE(t.verifier_error);
  CHECK_FALSE(t.runner_exception);
  CHECK(t.final_plan == oracle_text(inst));
  CHECK(t.env == "hanoi");
  CHECK(t.complexity == 2);
  CHECK(t.method == "pot");
  CHECK_FALSE(t.repot_repair_calls);
}

TEST_CASE("runner: pot failure modes") {
  auto inst = hanoi_instance(2);

  SECTION("garbage completion") {
    ScriptedBackend b;
    b.add_response("I refuse to print a list.");
    auto t = run_one(inst, b, config_of(Method::pot), no_exec());
    CHECK_FALSE(t.success);
    CHECK(t.plan_len == 0);
    CHECK(t.extraction_error == "no plan");
    CHECK_FALSE(t.runner_exception);
    CHECK(t.llm_calls.size() == 1);
  }

  SECTION("empty plan on a non-goal start") {
    ScriptedBackend b;
    b.add_response("moves = []");
    auto t = run_one(inst, b, config_of(Method::pot), no_exec());
    CHECK_FALSE(t.success);
    CHECK(t.plan_len == 0);
    CHECK_FALSE(t.extraction_error);
  }

  SECTION("backend error becomes runner_exception") {
    ScriptedBackend b;  // empty script
    auto t = run_one(inst, b, config_of(Method::pot), no_exec());
    CHECK_FALSE(t.success);
    CHECK(t.runner_exception == "script exhausted");
    CHECK(t.llm_calls.size() == 1);
    CHECK(t.llm_calls[0].output_text.empty());
  }
}

TEST_CASE("runner: cot reads the moves line from prose") {
  auto inst = hanoi_instance(2);
  ScriptedBackend b;
  b.add_response("First I move disk 1.\nmoves = [" + oracle_text(inst) + "]\n");
  auto t = run_one(inst, b, config_of(Method::cot), no_exec());
  CHECK(t.success);
  CHECK(t.llm_calls[0].prompt == render_prompt(inst, PromptMode::cot));
}

TEST_CASE("runner: pot_retry resends the original prompt verbatim") {
  auto inst = hanoi_instance(2);
  auto cfg = config_of(Method::pot_retry);

  SECTION("bad then oracle") {
    ScriptedBackend b;
    b.add_response(moves_line("move(1,0,1),move(1,0,2)"));
    b.add_response(moves_line(oracle_text(inst)));
    auto t = run_one(inst, b, cfg, no_exec());
    CHECK(t.success);
    REQUIRE(t.llm_calls.size() == 2);
    CHECK(t.llm_calls[0].prompt == t.llm_calls[1].prompt);
    CHECK(t.llm_calls[1].prompt == render_prompt(inst, PromptMode::pot));
    CHECK(t.attempt1_plan_len == 2);
    CHECK(t.attempt1_prefix_len == 1);
    CHECK(t.attempt1_success == false);
    CHECK(t.first_failure_index == 2);
    CHECK(t.verifier_error == "disk 1 is not the top disk of peg 0");
    CHECK(t.plan_len == 3);
    CHECK(t.verified_prefix_len == 3);
    CHECK(t.final_plan == oracle_text(inst));
  }

  SECTION("oracle first time") {
    ScriptedBackend b;
    b.add_response(moves_line(oracle_text(inst)));
    auto t = run_one(inst, b, cfg, no_exec());
    CHECK(t.success);
    CHECK(t.llm_calls.size() == 1);
    CHECK_FALSE(t.attempt1_plan_len);
  }

  SECTION("bad twice") {
    ScriptedBackend b;
    b.add_response("nope");
    b.add_response(moves_line("move(2,0,1)"));
    auto t = run_one(inst, b, cfg, no_exec());
    CHECK_FALSE(t.success);
    CHECK(t.llm_calls.size() == 2);
    CHECK(t.attempt1_plan_len == 0);
    CHECK(t.plan_len == 1);
    CHECK(t.verified_prefix_len == 0);
  }
}

TEST_CASE("runner: sc majority vote with first-sampled tie-break") {
  auto inst = hanoi_instance(2);
  auto cfg = config_of(Method::sc);

  SECTION("five oracles beat three spoilers") {
    cfg.k = 8;
    ScriptedBackend b;
    for (int i = 0; i < 3; ++i) b.add_response(moves_line("move(1,0,1)"));
    for (int i = 0; i < 5; ++i) b.add_response(moves_line(oracle_text(inst)));
    auto t = run_one(inst, b, cfg, no_exec());
    CHECK(t.success);
    CHECK(t.llm_calls.size() == 8);
    for (const auto& c : t.llm_calls)
      CHECK(c.prompt == render_prompt(inst, PromptMode::cot));
    CHECK(t.final_plan == oracle_text(inst));
  }

  SECTION("spacing differences normalize to one ballot") {
    cfg.k = 3;
    ScriptedBackend b;
    b.add_response("moves = [ move(1,0,1) ,move(2,0,2),  move(1,1,2) ]");
    b.add_response(moves_line("move(1,0,1),move(2,0,2),move(1,1,2)"));
    b.add_response(moves_line("move(1,0,2)"));
    auto t = run_one(inst, b, cfg, no_exec());
    CHECK(t.final_plan == "move(1,0,1),move(2,0,2),move(1,1,2)");
    CHECK(t.success);
  }

  SECTION("tie goes to the first-sampled plan") {
    cfg.k = 4;
    ScriptedBackend b;
    b.add_response(moves_line("move(1,0,2)"));
    b.add_response(moves_line("move(1,0,1)"));
    b.add_response(moves_line("move(1,0,1)"));
    b.add_response(moves_line("move(1,0,2)"));
    auto t = run_one(inst, b, cfg, no_exec());
    CHECK(t.final_plan == "move(1,0,2)");
  }

  SECTION("k=1 degenerates to one cot sample") {
    cfg.k = 1;
    ScriptedBackend b;
    b.add_response(moves_line(oracle_text(inst)));
    auto t = run_one(inst, b, cfg, no_exec());
    CHECK(t.success);
    CHECK(t.llm_calls.size() == 1);
  }

  SECTION("all samples unusable") {
    cfg.k = 3;
    ScriptedBackend b;
    for (int i = 0; i < 3; ++i) b.add_response("no list here");
    auto t = run_one(inst, b, cfg, no_exec());
    CHECK_FALSE(t.success);
    CHECK(t.plan_len == 0);
    CHECK(t.llm_calls.size() == 3);
  }
}

TEST_CASE("runner: repot repairs from the verified boundary") {
  auto inst = hanoi_instance(3);
  REQUIRE(inst.oracle_plan_length == 7);
  auto cfg = config_of(Method::repot);

  ScriptedBackend b;
  b.add_response(moves_line(corrupt_after(inst, 3)));
  b.add_response(moves_line(oracle_suffix(inst, 3)));
  auto t = run_one(inst, b, cfg, no_exec());

  CHECK(t.success);
  CHECK(t.llm_calls.size() == 2);
  CHECK(t.repot_repair_calls == 1);
  CHECK(t.repot_initial_pot_success == false);
  CHECK(t.initial_plan_len == 4);
  CHECK(t.initial_prefix_len == 3);
  CHECK(t.first_failure_index == 4);
  CHECK(t.verifier_error == "disk 9 does not exist");
  CHECK(t.verified_prefix_len == 7);
  CHECK(t.plan_len == 7);
  CHECK(t.final_plan == oracle_text(inst));

  const std::string& repair = t.llm_calls[1].prompt;
  CHECK_THAT(repair, Catch::Matchers::ContainsSubstring(kCheckpointMarker));
  CHECK_THAT(repair,
             Catch::Matchers::ContainsSubstring("You have already executed 3 verified moves."));
  CHECK_THAT(repair, Catch::Matchers::ContainsSubstring(
                         "Recent verified moves: move(1,0,2), move(2,0,1), move(1,2,1)"));
  CHECK_THAT(repair, Catch::Matchers::ContainsSubstring("Verifier message: disk 9 does not exist"));
  CHECK_THAT(repair, Catch::Matchers::ContainsSubstring("Legal moves: "));
  CHECK_THAT(repair, Catch::Matchers::ContainsSubstring("Blocked: "));
  CHECK_THAT(repair, Catch::Matchers::ContainsSubstring("up to 14 primitive moves"));
}

TEST_CASE("runner: repot immediate success makes no repair call") {
  auto inst = hanoi_instance(2);
  ScriptedBackend b;
  b.add_response(moves_line(oracle_text(inst)));
  auto t = run_one(inst, b, config_of(Method::repot), no_exec());
  CHECK(t.success);
  CHECK(t.llm_calls.size() == 1);
  CHECK(t.repot_repair_calls == 0);
  CHECK(t.repot_initial_pot_success == true);
}

TEST_CASE("runner: repot keeps the partial prefix when the budget runs out") {
  auto inst = hanoi_instance(2);
  auto cfg = config_of(Method::repot);

  SECTION("repair extraction failure consumes the budget") {
    ScriptedBackend b;
    b.add_response(moves_line("move(1,0,1),move(1,0,2)"));
    b.add_response("no plan from me");
    auto t = run_one(inst, b, cfg, no_exec());
    CHECK_FALSE(t.success);
    CHECK(t.llm_calls.size() == 2);
    CHECK(t.repot_repair_calls == 1);
    CHECK(t.verified_prefix_len == 1);
    CHECK(t.final_plan == "move(1,0,1)");
    CHECK(t.extraction_error == "no plan");
  }

  SECTION("valid but goal-missing repair suffix still commits") {
    ScriptedBackend b;
    b.add_response(moves_line("move(1,0,1),move(1,0,2)"));
    b.add_response(moves_line("move(2,0,2)"));
    auto t = run_one(inst, b, cfg, no_exec());
    CHECK_FALSE(t.success);
    CHECK(t.verified_prefix_len == 2);
    CHECK(t.final_plan == "move(1,0,1),move(2,0,2)");
    auto check = replay(inst.initial_state, parse_plan(EnvId::hanoi, {"move(1,0,1)", "move(2,0,2)"}),
                        inst.goal);
    CHECK(static_cast<int>(check.prefix.size()) == 2);
  }

  SECTION("R=0 never repairs") {
    auto cfg0 = cfg;
    cfg0.R = 0;
    ScriptedBackend b;
    b.add_response(moves_line("move(1,0,1),move(1,0,2)"));
    auto t = run_one(inst, b, cfg0, no_exec());
    CHECK_FALSE(t.success);
    CHECK(t.llm_calls.size() == 1);
    CHECK(t.repot_repair_calls == 0);
    CHECK(t.verified_prefix_len == 1);
  }

  SECTION("R=2 chains two repairs") {
    auto cfg2 = cfg;
    cfg2.R = 2;
    ScriptedBackend b;
    b.add_response(moves_line("move(1,0,1),move(1,0,2)"));
    b.add_response(moves_line("move(2,0,2)"));
    b.add_response(moves_line("move(1,1,2)"));
    auto t = run_one(inst, b, cfg2, no_exec());
    CHECK(t.success);
    CHECK(t.llm_calls.size() == 3);
    CHECK(t.repot_repair_calls == 2);
    CHECK(t.final_plan == "move(1,0,1),move(2,0,2),move(1,1,2)");
  }
}

TEST_CASE("runner: repot stable block is byte-identical across repair calls") {
  auto inst = hanoi_instance(3);
  auto cfg = config_of(Method::repot);
  cfg.R = 2;
  ScriptedBackend b;
  b.add_response(moves_line(corrupt_after(inst, 2)));
  b.add_response(moves_line(inst.oracle_plan[2].text));
  b.add_response("still nothing");
  auto t = run_one(inst, b, cfg, no_exec());
  REQUIRE(t.llm_calls.size() == 3);
  auto stable = [](const std::string& prompt) {
    size_t at = prompt.find(kCheckpointMarker);
    REQUIRE(at != std::string::npos);
    return prompt.substr(0, at);
  };
  std::string first = stable(t.llm_calls[1].prompt);
  std::string second = stable(t.llm_calls[2].prompt);
  CHECK(first == second);
  CHECK(t.llm_calls[1].prompt != t.llm_calls[2].prompt);
}

TEST_CASE("runner: adaptive repot routing") {
  auto inst = hanoi_instance(3);
  auto cfg = config_of(Method::adaptive_repot);

  SECTION("initial success") {
    ScriptedBackend b;
    b.add_response(moves_line(oracle_text(inst)));
    auto t = run_one(inst, b, cfg, no_exec());
    CHECK(t.success);
    CHECK(t.route_taken == "initial_success");
    CHECK(t.repot_repair_calls == 0);
  }

  SECTION("empty plan routes to a fresh retry") {
    ScriptedBackend b;
    b.add_response("cannot help");
    b.add_response(moves_line(oracle_text(inst)));
    auto t = run_one(inst, b, cfg, no_exec());
    CHECK(t.success);
    CHECK(t.route_taken == "fresh_retry_empty");
    CHECK(t.llm_calls.size() == 2);
    CHECK(t.repot_repair_calls == 1);
    CHECK(t.llm_calls[1].prompt == render_prompt(inst, PromptMode::pot));
    CHECK(t.final_plan == oracle_text(inst));
    CHECK(t.plan_len == 7);
  }

  SECTION("short prefix routes to a fresh retry") {
    // n=7, failure at index 2: phi = 1/7 < 0.15
    ScriptedBackend b;
    b.add_response(moves_line(corrupt_after(inst, 1, 5)));
    b.add_response(moves_line(oracle_text(inst)));
    auto t = run_one(inst, b, cfg, no_exec());
    CHECK(t.success);
    CHECK(t.route_taken == "fresh_retry_short_prefix");
    CHECK(t.initial_plan_len == 7);
    CHECK(t.initial_prefix_len == 1);
    CHECK(t.llm_calls[1].prompt == render_prompt(inst, PromptMode::pot));
    CHECK(t.final_plan == oracle_text(inst));
  }

  SECTION("healthy prefix routes to suffix repair") {
    // n=7, failure at index 4: phi = 3/7 >= 0.15
    ScriptedBackend b;
    b.add_response(moves_line(corrupt_after(inst, 3, 3)));
    b.add_response(moves_line(oracle_suffix(inst, 3)));
    auto t = run_one(inst, b, cfg, no_exec());
    CHECK(t.success);
    CHECK(t.route_taken == "suffix_repair");
    CHECK_THAT(t.llm_calls[1].prompt, Catch::Matchers::ContainsSubstring(kCheckpointMarker));
    CHECK(t.verified_prefix_len == 7);
  }

  SECTION("phi exactly at the threshold repairs the suffix") {
    // n=20, prefix 3: phi = 0.15, strictly-below rule keeps the checkpoint
    ScriptedBackend b;
    b.add_response(moves_line(corrupt_after(inst, 3, 16)));
    b.add_response(moves_line(oracle_suffix(inst, 3)));
    auto t = run_one(inst, b, cfg, no_exec());
    REQUIRE(t.initial_plan_len == 20);
    REQUIRE(t.initial_prefix_len == 3);
    CHECK(t.route_taken == "suffix_repair");
    CHECK(t.success);
  }

  SECTION("fresh retry replaces rather than concatenates") {
    ScriptedBackend b;
    b.add_response(moves_line(corrupt_after(inst, 1, 5)));
    b.add_response(moves_line("move(1,0,1)"));
    auto t = run_one(inst, b, cfg, no_exec());
    CHECK_FALSE(t.success);
    CHECK(t.final_plan == "move(1,0,1)");
    CHECK(t.verified_prefix_len == 1);
  }
}

TEST_CASE("runner: budget laws hold across scripted mixes") {
  auto inst = hanoi_instance(2);
  std::vector<std::string> scripts = {
      moves_line(oracle_text(inst)), "garbage",
      moves_line("move(1,0,1),move(1,0,2)"), "moves = []",
      moves_line("move(2,0,1)")};
  for (Method m : {Method::cot, Method::pot, Method::sc, Method::pot_retry, Method::repot,
                   Method::adaptive_repot}) {
    for (size_t start = 0; start < scripts.size(); ++start) {
      ScriptedBackend b;
      for (size_t i = 0; i < 8; ++i) b.add_response(scripts[(start + i) % scripts.size()]);
      auto cfg = config_of(m);
      auto t = run_one(inst, b, cfg, no_exec());  // run_one asserts the laws internally
      if (m == Method::repot || m == Method::adaptive_repot) {
        REQUIRE(t.repot_repair_calls);
        CHECK(t.llm_calls.size() <= static_cast<size_t>(1 + cfg.R));
        auto committed = replay(inst.initial_state,
                                parse_plan(EnvId::hanoi, split_top_level(t.final_plan)), inst.goal);
        CHECK(static_cast<int>(committed.prefix.size()) == t.verified_prefix_len);
        CHECK(committed.goal_reached == t.success);
        CHECK(committed.error.empty());
      }
    }
  }
}

TEST_CASE("runner: run_suite is deterministic and keeps every instance") {
  std::vector<ProblemInstance> instances;
  for (int i = 0; i < 10; ++i)
    instances.push_back(hanoi_instance(2, "p" + std::to_string(i)));

  auto scripted = [&](bool skip_one) {
    auto b = std::make_unique<ScriptedBackend>();
    for (int i = 0; i < 10; ++i) {
      if (skip_one && i == 7) continue;
      std::string text = i % 2 == 0 ? moves_line(plan_text(instances[0].oracle_plan)) : "garbage";
      b->add_response("p" + std::to_string(i), text);
    }
    return b;
  };

  auto run_lines = [&](int parallelism, bool skip_one) {
    auto b = scripted(skip_one);
    std::vector<nlohmann::json> lines;
    std::mutex mu;
    auto summary = run_suite(instances, config_of(Method::pot), *b, no_exec(), parallelism,
                             [&](const nlohmann::json& j) {
                               std::lock_guard<std::mutex> lock(mu);
                               lines.push_back(j);
                             });
    return std::make_pair(summary, lines);
  };

  auto [sum1, lines1] = run_lines(1, false);
  auto [sum4, lines4] = run_lines(4, false);
  REQUIRE(lines1.size() == 10);
  REQUIRE(lines4.size() == 10);
  for (size_t i = 0; i < 10; ++i) {
    auto a = lines1[i];
    auto b = lines4[i];
    a.erase("wall_ms");
    b.erase("wall_ms");
    CHECK(a == b);
    CHECK(a["problem_id"] == "p" + std::to_string(i));
  }
  CHECK(sum1.successes == 5);
  CHECK(sum1.total == 10);
  CHECK(sum4.successes == 5);
  REQUIRE(sum1.per_stratum.count("hanoi/2"));
  CHECK(sum1.per_stratum.at("hanoi/2").successes == 5);
  CHECK(sum1.per_stratum.at("hanoi/2").total == 10);

  auto [sum_err, lines_err] = run_lines(3, true);
  CHECK(lines_err.size() == 10);
  int exceptions = 0;
  for (const auto& j : lines_err) exceptions += j.contains("runner_exception") ? 1 : 0;
  CHECK(exceptions == 1);
  CHECK(lines_err[7]["runner_exception"] == "script exhausted");
  CHECK(sum_err.successes == 5);
}

TEST_CASE("runner: run_suite edge behavior") {
  SECTION("empty instance list") {
    ScriptedBackend b;
    auto summary =
        run_suite({}, config_of(Method::pot), b, no_exec(), 2, [](const nlohmann::json&) {});
    CHECK(summary.total == 0);
    CHECK(summary.per_stratum.empty());
  }

  SECTION("sink failure aborts the run") {
    std::vector<ProblemInstance> instances;
    for (int i = 0; i < 6; ++i) instances.push_back(hanoi_instance(2, "p" + std::to_string(i)));
    ScriptedBackend b;
    for (int i = 0; i < 6; ++i) b.add_response("p" + std::to_string(i), "moves = []");
    int delivered = 0;
    CHECK_THROWS_WITH(run_suite(instances, config_of(Method::pot), b, no_exec(), 1,
                                [&](const nlohmann::json&) {
                                  if (++delivered == 3) throw std::runtime_error("disk full");
                                }),
                      Catch::Matchers::ContainsSubstring("disk full"));
    CHECK(delivered == 3);
  }
}

TEST_CASE("runner: checkpoint views and repair prompt layout") {
  auto inst = hanoi_instance(3);
  EnvState boundary = hanoi::classic_state(3, 0);

  Plan committed;
  for (int i = 1; i <= 10; ++i) committed.push_back({"m" + std::to_string(i), std::nullopt});
  auto view = make_checkpoint_view(committed, boundary,
                                   Action(HanoiMove{2, 0, 1}), "disk 2 is not the top disk of peg 0",
                                   4);
  CHECK(view.prefix_len == 10);
  REQUIRE(view.prefix_tail.size() == 4);
  CHECK(view.prefix_tail.front() == "m7");
  CHECK(view.prefix_tail.back() == "m10");
  CHECK(view.boundary_state_text == render_state(boundary));

  for (const auto& a : legal_actions(boundary)) {
    auto text = action_text(a);
    INFO("legal action " << text << " must not be blocked");
    CHECK(view.blocked_text.find(text) == std::string::npos);
  }
  CHECK(view.blocked_text != "(none)");
  CHECK(view.blocked_text.find("move(") != std::string::npos);

  auto prompt = build_repair_prompt(inst, view, 14);
  CHECK_THAT(prompt, Catch::Matchers::ContainsSubstring(
                         "You have already executed 10 verified moves.\n"
                         "Recent verified moves: m7, m8, m9, m10\n"));
  CHECK_THAT(prompt, Catch::Matchers::ContainsSubstring("Goal state: "));
  CHECK_THAT(prompt, Catch::Matchers::ContainsSubstring(
                         "Write Python code that prints exactly one line:\n  moves = [...]\n"));

  auto hidden = build_repair_prompt(inst, view, 14, true);
  CHECK_THAT(hidden, !Catch::Matchers::ContainsSubstring("already executed"));
  CHECK_THAT(hidden, !Catch::Matchers::ContainsSubstring("Recent verified moves"));
  CHECK_THAT(hidden, Catch::Matchers::ContainsSubstring("Current verified state: "));

  auto bare = make_checkpoint_view({}, boundary, std::nullopt, "", 4);
  CHECK(bare.prefix_len == 0);
  CHECK(bare.prefix_tail.empty());
  CHECK(bare.blocked_text == "(none)");
  auto bare_prompt = build_repair_prompt(inst, bare, 14);
  CHECK_THAT(bare_prompt, Catch::Matchers::ContainsSubstring("Recent verified moves: (none)"));
  CHECK_THAT(bare_prompt, Catch::Matchers::ContainsSubstring("Verifier message: (none)"));
  CHECK_THAT(bare_prompt, Catch::Matchers::ContainsSubstring("Blocked: (none)"));
}

TEST_CASE("runner: repair cap comes from config or oracle length") {
  auto inst = hanoi_instance(3);
  MethodConfig cfg;
  CHECK(repair_move_cap(inst, cfg) == 14);
  cfg.repair_k = 9;
  CHECK(repair_move_cap(inst, cfg) == 9);
}

TEST_CASE("runner: method names round trip and reject unknowns") {
  CHECK(method_from_name("repot") == Method::repot);
  CHECK(method_from_name("adaptive_repot") == Method::adaptive_repot);
  CHECK(method_name(Method::pot_retry) == "pot_retry");
  CHECK_THROWS_WITH(method_from_name("tot"),
                    Catch::Matchers::ContainsSubstring("unknown method 'tot'") &&
                        Catch::Matchers::ContainsSubstring("pot_retry"));
}

TEST_CASE("runner: trace records round trip through json") {
  auto inst = hanoi_instance(3);
  ScriptedBackend b;
  b.add_response(moves_line(corrupt_after(inst, 3)));
  b.add_response(moves_line(oracle_suffix(inst, 3)));
  auto t = run_one(inst, b, config_of(Method::repot), no_exec());
  auto j = trace_to_json(t);
  auto back = trace_from_json(j);
  CHECK(trace_to_json(back) == j);
  CHECK(back.final_plan == t.final_plan);
  CHECK(back.llm_calls.size() == t.llm_calls.size());
  CHECK(back.repot_repair_calls == t.repot_repair_calls);

  auto t2 = run_one(hanoi_instance(2), b, config_of(Method::pot), no_exec());
  auto j2 = trace_to_json(t2);
  CHECK_FALSE(j2.contains("repot_repair_calls"));
  CHECK_FALSE(j2.contains("route_taken"));
}

TEST_CASE("runner: config validation") {
  MethodConfig cfg;
  cfg.R = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.k = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.phi_threshold = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.temperature == 0.0);
  CHECK(cfg.max_output_tokens == 16384);
  CHECK(cfg.R == 1);
  CHECK(cfg.T == 4);
  CHECK(cfg.k == 8);
  CHECK(cfg.phi_threshold == 0.15);
}
