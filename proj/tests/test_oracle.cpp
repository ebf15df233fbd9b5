#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "repot/oracle.hpp"

using namespace repot;

namespace {

Goal hanoi_goal(int n, int peg) { return GoalState{hanoi::classic_state(n, peg)}; }

Goal checker_goal(const CheckerState& s) { return GoalState{checker::mirror_goal(s)}; }

int solve_len(const EnvState& s, const Goal& g) {
  SolveResult r = solve(s, g);
  REQUIRE(r.status == SolveStatus::ok);
  auto out = replay(s, r.plan, g);
  REQUIRE(out.goal_reached);
  return static_cast<int>(r.plan.size());
}

}  // namespace

TEST_CASE("oracle: hanoi shortest plans have length 2^N - 1") {
  CHECK(solve_len(hanoi::classic_state(2, 0), hanoi_goal(2, 2)) == 3);
  CHECK(solve_len(hanoi::classic_state(3, 0), hanoi_goal(3, 2)) == 7);
  CHECK(solve_len(hanoi::classic_state(5, 1), hanoi_goal(5, 0)) == 31);
}

TEST_CASE("oracle: hanoi N=2 plan is the lexicographic-first optimum") {
  SolveResult r = solve(hanoi::classic_state(2, 0), hanoi_goal(2, 2));
  REQUIRE(r.status == SolveStatus::ok);
  CHECK(plan_text(r.plan) == "move(1,0,1),move(2,0,2),move(1,1,2)");
}

TEST_CASE("oracle: checker classic boards take C^2 + 2C moves") {
  CHECK(solve_len(checker::classic_state(1), checker_goal(checker::classic_state(1))) == 3);
  CHECK(solve_len(checker::classic_state(2), checker_goal(checker::classic_state(2))) == 8);
  CHECK(solve_len(checker::classic_state(3), checker_goal(checker::classic_state(3))) == 15);
  CHECK(solve_len(checker::classic_state(4), checker_goal(checker::classic_state(4))) == 24);
}

TEST_CASE("oracle: river classic crossing lengths") {
  CHECK(solve_len(river::classic_state(2), GoalState{river::goal_state(2)}) == 5);
  CHECK(solve_len(river::classic_state(3), GoalState{river::goal_state(3)}) == 11);
}

TEST_CASE("oracle: river with four pairs and a two-seat boat is unsolvable") {
  SolveResult r = solve(river::classic_state(4), Goal(GoalState{river::goal_state(4)}));
  CHECK(r.status == SolveStatus::unsolvable);
  CHECK(r.message == "the goal is unreachable from the initial state");
}

TEST_CASE("oracle: solving is deterministic") {
  for (int i = 0; i < 3; ++i) {
    SolveResult a = solve(checker::classic_state(3), checker_goal(checker::classic_state(3)));
    SolveResult b = solve(checker::classic_state(3), checker_goal(checker::classic_state(3)));
    REQUIRE(a.status == SolveStatus::ok);
    CHECK(plan_text(a.plan) == plan_text(b.plan));
  }
}

TEST_CASE("oracle: the search budget is enforced") {
  SolveResult r = solve(hanoi::classic_state(3, 0), hanoi_goal(3, 2), 5);
  CHECK(r.status == SolveStatus::budget_exceeded);
  CHECK(r.message == "search budget of 5 states exceeded");
}

TEST_CASE("oracle: blocksworld demolition and rebuild") {
  EnvState start = parse_state(EnvId::blocksworld,
                               "arm_empty, clear(c), clear(b), on(c,a), on_table(a), on_table(b)");
  Goal goal = GoalPredicates{{"on(a,b)"}};
  SolveResult r = solve(start, goal);
  REQUIRE(r.status == SolveStatus::ok);
  CHECK(plan_text(r.plan) == "unstack(c,a),put-down(c),pick-up(a),stack(a,b)");
  CHECK(replay(start, r.plan, goal).goal_reached);
}

TEST_CASE("oracle: blocksworld keeps towers that already match the goal") {
  EnvState start = parse_state(
      EnvId::blocksworld,
      "arm_empty, clear(c), clear(d), on(b,a), on(c,b), on_table(a), on_table(d)");
  Goal goal = GoalPredicates{{"on(b,a)", "on(d,c)", "on(c,b)"}};
  SolveResult r = solve(start, goal);
  REQUIRE(r.status == SolveStatus::ok);
  CHECK(plan_text(r.plan) == "pick-up(d),stack(d,c)");
}

TEST_CASE("oracle: blocksworld rejects contradictory goals") {
  EnvState start = parse_state(EnvId::blocksworld,
                               "arm_empty, clear(a), clear(b), on_table(a), on_table(b)");
  CHECK(solve(start, Goal(GoalPredicates{{"on(a,b)", "on(b,a)"}})).status ==
        SolveStatus::unsolvable);
  CHECK(solve(start, Goal(GoalPredicates{{"on(a,a)"}})).status == SolveStatus::unsolvable);
  CHECK(solve(start, Goal(GoalPredicates{{"on(a,b)", "on_table(a)"}})).status ==
        SolveStatus::unsolvable);
  CHECK(solve(start, Goal(GoalPredicates{{"on(a,q)"}})).status == SolveStatus::unsolvable);
  CHECK(solve(start, Goal(GoalPredicates{{"holding(a)"}})).status == SolveStatus::unsolvable);
}

TEST_CASE("oracle: blocksworld random instances solve and replay to the goal") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    // random walks from a flat start give arbitrary reachable configurations
    EnvState flat = parse_state(
        EnvId::blocksworld,
        "arm_empty, clear(a), clear(b), clear(c), clear(d), clear(e), on_table(a), on_table(b), "
        "on_table(c), on_table(d), on_table(e)");
    auto mid = testutil::sample_states(flat, 14, rng.next());
    EnvState start = mid.back();
    if (std::get<BlocksState>(start).holding) start = mid[mid.size() - 2];
    EnvState target = testutil::sample_states(flat, 17, rng.next()).back();
    if (std::get<BlocksState>(target).holding) continue;
    std::set<std::string> preds;
    for (const auto& p : blocks::predicates(std::get<BlocksState>(target)))
      if (p.rfind("on(", 0) == 0 || p.rfind("on_table(", 0) == 0) preds.insert(p);
    Goal goal = GoalPredicates{preds};
    SolveResult r = solve(start, goal);
    REQUIRE(r.status == SolveStatus::ok);
    CHECK(replay(start, r.plan, goal).goal_reached);
  }
}

TEST_CASE("greedy probe: immediate goal needs no budget") {
  auto r = greedy_probe(hanoi::classic_state(2, 2), hanoi_goal(2, 2), 0);
  CHECK(r.solved);
  CHECK(r.steps == 0);
}

TEST_CASE("greedy probe: monotone instances are solved") {
  CHECK(greedy_probe(hanoi::classic_state(1, 0), hanoi_goal(1, 2), 10).solved);
  EnvState c1 = checker::classic_state(1);
  CHECK(greedy_probe(c1, checker_goal(checker::classic_state(1)), 100).solved);
  EnvState flat = parse_state(EnvId::blocksworld,
                              "arm_empty, clear(a), clear(b), on_table(a), on_table(b)");
  CHECK(greedy_probe(flat, Goal(GoalPredicates{{"on(a,b)"}}), 100).solved);
}

TEST_CASE("greedy probe: plateau and deadlock instances are not solved") {
  // hanoi N=2 enters a two-state cycle, checker C=2 wedges, river k=2 shuttles
  CHECK_FALSE(greedy_probe(hanoi::classic_state(2, 0), hanoi_goal(2, 2), 100).solved);
  CHECK_FALSE(
      greedy_probe(checker::classic_state(2), checker_goal(checker::classic_state(2)), 100)
          .solved);
  CHECK_FALSE(
      greedy_probe(river::classic_state(2), Goal(GoalState{river::goal_state(2)}), 100).solved);
  EnvState flat = parse_state(EnvId::blocksworld,
                              "arm_empty, clear(a), clear(b), clear(c), on_table(a), on_table(b), "
                              "on_table(c)");
  CHECK_FALSE(greedy_probe(flat, Goal(GoalPredicates{{"on(a,b)", "on(b,c)"}}), 100).solved);
}

TEST_CASE("greedy probe: budget bounds the walk") {
  auto r = greedy_probe(hanoi::classic_state(2, 0), hanoi_goal(2, 2), 17);
  CHECK_FALSE(r.solved);
  CHECK(r.steps == 17);
}
