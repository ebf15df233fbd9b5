#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repot/derail.hpp"
#include "repot/replay.hpp"
#include "repot/runner.hpp"
#include "repot/zoo.hpp"

using namespace repot;
using json = nlohmann::json;

namespace {

std::string tmp_path(const std::string& name) {
  return std::string(REPOT_TEST_TMP) + "/" + name;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  out << body;
}

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult cli(const std::string& args) {
  static int n = 0;
  const std::string base = tmp_path("cli" + std::to_string(n++));
  const std::string cmd =
      std::string(REPOT_CLI_PATH) + " " + args + " > " + base + ".out 2> " + base + ".err";
  const int rc = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  r.out = slurp(base + ".out");
  r.err = slurp(base + ".err");
  return r;
}

std::vector<json> jsonl(const std::string& path) {
  std::vector<json> v;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) v.push_back(json::parse(line));
  return v;
}

std::string moves_line(const ProblemInstance& inst) {
  return "moves = [" + plan_text(inst.oracle_plan) + "]";
}

// Two hanoi-2 problems; the first gets its oracle plan, the second garbage.
struct RunFixture {
  std::string suite_path = tmp_path("clifix_suite.jsonl");
  std::string script_path = tmp_path("clifix_script.jsonl");
  std::vector<ProblemInstance> suite;

  RunFixture() {
    suite = generate_suite({{EnvId::hanoi, 2, 2}}, 5);
    REQUIRE(suite.size() == 2);
    write_suite(suite, suite_path);
    std::string script;
    script += json{{"problem_id", suite[0].problem_id}, {"text", moves_line(suite[0])}}.dump();
    script += "\n";
    script += json{{"problem_id", suite[1].problem_id}, {"text", "no code here"}}.dump();
    script += "\n";
    spit(script_path, script);
  }
};

}  // namespace

TEST_CASE("cli: gen writes the requested suite deterministically") {
  const std::string plan = tmp_path("cli_plan.json");
  spit(plan, R"([{"env":"hanoi","complexity":2,"count":2},{"env":"river","complexity":2,"count":1}])");
  const std::string s1 = tmp_path("cli_gen1.jsonl");
  const std::string s2 = tmp_path("cli_gen2.jsonl");

  auto r = cli("gen --plan " + plan + " --seed 7 --out " + s1);
  CHECK(r.code == 0);
  CHECK(r.out == "wrote 3 instances to " + s1 + "\n");

  auto suite = read_suite(s1);
  REQUIRE(suite.size() == 3);
  for (const auto& inst : suite) {
    REQUIRE_FALSE(inst.oracle_plan.empty());
    auto rep = replay(inst.initial_state, inst.oracle_plan, inst.goal);
    CHECK(rep.goal_reached);
  }

  auto r2 = cli("gen --plan " + plan + " --seed 7 --out " + s2);
  CHECK(r2.code == 0);
  CHECK(slurp(s1) == slurp(s2));
}

TEST_CASE("cli: run emits a header line, per-problem traces, and a summary") {
  RunFixture fx;
  const std::string traces = tmp_path("cli_run_traces.jsonl");
  auto r = cli("run --suite " + fx.suite_path + " --script " + fx.script_path +
               " --method pot --model m1 --seed 3 --out " + traces);
  CHECK(r.code == 0);
  CHECK(r.out.find("hanoi/2: 1/2") != std::string::npos);
  CHECK(r.out.find("total: 1/2 (50.0%)") != std::string::npos);

  auto lines = jsonl(traces);
  REQUIRE(lines.size() == 3);
  const json& header = lines[0];
  CHECK(header.at("kind") == "header");
  CHECK(header.at("seed") == 3);
  CHECK(header.at("config").at("method") == "pot");
  CHECK(header.at("config").at("model_name") == "m1");
  CHECK(header.at("config").at("backend").at("kind") == "scripted");
  CHECK(header.at("config").at("backend").at("script") == fx.script_path);

  int successes = 0;
  for (size_t i = 1; i < lines.size(); ++i) {
    TraceRecord t = trace_from_json(lines[i]);
    CHECK(t.method == "pot");
    CHECK(t.model == "m1");
    if (t.success) {
      ++successes;
      CHECK_FALSE(t.first_failure_index);
      CHECK(t.problem_id == fx.suite[0].problem_id);
    } else {
      CHECK(t.extraction_error);
    }
  }
  CHECK(successes == 1);
}

TEST_CASE("cli: config file drives the run and flags override it") {
  RunFixture fx;
  const std::string traces = tmp_path("cli_cfg_traces.jsonl");
  const std::string cfg_path = tmp_path("cli_cfg.json");
  json cfg = {{"suite", fx.suite_path},
              {"method", "pot"},
              {"model_name", "m-cfg"},
              {"seed", 11},
              {"out", traces},
              {"backend", {{"kind", "scripted"}, {"script", fx.script_path}}}};
  spit(cfg_path, cfg.dump());

  auto r = cli("run --config " + cfg_path);
  CHECK(r.code == 0);
  auto header = jsonl(traces)[0];
  CHECK(header.at("config").at("method") == "pot");
  CHECK(header.at("config").at("model_name") == "m-cfg");
  CHECK(header.at("seed") == 11);

  const std::string traces2 = tmp_path("cli_cfg_traces2.jsonl");
  auto r2 = cli("run --config " + cfg_path + " --method pot_retry --model m2 --out " + traces2);
  CHECK(r2.code == 0);
  auto lines2 = jsonl(traces2);
  CHECK(lines2[0].at("config").at("method") == "pot_retry");
  CHECK(lines2[0].at("config").at("model_name") == "m2");
  for (size_t i = 1; i < lines2.size(); ++i) {
    CHECK(lines2[i].at("method") == "pot_retry");
    CHECK(lines2[i].at("model") == "m2");
  }
}

TEST_CASE("cli: actionable errors exit nonzero") {
  RunFixture fx;
  auto no_suite = cli("run --script " + fx.script_path);
  CHECK(no_suite.code == 1);
  CHECK(no_suite.err.find("run requires a suite file (--suite)") != std::string::npos);

  auto missing = cli("run --suite missing.jsonl --script " + fx.script_path);
  CHECK(missing.code == 1);
  CHECK(missing.err.find("cannot open suite file 'missing.jsonl'") != std::string::npos);

  auto bad_method = cli("run --suite " + fx.suite_path + " --script " + fx.script_path +
                        " --method tot");
  CHECK(bad_method.code == 1);
  CHECK(bad_method.err.find("unknown method 'tot'") != std::string::npos);
  CHECK(bad_method.err.find("pot_retry") != std::string::npos);

  auto no_script = cli("run --suite " + fx.suite_path);
  CHECK(no_script.code == 1);
  CHECK(no_script.err.find("scripted backend requires a script file (--script or backend.script)") !=
        std::string::npos);

  auto bad_backend = cli("run --suite " + fx.suite_path + " --backend warp --script " +
                         fx.script_path);
  CHECK(bad_backend.code == 1);
  CHECK(bad_backend.err.find("unknown backend 'warp' (valid: scripted, remote)") !=
        std::string::npos);
}

TEST_CASE("cli: judge reports read raw traces and skip the header") {
  RunFixture fx;
  const std::string traces = tmp_path("cli_judge_traces.jsonl");
  REQUIRE(cli("run --suite " + fx.suite_path + " --script " + fx.script_path +
              " --method pot --model m1 --out " + traces)
              .code == 0);

  auto headline = cli("judge " + traces + " --report headline");
  CHECK(headline.code == 0);
  CHECK(headline.out.find("m1") != std::string::npos);
  CHECK(headline.out.find("50.0") != std::string::npos);

  auto csv = cli("judge " + traces + " --report headline --csv");
  CHECK(csv.code == 0);
  CHECK(csv.out.find("Model,CoT,SC,PoT,PoT-retry,RePoT,Adaptive,R-PR") != std::string::npos);
  CHECK(csv.out.find("m1,") != std::string::npos);

  auto cost = cli("judge " + traces + " --report cost");
  CHECK(cost.code == 0);
  CHECK(cost.out.find("m1") != std::string::npos);
  CHECK(cost.out.find("pot") != std::string::npos);
  CHECK(cost.out.find("1.00") != std::string::npos);

  const std::string rep_path = tmp_path("cli_judge_rep.txt");
  auto to_file = cli("judge " + traces + " --report headline --out " + rep_path);
  CHECK(to_file.code == 0);
  CHECK(to_file.out.empty());
  CHECK(slurp(rep_path) == headline.out);

  auto bad = cli("judge " + traces + " --report nonsense");
  CHECK(bad.code == 1);
  CHECK(bad.err.find("unknown report 'nonsense' "
                     "(valid: headline, per-env, cost, derail, eq2, mechanism, routing)") !=
        std::string::npos);
}

TEST_CASE("cli: derail generates cases, writes them out, and reloads them") {
  const std::string suite_path = tmp_path("cli_derail_suite.jsonl");
  auto suite = generate_suite({{EnvId::hanoi, 3, 2}}, 9);
  write_suite(suite, suite_path);
  const std::string script_path = tmp_path("cli_derail_script.jsonl");
  spit(script_path, "\"nothing useful\"\n");

  const std::string cases_path = tmp_path("cli_derail_cases.jsonl");
  const std::string traces = tmp_path("cli_derail_traces.jsonl");
  auto r = cli("derail --suite " + suite_path + " --script " + script_path +
               " --conditions no_feedback --model m1 --seed 4 --cases-out " + cases_path +
               " --out " + traces);
  CHECK(r.code == 0);
  CHECK(r.out.find("no_feedback: 0/2 (0.0%)") != std::string::npos);
  CHECK(r.out.find("cases: 2") != std::string::npos);

  auto case_lines = jsonl(cases_path);
  REQUIRE(case_lines.size() == 2);
  for (const auto& j : case_lines) {
    DerailCase c = derail_case_from_json(j);
    CHECK((c.problem_id == suite[0].problem_id || c.problem_id == suite[1].problem_id));
    CHECK_FALSE(action_text(c.injected_action).empty());
  }

  auto again = cli("derail --suite " + suite_path + " --script " + script_path +
                   " --conditions no_feedback --model m1 --cases " + cases_path);
  CHECK(again.code == 0);
  CHECK(again.out == r.out);

  auto rep = cli("judge " + traces + " --report derail");
  CHECK(rep.code == 0);
  CHECK(rep.out.find("m1") != std::string::npos);
  CHECK(rep.out.find("no_feedback") != std::string::npos);
  CHECK(rep.out.find("0.0") != std::string::npos);

  auto bad = cli("derail --suite " + suite_path + " --script " + script_path +
                 " --conditions warp --cases " + cases_path);
  CHECK(bad.code == 1);
  CHECK(bad.err.find("unknown condition 'warp'") != std::string::npos);

  const std::string empty_cases = tmp_path("cli_derail_empty.jsonl");
  spit(empty_cases, "");
  auto none = cli("derail --suite " + suite_path + " --script " + script_path +
                  " --conditions no_feedback --cases " + empty_cases);
  CHECK(none.code == 0);
  CHECK(none.out.find("cases: 0") != std::string::npos);
}

TEST_CASE("cli: planbench-import solves each instance and writes a replayable suite") {
  namespace fs = std::filesystem;
  const std::string dir = tmp_path("cli_pddl");
  fs::create_directory(dir);
  spit(dir + "/p01.pddl",
       "(define (problem tiny) (:domain blocksworld)"
       " (:objects a b)"
       " (:init (on-table a) (clear a) (handempty))"
       " (:goal (on a b)))");
  spit(dir + "/p02.pddl",
       "(define (problem bw-rand-4)\n(:domain blocksworld-4ops)\n(:objects a b c d )\n(:init\n"
       "(handempty)\n(ontable a)\n(on b a)\n(on c b)\n(ontable d)\n(clear c)\n(clear d)\n)\n"
       "(:goal\n(and\n(on a b)\n(on d c))\n)\n)");

  const std::string out_path = tmp_path("cli_pb_suite.jsonl");
  auto r = cli("planbench-import --dir " + dir + " --out " + out_path);
  CHECK(r.code == 0);
  CHECK(r.out == "imported 2 instances from 2 files to " + out_path + "\n");

  auto suite = read_suite(out_path);
  REQUIRE(suite.size() == 2);
  for (const auto& inst : suite) {
    CHECK(inst.environment == EnvId::blocksworld);
    REQUIRE_FALSE(inst.oracle_plan.empty());
    CHECK(inst.oracle_plan_length == static_cast<int>(inst.oracle_plan.size()));
    auto rep = replay(inst.initial_state, inst.oracle_plan, inst.goal);
    CHECK(rep.goal_reached);
  }

  auto bad = cli("planbench-import --dir " + dir + "/nope --out " + out_path);
  CHECK(bad.code == 1);
  CHECK(bad.err.find("not a directory") != std::string::npos);
}
