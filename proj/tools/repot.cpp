#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "repot/analysis.hpp"
#include "repot/derail.hpp"
#include "repot/planbench.hpp"
#include "repot/remote_backend.hpp"
#include "repot/zoo.hpp"

using nlohmann::json;
using namespace repot;

namespace {

json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

std::vector<json> read_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file '" + path + "'");
  std::vector<json> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw std::runtime_error(path + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

MethodConfig method_config_from(const json& cfg) {
  MethodConfig mc;
  mc.method = method_from_name(cfg.value("method", "pot"));
  mc.R = cfg.value("R", 1);
  mc.T = cfg.value("T", 4);
  mc.k = cfg.value("k", 8);
  mc.phi_threshold = cfg.value("phi_threshold", 0.15);
  mc.temperature = cfg.value("temperature", 0.0);
  mc.max_output_tokens = cfg.value("max_output_tokens", 16384);
  mc.reasoning_level = reasoning_from_name(cfg.value("reasoning_level", "none"));
  mc.model_name = cfg.value("model_name", "");
  mc.repair_k = cfg.value("repair_k", 0);
  mc.no_prefix = cfg.value("no_prefix", false);
  mc.validate();
  return mc;
}

std::unique_ptr<Backend> make_backend(const json& cfg) {
  json b = cfg.value("backend", json::object());
  const std::string kind = b.value("kind", "scripted");
  if (kind == "scripted") {
    auto backend = std::make_unique<ScriptedBackend>();
    const std::string script = b.value("script", "");
    if (script.empty())
      throw std::runtime_error(
          "scripted backend requires a script file (--script or backend.script)");
    backend->load_script(script);
    return backend;
  }
  if (kind == "remote") {
    RemoteBackend::Config rc = RemoteBackend::from_env();
    if (b.contains("base_url")) rc.base_url = b.at("base_url").get<std::string>();
    if (b.contains("api_key")) rc.api_key = b.at("api_key").get<std::string>();
    if (b.contains("model")) rc.model = b.at("model").get<std::string>();
    if (b.contains("path")) rc.path = b.at("path").get<std::string>();
    return std::make_unique<RemoteBackend>(std::move(rc));
  }
  throw std::runtime_error("unknown backend '" + kind + "' (valid: scripted, remote)");
}

SandboxConfig sandbox_config_from(const json& cfg) {
  json s = cfg.value("sandbox", json::object());
  SandboxConfig sc;
  sc.interpreter = s.value("interpreter", sc.interpreter);
  sc.wall_ms = s.value("wall_ms", sc.wall_ms);
  sc.mem_bytes = s.value("mem_bytes", sc.mem_bytes);
  sc.max_procs = s.value("max_procs", sc.max_procs);
  return sc;
}

json resolved_config(const json& cfg, const MethodConfig& mc) {
  json r = cfg;
  r["method"] = method_name(mc.method);
  r["R"] = mc.R;
  r["T"] = mc.T;
  r["k"] = mc.k;
  r["phi_threshold"] = mc.phi_threshold;
  r["temperature"] = mc.temperature;
  r["max_output_tokens"] = mc.max_output_tokens;
  r["reasoning_level"] = reasoning_name(mc.reasoning_level);
  r["model_name"] = mc.model_name;
  r["repair_k"] = mc.repair_k;
  r["no_prefix"] = mc.no_prefix;
  if (!r.contains("backend") || !r["backend"].is_object()) r["backend"] = json::object();
  if (!r["backend"].contains("kind")) r["backend"]["kind"] = "scripted";
  return r;
}

struct TraceWriter {
  std::ofstream out;
  std::string path;

  TraceWriter(const std::string& p, const json& header) : path(p) {
    if (path.empty()) return;
    out.open(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
    out << header.dump() << '\n';
  }
  TraceSink sink() {
    if (path.empty()) return nullptr;
    return [this](const json& j) {
      out << j.dump() << '\n';
      if (!out) throw std::runtime_error("failed writing '" + path + "'");
    };
  }
};

double pct_of(int successes, int total) { return total ? 100.0 * successes / total : 0.0; }

int cmd_run(const json& cfg) {
  const std::string suite_path = cfg.value("suite", "");
  if (suite_path.empty()) throw std::runtime_error("run requires a suite file (--suite)");
  auto suite = read_suite(suite_path);
  MethodConfig mc = method_config_from(cfg);
  auto backend = make_backend(cfg);
  auto sandbox = std::make_shared<Sandbox>(sandbox_config_from(cfg));
  ProgramExecutor exec = [sandbox](const std::string& code) { return sandbox->run(code); };

  const uint64_t seed = cfg.value("seed", static_cast<uint64_t>(0));
  json header = {{"kind", "header"}, {"config", resolved_config(cfg, mc)}, {"seed", seed}};
  TraceWriter writer(cfg.value("out", ""), header);

  auto summary = run_suite(suite, mc, *backend, exec, cfg.value("parallel", 1), writer.sink());
  for (const auto& [stratum, cell] : summary.per_stratum)
    std::cout << stratum << ": " << cell.successes << "/" << cell.total << "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f", pct_of(summary.successes, summary.total));
  std::cout << "total: " << summary.successes << "/" << summary.total << " (" << buf << "%)\n";
  return 0;
}

int cmd_derail(const json& cfg) {
  const std::string suite_path = cfg.value("suite", "");
  if (suite_path.empty()) throw std::runtime_error("derail requires a suite file (--suite)");
  auto suite = read_suite(suite_path);
  MethodConfig mc = method_config_from(cfg);
  auto backend = make_backend(cfg);
  auto sandbox = std::make_shared<Sandbox>(sandbox_config_from(cfg));
  ProgramExecutor exec = [sandbox](const std::string& code) { return sandbox->run(code); };

  json d = cfg.value("derail", json::object());
  std::vector<DerailCase> cases;
  const std::string cases_path = d.value("cases", "");
  if (!cases_path.empty()) {
    for (const auto& j : read_jsonl(cases_path)) cases.push_back(derail_case_from_json(j));
  } else {
    auto made = make_cases(suite, d.value("per_problem", 1),
                           cfg.value("seed", static_cast<uint64_t>(0)), d.value("max_cases", 0));
    for (const auto& sk : made.skipped)
      std::cerr << "skipped " << sk.problem_id << ": " << sk.reason << "\n";
    cases = std::move(made.cases);
  }
  const std::string cases_out = d.value("cases_out", "");
  if (!cases_out.empty()) {
    std::ofstream out(cases_out, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file '" + cases_out + "'");
    for (const auto& c : cases) out << derail_case_to_json(c).dump() << '\n';
  }

  std::vector<std::string> conditions = derail_conditions();
  if (d.contains("conditions")) conditions = d.at("conditions").get<std::vector<std::string>>();

  const uint64_t seed = cfg.value("seed", static_cast<uint64_t>(0));
  json header = {{"kind", "header"}, {"config", resolved_config(cfg, mc)}, {"seed", seed}};
  TraceWriter writer(cfg.value("out", ""), header);

  auto summary = run_derail(suite, cases, conditions, *backend, exec, mc,
                            cfg.value("parallel", 1), writer.sink(),
                            d.value("stateguard_budget", 0));
  for (const auto& [cond, cell] : summary.per_condition) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.1f", pct_of(cell.successes, cell.total));
    std::cout << cond << ": " << cell.successes << "/" << cell.total << " (" << buf << "%)\n";
  }
  std::cout << "cases: " << summary.cases << "\n";
  return 0;
}

std::string judge_derail_report(const std::vector<json>& lines, bool csv) {
  std::map<std::pair<std::string, std::string>, RateCell> cells;
  for (const auto& j : lines) {
    RecoveryRecord rec = recovery_from_json(j);
    auto& cell = cells[{rec.trace.model, rec.condition}];
    ++cell.total;
    if (rec.trace.success) ++cell.successes;
  }
  std::vector<std::vector<std::string>> rows;
  for (const auto& [key, cell] : cells)
    rows.push_back({key.first, key.second, std::to_string(cell.successes),
                    std::to_string(cell.total), repot::detail::fmt_fixed(cell.pct(), 1)});
  const std::vector<std::string> header = {"Model", "Condition", "Successes", "N", "Rate%"};
  return csv ? repot::detail::csv_render(header, rows)
             : repot::detail::render_aligned(header, rows, 2);
}

std::string judge_headline_report(const std::vector<TraceRecord>& traces, bool csv) {
  std::string out = render_headline(traces, csv);
  if (csv) return out;
  std::map<std::string, std::vector<TraceRecord>> by_model;
  std::map<std::string, std::set<std::string>> methods;
  for (const auto& t : traces) {
    by_model[t.model].push_back(t);
    methods[t.model].insert(t.method);
  }
  for (const auto& [model, subset] : by_model) {
    if (!methods[model].count("repot") || !methods[model].count("pot_retry")) continue;
    auto ci = paired_bootstrap_ci(make_paired_sample(subset, "repot", "pot_retry"));
    out += model + ": R-PR " + repot::detail::fmt_fixed(ci.delta, 1) + " pp, 95% CI [" +
           repot::detail::fmt_fixed(ci.lo, 1) + ", " + repot::detail::fmt_fixed(ci.hi, 1) +
           "] (n=" + std::to_string(ci.n) + ", B=" + std::to_string(ci.resamples) + ")\n";
  }
  return out;
}

int cmd_judge(const std::vector<std::string>& paths, const std::string& report, bool csv,
              const std::string& out_path) {
  static const std::vector<std::string> kinds = {"headline", "per-env", "cost",     "derail",
                                                 "eq2",      "mechanism", "routing"};
  if (std::find(kinds.begin(), kinds.end(), report) == kinds.end()) {
    std::string valid;
    for (const auto& k : kinds) {
      if (!valid.empty()) valid += ", ";
      valid += k;
    }
    throw std::runtime_error("unknown report '" + report + "' (valid: " + valid + ")");
  }

  std::vector<json> lines;
  for (const auto& p : paths)
    for (auto& j : read_jsonl(p))
      if (!(j.is_object() && j.value("kind", "") == "header")) lines.push_back(std::move(j));

  std::string text;
  if (report == "derail") {
    text = judge_derail_report(lines, csv);
  } else {
    std::vector<TraceRecord> traces;
    traces.reserve(lines.size());
    for (const auto& j : lines) traces.push_back(trace_from_json(j));
    if (report == "headline") {
      text = judge_headline_report(traces, csv);
    } else if (report == "per-env") {
      text = render_per_env(per_env_delta_table(traces), csv);
    } else if (report == "cost") {
      text = render_cost(cost_decomposition(traces), csv);
    } else if (report == "eq2") {
      text = render_eq2(eq2_estimate(traces));
    } else if (report == "mechanism") {
      text = render_mechanism(paired_mechanism_subset(traces), csv);
    } else {  // routing
      std::vector<TraceRecord> adaptive;
      for (const auto& t : traces)
        if (t.method == "adaptive_repot") adaptive.push_back(t);
      text = render_routing(routing_histogram(adaptive), csv);
    }
  }

  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file '" + out_path + "'");
    out << text;
  }
  return 0;
}

StratificationPlan plan_from_file(const std::string& path) {
  json j = load_json_file(path);
  if (!j.is_array()) throw std::runtime_error(path + ": expected a JSON array of strata");
  StratificationPlan plan;
  for (const auto& st : j) {
    auto env = env_from_name(st.at("env").get<std::string>());
    if (!env)
      throw std::runtime_error("unknown env '" + st.at("env").get<std::string>() +
                               "' (valid: hanoi, checker, river, blocksworld)");
    plan.push_back({*env, st.at("complexity").get<int>(), st.at("count").get<int>()});
  }
  return plan;
}

int cmd_gen(const std::string& plan_path, uint64_t seed, const std::string& out_path,
            int parallel) {
  StratificationPlan plan =
      plan_path.empty() ? default_stratification() : plan_from_file(plan_path);
  auto suite = generate_suite(plan, seed, parallel);
  write_suite(suite, out_path);
  std::cout << "wrote " << suite.size() << " instances to " << out_path << "\n";
  return 0;
}

int cmd_planbench_import(const std::string& dir, const std::string& out_path) {
  auto load = load_planbench_split(dir);
  for (auto& inst : load.instances) {
    auto solved = solve(inst.initial_state, inst.goal);
    if (solved.status != SolveStatus::ok)
      throw std::runtime_error("no oracle plan for '" + inst.problem_id + "': " + solved.message);
    inst.oracle_plan = std::move(solved.plan);
    inst.oracle_plan_length = static_cast<int>(inst.oracle_plan.size());
  }
  write_suite(load.instances, out_path);
  std::cout << "imported " << load.instances.size() << " instances from " << load.file_count
            << " files to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"verifier-backed planning harness"};
  app.require_subcommand(1);

  std::string config_path, suite, out, method, backend_kind, script, model, conditions, cases,
      cases_out;
  uint64_t seed = 0;
  int parallel = 0, per_problem = 0, max_cases = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--suite", suite, "suite JSONL file");
    sub->add_option("--out", out, "output trace JSONL file");
    sub->add_option("--method", method, "method name");
    sub->add_option("--model", model, "model name recorded in traces");
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--parallel", parallel, "worker count");
    sub->add_option("--backend", backend_kind, "backend kind (scripted, remote)");
    sub->add_option("--script", script, "scripted-backend response file (JSONL)");
  };

  CLI::App* run = app.add_subcommand("run", "evaluate one method over a suite");
  add_common(run);
  CLI::App* derail = app.add_subcommand("derail", "run the error-injection recovery benchmark");
  add_common(derail);
  derail->add_option("--cases", cases, "derail case JSONL file (skips case generation)");
  derail->add_option("--cases-out", cases_out, "write the derail cases used");
  derail->add_option("--per-problem", per_problem, "injected cases per problem");
  derail->add_option("--max-cases", max_cases, "truncate the case list");
  derail->add_option("--conditions", conditions, "comma-separated recovery conditions");

  std::vector<std::string> trace_paths;
  std::string report = "headline", judge_out;
  bool csv = false;
  CLI::App* judge = app.add_subcommand("judge", "analyze trace files");
  judge->add_option("traces", trace_paths, "trace JSONL files")->required();
  judge->add_option("--report", report, "headline, per-env, cost, derail, eq2, mechanism, routing");
  judge->add_flag("--csv", csv, "emit CSV instead of an aligned table");
  judge->add_option("--out", judge_out, "write the report to a file");

  std::string plan_path, gen_out = "zoo.jsonl";
  CLI::App* gen = app.add_subcommand("gen", "generate a problem suite");
  gen->add_option("--plan", plan_path, "stratification plan JSON (default: the 775-instance zoo)");
  gen->add_option("--seed", seed, "generation seed");
  gen->add_option("--out", gen_out, "output suite JSONL");
  gen->add_option("--parallel", parallel, "worker count");

  std::string import_dir, import_out = "planbench.jsonl";
  CLI::App* pb = app.add_subcommand("planbench-import", "import a PDDL blocksworld split");
  pb->add_option("--dir", import_dir, "directory of .pddl problem files")->required();
  pb->add_option("--out", import_out, "output suite JSONL");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(plan_path, seed, gen_out, parallel > 0 ? parallel : 1);
    if (pb->parsed()) return cmd_planbench_import(import_dir, import_out);
    if (judge->parsed()) return cmd_judge(trace_paths, report, csv, judge_out);

    json cfg = config_path.empty() ? json::object() : load_json_file(config_path);
    if (!cfg.is_object()) throw std::runtime_error(config_path + ": expected a JSON object");
    CLI::App* sub = run->parsed() ? run : derail;
    if (sub->count("--suite")) cfg["suite"] = suite;
    if (sub->count("--out")) cfg["out"] = out;
    if (sub->count("--method")) cfg["method"] = method;
    if (sub->count("--model")) cfg["model_name"] = model;
    if (sub->count("--seed")) cfg["seed"] = seed;
    if (sub->count("--parallel")) cfg["parallel"] = parallel;
    if (sub->count("--backend")) cfg["backend"]["kind"] = backend_kind;
    if (sub->count("--script")) cfg["backend"]["script"] = script;
    if (derail->parsed()) {
      if (derail->count("--cases")) cfg["derail"]["cases"] = cases;
      if (derail->count("--cases-out")) cfg["derail"]["cases_out"] = cases_out;
      if (derail->count("--per-problem")) cfg["derail"]["per_problem"] = per_problem;
      if (derail->count("--max-cases")) cfg["derail"]["max_cases"] = max_cases;
      if (derail->count("--conditions")) cfg["derail"]["conditions"] = split_commas(conditions);
    }
    return run->parsed() ? cmd_run(cfg) : cmd_derail(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
