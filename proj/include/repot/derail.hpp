#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "repot/runner.hpp"

namespace repot {

// One injected-error trial: the oracle plan was followed for
// checkpoint_index moves, then a legal-but-wrong action was executed.
struct DerailCase {
  std::string problem_id;
  EnvId environment = EnvId::hanoi;
  int checkpoint_index = 0;
  EnvState checkpoint_state;
  Action injected_action;
  EnvState post_injection_state;
  bool injection_valid = true;
  uint64_t injection_seed = 0;
};

inline const std::vector<std::string>& derail_conditions() {
  static const std::vector<std::string> conditions = {
      "no_feedback",        "error_only",
      "state_feedback",     "state_plus_legal_actions",
      "stateguard_rollback", "repot_full",
      "repot_no_prefix",    "repot_restart",
  };
  return conditions;
}

inline void require_condition(const std::string& name) {
  const auto& all = derail_conditions();
  if (std::find(all.begin(), all.end(), name) == all.end()) {
    std::string valid;
    for (const auto& c : all) {
      if (!valid.empty()) valid += ", ";
      valid += c;
    }
    throw std::invalid_argument("unknown condition '" + name + "' (valid: " + valid + ")");
  }
}

struct SkippedCase {
  std::string problem_id;
  std::string reason;
};

struct MakeCasesResult {
  std::vector<DerailCase> cases;
  std::vector<SkippedCase> skipped;
};

inline int derail_checkpoint_index(int oracle_plan_length) {
  return std::max(1, oracle_plan_length / 3);
}

// Builds per_problem cases per instance: checkpoint at one third of the
// oracle plan, injected action drawn uniformly from the legal non-oracle
// actions at the checkpoint. Instances that cannot host a case are skipped
// with a reason. max_cases > 0 truncates the assembled list.
inline MakeCasesResult make_cases(const std::vector<ProblemInstance>& suite, int per_problem,
                                  uint64_t seed, int max_cases = 0) {
  if (per_problem < 1) throw std::invalid_argument("per_problem must be >= 1");
  MakeCasesResult out;
  for (const auto& inst : suite) {
    if (inst.oracle_plan_length < 3) {
      out.skipped.push_back({inst.problem_id, "oracle plan shorter than 3 moves"});
      continue;
    }
    const int c = derail_checkpoint_index(inst.oracle_plan_length);
    Plan prefix(inst.oracle_plan.begin(), inst.oracle_plan.begin() + c);
    auto r = replay(inst.initial_state, prefix, inst.goal);
    if (static_cast<int>(r.prefix.size()) != c)
      throw std::logic_error("oracle prefix did not replay for " + inst.problem_id);

    const std::string oracle_next = inst.oracle_plan[static_cast<size_t>(c)].text;
    std::vector<Action> pool;
    for (const auto& a : legal_actions(r.boundary_state))
      if (action_text(a) != oracle_next) pool.push_back(a);
    if (pool.empty()) {
      out.skipped.push_back({inst.problem_id, "no legal non-oracle action at the checkpoint"});
      continue;
    }

    for (int j = 0; j < per_problem; ++j) {
      DerailCase dc;
      dc.problem_id = inst.problem_id;
      dc.environment = inst.environment;
      dc.checkpoint_index = c;
      dc.checkpoint_state = r.boundary_state;
      dc.injection_seed = seed_combine(seed_combine(seed, hash_str(inst.problem_id)),
                                       static_cast<uint64_t>(j));
      Rng rng(dc.injection_seed);
      dc.injected_action = pool[rng.below(pool.size())];
      StepResult s = step(dc.checkpoint_state, dc.injected_action);
      if (!s.valid) throw std::logic_error("legal pool produced an invalid action");
      dc.post_injection_state = s.next_state;
      dc.injection_valid = true;
      out.cases.push_back(std::move(dc));
    }
  }
  if (max_cases > 0 && static_cast<int>(out.cases.size()) > max_cases)
    out.cases.resize(static_cast<size_t>(max_cases));
  return out;
}

inline nlohmann::json derail_case_to_json(const DerailCase& c) {
  nlohmann::json j;
  j["problem_id"] = c.problem_id;
  j["env"] = env_name(c.environment);
  j["checkpoint_index"] = c.checkpoint_index;
  j["checkpoint_state"] = render_state(c.checkpoint_state);
  j["injected_action"] = action_text(c.injected_action);
  j["post_injection_state"] = render_state(c.post_injection_state);
  j["injection_valid"] = c.injection_valid;
  j["injection_seed"] = c.injection_seed;
  return j;
}

inline DerailCase derail_case_from_json(const nlohmann::json& j) {
  DerailCase c;
  c.problem_id = j.at("problem_id").get<std::string>();
  auto env = env_from_name(j.at("env").get<std::string>());
  if (!env) throw std::invalid_argument("bad env: " + j.at("env").get<std::string>());
  c.environment = *env;
  c.checkpoint_index = j.at("checkpoint_index").get<int>();
  c.checkpoint_state = parse_state(c.environment, j.at("checkpoint_state").get<std::string>());
  auto act = parse_action(c.environment, j.at("injected_action").get<std::string>());
  if (auto* err = std::get_if<ParseError>(&act))
    throw std::invalid_argument("bad injected_action: " + err->message);
  c.injected_action = std::get<Action>(act);
  c.post_injection_state =
      parse_state(c.environment, j.at("post_injection_state").get<std::string>());
  c.injection_valid = j.at("injection_valid").get<bool>();
  c.injection_seed = j.at("injection_seed").get<uint64_t>();
  return c;
}

// The harness-synthesized one-line deviation notice; the injected action was
// legal, so this stands in for the verifier message of a caught failure.
inline std::string deviation_notice(const DerailCase& c) {
  return "deviation detected: " + action_text(c.injected_action) + " after " +
         std::to_string(c.checkpoint_index) + " verified moves does not follow the intended plan";
}

namespace detail {

inline std::string legal_moves_text(const EnvState& s) {
  std::vector<std::string> texts;
  for (const auto& a : legal_actions(s)) texts.push_back(action_text(a));
  return join_or_none(texts);
}

inline std::string cot_block(const std::string& body) {
  return body + prompts::contract(PromptMode::cot);
}

}  // namespace detail

inline std::string build_condition_prompt(const ProblemInstance& inst, const DerailCase& c,
                                          const std::string& condition, const MethodConfig& cfg) {
  std::string base = inst.natural_language_prompt;
  if (!base.empty() && base.back() != '\n') base += '\n';

  if (condition == "no_feedback") {
    base += "You have partially executed a plan. Current state: " +
            render_state(c.post_injection_state) + "\n";
    return detail::cot_block(base);
  }
  if (condition == "error_only") {
    base += "You have partially executed a plan. Current state: " +
            render_state(c.post_injection_state) + "\n";
    base += "Error: " + deviation_notice(c) + "\n";
    return detail::cot_block(base);
  }
  if (condition == "state_feedback" || condition == "state_plus_legal_actions") {
    base += "You attempted " + action_text(c.injected_action) +
            ", which deviated from the plan and has been rolled back.\n";
    base += "Last valid checkpoint state: " + render_state(c.checkpoint_state) + "\n";
    if (condition == "state_plus_legal_actions")
      base += "Legal moves: " + detail::legal_moves_text(c.checkpoint_state) + "\n";
    return detail::cot_block(base);
  }
  if (condition == "repot_full" || condition == "repot_no_prefix" ||
      condition == "repot_restart") {
    Plan prefix(inst.oracle_plan.begin(), inst.oracle_plan.begin() + c.checkpoint_index);
    CheckpointView view = make_checkpoint_view(prefix, c.checkpoint_state,
                                               c.injected_action, deviation_notice(c), cfg.T);
    return build_repair_prompt(inst, view, repair_move_cap(inst, cfg),
                               condition == "repot_no_prefix",
                               condition == "repot_restart");
  }
  throw std::invalid_argument("condition '" + condition + "' has no single-prompt form");
}

inline std::string build_stateguard_prompt(const ProblemInstance& inst, const EnvState& current) {
  std::string base = inst.natural_language_prompt;
  if (!base.empty() && base.back() != '\n') base += '\n';
  base += "Recovery in progress from a verified checkpoint.\n";
  base += "Current verified state: " + render_state(current) + "\n";
  base += "Legal moves: " + detail::legal_moves_text(current) + "\n";
  base += "Reply with exactly one line of the form:\n  moves = [m]\n"
          "containing exactly one next move in the exact action syntax above.";
  return base;
}

inline int stateguard_budget_for(const ProblemInstance& inst, const DerailCase& c,
                                 int configured) {
  if (configured > 0) return configured;
  return std::max(1, 2 * (inst.oracle_plan_length - c.checkpoint_index));
}

struct RecoveryRecord {
  TraceRecord trace;
  std::string condition;
  int checkpoint_index = 0;
  std::string injected_action;
  uint64_t injection_seed = 0;
};

inline nlohmann::json recovery_to_json(const RecoveryRecord& r) {
  nlohmann::json j = trace_to_json(r.trace);
  j["condition"] = r.condition;
  j["checkpoint_index"] = r.checkpoint_index;
  j["injected_action"] = r.injected_action;
  j["injection_seed"] = r.injection_seed;
  return j;
}

inline RecoveryRecord recovery_from_json(const nlohmann::json& j) {
  RecoveryRecord r;
  r.trace = trace_from_json(j);
  r.condition = j.at("condition").get<std::string>();
  r.checkpoint_index = j.at("checkpoint_index").get<int>();
  r.injected_action = j.at("injected_action").get<std::string>();
  r.injection_seed = j.at("injection_seed").get<uint64_t>();
  return r;
}

namespace detail {

inline std::string derail_scope(const DerailCase& c) {
  return c.problem_id + "#" + std::to_string(c.injection_seed);
}

inline CompletionRequest derail_request(const ProblemInstance& inst, const DerailCase& c,
                                        const MethodConfig& cfg, std::string prompt) {
  CompletionRequest req;
  req.prompt = std::move(prompt);
  req.temperature = cfg.temperature;
  req.max_output_tokens = cfg.max_output_tokens;
  req.reasoning_level = cfg.reasoning_level;
  req.model_name = cfg.model_name;
  req.scope_key = derail_scope(c);
  (void)inst;
  return req;
}

inline LlmCall to_llm_call(const std::string& prompt, const CompletionResult& res) {
  LlmCall call;
  call.prompt = prompt;
  call.output_text = res.text;
  call.prompt_tokens = res.prompt_tokens;
  call.completion_tokens = res.completion_tokens;
  call.latency_ms = res.latency_ms;
  return call;
}

inline RecoveryRecord run_stateguard(const ProblemInstance& inst, const DerailCase& c,
                                     Backend& backend, const ProgramExecutor& exec,
                                     const MethodConfig& cfg, int budget) {
  RecoveryRecord out;
  out.trace = trace_shell(inst, cfg);
  out.trace.method = "stateguard_rollback";

  EnvState current = c.checkpoint_state;
  Plan applied;
  bool goal = is_goal(current, inst.goal);
  for (int round = 0; round < budget && !goal; ++round) {
    std::string prompt = build_stateguard_prompt(inst, current);
    CompletionResult res = backend.complete(derail_request(inst, c, cfg, prompt));
    out.trace.llm_calls.push_back(to_llm_call(prompt, res));
    if (res.backend_error) {
      out.trace.runner_exception = *res.backend_error;
      break;
    }
    Extracted got = extract_plan(inst.environment, res.text, PromptMode::cot, exec);
    if (auto* err = std::get_if<ExtractionError>(&got)) {
      if (!out.trace.extraction_error) out.trace.extraction_error = err->message;
      continue;
    }
    const Plan& proposal = std::get<Plan>(got);
    if (proposal.empty()) continue;
    const PlanItem& move = proposal.front();
    StepResult s = step(current, *move.action);
    if (!s.valid) {
      if (!out.trace.first_failure_index)
        out.trace.first_failure_index = static_cast<int>(applied.size()) + 1;
      if (!out.trace.verifier_error) out.trace.verifier_error = s.error;
      continue;  // rejected proposals are never applied
    }
    current = std::move(s.next_state);
    applied.push_back(move);
    goal = is_goal(current, inst.goal);
  }
  out.trace.success = goal;
  out.trace.plan_len = static_cast<int>(applied.size());
  out.trace.verified_prefix_len = static_cast<int>(applied.size());
  out.trace.final_plan = plan_text(applied);
  return out;
}

}  // namespace detail

// Runs one recovery condition for one case. The resumption state differs by
// condition: no_feedback / error_only act from the derailed post-injection
// state; the checkpointed conditions act from the rolled-back checkpoint;
// repot_restart plans with full checkpoint information but its plan is
// replayed from the initial state.
inline RecoveryRecord run_condition(const ProblemInstance& inst, const DerailCase& c,
                                    const std::string& condition, Backend& backend,
                                    const ProgramExecutor& exec, const MethodConfig& cfg,
                                    int stateguard_budget = 0) {
  require_condition(condition);
  if (inst.problem_id != c.problem_id)
    throw std::invalid_argument("case/instance mismatch: " + c.problem_id + " vs " +
                                inst.problem_id);
  auto begin = std::chrono::steady_clock::now();

  RecoveryRecord out;
  if (condition == "stateguard_rollback") {
    out = detail::run_stateguard(inst, c, backend, exec, cfg,
                                 stateguard_budget_for(inst, c, stateguard_budget));
  } else {
    out.trace = detail::trace_shell(inst, cfg);
    out.trace.method = condition;
    std::string prompt = build_condition_prompt(inst, c, condition, cfg);
    bool pot_mode = condition.rfind("repot_", 0) == 0;
    CompletionResult res = backend.complete(detail::derail_request(inst, c, cfg, prompt));
    out.trace.llm_calls.push_back(detail::to_llm_call(prompt, res));
    if (res.backend_error) {
      out.trace.runner_exception = *res.backend_error;
    } else {
      Extracted got = extract_plan(inst.environment, res.text,
                                   pot_mode ? PromptMode::pot : PromptMode::cot, exec);
      Plan plan;
      if (auto* err = std::get_if<ExtractionError>(&got))
        out.trace.extraction_error = err->message;
      else
        plan = std::move(std::get<Plan>(got));

      const EnvState* resume = &c.post_injection_state;
      if (condition == "repot_restart") resume = &inst.initial_state;
      else if (condition != "no_feedback" && condition != "error_only")
        resume = &c.checkpoint_state;
      auto r = replay(*resume, plan, inst.goal);
      detail::record_outcome(out.trace, plan, r);
    }
  }
  out.trace.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - begin)
                          .count();
  out.condition = condition;
  out.checkpoint_index = c.checkpoint_index;
  out.injected_action = action_text(c.injected_action);
  out.injection_seed = c.injection_seed;
  return out;
}

struct DerailSummary {
  std::map<std::string, StratumCount> per_condition;
  int cases = 0;
};

// Paired evaluation: every condition runs on every case with the shared
// injection; cases run concurrently, the conditions of one case sequentially.
inline DerailSummary run_derail(const std::vector<ProblemInstance>& suite,
                                const std::vector<DerailCase>& cases,
                                const std::vector<std::string>& conditions, Backend& backend,
                                const ProgramExecutor& exec, const MethodConfig& cfg,
                                int parallelism, const TraceSink& sink,
                                int stateguard_budget = 0) {
  for (const auto& cond : conditions) require_condition(cond);
  if (parallelism < 1) throw std::invalid_argument("parallelism must be >= 1");
  std::map<std::string, const ProblemInstance*> by_id;
  for (const auto& inst : suite) by_id[inst.problem_id] = &inst;
  for (const auto& c : cases)
    if (!by_id.count(c.problem_id))
      throw std::invalid_argument("case references unknown problem '" + c.problem_id + "'");

  std::vector<std::vector<RecoveryRecord>> rows(cases.size());
  auto run_case = [&](size_t i) {
    const DerailCase& c = cases[i];
    const ProblemInstance& inst = *by_id.at(c.problem_id);
    for (const auto& cond : conditions)
      rows[i].push_back(run_condition(inst, c, cond, backend, exec, cfg, stateguard_budget));
  };

  std::mutex mu;
  std::map<size_t, bool> done;
  size_t cursor = 0;
  std::exception_ptr sink_error;
  auto deliver = [&](size_t idx) {
    std::lock_guard<std::mutex> lock(mu);
    if (sink_error) return;
    done[idx] = true;
    while (!done.empty() && done.begin()->first == cursor) {
      try {
        if (sink)
          for (const auto& rec : rows[cursor]) sink(recovery_to_json(rec));
      } catch (...) {
        sink_error = std::current_exception();
        return;
      }
      done.erase(done.begin());
      ++cursor;
    }
  };

  if (parallelism == 1 || cases.size() <= 1) {
    for (size_t i = 0; i < cases.size(); ++i) {
      run_case(i);
      deliver(i);
      if (sink_error) std::rethrow_exception(sink_error);
    }
  } else {
    std::atomic<size_t> next{0};
    std::atomic<bool> stop{false};
    std::vector<std::thread> workers;
    int n_workers = std::min<int>(parallelism, static_cast<int>(cases.size()));
    for (int w = 0; w < n_workers; ++w) {
      workers.emplace_back([&] {
        while (!stop.load()) {
          size_t i = next.fetch_add(1);
          if (i >= cases.size()) break;
          run_case(i);
          deliver(i);
          {
            std::lock_guard<std::mutex> lock(mu);
            if (sink_error) stop.store(true);
          }
        }
      });
    }
    for (auto& th : workers) th.join();
    if (sink_error) std::rethrow_exception(sink_error);
  }

  DerailSummary summary;
  summary.cases = static_cast<int>(cases.size());
  for (const auto& row : rows)
    for (const auto& rec : row) {
      auto& cell = summary.per_condition[rec.condition];
      ++cell.total;
      if (rec.trace.success) ++cell.successes;
    }
  return summary;
}

}  // namespace repot
