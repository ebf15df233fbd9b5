#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "repot/gateway.hpp"
#include "repot/replay.hpp"
#include "repot/zoo.hpp"

namespace repot {

enum class Method { cot, pot, sc, pot_retry, repot, adaptive_repot };

inline const std::vector<std::pair<Method, std::string>>& method_names() {
  static const std::vector<std::pair<Method, std::string>> names = {
      {Method::cot, "cot"},           {Method::pot, "pot"},
      {Method::sc, "sc"},             {Method::pot_retry, "pot_retry"},
      {Method::repot, "repot"},       {Method::adaptive_repot, "adaptive_repot"},
  };
  return names;
}

inline std::string method_name(Method m) {
  for (const auto& [method, name] : method_names())
    if (method == m) return name;
  throw std::logic_error("unmapped method");
}

inline Method method_from_name(const std::string& name) {
  std::string valid;
  for (const auto& [method, known] : method_names()) {
    if (known == name) return method;
    if (!valid.empty()) valid += ", ";
    valid += known;
  }
  throw std::invalid_argument("unknown method '" + name + "' (valid: " + valid + ")");
}

struct MethodConfig {
  Method method = Method::pot;
  int R = 1;
  int T = 4;
  int k = 8;
  double phi_threshold = 0.15;
  double temperature = 0.0;
  int max_output_tokens = 16384;
  ReasoningLevel reasoning_level = ReasoningLevel::none;
  std::string model_name;
  int repair_k = 0;        // output cap K in the repair contract; 0 = 2x oracle length
  bool no_prefix = false;  // hide prefix tail + count in repair prompts

  void validate() const {
    if (R < 0) throw std::invalid_argument("R must be >= 0");
    if (T < 0) throw std::invalid_argument("T must be >= 0");
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (phi_threshold < 0 || phi_threshold > 1)
      throw std::invalid_argument("phi_threshold must be in [0, 1]");
    if (temperature < 0) throw std::invalid_argument("temperature must be >= 0");
    if (max_output_tokens <= 0) throw std::invalid_argument("max_output_tokens must be > 0");
  }
};

struct LlmCall {
  std::string prompt;
  std::string output_text;
  long prompt_tokens = 0;
  long completion_tokens = 0;
  long latency_ms = 0;
};

struct TraceRecord {
  std::string problem_id;
  std::string method;
  std::string model;
  std::string env;
  int complexity = 0;
  bool success = false;
  std::vector<LlmCall> llm_calls;
  int verified_prefix_len = 0;
  int plan_len = 0;
  std::optional<int> first_failure_index;
  std::optional<std::string> verifier_error;
  std::optional<std::string> extraction_error;
  std::optional<std::string> runner_exception;
  std::string final_plan;
  long wall_ms = 0;
  uint64_t seed = 0;
  // repot / adaptive_repot only
  std::optional<int> repot_repair_calls;
  std::optional<bool> repot_initial_pot_success;
  std::optional<int> initial_plan_len;
  std::optional<int> initial_prefix_len;
  std::optional<std::string> route_taken;
  // pot_retry only
  std::optional<int> attempt1_plan_len;
  std::optional<int> attempt1_prefix_len;
  std::optional<bool> attempt1_success;
};

inline nlohmann::json trace_to_json(const TraceRecord& t) {
  nlohmann::json j;
  j["problem_id"] = t.problem_id;
  j["method"] = t.method;
  j["model"] = t.model;
  j["env"] = t.env;
  j["complexity"] = t.complexity;
  j["success"] = t.success;
  j["llm_calls"] = nlohmann::json::array();
  for (const auto& c : t.llm_calls) {
    j["llm_calls"].push_back({{"prompt", c.prompt},
                              {"output_text", c.output_text},
                              {"prompt_tokens", c.prompt_tokens},
                              {"completion_tokens", c.completion_tokens},
                              {"latency_ms", c.latency_ms}});
  }
  j["verified_prefix_len"] = t.verified_prefix_len;
  j["plan_len"] = t.plan_len;
  if (t.first_failure_index) j["first_failure_index"] = *t.first_failure_index;
  if (t.verifier_error) j["verifier_error"] = *t.verifier_error;
  if (t.extraction_error) j["extraction_error"] = *t.extraction_error;
  if (t.runner_exception) j["runner_exception"] = *t.runner_exception;
  j["final_plan"] = t.final_plan;
  j["wall_ms"] = t.wall_ms;
  j["seed"] = t.seed;
  if (t.repot_repair_calls) j["repot_repair_calls"] = *t.repot_repair_calls;
  if (t.repot_initial_pot_success) j["repot_initial_pot_success"] = *t.repot_initial_pot_success;
  if (t.initial_plan_len) j["initial_plan_len"] = *t.initial_plan_len;
  if (t.initial_prefix_len) j["initial_prefix_len"] = *t.initial_prefix_len;
  if (t.route_taken) j["route_taken"] = *t.route_taken;
  if (t.attempt1_plan_len) j["attempt1_plan_len"] = *t.attempt1_plan_len;
  if (t.attempt1_prefix_len) j["attempt1_prefix_len"] = *t.attempt1_prefix_len;
  if (t.attempt1_success) j["attempt1_success"] = *t.attempt1_success;
  return j;
}

inline TraceRecord trace_from_json(const nlohmann::json& j) {
  TraceRecord t;
  t.problem_id = j.at("problem_id").get<std::string>();
  t.method = j.at("method").get<std::string>();
  t.model = j.value("model", std::string());
  t.env = j.at("env").get<std::string>();
  t.complexity = j.at("complexity").get<int>();
  t.success = j.at("success").get<bool>();
  for (const auto& c : j.at("llm_calls")) {
    LlmCall call;
    call.prompt = c.at("prompt").get<std::string>();
    call.output_text = c.at("output_text").get<std::string>();
    call.prompt_tokens = c.at("prompt_tokens").get<long>();
    call.completion_tokens = c.at("completion_tokens").get<long>();
    call.latency_ms = c.at("latency_ms").get<long>();
    t.llm_calls.push_back(std::move(call));
  }
  t.verified_prefix_len = j.at("verified_prefix_len").get<int>();
  t.plan_len = j.at("plan_len").get<int>();
  if (j.contains("first_failure_index")) t.first_failure_index = j["first_failure_index"].get<int>();
  if (j.contains("verifier_error")) t.verifier_error = j["verifier_error"].get<std::string>();
  if (j.contains("extraction_error")) t.extraction_error = j["extraction_error"].get<std::string>();
  if (j.contains("runner_exception")) t.runner_exception = j["runner_exception"].get<std::string>();
  t.final_plan = j.at("final_plan").get<std::string>();
  t.wall_ms = j.at("wall_ms").get<long>();
  t.seed = j.at("seed").get<uint64_t>();
  if (j.contains("repot_repair_calls")) t.repot_repair_calls = j["repot_repair_calls"].get<int>();
  if (j.contains("repot_initial_pot_success"))
    t.repot_initial_pot_success = j["repot_initial_pot_success"].get<bool>();
  if (j.contains("initial_plan_len")) t.initial_plan_len = j["initial_plan_len"].get<int>();
  if (j.contains("initial_prefix_len")) t.initial_prefix_len = j["initial_prefix_len"].get<int>();
  if (j.contains("route_taken")) t.route_taken = j["route_taken"].get<std::string>();
  if (j.contains("attempt1_plan_len")) t.attempt1_plan_len = j["attempt1_plan_len"].get<int>();
  if (j.contains("attempt1_prefix_len")) t.attempt1_prefix_len = j["attempt1_prefix_len"].get<int>();
  if (j.contains("attempt1_success")) t.attempt1_success = j["attempt1_success"].get<bool>();
  return t;
}

struct CheckpointView {
  std::vector<std::string> prefix_tail;
  int prefix_len = 0;
  std::string boundary_state_text;
  std::string legal_actions_text;
  std::string blocked_text;
  std::string error_text;
};

namespace detail {

inline std::string join_or_none(const std::vector<std::string>& parts) {
  if (parts.empty()) return "(none)";
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ", ";
    out += parts[i];
  }
  return out;
}

}  // namespace detail

inline CheckpointView make_checkpoint_view(const Plan& committed, const EnvState& boundary,
                                           const std::optional<Action>& failed_action,
                                           const std::string& error, int T) {
  CheckpointView v;
  v.prefix_len = static_cast<int>(committed.size());
  size_t take = std::min<size_t>(static_cast<size_t>(std::max(T, 0)), committed.size());
  for (size_t i = committed.size() - take; i < committed.size(); ++i)
    v.prefix_tail.push_back(committed[i].text);
  v.boundary_state_text = render_state(boundary);

  std::vector<std::string> legal_texts;
  std::set<std::string> legal_set;
  for (const auto& a : legal_actions(boundary)) {
    legal_texts.push_back(action_text(a));
    legal_set.insert(legal_texts.back());
  }
  v.legal_actions_text = detail::join_or_none(legal_texts);

  if (failed_action) {
    std::string op = op_of(*failed_action);
    std::vector<std::string> blocked;
    for (const auto& a : candidate_actions(boundary)) {
      if (op_of(a) != op) continue;
      std::string text = action_text(a);
      if (legal_set.count(text)) continue;
      blocked.push_back(std::move(text));
      if (blocked.size() == 5) break;
    }
    v.blocked_text = detail::join_or_none(blocked);
  } else {
    v.blocked_text = "(none)";
  }
  v.error_text = error.empty() ? "(none)" : error;
  return v;
}

inline int repair_move_cap(const ProblemInstance& inst, const MethodConfig& cfg) {
  if (cfg.repair_k > 0) return cfg.repair_k;
  return 2 * std::max(1, inst.oracle_plan_length);
}

inline std::string build_pot_prompt(const ProblemInstance& inst) {
  return render_prompt(inst, PromptMode::pot);
}

inline std::string build_cot_prompt(const ProblemInstance& inst) {
  return render_prompt(inst, PromptMode::cot);
}

inline constexpr const char* kCheckpointMarker = "--- verifier checkpoint below ---";

inline std::string build_repair_prompt(const ProblemInstance& inst, const CheckpointView& view,
                                       int K, bool no_prefix = false,
                                       bool resume_from_initial = false) {
  std::string s = inst.natural_language_prompt;
  if (!s.empty() && s.back() != '\n') s += '\n';
  s += "Goal state: " + goal_text(inst.goal) + "\n";
  s += "Write Python code that prints exactly one line:\n";
  s += "  moves = [...]\n";
  s += "containing up to " + std::to_string(K) + " primitive moves to apply from the " +
       (resume_from_initial ? "initial state" : "current verified state") + ".\n";
  s += kCheckpointMarker;
  s += '\n';
  if (!no_prefix) {
    s += "You have already executed " + std::to_string(view.prefix_len) + " verified moves.\n";
    s += "Recent verified moves: " + detail::join_or_none(view.prefix_tail) + "\n";
  }
  s += "Current verified state: " + view.boundary_state_text + "\n";
  s += "Legal moves: " + view.legal_actions_text + "\n";
  s += "Blocked: " + view.blocked_text + "\n";
  s += "Verifier message: " + view.error_text + "\n";
  return s;
}

namespace detail {

// One model call plus plan extraction, with the LlmCall appended to the
// record. Returns false when the backend itself failed (runner_exception is
// set and the method must stop; App. C "we do not re-roll").
struct CallResult {
  Plan plan;
  bool backend_ok = true;
  std::optional<std::string> extraction_error;
};

inline CallResult call_model(TraceRecord& trace, Backend& backend, const ProblemInstance& inst,
                             const MethodConfig& cfg, const std::string& prompt, PromptMode mode,
                             const ProgramExecutor& exec) {
  CompletionRequest req;
  req.prompt = prompt;
  req.temperature = cfg.temperature;
  req.max_output_tokens = cfg.max_output_tokens;
  req.reasoning_level = cfg.reasoning_level;
  req.model_name = cfg.model_name;
  req.scope_key = inst.problem_id;
  CompletionResult res = backend.complete(req);

  LlmCall call;
  call.prompt = prompt;
  call.output_text = res.text;
  call.prompt_tokens = res.prompt_tokens;
  call.completion_tokens = res.completion_tokens;
  call.latency_ms = res.latency_ms;
  trace.llm_calls.push_back(std::move(call));

  CallResult out;
  if (res.backend_error) {
    trace.runner_exception = *res.backend_error;
    out.backend_ok = false;
    return out;
  }
  Extracted got = extract_plan(inst.environment, res.text, mode, exec);
  if (auto* err = std::get_if<ExtractionError>(&got)) {
    out.extraction_error = err->message;
    if (!trace.extraction_error) trace.extraction_error = err->message;
    return out;
  }
  out.plan = std::move(std::get<Plan>(got));
  return out;
}

inline TraceRecord trace_shell(const ProblemInstance& inst, const MethodConfig& cfg) {
  TraceRecord t;
  t.problem_id = inst.problem_id;
  t.method = method_name(cfg.method);
  t.model = cfg.model_name;
  t.env = env_name(inst.environment);
  t.complexity = inst.complexity;
  t.seed = inst.seed;
  return t;
}

// Fills the outcome fields from the replay of the outcome-defining plan.
inline void record_outcome(TraceRecord& t, const Plan& plan, const ReplayOutcome& r) {
  t.plan_len = static_cast<int>(plan.size());
  t.verified_prefix_len = static_cast<int>(r.prefix.size());
  t.success = r.goal_reached;
  t.final_plan = plan_text(plan);
  if (!t.first_failure_index && r.prefix.size() < plan.size()) t.first_failure_index = r.failure_index;
  if (!t.verifier_error && !r.error.empty()) t.verifier_error = r.error;
}

}  // namespace detail

inline TraceRecord run_single_shot(const ProblemInstance& inst, Backend& backend,
                                   const MethodConfig& cfg, const ProgramExecutor& exec,
                                   PromptMode mode) {
  TraceRecord t = detail::trace_shell(inst, cfg);
  auto call = detail::call_model(t, backend, inst, cfg, render_prompt(inst, mode), mode, exec);
  if (!call.backend_ok) return t;
  auto r = replay(inst.initial_state, call.plan, inst.goal);
  detail::record_outcome(t, call.plan, r);
  return t;
}

inline TraceRecord run_pot(const ProblemInstance& inst, Backend& backend, const MethodConfig& cfg,
                           const ProgramExecutor& exec) {
  return run_single_shot(inst, backend, cfg, exec, PromptMode::pot);
}

inline TraceRecord run_cot(const ProblemInstance& inst, Backend& backend, const MethodConfig& cfg,
                           const ProgramExecutor& exec) {
  return run_single_shot(inst, backend, cfg, exec, PromptMode::cot);
}

inline TraceRecord run_pot_retry(const ProblemInstance& inst, Backend& backend,
                                 const MethodConfig& cfg, const ProgramExecutor& exec) {
  TraceRecord t = detail::trace_shell(inst, cfg);
  const std::string prompt = build_pot_prompt(inst);
  auto first = detail::call_model(t, backend, inst, cfg, prompt, PromptMode::pot, exec);
  if (!first.backend_ok) return t;
  auto r1 = replay(inst.initial_state, first.plan, inst.goal);
  if (r1.goal_reached) {
    detail::record_outcome(t, first.plan, r1);
    return t;
  }
  t.attempt1_plan_len = static_cast<int>(first.plan.size());
  t.attempt1_prefix_len = static_cast<int>(r1.prefix.size());
  t.attempt1_success = false;
  if (r1.prefix.size() < first.plan.size()) t.first_failure_index = r1.failure_index;
  if (!r1.error.empty()) t.verifier_error = r1.error;

  // Fresh attempt: the original prompt resent verbatim, no checkpoint.
  auto second = detail::call_model(t, backend, inst, cfg, prompt, PromptMode::pot, exec);
  if (!second.backend_ok) return t;
  auto r2 = replay(inst.initial_state, second.plan, inst.goal);
  detail::record_outcome(t, second.plan, r2);
  return t;
}

inline TraceRecord run_sc(const ProblemInstance& inst, Backend& backend, const MethodConfig& cfg,
                          const ProgramExecutor& exec) {
  TraceRecord t = detail::trace_shell(inst, cfg);
  const std::string prompt = build_cot_prompt(inst);
  std::vector<Plan> ballots;
  for (int i = 0; i < cfg.k; ++i) {
    auto call = detail::call_model(t, backend, inst, cfg, prompt, PromptMode::cot, exec);
    if (!call.backend_ok) return t;
    if (!call.extraction_error) ballots.push_back(std::move(call.plan));
  }
  if (ballots.empty()) {
    auto r = replay(inst.initial_state, Plan{}, inst.goal);
    detail::record_outcome(t, Plan{}, r);
    return t;
  }
  // Majority vote over canonically printed plans; ties go to the plan whose
  // first sample appeared earliest.
  std::map<std::string, int> counts;
  for (const auto& b : ballots) ++counts[plan_text(b)];
  const Plan* winner = &ballots[0];
  int best = 0;
  for (const auto& b : ballots) {
    int c = counts[plan_text(b)];
    if (c > best) {
      best = c;
      winner = &b;
    }
  }
  auto r = replay(inst.initial_state, *winner, inst.goal);
  detail::record_outcome(t, *winner, r);
  return t;
}

namespace detail {

inline TraceRecord run_repair_loop(const ProblemInstance& inst, Backend& backend,
                                   const MethodConfig& cfg, const ProgramExecutor& exec,
                                   bool adaptive) {
  TraceRecord t = trace_shell(inst, cfg);
  t.repot_repair_calls = 0;
  t.repot_initial_pot_success = false;
  const int K = repair_move_cap(inst, cfg);

  auto initial = call_model(t, backend, inst, cfg, build_pot_prompt(inst), PromptMode::pot, exec);
  if (!initial.backend_ok) return t;

  auto r = replay(inst.initial_state, initial.plan, inst.goal);
  Plan committed = r.prefix;
  EnvState boundary = r.boundary_state;
  t.initial_plan_len = static_cast<int>(initial.plan.size());
  t.initial_prefix_len = static_cast<int>(r.prefix.size());
  if (r.prefix.size() < initial.plan.size()) t.first_failure_index = r.failure_index;
  if (!r.error.empty()) t.verifier_error = r.error;

  if (r.goal_reached) {
    t.repot_initial_pot_success = true;
    if (adaptive) t.route_taken = "initial_success";
    record_outcome(t, committed, r);
    return t;
  }

  int remaining = cfg.R;
  bool goal = false;

  if (adaptive && remaining > 0) {
    const int n = static_cast<int>(initial.plan.size());
    const int k = r.failure_index;
    const double phi = n == 0 ? 0.0 : static_cast<double>(k - 1) / n;
    if (n == 0 || phi < cfg.phi_threshold) {
      t.route_taken = n == 0 ? "fresh_retry_empty" : "fresh_retry_short_prefix";
      auto fresh =
          call_model(t, backend, inst, cfg, build_pot_prompt(inst), PromptMode::pot, exec);
      --remaining;
      *t.repot_repair_calls += 1;
      if (!fresh.backend_ok) return t;
      auto rf = replay(inst.initial_state, fresh.plan, inst.goal);
      committed = rf.prefix;
      boundary = rf.boundary_state;
      r = std::move(rf);
      goal = r.goal_reached;
    } else {
      t.route_taken = "suffix_repair";
    }
  }

  while (!goal && remaining > 0) {
    CheckpointView view =
        make_checkpoint_view(committed, boundary, r.failed_action, r.error, cfg.T);
    auto repair = call_model(t, backend, inst, cfg,
                             build_repair_prompt(inst, view, K, cfg.no_prefix), PromptMode::pot,
                             exec);
    --remaining;
    *t.repot_repair_calls += 1;
    if (!repair.backend_ok) return t;
    auto rr = replay(boundary, repair.plan, inst.goal);
    committed.insert(committed.end(), rr.prefix.begin(), rr.prefix.end());
    boundary = rr.boundary_state;
    goal = rr.goal_reached;
    r = std::move(rr);
  }

  t.plan_len = static_cast<int>(committed.size());
  t.verified_prefix_len = static_cast<int>(committed.size());
  t.success = goal;
  t.final_plan = plan_text(committed);
  return t;
}

}  // namespace detail

inline TraceRecord run_repot(const ProblemInstance& inst, Backend& backend,
                             const MethodConfig& cfg, const ProgramExecutor& exec) {
  return detail::run_repair_loop(inst, backend, cfg, exec, false);
}

inline TraceRecord run_adaptive_repot(const ProblemInstance& inst, Backend& backend,
                                      const MethodConfig& cfg, const ProgramExecutor& exec) {
  return detail::run_repair_loop(inst, backend, cfg, exec, true);
}

inline void assert_budget_laws(const TraceRecord& t, const MethodConfig& cfg) {
  const auto calls = static_cast<int>(t.llm_calls.size());
  bool ok = true;
  switch (cfg.method) {
    case Method::cot:
    case Method::pot:
      ok = calls <= 1 && (t.runner_exception || calls == 1);
      break;
    case Method::sc:
      ok = calls <= cfg.k && (t.runner_exception || calls == cfg.k);
      break;
    case Method::pot_retry:
      ok = calls >= (t.runner_exception ? 0 : 1) && calls <= 2;
      break;
    case Method::repot:
    case Method::adaptive_repot:
      ok = calls <= 1 + cfg.R &&
           (t.runner_exception ||
            (t.repot_repair_calls && *t.repot_repair_calls <= cfg.R &&
             calls <= 1 + *t.repot_repair_calls));
      break;
  }
  if (!ok)
    throw std::logic_error("budget law violated for " + t.method + " on " + t.problem_id + ": " +
                           std::to_string(calls) + " calls");
  if (t.success && t.runner_exception)
    throw std::logic_error("success with runner_exception on " + t.problem_id);
}

inline TraceRecord run_one(const ProblemInstance& inst, Backend& backend, const MethodConfig& cfg,
                           const ProgramExecutor& exec) {
  cfg.validate();
  auto begin = std::chrono::steady_clock::now();
  TraceRecord t;
  try {
    switch (cfg.method) {
      case Method::cot: t = run_cot(inst, backend, cfg, exec); break;
      case Method::pot: t = run_pot(inst, backend, cfg, exec); break;
      case Method::sc: t = run_sc(inst, backend, cfg, exec); break;
      case Method::pot_retry: t = run_pot_retry(inst, backend, cfg, exec); break;
      case Method::repot: t = run_repot(inst, backend, cfg, exec); break;
      case Method::adaptive_repot: t = run_adaptive_repot(inst, backend, cfg, exec); break;
    }
  } catch (const std::exception& e) {
    t = detail::trace_shell(inst, cfg);
    t.success = false;
    t.runner_exception = e.what();
  }
  t.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::steady_clock::now() - begin)
                  .count();
  assert_budget_laws(t, cfg);
  return t;
}

struct StratumCount {
  int successes = 0;
  int total = 0;
};

struct SuiteSummary {
  std::map<std::string, StratumCount> per_stratum;  // keyed "env/complexity"
  int successes = 0;
  int total = 0;
};

using TraceSink = std::function<void(const nlohmann::json& line)>;

// Runs every instance exactly once; instances run concurrently, records are
// delivered to the sink in instance order. A sink failure aborts the run.
inline SuiteSummary run_suite(const std::vector<ProblemInstance>& instances,
                              const MethodConfig& cfg, Backend& backend,
                              const ProgramExecutor& exec, int parallelism,
                              const TraceSink& sink) {
  cfg.validate();
  if (parallelism < 1) throw std::invalid_argument("parallelism must be >= 1");

  std::vector<TraceRecord> records(instances.size());
  std::mutex mu;
  std::map<size_t, const TraceRecord*> pending;
  size_t cursor = 0;
  std::exception_ptr sink_error;

  auto deliver = [&](size_t idx) {
    std::lock_guard<std::mutex> lock(mu);
    if (sink_error) return;
    pending[idx] = &records[idx];
    while (!pending.empty() && pending.begin()->first == cursor) {
      try {
        if (sink) sink(trace_to_json(*pending.begin()->second));
      } catch (...) {
        sink_error = std::current_exception();
        return;
      }
      pending.erase(pending.begin());
      ++cursor;
    }
  };

  if (parallelism == 1 || instances.size() <= 1) {
    for (size_t i = 0; i < instances.size(); ++i) {
      records[i] = run_one(instances[i], backend, cfg, exec);
      deliver(i);
      if (sink_error) std::rethrow_exception(sink_error);
    }
  } else {
    std::atomic<size_t> next{0};
    std::atomic<bool> stop{false};
    std::vector<std::thread> workers;
    int n_workers = std::min<int>(parallelism, static_cast<int>(instances.size()));
    for (int w = 0; w < n_workers; ++w) {
      workers.emplace_back([&] {
        while (!stop.load()) {
          size_t i = next.fetch_add(1);
          if (i >= instances.size()) break;
          records[i] = run_one(instances[i], backend, cfg, exec);
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

  SuiteSummary summary;
  for (size_t i = 0; i < instances.size(); ++i) {
    auto& cell = summary.per_stratum[records[i].env + "/" +
                                     std::to_string(records[i].complexity)];
    ++cell.total;
    ++summary.total;
    if (records[i].success) {
      ++cell.successes;
      ++summary.successes;
    }
  }
  return summary;
}

}  // namespace repot
