#pragma once

#include <fcntl.h>
#include <poll.h>
#include <sched.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "repot/replay.hpp"
#include "repot/util.hpp"
#include "repot/zoo.hpp"

namespace repot {

enum class ReasoningLevel { none, medium };

inline std::string reasoning_name(ReasoningLevel r) {
  return r == ReasoningLevel::none ? "none" : "medium";
}

inline ReasoningLevel reasoning_from_name(const std::string& name) {
  if (name == "none") return ReasoningLevel::none;
  if (name == "medium") return ReasoningLevel::medium;
  throw std::invalid_argument("unknown reasoning level '" + name + "'");
}

struct CompletionRequest {
  std::string prompt;
  double temperature = 0.0;
  int max_output_tokens = 16384;
  ReasoningLevel reasoning_level = ReasoningLevel::none;
  std::string model_name;
  // Groups scripted responses and trace bookkeeping by problem so parallel
  // runs stay deterministic; empty outside of suite runs.
  std::string scope_key;
};

struct CompletionResult {
  std::string text;
  long prompt_tokens = 0;
  long completion_tokens = 0;
  long latency_ms = 0;
  std::optional<std::string> backend_error;
  std::string token_source = "proxy";  // "proxy" or "provider"
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual CompletionResult complete(const CompletionRequest& req) = 0;
  virtual std::string name() const = 0;
};

inline CompletionResult proxy_result(const CompletionRequest& req, std::string text,
                                     long latency_ms = 0) {
  CompletionResult r;
  r.prompt_tokens = static_cast<long>(count_ws_tokens(req.prompt));
  r.latency_ms = latency_ms;
  if (text.empty()) {
    r.backend_error = "empty completion";
  } else {
    r.completion_tokens = static_cast<long>(count_ws_tokens(text));
    r.text = std::move(text);
  }
  return r;
}

// Canned-response backend. Responses registered for a specific key are served
// to requests carrying that scope_key; otherwise each scope_key walks the
// shared sequence with its own cursor, so every problem in a parallel run sees
// the same deterministic script regardless of scheduling.
class ScriptedBackend : public Backend {
 public:
  ScriptedBackend() = default;

  void add_response(std::string text) { shared_.push_back(std::move(text)); }

  void add_response(const std::string& key, std::string text) {
    keyed_[key].push_back(std::move(text));
  }

  void load_script(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open script file " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + " line " + std::to_string(lineno) + ": " + e.what());
      }
      if (j.is_string()) {
        add_response(j.get<std::string>());
      } else if (j.is_object() && j.contains("problem_id") && j.contains("text")) {
        add_response(j["problem_id"].get<std::string>(), j["text"].get<std::string>());
      } else {
        throw std::runtime_error(path + " line " + std::to_string(lineno) +
                                 ": expected a string or {\"problem_id\",\"text\"}");
      }
    }
  }

  CompletionResult complete(const CompletionRequest& req) override {
    std::optional<std::string> text;
    {
      std::lock_guard<std::mutex> lock(mu_);
      ++calls_;
      auto it = keyed_.find(req.scope_key);
      if (it != keyed_.end()) {
        size_t& used = cursor_[req.scope_key];
        if (used < it->second.size()) text = it->second[used++];
      } else {
        size_t& used = cursor_[req.scope_key];
        if (used < shared_.size()) text = shared_[used++];
      }
    }
    if (!text) {
      CompletionResult r = proxy_result(req, "");
      r.backend_error = "script exhausted";
      return r;
    }
    return proxy_result(req, std::move(*text));
  }

  std::string name() const override { return "scripted"; }

  long calls() const {
    std::lock_guard<std::mutex> lock(mu_);
    return calls_;
  }

 private:
  mutable std::mutex mu_;
  std::vector<std::string> shared_;
  std::map<std::string, std::vector<std::string>> keyed_;
  std::map<std::string, size_t> cursor_;
  long calls_ = 0;
};

// Computes each response from the request; used by tests that need
// prompt-dependent behavior. An empty result maps to backend_error.
class CallbackBackend : public Backend {
 public:
  using Fn = std::function<std::string(const CompletionRequest&)>;
  explicit CallbackBackend(Fn fn) : fn_(std::move(fn)) {}

  CompletionResult complete(const CompletionRequest& req) override {
    return proxy_result(req, fn_(req));
  }

  std::string name() const override { return "callback"; }

 private:
  Fn fn_;
};

struct SandboxResult {
  std::string stdout_text;
  std::string stderr_text;
  int exit_status = 0;
  bool timed_out = false;
};

struct SandboxError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SandboxConfig {
  std::string interpreter = "python3";
  std::vector<std::string> interpreter_args = {"-I"};
  long wall_ms = 10000;
  long mem_bytes = 512L * 1024 * 1024;
  int max_procs = 4;
};

// Runs untrusted program text in an isolated child process: fresh session,
// empty temp working directory, no inherited environment, no network
// namespace access, address-space and CPU limits, wall-clock kill.
class Sandbox {
 public:
  explicit Sandbox(SandboxConfig cfg = {}) : cfg_(std::move(cfg)) {
    if (cfg_.max_procs < 1) throw SandboxError("sandbox max_procs must be >= 1");
    SandboxConfig probe = cfg_;
    probe.wall_ms = std::max<long>(probe.wall_ms, 5000);
    SandboxResult r = execute(probe, "pass");
    if (r.timed_out || r.exit_status != 0)
      throw SandboxError("sandbox interpreter '" + cfg_.interpreter +
                         "' is not runnable: " + trim(r.stderr_text));
    slots_ = cfg_.max_procs;
  }

  Sandbox(const Sandbox&) = delete;
  Sandbox& operator=(const Sandbox&) = delete;

  SandboxResult run(const std::string& code) {
    acquire_slot();
    SandboxResult r;
    try {
      r = execute(cfg_, code);
    } catch (...) {
      release_slot();
      throw;
    }
    release_slot();
    return r;
  }

  const SandboxConfig& config() const { return cfg_; }

 private:
  void acquire_slot() {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [&] { return slots_ > 0; });
    --slots_;
  }

  void release_slot() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      ++slots_;
    }
    cv_.notify_one();
  }

  static SandboxResult execute(const SandboxConfig& cfg, const std::string& code) {
    namespace fs = std::filesystem;
    char tmpl[] = "/tmp/repot-sbx-XXXXXX";
    char* dirp = ::mkdtemp(tmpl);
    if (!dirp) throw SandboxError("cannot create sandbox temp dir");
    fs::path dir(dirp);
    fs::path prog = dir / "prog.py";
    {
      std::ofstream out(prog);
      out << code;
      if (!out) {
        fs::remove_all(dir);
        throw SandboxError("cannot write sandbox program");
      }
    }

    int outp[2], errp[2];
    if (::pipe(outp) != 0 || ::pipe(errp) != 0) {
      fs::remove_all(dir);
      throw SandboxError("cannot create sandbox pipes");
    }

    pid_t pid = ::fork();
    if (pid < 0) {
      fs::remove_all(dir);
      throw SandboxError("cannot fork sandbox process");
    }

    if (pid == 0) {
      ::setsid();
      ::unshare(CLONE_NEWNET);  // best effort; leaves only a down loopback
      if (::chdir(dirp) != 0) ::_exit(127);
      rlimit mem{static_cast<rlim_t>(cfg.mem_bytes), static_cast<rlim_t>(cfg.mem_bytes)};
      ::setrlimit(RLIMIT_AS, &mem);
      rlim_t cpu_s = static_cast<rlim_t>(cfg.wall_ms / 1000 + 2);
      rlimit cpu{cpu_s, cpu_s};
      ::setrlimit(RLIMIT_CPU, &cpu);
      rlimit core{0, 0};
      ::setrlimit(RLIMIT_CORE, &core);
      int devnull = ::open("/dev/null", O_RDONLY);
      if (devnull >= 0) ::dup2(devnull, 0);
      ::dup2(outp[1], 1);
      ::dup2(errp[1], 2);
      ::close(outp[0]);
      ::close(outp[1]);
      ::close(errp[0]);
      ::close(errp[1]);
      std::vector<char*> argv;
      argv.push_back(const_cast<char*>(cfg.interpreter.c_str()));
      for (const auto& a : cfg.interpreter_args) argv.push_back(const_cast<char*>(a.c_str()));
      argv.push_back(const_cast<char*>("prog.py"));
      argv.push_back(nullptr);
      char path_env[] = "PATH=/usr/local/bin:/usr/bin:/bin";
      char* envp[] = {path_env, nullptr};
      ::execvpe(cfg.interpreter.c_str(), argv.data(), envp);
      ::_exit(127);
    }

    ::close(outp[1]);
    ::close(errp[1]);

    SandboxResult res;
    constexpr size_t kCaptureCap = 8u << 20;
    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(cfg.wall_ms);
    bool killed = false;
    pollfd fds[2] = {{outp[0], POLLIN, 0}, {errp[0], POLLIN, 0}};
    std::string* sinks[2] = {&res.stdout_text, &res.stderr_text};
    int open_fds = 2;
    char buf[4096];
    while (open_fds > 0) {
      auto now = std::chrono::steady_clock::now();
      long wait_ms = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
      if (!killed && wait_ms <= 0) {
        ::kill(-pid, SIGKILL);
        killed = true;
        res.timed_out = true;
      }
      int rc = ::poll(fds, 2, killed ? 1000 : static_cast<int>(std::max(1L, wait_ms)));
      if (rc < 0) {
        if (errno == EINTR) continue;
        break;
      }
      if (rc == 0) continue;
      for (int i = 0; i < 2; ++i) {
        if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
        ssize_t n = ::read(fds[i].fd, buf, sizeof(buf));
        if (n > 0) {
          if (sinks[i]->size() < kCaptureCap) sinks[i]->append(buf, static_cast<size_t>(n));
        } else {
          ::close(fds[i].fd);
          fds[i].fd = -1;
          --open_fds;
        }
      }
    }
    if (fds[0].fd >= 0) ::close(fds[0].fd);
    if (fds[1].fd >= 0) ::close(fds[1].fd);

    int status = 0;
    ::waitpid(pid, &status, 0);
    if (WIFEXITED(status)) res.exit_status = WEXITSTATUS(status);
    else if (WIFSIGNALED(status)) res.exit_status = 128 + WTERMSIG(status);
    fs::remove_all(dir);
    return res;
  }

  SandboxConfig cfg_;
  std::mutex mu_;
  std::condition_variable cv_;
  int slots_ = 0;
};

struct ExtractionError {
  enum class Kind { no_plan, bad_element };
  Kind kind = Kind::no_plan;
  int index = -1;  // 1-based element index for bad_element
  std::string message;
};

using Extracted = std::variant<Plan, ExtractionError>;
using ProgramExecutor = std::function<SandboxResult(const std::string& code)>;

namespace detail {

inline std::optional<std::string> first_code_block(const std::string& text) {
  size_t open = text.find("```");
  if (open == std::string::npos) return std::nullopt;
  size_t body = text.find('\n', open);
  if (body == std::string::npos) return std::nullopt;
  ++body;
  size_t close = text.find("```", body);
  while (close != std::string::npos && close > 0 && text[close - 1] != '\n')
    close = text.find("```", close + 3);
  if (close == std::string::npos) return text.substr(body);
  return text.substr(body, close - body);
}

// Returns the bracket contents of the last line of the form `moves = [...]`.
inline std::optional<std::string> last_moves_line(const std::string& text) {
  std::optional<std::string> found;
  for (const auto& raw : split_lines(text)) {
    std::string_view line = trim_view(raw);
    if (!line.starts_with("moves")) continue;
    line.remove_prefix(5);
    line = trim_view(line);
    if (!line.starts_with("=")) continue;
    line.remove_prefix(1);
    line = trim_view(line);
    if (!line.starts_with("[") || !line.ends_with("]")) continue;
    found = std::string(line.substr(1, line.size() - 2));
  }
  return found;
}

inline Extracted parse_moves(EnvId env, const std::string& inner) {
  Plan plan;
  std::string body = trim(inner);
  if (body.empty()) return plan;
  auto parts = split_top_level(body);
  for (size_t i = 0; i < parts.size(); ++i) {
    auto r = parse_action(env, parts[i]);
    if (auto* err = std::get_if<ParseError>(&r)) {
      return ExtractionError{ExtractionError::Kind::bad_element, static_cast<int>(i) + 1,
                             "element " + std::to_string(i + 1) + ": " + err->message};
    }
    plan.push_back(plan_item(std::get<Action>(r)));
  }
  return plan;
}

}  // namespace detail

inline Extracted extract_plan(EnvId env, const std::string& completion, PromptMode mode,
                              const ProgramExecutor& exec) {
  std::optional<std::string> inner;
  if (mode == PromptMode::pot) {
    auto code = detail::first_code_block(completion);
    if (code) {
      SandboxResult r = exec(*code);
      if (r.timed_out)
        return ExtractionError{ExtractionError::Kind::no_plan, -1, "no plan: sandbox timed out"};
      inner = detail::last_moves_line(r.stdout_text);
    } else {
      inner = detail::last_moves_line(completion);
    }
  } else {
    inner = detail::last_moves_line(completion);
  }
  if (!inner) return ExtractionError{ExtractionError::Kind::no_plan, -1, "no plan"};
  return detail::parse_moves(env, *inner);
}

}  // namespace repot
