#pragma once

#include <chrono>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "repot/gateway.hpp"

namespace repot {

// Chat-completion client for an OpenAI-style endpoint. Transport errors and
// retryable statuses are retried with exponential backoff; any terminal
// failure is reported through backend_error rather than an exception so the
// runner can record it against the problem.
class RemoteBackend : public Backend {
 public:
  struct Config {
    std::string base_url;
    std::string api_key;
    std::string model;
    std::string path = "/v1/chat/completions";
    int max_attempts = 3;
    long backoff_ms = 250;
    long read_timeout_s = 300;
  };

  static Config from_env() {
    Config c;
    if (const char* v = std::getenv("REPOT_API_BASE")) c.base_url = v;
    if (const char* v = std::getenv("REPOT_API_KEY")) c.api_key = v;
    if (const char* v = std::getenv("REPOT_MODEL")) c.model = v;
    return c;
  }

  explicit RemoteBackend(Config cfg) : cfg_(std::move(cfg)) {
    if (cfg_.base_url.empty())
      throw std::invalid_argument("remote backend requires an endpoint URL (REPOT_API_BASE)");
  }

  CompletionResult complete(const CompletionRequest& req) override {
    nlohmann::json body = {
        {"model", req.model_name.empty() ? cfg_.model : req.model_name},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", req.prompt}}})},
        {"temperature", req.temperature},
        {"max_tokens", req.max_output_tokens},
    };
    if (req.reasoning_level == ReasoningLevel::medium) body["reasoning_effort"] = "medium";
    const std::string payload = body.dump();

    auto start = std::chrono::steady_clock::now();
    auto elapsed_ms = [&] {
      auto d = std::chrono::steady_clock::now() - start;
      return std::max<long>(
          1, std::chrono::duration_cast<std::chrono::milliseconds>(d).count());
    };
    auto fail = [&](const std::string& why) {
      CompletionResult r = proxy_result(req, "");
      r.backend_error = why;
      r.latency_ms = elapsed_ms();
      return r;
    };

    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt < cfg_.max_attempts; ++attempt) {
      if (attempt > 0)
        std::this_thread::sleep_for(std::chrono::milliseconds(cfg_.backoff_ms << (attempt - 1)));
      httplib::Client cli(cfg_.base_url);
      cli.set_read_timeout(cfg_.read_timeout_s, 0);
      cli.set_connection_timeout(10, 0);
      httplib::Headers headers;
      if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);
      auto res = cli.Post(cfg_.path, headers, payload, "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "http " + std::to_string(res->status) + ": " + trim(res->body);
        continue;
      }
      if (res->status != 200)
        return fail("http " + std::to_string(res->status) + ": " + trim(res->body));
      return parse_response(req, res->body, elapsed_ms());
    }
    return fail(last_error + " (after " + std::to_string(cfg_.max_attempts) + " attempts)");
  }

  std::string name() const override { return "remote"; }

 private:
  CompletionResult parse_response(const CompletionRequest& req, const std::string& body,
                                  long latency_ms) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      CompletionResult r = proxy_result(req, "");
      r.backend_error = std::string("malformed response: ") + e.what();
      r.latency_ms = latency_ms;
      return r;
    }
    std::string text;
    if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
      const auto& msg = j["choices"][0];
      if (msg.contains("message") && msg["message"].contains("content") &&
          msg["message"]["content"].is_string())
        text = msg["message"]["content"].get<std::string>();
    }
    CompletionResult r = proxy_result(req, std::move(text), latency_ms);
    if (r.backend_error) {
      r.backend_error = "response carries no completion text";
      return r;
    }
    if (j.contains("usage") && j["usage"].is_object()) {
      const auto& u = j["usage"];
      if (u.contains("prompt_tokens") && u.contains("completion_tokens")) {
        r.prompt_tokens = u["prompt_tokens"].get<long>();
        r.completion_tokens = u["completion_tokens"].get<long>();
        r.token_source = "provider";
      }
    }
    return r;
  }

  Config cfg_;
};

}  // namespace repot
