#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "reassign/planner.hpp"

namespace reassign {

inline constexpr const char* kApiKeyEnv = "REASSIGND_API_KEY";

/// OpenAI-compatible chat-completion endpoint. Requests go to
/// `<base_url>/chat/completions`.
struct ChatEndpointConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4o";
  std::string api_key;
  std::chrono::milliseconds timeout{60000};

  /// Fills `api_key` from REASSIGND_API_KEY (left empty when unset).
  static ChatEndpointConfig from_env(std::string base_url, std::string model);
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

struct HttpRequest {
  std::string url;
  HttpHeaders headers;
  std::string body;
  std::chrono::milliseconds timeout{0};
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

class TransportError : public std::runtime_error {
 public:
  TransportError(const std::string& what, bool timed_out) : std::runtime_error(what), timed_out_(timed_out) {}
  [[nodiscard]] bool timed_out() const { return timed_out_; }

 private:
  bool timed_out_;
};

/// Blocking HTTP POST. Implementations throw TransportError when no response
/// arrives.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

/// cpp-httplib backed transport used for live runs.
class HttplibTransport final : public ChatTransport {
 public:
  HttpResponse post(const HttpRequest& request) override;
};

/// Request body: model, temperature 0, n 1, system + user messages.
nlohmann::json chat_request_body(const PromptText& prompt, const std::string& model);

/// `choices[0].message.content` of a chat-completion response, if present.
std::optional<std::string> chat_reply_text(const std::string& response_body);

/// One chat-completion round trip for the context's prompt, parsed into a plan.
PlannerReply llm_plan(const DisruptionContext& ctx, const ChatEndpointConfig& endpoint, ChatTransport& transport,
                      std::chrono::milliseconds deadline);

class LlmPlanner final : public Planner {
 public:
  LlmPlanner(ChatEndpointConfig endpoint, std::shared_ptr<ChatTransport> transport)
      : endpoint_(std::move(endpoint)), transport_(std::move(transport)) {}

  PlannerReply propose(const DisruptionContext& ctx, std::chrono::milliseconds deadline) override {
    return llm_plan(ctx, endpoint_, *transport_, deadline);
  }

 private:
  ChatEndpointConfig endpoint_;
  std::shared_ptr<ChatTransport> transport_;
};

}  // namespace reassign
