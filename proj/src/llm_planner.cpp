#include <algorithm>
#include <cstdlib>

#include "reassign/chat_client.hpp"

namespace reassign {

using nlohmann::json;

ChatEndpointConfig ChatEndpointConfig::from_env(std::string base_url, std::string model) {
  ChatEndpointConfig cfg;
  cfg.base_url = std::move(base_url);
  cfg.model = std::move(model);
  if (const char* key = std::getenv(kApiKeyEnv)) cfg.api_key = key;
  return cfg;
}

json chat_request_body(const PromptText& prompt, const std::string& model) {
  // The role section travels as the system message, the rest as one user message.
  PromptText system;
  PromptText user;
  for (const auto& s : prompt.sections) {
    (s.heading == prompt_heading::kRole ? system : user).sections.push_back(s);
  }
  return {{"model", model},
          {"temperature", 0},
          {"n", 1},
          {"messages",
           json::array({{{"role", "system"}, {"content", system.render()}},
                        {{"role", "user"}, {"content", user.render()}}})}};
}

std::optional<std::string> chat_reply_text(const std::string& response_body) {
  auto j = json::parse(response_body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  const auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array() || choices->empty()) return std::nullopt;
  const auto& first = (*choices)[0];
  if (!first.is_object() || !first.contains("message")) return std::nullopt;
  const auto& message = first["message"];
  if (!message.is_object() || !message.contains("content") || !message["content"].is_string()) return std::nullopt;
  return message["content"].get<std::string>();
}

PlannerReply llm_plan(const DisruptionContext& ctx, const ChatEndpointConfig& endpoint, ChatTransport& transport,
                      std::chrono::milliseconds deadline) {
  HttpRequest request;
  request.url = endpoint.base_url;
  if (!request.url.empty() && request.url.back() == '/') request.url.pop_back();
  request.url += "/chat/completions";
  request.headers.emplace_back("Content-Type", "application/json");
  if (!endpoint.api_key.empty()) request.headers.emplace_back("Authorization", "Bearer " + endpoint.api_key);
  request.body = chat_request_body(build_prompt(ctx), endpoint.model).dump();
  request.timeout = deadline.count() > 0 ? std::min(deadline, endpoint.timeout) : endpoint.timeout;

  HttpResponse response;
  try {
    response = transport.post(request);
  } catch (const TransportError& e) {
    auto kind = e.timed_out() ? PlanFailureKind::Timeout : PlanFailureKind::HttpError;
    return {{}, PlannerFailure{kind, e.what()}};
  }
  if (response.status < 200 || response.status >= 300) {
    return {response.body,
            PlannerFailure{PlanFailureKind::HttpError, "endpoint returned HTTP " + std::to_string(response.status)}};
  }
  auto text = chat_reply_text(response.body);
  if (!text) {
    return {response.body,
            PlannerFailure{PlanFailureKind::HttpError, "response is not a chat completion with message content"}};
  }
  auto result = parse_plan(*text, ctx);
  return {std::move(*text), std::move(result)};
}

}  // namespace reassign
