#pragma once

#include <cstdlib>
#include <memory>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "jc/judge.hpp"

namespace jc {

/// Chat-completions HTTP backend. Sends the standard JSON message shape
/// {model, messages[{role, content}], temperature, reasoning_effort?} and
/// extracts the text of the first choice. Token usage comes from the
/// response when present, otherwise from a character-count estimate.
class HttpBackend : public JudgeBackend {
 public:
  struct Options {
    std::string endpoint = "http://127.0.0.1:8080";  // scheme://host[:port]
    std::string path = "/v1/chat/completions";
    std::string model;
    std::string api_key;        // sent as "Authorization: Bearer <key>" when non-empty
    std::string auth_header = "Authorization";
    double temperature = 1.0;
    std::string reasoning_effort;  // omitted when empty
    int timeout_seconds = 120;
  };

  explicit HttpBackend(Options opt) : opt_(std::move(opt)) {}

  /// Reads the API credential from the named environment variable.
  static std::string key_from_env(const std::string& var) {
    const char* v = std::getenv(var.c_str());
    return v ? std::string(v) : std::string();
  }

  std::string id() const override { return "http:" + opt_.endpoint + ":" + opt_.model; }

  BackendReply complete(const PromptBundle& bundle, const QueryMeta&) override {
    nlohmann::json req;
    req["model"] = opt_.model;
    req["messages"] = nlohmann::json::array();
    for (const ChatMessage& m : bundle.messages)
      req["messages"].push_back({{"role", m.role}, {"content", m.text}});
    req["temperature"] = opt_.temperature;
    if (!opt_.reasoning_effort.empty()) req["reasoning_effort"] = opt_.reasoning_effort;

    httplib::Client cli(opt_.endpoint);
    cli.set_connection_timeout(opt_.timeout_seconds, 0);
    cli.set_read_timeout(opt_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!opt_.api_key.empty()) headers.emplace(opt_.auth_header, "Bearer " + opt_.api_key);

    auto res = cli.Post(opt_.path, headers, req.dump(), "application/json");
    if (!res) throw Error("judge request failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
      throw Error("judge request returned HTTP " + std::to_string(res->status) + ": " + res->body);

    const nlohmann::json body = nlohmann::json::parse(res->body);
    BackendReply reply;
    reply.text = body.at("choices").at(0).at("message").at("content").get<std::string>();
    if (body.contains("usage")) {
      reply.input_tokens = body["usage"].value("prompt_tokens", 0LL);
      reply.output_tokens = body["usage"].value("completion_tokens", 0LL);
    } else {
      reply.input_tokens = detail::approx_tokens(detail::bundle_chars(bundle));
      reply.output_tokens = detail::approx_tokens(reply.text.size());
    }
    return reply;
  }

 private:
  Options opt_;
};

}  // namespace jc
