#pragma once

#include "scr/json_util.hpp"

#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

namespace scr {

struct ToolCall {
    std::string call_id;
    std::string tool;
    json arguments = json::object();
};

enum class ToolStatus { Ok, Error, Denied };
std::string_view to_string(ToolStatus s);

struct ToolResult {
    std::string call_id;
    std::string tool;
    ToolStatus status = ToolStatus::Ok;
    std::string payload;
    bool truncated = false;
};

enum class Role { System, User, Assistant, Tool };
std::string_view to_string(Role r);

struct Message {
    Role role = Role::User;
    std::string content;
    std::vector<ToolCall> tool_calls;  // assistant turns
    std::string call_id;               // tool results
};

struct ToolSpec {
    std::string name;
    std::string description;
    json parameters;  // JSON schema of the argument record
};

struct CompletionRequest {
    std::string agent;              // subagent name, e.g. "detector"
    std::vector<Message> messages;  // system prompt first
    std::vector<ToolSpec> tools;
};

// Either a final answer (no tool calls; `content` holds the structured
// output) or a batch of tool calls.
struct AssistantTurn {
    std::string content;
    std::vector<ToolCall> tool_calls;

    bool is_final() const { return tool_calls.empty(); }
};

class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    // Throws Error{BackendError} on transport failure or a malformed turn.
    virtual AssistantTurn complete(const CompletionRequest& request) = 0;
    virtual std::string name() const = 0;
};

// Replays a recorded transcript. Document layout:
//   {"<agent>": {"turns": [turn...], "repeat_last": false}, ...}
// with turn = {"tool_calls": [{"tool": .., "arguments": {..}, "id": ..}]}
//           | {"final": <json>} | {"content": "<raw text>"} | {"error": "<msg>"}
// The turn index is the number of assistant messages already in the
// request, so replay depends only on the request.
class ScriptedBackend final : public LlmBackend {
public:
    explicit ScriptedBackend(json script);
    static ScriptedBackend from_file(const std::filesystem::path& path);

    AssistantTurn complete(const CompletionRequest& request) override;
    std::string name() const override { return "scripted"; }

private:
    json script_;
};

struct RemoteConfig {
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-4o";
    std::string api_key_env = "SCR_API_KEY";
    double temperature = 0.0;
    int timeout_seconds = 120;
    int max_retries = 3;
    std::chrono::milliseconds backoff{1000};  // doubled after each failed attempt
};

// Chat-completions style HTTPS client with function calling.
class ChatCompletionsBackend final : public LlmBackend {
public:
    explicit ChatCompletionsBackend(RemoteConfig config);

    AssistantTurn complete(const CompletionRequest& request) override;
    std::string name() const override { return "remote:" + config_.model; }

    // Request body for a completion; exposed for tests.
    json build_body(const CompletionRequest& request) const;
    // Parses a response body. Throws BackendError.
    static AssistantTurn parse_response(const std::string& body);

    // Number of HTTP attempts made so far.
    int attempts() const { return attempts_; }

private:
    RemoteConfig config_;
    std::mutex mu_;
    int attempts_ = 0;
};

struct HttpResponse {
    int status = 0;
    std::string body;
    std::string transport_error;  // non-empty when no response arrived
};

// POST a JSON body. Supports http:// and https:// URLs.
HttpResponse http_post_json(const std::string& url, const std::string& body,
                            const std::map<std::string, std::string>& headers, int timeout_seconds);

// Extracts the JSON value from model text, tolerating a ```json fence or
// prose around a single top-level object/array. Throws SchemaError.
json extract_json_payload(std::string_view text);

}  // namespace scr
